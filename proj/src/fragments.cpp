#include "fragmem/fragments.hpp"

#include <algorithm>

#include "fragmem/error.hpp"
#include "fragmem/text.hpp"

namespace fragmem {

const char* to_string(SourceKind kind) {
    switch (kind) {
    case SourceKind::Story: return "story";
    case SourceKind::Code: return "code";
    case SourceKind::Chat: return "chat";
    }
    return "unknown";
}

SourceKind source_kind_from_string(const std::string& name) {
    if (name == "story") return SourceKind::Story;
    if (name == "code") return SourceKind::Code;
    if (name == "chat") return SourceKind::Chat;
    throw ConfigError("unknown source kind '" + name + "' (expected story, code or chat)");
}

void validate(const StorySplitConfig& cfg) {
    if (cfg.words_per_fragment == 0) {
        throw ConfigError("words_per_fragment must be > 0");
    }
}

void validate(const CodeSplitConfig& cfg) {
    if (cfg.window_lines == 0) {
        throw ConfigError("window_lines must be > 0");
    }
    if (cfg.stride_overlap >= cfg.window_lines) {
        throw ConfigError("stride_overlap (" + std::to_string(cfg.stride_overlap) +
                          ") must be smaller than window_lines (" + std::to_string(cfg.window_lines) + ")");
    }
}

std::vector<std::size_t> line_offsets(const std::string& text) {
    std::vector<std::size_t> starts;
    if (text.empty()) {
        return starts;
    }
    starts.push_back(0);
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\n' && i + 1 < text.size()) {
            starts.push_back(i + 1);
        }
    }
    return starts;
}

std::vector<Fragment> split_story(const std::string& text, const StorySplitConfig& cfg) {
    validate(cfg);
    const auto words = whitespace_word_spans(text);
    if (words.empty()) {
        throw EmptyContextError("story text contains no words");
    }
    std::vector<Fragment> out;
    for (std::size_t first = 0; first < words.size(); first += cfg.words_per_fragment) {
        const std::size_t last = std::min(first + cfg.words_per_fragment, words.size()) - 1;
        Fragment frag;
        frag.id = out.size();
        frag.loc = out.size();
        // keep the original inter-word whitespace inside a fragment
        frag.text = text.substr(words[first].begin, words[last].end - words[first].begin);
        frag.source.kind = SourceKind::Story;
        frag.token_estimate = estimate_tokens(frag.text);
        out.push_back(std::move(frag));
    }
    return out;
}

CodeSplitResult split_code(std::span<const SourceFile> files, const CodeSplitConfig& cfg) {
    validate(cfg);
    std::vector<const SourceFile*> ordered;
    ordered.reserve(files.size());
    for (const auto& f : files) {
        ordered.push_back(&f);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const SourceFile* a, const SourceFile* b) { return a->path < b->path; });

    CodeSplitResult result;
    const std::size_t stride = cfg.window_lines - cfg.stride_overlap;
    for (const SourceFile* file : ordered) {
        const auto starts = line_offsets(file->text);
        const std::size_t n_lines = starts.size();
        if (n_lines == 0) {
            result.warnings.push_back("skipped empty file: " + file->path);
            continue;
        }
        for (std::size_t begin = 0;; begin += stride) {
            const std::size_t end = std::min(begin + cfg.window_lines, n_lines);
            const std::size_t byte_begin = starts[begin];
            const std::size_t byte_end = end < n_lines ? starts[end] : file->text.size();
            Fragment frag;
            frag.id = result.fragments.size();
            frag.loc = result.fragments.size();
            frag.text = file->text.substr(byte_begin, byte_end - byte_begin);
            frag.source.kind = SourceKind::Code;
            frag.source.path = file->path;
            frag.source.line_range = Range{begin, end};
            frag.source.byte_range = Range{byte_begin, byte_end};
            frag.token_estimate = estimate_tokens(frag.text);
            result.fragments.push_back(std::move(frag));
            if (end == n_lines) {
                break;
            }
        }
    }
    return result;
}

std::string chat_turn_text(const ChatTurn& turn) {
    return "User: " + turn.user + "\nAssistant: " + turn.assistant;
}

std::vector<Fragment> split_chat(std::span<const ChatTurn> turns) {
    if (turns.empty()) {
        throw EmptyContextError("chat transcript contains no turns");
    }
    std::vector<Fragment> out;
    out.reserve(turns.size());
    for (std::size_t i = 0; i < turns.size(); ++i) {
        Fragment frag;
        frag.id = i;
        frag.loc = i;
        frag.text = chat_turn_text(turns[i]);
        frag.source.kind = SourceKind::Chat;
        frag.source.turn_index = i;
        frag.source.timestamp = turns[i].timestamp;
        frag.token_estimate = estimate_tokens(frag.text);
        out.push_back(std::move(frag));
    }
    return out;
}

} // namespace fragmem
