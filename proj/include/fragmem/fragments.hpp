#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fragmem {

enum class SourceKind { Story, Code, Chat };

const char* to_string(SourceKind kind);
SourceKind source_kind_from_string(const std::string& name);

/// Half-open [begin, end) range.
struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    friend bool operator==(const Range&, const Range&) = default;
};

/// Where a fragment came from. Code fragments carry path + line/byte ranges,
/// chat fragments carry the turn index and the verbatim timestamp.
struct SourceRef {
    SourceKind kind = SourceKind::Story;
    std::optional<std::string> path;
    std::optional<Range> line_range;
    std::optional<Range> byte_range;
    std::optional<std::size_t> turn_index;
    std::optional<std::string> timestamp;

    friend bool operator==(const SourceRef&, const SourceRef&) = default;
};

struct Fragment {
    std::size_t id = 0;
    std::string text;
    std::size_t loc = 0;
    SourceRef source;
    std::size_t token_estimate = 0;

    friend bool operator==(const Fragment&, const Fragment&) = default;
};

struct StorySplitConfig {
    std::size_t words_per_fragment = 500;
};

struct CodeSplitConfig {
    std::size_t window_lines = 20;    // S_w
    std::size_t stride_overlap = 10;  // S_s, lines shared by adjacent windows
};

struct SourceFile {
    std::string path;
    std::string text;
};

struct ChatTurn {
    std::string user;
    std::string assistant;
    std::string timestamp;

    friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

struct CodeSplitResult {
    std::vector<Fragment> fragments;
    std::vector<std::string> warnings;
};

void validate(const StorySplitConfig& cfg);
void validate(const CodeSplitConfig& cfg);

std::vector<Fragment> split_story(const std::string& text, const StorySplitConfig& cfg);

/// Files are visited in lexicographic path order; zero-line files are skipped
/// and reported in `warnings`.
CodeSplitResult split_code(std::span<const SourceFile> files, const CodeSplitConfig& cfg);

std::vector<Fragment> split_chat(std::span<const ChatTurn> turns);

std::string chat_turn_text(const ChatTurn& turn);

/// Byte offsets of line starts; a trailing '\n' does not open a new line.
std::vector<std::size_t> line_offsets(const std::string& text);

} // namespace fragmem
