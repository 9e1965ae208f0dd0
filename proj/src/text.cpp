#include "fragmem/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>

namespace fragmem {

namespace {

// Returns the byte length of the whitespace code point starting at pos, or 0.
std::size_t whitespace_len(std::string_view s, std::size_t pos) {
    const auto c = static_cast<unsigned char>(s[pos]);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        return 1;
    }
    auto byte = [&](std::size_t i) -> unsigned {
        return i < s.size() ? static_cast<unsigned char>(s[i]) : 0u;
    };
    if (c == 0xC2 && (byte(pos + 1) == 0x85 || byte(pos + 1) == 0xA0)) {
        return 2;  // NEL, NBSP
    }
    if (c == 0xE1 && byte(pos + 1) == 0x9A && byte(pos + 2) == 0x80) {
        return 3;  // OGHAM SPACE MARK
    }
    if (c == 0xE2 && byte(pos + 1) == 0x80) {
        const unsigned b2 = byte(pos + 2);
        if ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xA8 || b2 == 0xA9 || b2 == 0xAF) {
            return 3;  // U+2000..U+200A, LINE/PARAGRAPH SEPARATOR, NNBSP
        }
    }
    if (c == 0xE2 && byte(pos + 1) == 0x81 && byte(pos + 2) == 0x9F) {
        return 3;  // MEDIUM MATHEMATICAL SPACE
    }
    if (c == 0xE3 && byte(pos + 1) == 0x80 && byte(pos + 2) == 0x80) {
        return 3;  // IDEOGRAPHIC SPACE
    }
    return 0;
}

bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool is_upper(char c) {
    return std::isupper(static_cast<unsigned char>(c)) != 0;
}

bool is_lower(char c) {
    return std::islower(static_cast<unsigned char>(c)) != 0;
}

bool is_digit(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
}

void push_lower(std::vector<std::string>& out, std::string_view piece) {
    if (piece.empty()) {
        return;
    }
    std::string token(piece);
    for (auto& ch : token) {
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    out.push_back(std::move(token));
}

} // namespace

std::vector<WordSpan> whitespace_word_spans(std::string_view text) {
    std::vector<WordSpan> spans;
    std::size_t pos = 0;
    bool in_word = false;
    std::size_t start = 0;
    while (pos < text.size()) {
        const std::size_t ws = whitespace_len(text, pos);
        if (ws > 0) {
            if (in_word) {
                spans.push_back({start, pos});
                in_word = false;
            }
            pos += ws;
        } else {
            if (!in_word) {
                start = pos;
                in_word = true;
            }
            ++pos;
        }
    }
    if (in_word) {
        spans.push_back({start, text.size()});
    }
    return spans;
}

std::vector<std::string> whitespace_words(std::string_view text) {
    std::vector<std::string> words;
    for (const auto& span : whitespace_word_spans(text)) {
        words.emplace_back(text.substr(span.begin, span.end - span.begin));
    }
    return words;
}

std::vector<std::string> code_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_alnum(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && is_alnum(text[j])) {
            ++j;
        }
        // camelCase, ALLCapsWord and letter/digit boundaries inside [i, j)
        std::size_t piece = i;
        for (std::size_t k = i + 1; k < j; ++k) {
            const char prev = text[k - 1];
            const char cur = text[k];
            const bool next_lower = k + 1 < j && is_lower(text[k + 1]);
            const bool boundary = (is_lower(prev) && is_upper(cur)) ||
                                  (is_upper(prev) && is_upper(cur) && next_lower) ||
                                  (is_digit(prev) != is_digit(cur));
            if (boundary) {
                push_lower(tokens, text.substr(piece, k - piece));
                piece = k;
            }
        }
        push_lower(tokens, text.substr(piece, j - piece));
        i = j;
    }
    return tokens;
}

std::size_t estimate_tokens(std::string_view text, double chars_per_token) {
    if (!(chars_per_token > 0.0)) {
        chars_per_token = 4.0;
    }
    std::size_t total = 0;
    for (const auto& span : whitespace_word_spans(text)) {
        const double len = static_cast<double>(span.end - span.begin);
        total += std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / chars_per_token)));
    }
    return total;
}

} // namespace fragmem
