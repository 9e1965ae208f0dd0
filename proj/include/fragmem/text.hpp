#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fragmem {

/// Byte span of one whitespace-delimited word inside its source string.
struct WordSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Splits on runs of Unicode whitespace (UTF-8 aware). Invalid UTF-8 bytes are
/// treated as word characters.
std::vector<WordSpan> whitespace_word_spans(std::string_view text);
std::vector<std::string> whitespace_words(std::string_view text);

/// Identifier-aware tokenizer used for BM25: split on non-alphanumerics, then
/// on camelCase / digit boundaries, lowercase everything.
std::vector<std::string> code_tokens(std::string_view text);

/// Token-count proxy: every whitespace word costs ceil(bytes / chars_per_token),
/// at least one token.
std::size_t estimate_tokens(std::string_view text, double chars_per_token = 4.0);

} // namespace fragmem
