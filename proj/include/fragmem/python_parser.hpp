#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fragmem/fragments.hpp"

namespace fragmem {

/// One node of a concrete syntax tree, in pre-order. `parent` indexes into the
/// same vector (-1 for the root). `name` is set for function/class definitions
/// and for calls (the callee's last identifier).
struct SyntaxNodeRecord {
    std::string kind;
    std::string name;
    Range span;
    long parent = -1;
};

struct ParsedFile {
    std::vector<SyntaxNodeRecord> nodes;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line + 1) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Grammar adapter used by the code graph builder. Implementations must produce
/// properly nested spans and a single root covering the whole file.
class LanguageParser {
public:
    virtual ~LanguageParser() = default;
    virtual std::string language() const = 0;
    virtual bool handles_path(std::string_view path) const = 0;
    /// Throws ParseError on malformed input.
    virtual ParsedFile parse(std::string_view source) const = 0;

    /// Kind string used for function definition nodes (call edge targets).
    virtual std::string definition_kind() const = 0;
    virtual std::string call_kind() const = 0;
};

/// Indentation-based parser for Python source. Produces module, statement,
/// clause, block, decorator and call nodes. Statement and block spans cover
/// whole physical lines (including the trailing newline); call spans cover the
/// callee expression through the closing parenthesis.
class PythonParser final : public LanguageParser {
public:
    std::string language() const override { return "python"; }
    bool handles_path(std::string_view path) const override;
    ParsedFile parse(std::string_view source) const override;
    std::string definition_kind() const override { return "function_definition"; }
    std::string call_kind() const override { return "call"; }
};

std::unique_ptr<LanguageParser> make_parser(const std::string& language);

} // namespace fragmem
