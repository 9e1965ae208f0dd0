#include "fragmem/python_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "fragmem/error.hpp"

namespace fragmem {

namespace {

enum class ByteClass : unsigned char { Code, String, Comment };

struct LogicalLine {
    std::size_t begin = 0;          // start of the first physical line
    std::size_t content_begin = 0;  // first non-blank byte
    std::size_t end = 0;            // one past the terminating newline (or EOF)
    std::size_t indent = 0;
    std::size_t line_no = 0;
};

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",  "and",    "as",       "assert", "async", "await",  "break",
    "class", "continue", "def", "del",    "elif",     "else",   "except", "finally", "for",
    "from",  "global", "if",    "import", "in",       "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise", "return", "try",      "while",  "with",  "yield"};

bool is_keyword(std::string_view word) {
    return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

bool is_ident_start(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalpha(u) != 0 || c == '_' || u >= 0x80;
}

bool is_ident_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) != 0 || c == '_' || u >= 0x80;
}

bool is_blank(char c) {
    return c == ' ' || c == '\t' || c == '\f' || c == '\r';
}

bool is_string_prefix(std::string_view p) {
    if (p.empty() || p.size() > 2) {
        return false;
    }
    std::string lower(p);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    static constexpr std::array<std::string_view, 11> kPrefixes = {"r", "u", "b", "f", "br", "rb", "fr", "rf", "t", "tr", "rt"};
    return std::find(kPrefixes.begin(), kPrefixes.end(), lower) != kPrefixes.end();
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src), classes_(src.size(), ByteClass::Comment) {}

    std::vector<LogicalLine> run() {
        std::vector<LogicalLine> lines;
        std::size_t pos = 0;
        while (pos < src_.size()) {
            const std::size_t line_begin = pos;
            std::size_t indent = 0;
            while (pos < src_.size() && is_blank(src_[pos])) {
                if (src_[pos] == ' ') {
                    ++indent;
                } else if (src_[pos] == '\t') {
                    indent = (indent / 8 + 1) * 8;
                } else if (src_[pos] == '\f') {
                    indent = 0;
                }
                ++pos;
            }
            if (pos >= src_.size()) {
                break;
            }
            if (src_[pos] == '\n') {
                ++pos;
                ++line_no_;
                continue;
            }
            if (src_[pos] == '#') {
                while (pos < src_.size() && src_[pos] != '\n') ++pos;
                if (pos < src_.size()) {
                    ++pos;
                    ++line_no_;
                }
                continue;
            }
            LogicalLine line;
            line.begin = line_begin;
            line.content_begin = pos;
            line.indent = indent;
            line.line_no = line_no_;
            pos = scan_logical(pos);
            line.end = pos;
            lines.push_back(line);
        }
        return lines;
    }

    const std::vector<ByteClass>& classes() const { return classes_; }

private:
    std::size_t scan_logical(std::size_t pos) {
        int depth = 0;
        const std::size_t start_line = line_no_;
        while (pos < src_.size()) {
            const char c = src_[pos];
            if (c == '#') {
                while (pos < src_.size() && src_[pos] != '\n') ++pos;
                continue;
            }
            if (c == '\\') {
                classes_[pos] = ByteClass::Code;
                std::size_t next = pos + 1;
                if (next < src_.size() && src_[next] == '\r') ++next;
                if (next < src_.size() && src_[next] == '\n') {
                    classes_[next] = ByteClass::Code;
                    pos = next + 1;
                    ++line_no_;
                    continue;
                }
                ++pos;
                continue;
            }
            if (const std::size_t quote = string_quote_at(pos); quote != std::string::npos) {
                pos = scan_string(pos, quote);
                continue;
            }
            classes_[pos] = ByteClass::Code;
            if (c == '(' || c == '[' || c == '{') {
                ++depth;
            } else if (c == ')' || c == ']' || c == '}') {
                if (--depth < 0) {
                    throw ParseError(std::string("unmatched '") + c + "'", line_no_);
                }
            } else if (c == '\n') {
                ++line_no_;
                ++pos;
                if (depth == 0) {
                    return pos;
                }
                continue;
            }
            ++pos;
        }
        if (depth > 0) {
            throw ParseError("unclosed bracket at end of file", start_line);
        }
        return pos;
    }

    // Position of the opening quote if a string literal (with optional prefix)
    // starts at pos, npos otherwise.
    std::size_t string_quote_at(std::size_t pos) const {
        const char c = src_[pos];
        if (c == '"' || c == '\'') {
            return pos;
        }
        if (!is_ident_start(c) || (pos > 0 && is_ident_char(src_[pos - 1]))) {
            return std::string::npos;
        }
        std::size_t q = pos;
        while (q < src_.size() && q - pos < 3 && std::isalpha(static_cast<unsigned char>(src_[q])) != 0) ++q;
        if (q < src_.size() && (src_[q] == '"' || src_[q] == '\'') && is_string_prefix(src_.substr(pos, q - pos))) {
            return q;
        }
        return std::string::npos;
    }

    std::size_t scan_string(std::size_t start, std::size_t quote_pos) {
        const char q = src_[quote_pos];
        const bool triple = quote_pos + 2 < src_.size() && src_[quote_pos + 1] == q && src_[quote_pos + 2] == q;
        std::size_t pos = quote_pos + (triple ? 3 : 1);
        const std::size_t start_line = line_no_;
        while (pos < src_.size()) {
            const char c = src_[pos];
            if (c == '\\') {
                if (pos + 1 < src_.size() && src_[pos + 1] == '\n') ++line_no_;
                pos += 2;
                continue;
            }
            if (c == '\n') {
                if (!triple) {
                    throw ParseError("unterminated string literal", line_no_);
                }
                ++line_no_;
            } else if (c == q) {
                if (!triple) {
                    ++pos;
                    mark(start, pos, ByteClass::String);
                    return pos;
                }
                if (pos + 2 < src_.size() && src_[pos + 1] == q && src_[pos + 2] == q) {
                    pos += 3;
                    mark(start, pos, ByteClass::String);
                    return pos;
                }
            }
            ++pos;
        }
        throw ParseError("unterminated string literal", start_line);
    }

    void mark(std::size_t b, std::size_t e, ByteClass cls) {
        for (std::size_t i = b; i < e && i < classes_.size(); ++i) classes_[i] = cls;
    }

    std::string_view src_;
    std::vector<ByteClass> classes_;
    std::size_t line_no_ = 0;
};

struct LineInfo {
    std::string kind;
    std::string name;
    bool header = false;  // ends with ':' and opens an indented block
    bool clause = false;  // elif / else / except / finally
};

class TreeBuilder {
public:
    TreeBuilder(std::string_view src, const std::vector<ByteClass>& classes) : src_(src), cls_(classes) {}

    ParsedFile build(const std::vector<LogicalLine>& lines) {
        out_.nodes.push_back({"module", "", Range{0, src_.size()}, -1});
        last_child_.push_back(-1);
        std::vector<std::pair<std::size_t, long>> stack{{0, 0}};
        long pending_header = -1;

        for (const auto& line : lines) {
            if (pending_header >= 0) {
                if (line.indent <= stack.back().first) {
                    throw ParseError("expected an indented block", line.line_no);
                }
                const long block = add_node("block", "", Range{line.begin, line.end}, pending_header);
                stack.emplace_back(line.indent, block);
                pending_header = -1;
            } else {
                if (line.indent > stack.back().first) {
                    throw ParseError("unexpected indent", line.line_no);
                }
                while (line.indent < stack.back().first) {
                    stack.pop_back();
                }
                if (line.indent != stack.back().first) {
                    throw ParseError("unindent does not match any outer indentation level", line.line_no);
                }
            }
            const long container = stack.back().second;
            const LineInfo info = classify(line);
            long parent = container;
            if (info.clause) {
                parent = last_child_[static_cast<std::size_t>(container)];
                if (parent < 0 || !accepts_clause(out_.nodes[static_cast<std::size_t>(parent)].kind, info.kind)) {
                    throw ParseError("'" + info.kind + "' without a matching compound statement", line.line_no);
                }
            }
            const long node = add_node(info.kind, info.name, Range{line.begin, line.end}, parent);
            if (!info.clause) {
                last_child_[static_cast<std::size_t>(container)] = node;
            }
            add_calls(line, node);
            if (info.header) {
                pending_header = node;
            }
        }
        if (pending_header >= 0) {
            throw ParseError("expected an indented block at end of file", lines.back().line_no);
        }
        // parents precede children, so a reverse sweep propagates span ends upward
        for (std::size_t i = out_.nodes.size(); i-- > 1;) {
            auto& parent = out_.nodes[static_cast<std::size_t>(out_.nodes[i].parent)];
            parent.span.end = std::max(parent.span.end, out_.nodes[i].span.end);
        }
        return std::move(out_);
    }

private:
    long add_node(std::string kind, std::string name, Range span, long parent) {
        out_.nodes.push_back({std::move(kind), std::move(name), span, parent});
        last_child_.push_back(-1);
        return static_cast<long>(out_.nodes.size() - 1);
    }

    static bool accepts_clause(const std::string& compound, const std::string& clause) {
        if (clause == "elif_clause") return compound == "if_statement";
        if (clause == "else_clause") {
            return compound == "if_statement" || compound == "for_statement" || compound == "while_statement" ||
                   compound == "try_statement";
        }
        return compound == "try_statement";  // except / finally
    }

    bool is_code(std::size_t i) const { return cls_[i] == ByteClass::Code; }

    std::string_view word_at(std::size_t i, std::size_t end) const {
        std::size_t j = i;
        while (j < end && is_ident_char(src_[j]) && is_code(j)) ++j;
        return src_.substr(i, j - i);
    }

    std::size_t skip_blank(std::size_t i, std::size_t end) const {
        while (i < end && is_blank(src_[i])) ++i;
        return i;
    }

    LineInfo classify(const LogicalLine& line) const {
        const std::size_t b = line.content_begin;
        const std::size_t e = line.end;
        LineInfo info;

        // last significant byte: skip whitespace, newlines and comments
        std::size_t last = e;
        while (last > b) {
            const std::size_t k = last - 1;
            if (cls_[k] == ByteClass::Comment || src_[k] == '\n' || is_blank(src_[k]) ||
                (src_[k] == '\\' && is_code(k))) {
                --last;
                continue;
            }
            break;
        }
        const bool ends_with_colon = last > b && src_[last - 1] == ':' && is_code(last - 1);

        if (src_[b] == '@') {
            info.kind = "decorator";
            return info;
        }
        std::string_view kw = word_at(b, e);
        std::size_t after = b + kw.size();
        if (kw == "async") {
            const std::size_t next = skip_blank(after, e);
            const auto inner = word_at(next, e);
            if (inner == "def" || inner == "for" || inner == "with") {
                kw = inner;
                after = next + inner.size();
            }
        }
        auto header_kind = [&](const char* kind) {
            info.kind = kind;
            info.header = ends_with_colon;
        };
        if (kw == "def" || kw == "class") {
            header_kind(kw == "def" ? "function_definition" : "class_definition");
            const std::size_t n = skip_blank(after, e);
            info.name = std::string(word_at(n, e));
            if (info.name.empty()) {
                throw ParseError("missing name after '" + std::string(kw) + "'", line.line_no);
            }
        } else if (kw == "if" || kw == "for" || kw == "while" || kw == "with" || kw == "try") {
            header_kind((std::string(kw) + "_statement").c_str());
        } else if (kw == "elif" || kw == "else" || kw == "except" || kw == "finally") {
            header_kind((std::string(kw) + "_clause").c_str());
            info.clause = true;
        } else if ((kw == "match" || kw == "case") && ends_with_colon) {
            header_kind(kw == "match" ? "match_statement" : "case_clause");
        } else if (ends_with_colon) {
            throw ParseError("unexpected ':' at end of statement", line.line_no);
        } else if (kw == "return" || kw == "pass" || kw == "break" || kw == "continue" || kw == "raise" ||
                   kw == "assert" || kw == "del" || kw == "global" || kw == "nonlocal") {
            info.kind = std::string(kw) + "_statement";
        } else if (kw == "import") {
            info.kind = "import_statement";
        } else if (kw == "from") {
            info.kind = "import_from_statement";
        } else {
            info.kind = top_level_assignment(b, e) ? "assignment" : "expression_statement";
        }
        return info;
    }

    bool top_level_assignment(std::size_t b, std::size_t e) const {
        if (word_at(b, e) == "lambda") {
            return false;
        }
        int depth = 0;
        for (std::size_t i = b; i < e; ++i) {
            if (!is_code(i)) continue;
            const char c = src_[i];
            if (c == '(' || c == '[' || c == '{') {
                ++depth;
            } else if (c == ')' || c == ']' || c == '}') {
                --depth;
            } else if (depth == 0 && c == '=') {
                const char prev = i > b ? src_[i - 1] : ' ';
                const char next = i + 1 < e ? src_[i + 1] : ' ';
                if (next != '=' && prev != '=' && prev != '!' && prev != '<' && prev != '>') {
                    return true;
                }
                if (next == '=') ++i;
            } else if (depth == 0 && c == ':') {
                return true;  // annotated declaration
            } else if (depth == 0 && c == 'l' && word_at(i, e) == "lambda" && (i == b || !is_ident_char(src_[i - 1]))) {
                return false;
            }
        }
        return false;
    }

    void add_calls(const LogicalLine& line, long statement) {
        const std::size_t e = line.end;
        std::vector<std::pair<Range, long>> open;
        bool after_def = false;
        std::size_t i = line.content_begin;
        while (i < e) {
            if (!is_code(i) || !is_ident_start(src_[i]) || (i > 0 && is_ident_char(src_[i - 1]))) {
                ++i;
                continue;
            }
            const std::size_t chain_begin = i;
            std::string_view first = word_at(i, e);
            std::string_view last = first;
            std::size_t j = i + first.size();
            std::size_t parts = 1;
            while (j + 1 < e && src_[j] == '.' && is_code(j) && is_ident_start(src_[j + 1])) {
                last = word_at(j + 1, e);
                j += 1 + last.size();
                ++parts;
            }
            const bool skip_name = after_def;
            after_def = parts == 1 && (first == "def" || first == "class");
            const std::size_t paren = skip_blank(j, e);
            const bool keyword_only = parts == 1 && is_keyword(first);
            if (!skip_name && !keyword_only && paren < e && src_[paren] == '(' && is_code(paren)) {
                if (const std::size_t close = matching_paren(paren, e); close != std::string::npos) {
                    const Range span{chain_begin, close + 1};
                    while (!open.empty() && open.back().first.end <= span.begin) open.pop_back();
                    const long parent = open.empty() ? statement : open.back().second;
                    const long call = add_node("call", std::string(last), span, parent);
                    open.emplace_back(span, call);
                }
            }
            i = j;
        }
    }

    std::size_t matching_paren(std::size_t open, std::size_t e) const {
        int depth = 0;
        for (std::size_t k = open; k < e; ++k) {
            if (!is_code(k)) continue;
            if (src_[k] == '(' || src_[k] == '[' || src_[k] == '{') {
                ++depth;
            } else if (src_[k] == ')' || src_[k] == ']' || src_[k] == '}') {
                if (--depth == 0) return k;
            }
        }
        return std::string::npos;
    }

    std::string_view src_;
    const std::vector<ByteClass>& cls_;
    ParsedFile out_;
    std::vector<long> last_child_;
};

} // namespace

bool PythonParser::handles_path(std::string_view path) const {
    return path.size() >= 3 && path.substr(path.size() - 3) == ".py";
}

ParsedFile PythonParser::parse(std::string_view source) const {
    Lexer lexer(source);
    const auto lines = lexer.run();
    TreeBuilder builder(source, lexer.classes());
    if (lines.empty()) {
        ParsedFile only_root;
        only_root.nodes.push_back({"module", "", Range{0, source.size()}, -1});
        return only_root;
    }
    return builder.build(lines);
}

std::unique_ptr<LanguageParser> make_parser(const std::string& language) {
    if (language == "python") {
        return std::make_unique<PythonParser>();
    }
    throw ConfigError("unsupported code language '" + language + "' (available: python)");
}

} // namespace fragmem
