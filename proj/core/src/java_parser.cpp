#include "java_parser.hpp"

#include <array>
#include <optional>

namespace brain::detail {

namespace {

using Kind = JavaToken::Kind;
constexpr std::size_t npos = static_cast<std::size_t>(-1);

bool is_ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}

bool is_ident_part(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

struct LexError {
    std::string message;
};

// Returns the tokens or the reason lexing failed. Comments and whitespace are dropped.
std::optional<LexError> lex(std::string_view src, std::vector<JavaToken>& out) {
    std::size_t i = 0;
    int line = 1;
    auto advance_to = [&](std::size_t to) {
        for (; i < to; ++i) {
            if (src[i] == '\n') ++line;
        }
    };
    auto push = [&](Kind kind, std::size_t begin, std::size_t end, int at_line) {
        out.push_back(JavaToken{kind, src.substr(begin, end - begin), begin, end, at_line});
    };

    while (i < src.size()) {
        const auto c = static_cast<unsigned char>(src[i]);
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            const std::size_t end = src.find('\n', i);
            i = end == std::string_view::npos ? src.size() : end;
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
            const std::size_t end = src.find("*/", i + 2);
            if (end == std::string_view::npos) return LexError{"unterminated block comment"};
            advance_to(end + 2);
            continue;
        }
        const int start_line = line;
        const std::size_t start = i;
        if (c == '"') {
            if (src.substr(i, 3) == "\"\"\"") {
                const std::size_t end = src.find("\"\"\"", i + 3);
                if (end == std::string_view::npos) return LexError{"unterminated text block"};
                advance_to(end + 3);
                push(Kind::string, start, i, start_line);
                continue;
            }
            ++i;
            while (i < src.size() && src[i] != '"') {
                if (src[i] == '\n') return LexError{"unterminated string literal"};
                i += src[i] == '\\' ? 2 : 1;
            }
            if (i >= src.size()) return LexError{"unterminated string literal"};
            ++i;
            push(Kind::string, start, i, start_line);
            continue;
        }
        if (c == '\'') {
            ++i;
            while (i < src.size() && src[i] != '\'') {
                if (src[i] == '\n') return LexError{"unterminated character literal"};
                i += src[i] == '\\' ? 2 : 1;
            }
            if (i >= src.size()) return LexError{"unterminated character literal"};
            ++i;
            push(Kind::character, start, i, start_line);
            continue;
        }
        if (is_ident_start(c)) {
            while (i < src.size() && is_ident_part(static_cast<unsigned char>(src[i]))) ++i;
            push(Kind::identifier, start, i, start_line);
            continue;
        }
        if (is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(static_cast<unsigned char>(src[i + 1])))) {
            while (i < src.size()) {
                const auto d = static_cast<unsigned char>(src[i]);
                if (!(is_ident_part(d) || d == '.')) break;
                ++i;
            }
            push(Kind::number, start, i, start_line);
            continue;
        }
        std::size_t length = 1;
        if (src.substr(i, 3) == "...") {
            length = 3;
        } else if (src.substr(i, 2) == "::" || src.substr(i, 2) == "->") {
            length = 2;
        }
        i += length;
        push(Kind::symbol, start, i, start_line);
    }
    return std::nullopt;
}

bool is_modifier(std::string_view word) {
    static constexpr std::array<std::string_view, 13> kModifiers = {
        "public", "protected", "private", "static", "abstract", "final", "native",
        "synchronized", "transient", "volatile", "strictfp", "default", "sealed"};
    for (auto m : kModifiers) {
        if (m == word) return true;
    }
    return false;
}

class Parser {
  public:
    Parser(std::vector<JavaToken>& tokens, std::vector<JavaDecl>& decls)
        : toks_(tokens), decls_(decls), match_(tokens.size(), npos) {}

    std::optional<std::string> match_brackets() {
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < toks_.size(); ++i) {
            if (toks_[i].kind != Kind::symbol) continue;
            const std::string_view t = toks_[i].text;
            if (t == "(" || t == "[" || t == "{") {
                stack.push_back(i);
            } else if (t == ")" || t == "]" || t == "}") {
                if (stack.empty()) return "unbalanced '" + std::string(t) + "' on line " + std::to_string(toks_[i].line);
                const std::string_view open = toks_[stack.back()].text;
                if ((t == ")" && open != "(") || (t == "]" && open != "[") || (t == "}" && open != "{")) {
                    return "mismatched '" + std::string(t) + "' on line " + std::to_string(toks_[i].line);
                }
                match_[stack.back()] = i;
                match_[i] = stack.back();
                stack.pop_back();
            }
        }
        if (!stack.empty()) return "unclosed '" + std::string(toks_[stack.back()].text) + "' on line " +
                                   std::to_string(toks_[stack.back()].line);
        return std::nullopt;
    }

    void parse_unit() { parse_members(0, toks_.size(), ""); }

  private:
    bool is(std::size_t i, std::string_view text) const {
        return i < toks_.size() && toks_[i].text == text &&
               (toks_[i].kind == Kind::symbol || toks_[i].kind == Kind::identifier);
    }
    bool is_ident(std::size_t i) const { return i < toks_.size() && toks_[i].kind == Kind::identifier; }

    bool starts_annotation(std::size_t i) const {
        return is(i, "@") && is_ident(i + 1) && toks_[i + 1].text != "interface";
    }

    // '@' Name ('.' Name)* ['(' ... ')']
    std::size_t skip_annotation(std::size_t i) const {
        std::size_t j = i + 2;
        while (is(j, ".") && is_ident(j + 1)) j += 2;
        if (is(j, "(")) j = match_[j] + 1;
        return j;
    }

    bool starts_record(std::size_t i, std::size_t end) const {
        return is(i, "record") && is_ident(i + 1) && i + 2 < end && (is(i + 2, "(") || is(i + 2, "<"));
    }

    std::string render(const std::vector<std::size_t>& idx) const {
        std::string out;
        std::string_view prev;
        Kind prev_kind = Kind::symbol;
        std::size_t skip_until = 0;
        for (std::size_t n = 0; n < idx.size(); ++n) {
            const std::size_t i = idx[n];
            if (i < skip_until) continue;
            if (starts_annotation(i)) {
                skip_until = skip_annotation(i);
                continue;
            }
            const JavaToken& tok = toks_[i];
            if (!out.empty() && needs_space(prev, prev_kind, tok)) out.push_back(' ');
            out.append(tok.text);
            prev = tok.text;
            prev_kind = tok.kind;
        }
        return out;
    }

    static bool needs_space(std::string_view prev, Kind prev_kind, const JavaToken& cur) {
        const std::string_view t = cur.text;
        if (cur.kind == Kind::symbol) {
            if (t == ")" || t == "]" || t == "," || t == "." || t == ";" || t == ">" || t == "(" ||
                t == "[" || t == "...") {
                return false;
            }
            if (t == "<") return prev_kind != Kind::identifier || is_modifier(prev);
        }
        if (prev_kind == Kind::symbol &&
            (prev == "(" || prev == "[" || prev == "." || prev == "<" || prev == "@")) {
            return false;
        }
        return true;
    }

    // Parses class/interface/enum/record bodies or the compilation unit.
    void parse_members(std::size_t begin, std::size_t end, const std::string& type_name) {
        std::size_t i = begin;
        while (i < end) {
            if (is(i, ";")) {
                ++i;
                continue;
            }
            const std::size_t start = i;
            std::vector<std::size_t> header;
            std::vector<bool> top;  // parallel to header: outside parentheses
            while (i < end) {
                if (starts_annotation(i)) {
                    i = skip_annotation(i);
                    continue;
                }
                if (is(i, "(") || is(i, "[")) {
                    for (std::size_t j = i; j <= match_[i]; ++j) {
                        header.push_back(j);
                        top.push_back(j == i || j == match_[i]);
                    }
                    i = match_[i] + 1;
                    continue;
                }
                if (is(i, "{") || is(i, ";") || is(i, "=") || is(i, "}")) break;
                header.push_back(i);
                top.push_back(true);
                ++i;
            }
            if (i >= end) break;
            if (is(i, "}")) {
                ++i;  // stray closer inside a body; keep going
                continue;
            }

            if (is(i, "{")) {
                i = handle_block_member(start, header, top, i, type_name);
            } else if (is(i, ";")) {
                handle_semicolon_member(start, header, top, i);
                ++i;
            } else {
                i = handle_field_with_initializer(start, header, i, end);
            }
        }
    }

    // Locates a type keyword in a header; returns its header position.
    std::optional<std::size_t> type_keyword_at(const std::vector<std::size_t>& header,
                                               const std::vector<bool>& top, std::string& keyword) const {
        for (std::size_t n = 0; n < header.size(); ++n) {
            if (!top[n]) continue;
            const std::size_t i = header[n];
            if (toks_[i].kind != Kind::identifier && !is(i, "@")) continue;
            const std::string_view t = toks_[i].text;
            if ((t == "class" || t == "interface" || t == "enum") && n + 1 < header.size() &&
                is_ident(header[n + 1])) {
                keyword = std::string(t);
                if (t == "interface" && n > 0 && is(header[n - 1], "@")) keyword = "@interface";
                return n;
            }
            if (t == "record" && n + 2 < header.size() && is_ident(header[n + 1]) &&
                (is(header[n + 2], "(") || is(header[n + 2], "<"))) {
                keyword = "record";
                return n;
            }
        }
        return std::nullopt;
    }

    static std::optional<std::size_t> first_top_paren(const std::vector<std::size_t>& header,
                                                      const std::vector<bool>& top,
                                                      const std::vector<JavaToken>& toks) {
        for (std::size_t n = 0; n < header.size(); ++n) {
            if (top[n] && toks[header[n]].text == "(" && toks[header[n]].kind == Kind::symbol) return n;
        }
        return std::nullopt;
    }

    std::size_t handle_block_member(std::size_t start, const std::vector<std::size_t>& header,
                                    const std::vector<bool>& top, std::size_t brace,
                                    const std::string& type_name) {
        const std::size_t close = match_[brace];
        std::string keyword;
        if (auto kw = type_keyword_at(header, top, keyword)) {
            JavaDecl decl;
            decl.kind = DeclKind::type;
            decl.type_keyword = keyword;
            decl.name = std::string(toks_[header[*kw + 1]].text);
            decl.first_token = start;
            decl.last_token = close;
            decl.signature = render(header);
            decls_.push_back(std::move(decl));
            const std::string name(toks_[header[*kw + 1]].text);
            if (keyword == "enum") {
                parse_enum_body(brace + 1, close, name);
            } else {
                parse_members(brace + 1, close, name);
            }
            return close + 1;
        }

        if (auto paren = first_top_paren(header, top, toks_); paren && *paren > 0 &&
                                                               is_ident(header[*paren - 1])) {
            const std::string name(toks_[header[*paren - 1]].text);
            JavaDecl decl;
            decl.kind = (!type_name.empty() && name == type_name) ? DeclKind::constructor : DeclKind::method;
            decl.name = name;
            decl.first_token = start;
            decl.last_token = close;
            decl.signature = render(header);
            decls_.push_back(std::move(decl));
            scan_code(brace + 1, close);
            return close + 1;
        }

        // Compact canonical constructor of a record: `public Point {`
        if (!header.empty() && !type_name.empty() && toks_[header.back()].text == type_name) {
            JavaDecl decl;
            decl.kind = DeclKind::constructor;
            decl.name = type_name;
            decl.first_token = start;
            decl.last_token = close;
            decl.signature = render(header);
            decls_.push_back(std::move(decl));
        }
        // Initializer blocks and anything unrecognized: look inside for nested types only.
        scan_code(brace + 1, close);
        return close + 1;
    }

    void handle_semicolon_member(std::size_t start, const std::vector<std::size_t>& header,
                                 const std::vector<bool>& top, std::size_t semicolon) {
        if (header.empty()) return;
        const std::string_view first = toks_[header.front()].text;
        if (first == "package" || first == "import") return;

        if (auto paren = first_top_paren(header, top, toks_); paren && *paren > 0 &&
                                                               is_ident(header[*paren - 1])) {
            std::vector<std::size_t> sig = header;
            for (std::size_t n = *paren; n < header.size(); ++n) {
                if (top[n] && toks_[header[n]].text == "default" && n > *paren) {
                    sig.resize(n);  // annotation element default value
                    break;
                }
            }
            JavaDecl decl;
            decl.kind = DeclKind::abstract_method;
            decl.name = std::string(toks_[header[*paren - 1]].text);
            decl.first_token = start;
            decl.last_token = semicolon;
            decl.signature = render(sig);
            decls_.push_back(std::move(decl));
            return;
        }
        if (header.size() < 2) return;
        push_field(start, semicolon, header);
    }

    void push_field(std::size_t start, std::size_t last, const std::vector<std::size_t>& header,
                    const std::vector<std::string>& extra_names = {}) {
        JavaDecl decl;
        decl.kind = DeclKind::field;
        // Last identifier of the first declarator.
        for (auto it = header.rbegin(); it != header.rend(); ++it) {
            if (is_ident(*it)) {
                decl.name = std::string(toks_[*it].text);
                break;
            }
        }
        decl.first_token = start;
        decl.last_token = last;
        decl.signature = render(header);
        for (const auto& extra : extra_names) decl.signature += ", " + extra;
        decls_.push_back(std::move(decl));
    }

    // `Type a = init, b, c = init;`: header holds `Type a`, i is at '='.
    std::size_t handle_field_with_initializer(std::size_t start, const std::vector<std::size_t>& header,
                                              std::size_t i, std::size_t end) {
        std::vector<std::string> extra;
        std::size_t j = i + 1;
        std::size_t init_begin = j;
        while (j < end && !is(j, ";")) {
            if (is(j, "(") || is(j, "[") || is(j, "{")) {
                j = match_[j] + 1;
                continue;
            }
            if (is(j, ",") && is_ident(j + 1) &&
                (is(j + 2, "=") || is(j + 2, ",") || is(j + 2, ";") || is(j + 2, "["))) {
                scan_code(init_begin, j);
                extra.emplace_back(toks_[j + 1].text);
                j += 2;
                init_begin = j;
                continue;
            }
            ++j;
        }
        scan_code(init_begin, j);
        if (header.size() >= 2) push_field(start, j < end ? j : end - 1, header, extra);
        return j + 1;
    }

    void parse_enum_body(std::size_t begin, std::size_t end, const std::string& enum_name) {
        std::size_t i = begin;
        while (i < end) {
            if (is(i, ";")) {
                ++i;
                break;
            }
            if (starts_annotation(i)) {
                i = skip_annotation(i);
                continue;
            }
            if (is(i, "(") || is(i, "[")) {
                scan_code(i + 1, match_[i]);
                i = match_[i] + 1;
                continue;
            }
            if (is(i, "{")) {
                parse_members(i + 1, match_[i], "");  // constant-specific class body
                i = match_[i] + 1;
                continue;
            }
            ++i;
        }
        parse_members(i, end, enum_name);
    }

    // Finds local, anonymous and nested types inside executable code.
    void scan_code(std::size_t begin, std::size_t end) {
        std::size_t i = begin;
        while (i < end) {
            const bool after_dot = i > begin && is(i - 1, ".");
            const bool type_kw = is_ident(i) && !after_dot &&
                                 (toks_[i].text == "class" || toks_[i].text == "interface" ||
                                  toks_[i].text == "enum") &&
                                 is_ident(i + 1);
            if (type_kw || (!after_dot && starts_record(i, end))) {
                std::size_t j = i;
                while (j < end && !is(j, "{") && !is(j, ";")) {
                    j = (is(j, "(") || is(j, "[")) ? match_[j] + 1 : j + 1;
                }
                if (j < end && is(j, "{")) {
                    parse_members(i, match_[j] + 1, "");
                    i = match_[j] + 1;
                    continue;
                }
            }
            if (is(i, "new")) {
                std::size_t j = i + 1;
                int angle = 0;
                while (j < end) {
                    if (starts_annotation(j)) {
                        j = skip_annotation(j);
                    } else if (is_ident(j) || is(j, ".") || is(j, "?") || is(j, ",") || is(j, "&")) {
                        if (is(j, ",") && angle == 0) break;
                        ++j;
                    } else if (is(j, "<")) {
                        ++angle;
                        ++j;
                    } else if (is(j, ">") && angle > 0) {
                        --angle;
                        ++j;
                    } else {
                        break;
                    }
                }
                if (angle == 0 && is(j, "(") && match_[j] + 1 < end && is(match_[j] + 1, "{")) {
                    const std::size_t open = match_[j] + 1;
                    scan_code(j + 1, match_[j]);
                    parse_members(open + 1, match_[open], "");
                    i = match_[open] + 1;
                    continue;
                }
            }
            ++i;
        }
    }

    std::vector<JavaToken>& toks_;
    std::vector<JavaDecl>& decls_;
    std::vector<std::size_t> match_;
};

}  // namespace

JavaParse parse_java(std::string_view source) {
    JavaParse result;
    if (auto err = lex(source, result.tokens)) {
        result.error = err->message;
        return result;
    }
    Parser parser(result.tokens, result.decls);
    if (auto err = parser.match_brackets()) {
        result.error = *err;
        return result;
    }
    parser.parse_unit();
    result.ok = true;
    return result;
}

}  // namespace brain::detail
