#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace brain::detail {

struct JavaToken {
    enum class Kind { identifier, number, string, character, symbol };
    Kind kind = Kind::symbol;
    std::string_view text;
    std::size_t begin = 0;  // byte offsets into the source
    std::size_t end = 0;
    int line = 1;
};

enum class DeclKind { type, method, constructor, abstract_method, field };

struct JavaDecl {
    DeclKind kind = DeclKind::type;
    std::string type_keyword;  // class, interface, enum, record, @interface (types only)
    std::string name;
    std::size_t first_token = 0;  // includes leading annotations
    std::size_t last_token = 0;   // closing brace or semicolon
    std::string signature;        // normalized header without annotations
};

/// Structural parse of a Java compilation unit: declarations in source order
/// (an enclosing declaration precedes its members). Tolerates anything that
/// keeps brackets balanced; ok is false when lexing fails or brackets do not match.
struct JavaParse {
    bool ok = false;
    std::string error;
    std::vector<JavaToken> tokens;
    std::vector<JavaDecl> decls;
};

JavaParse parse_java(std::string_view source);

}  // namespace brain::detail
