#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dgms/graph.hpp"

namespace dgms {

inline constexpr std::string_view kChildRelation = "Child";
inline constexpr std::string_view kNextTokenRelation = "NextToken";
inline constexpr std::string_view kLastLexicalUseRelation = "LastLexicalUse";

/// A node of a language-neutral AST. Terminals carry the token spelling in
/// `value`; `source_order` ranks terminals left to right (-1 on non-terminals).
struct AstNode {
    std::string kind;
    std::optional<std::string> value;
    bool is_identifier = false;
    int source_order = -1;

    bool is_terminal() const { return value.has_value(); }
    bool operator==(const AstNode&) const = default;
};

/// AST with nodes in DFS pre-order (root = 0) and an explicit child map.
struct AstTree {
    std::vector<AstNode> nodes;
    std::vector<std::vector<int>> children;
    int root = 0;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int terminal_count() const;

    bool operator==(const AstTree&) const = default;
};

/// Parses MiniLang source. Grammar:
///   program  := stmt*
///   stmt     := assign | if | while | return | exprStmt
///   assign   := IDENT "=" expr
///   if       := "if" expr block ("else" block)?
///   while    := "while" expr block
///   return   := "return" expr?
///   block    := "{" stmt* "}"
///   expr     := term (("+"|"-"|"*"|"/"|"<"|">"|"==") term)*
///   term     := IDENT | INT | STRING | call | "(" expr ")"
///   call     := IDENT "(" (expr ("," expr)*)? ")"
/// Keywords, operators and punctuation become terminal nodes. Errors carry
/// a line:col position.
AstTree parse_minilang(std::string_view source);

/// AST JSON: {"kind":string,"value":string?,"id":bool?,"children":[...]}.
/// source_order is recomputed from terminal order in the serialized tree.
AstTree decode_ast_json(std::string_view bytes);
std::string encode_ast_json(const AstTree& tree);

/// Checks the AstTree invariants; throws ArgumentError on violation.
void check_ast(const AstTree& tree);

/// Program graph over the AST: Child edges for every parent->child pair,
/// NextToken edges chaining terminals in source order, and LastLexicalUse
/// edges from each identifier occurrence back to the most recent earlier
/// occurrence of the same spelling.
LabeledMultigraph build_program_graph(const AstTree& ast);

} // namespace dgms
