#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dgms/graph.hpp"

namespace dgms {

inline constexpr std::string_view kConstituencyRelation = "Constituency";
inline constexpr std::string_view kNextWordRelation = "NextWord";

/// Constituency tree in the shape of a bracketed (Penn-Treebank style) parse.
/// Internal nodes carry symbols; leaves carry words and have no children.
struct BracketedParse {
    std::string label;
    std::vector<BracketedParse> children;

    bool is_leaf() const { return children.empty(); }
    int leaf_count() const;

    bool operator==(const BracketedParse&) const = default;
};

/// Parses "(S (VP (VB Configure) (NP the window size)))". Whitespace-insensitive;
/// throws ParseError with the character position on malformed input.
BracketedParse parse_bracketed(std::string_view text);

/// Degraded fallback when no parser output is available: a single "S" root
/// with every token as a direct leaf.
BracketedParse flat_parse(const std::vector<std::string>& tokens);

/// Whitespace tokenization with punctuation split into separate tokens.
std::vector<std::string> tokenize_text(std::string_view text);

/// One graph node per tree node (DFS pre-order, root first). Constituency
/// edges parent->child; NextWord edges chain the leaves in sentence order
/// (the backward direction appears after inverse augmentation). Leaf words
/// are lowercased.
LabeledMultigraph build_text_graph(const BracketedParse& parse);

} // namespace dgms
