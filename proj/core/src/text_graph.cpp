#include "dgms/text_graph.hpp"

#include <algorithm>
#include <cctype>

namespace dgms {

int BracketedParse::leaf_count() const {
    if (is_leaf()) return 1;
    int n = 0;
    for (const auto& c : children) n += c.leaf_count();
    return n;
}

namespace {

struct BracketCursor {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eof() {
        skip_ws();
        return pos >= text.size();
    }
    char peek() {
        skip_ws();
        return text[pos];
    }
    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError("bracketed parse: " + message + " at position " + std::to_string(pos));
    }
    std::string read_symbol() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
               text[pos] != '(' && text[pos] != ')')
            ++pos;
        if (pos == start) fail("expected a label");
        return std::string(text.substr(start, pos - start));
    }
};

BracketedParse parse_tree(BracketCursor& cur) {
    if (cur.eof() || cur.peek() != '(') cur.fail("expected '('");
    ++cur.pos;
    BracketedParse node;
    node.label = cur.read_symbol();
    while (true) {
        if (cur.eof()) cur.fail("unbalanced parentheses");
        char c = cur.peek();
        if (c == ')') {
            ++cur.pos;
            break;
        }
        if (c == '(') {
            node.children.push_back(parse_tree(cur));
        } else {
            BracketedParse leaf;
            leaf.label = cur.read_symbol();
            node.children.push_back(std::move(leaf));
        }
    }
    if (node.children.empty()) cur.fail("empty constituent '(" + node.label + ")'");
    return node;
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

void add_tree_nodes(const BracketedParse& tree, MultigraphBuilder& b, int constituency,
                    std::vector<int>& leaf_ids, int parent) {
    int id;
    if (tree.is_leaf()) {
        id = b.add_node(lowercase(tree.label), /*is_terminal=*/true);
        leaf_ids.push_back(id);
    } else {
        id = b.add_node(tree.label, /*is_terminal=*/false);
    }
    if (parent >= 0) b.add_edge(parent, id, constituency);
    for (const auto& child : tree.children) add_tree_nodes(child, b, constituency, leaf_ids, id);
}

} // namespace

BracketedParse parse_bracketed(std::string_view text) {
    BracketCursor cur{text};
    if (cur.eof()) cur.fail("empty input");
    BracketedParse tree = parse_tree(cur);
    if (!cur.eof()) cur.fail("unexpected trailing content");
    return tree;
}

BracketedParse flat_parse(const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw ArgumentError("flat_parse: token list must be non-empty");
    BracketedParse root;
    root.label = "S";
    for (const auto& t : tokens) {
        if (t.empty()) throw ArgumentError("flat_parse: tokens must be non-empty");
        BracketedParse leaf;
        leaf.label = t;
        root.children.push_back(std::move(leaf));
    }
    return root;
}

std::vector<std::string> tokenize_text(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
        } else if (std::isalnum(c) || ch == '_' || ch == '\'') {
            current.push_back(ch);
        } else {
            flush();
            tokens.push_back(std::string(1, ch));
        }
    }
    flush();
    return tokens;
}

LabeledMultigraph build_text_graph(const BracketedParse& parse) {
    MultigraphBuilder b(GraphKind::Text);
    int constituency = b.add_relation(std::string(kConstituencyRelation));
    int next_word = b.add_relation(std::string(kNextWordRelation));
    std::vector<int> leaf_ids;
    add_tree_nodes(parse, b, constituency, leaf_ids, -1);
    for (std::size_t k = 0; k + 1 < leaf_ids.size(); ++k)
        b.add_edge(leaf_ids[k], leaf_ids[k + 1], next_word);
    return b.build();
}

} // namespace dgms
