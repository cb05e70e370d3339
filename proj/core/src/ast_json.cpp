#include "ast_internal.hpp"
#include "dgms/code_graph.hpp"
#include "json_util.hpp"

namespace dgms {

namespace {

constexpr int kMaxAstDepth = 10000;

njson node_to_json(const AstTree& tree, int id) {
    const AstNode& node = tree.nodes[static_cast<std::size_t>(id)];
    njson j;
    j["kind"] = node.kind;
    if (node.is_terminal()) {
        j["value"] = *node.value;
        if (node.is_identifier) j["id"] = true;
    } else {
        njson kids = njson::array();
        for (int c : tree.children[static_cast<std::size_t>(id)])
            kids.push_back(node_to_json(tree, c));
        j["children"] = std::move(kids);
    }
    return j;
}

int node_from_json(const njson& j, AstTree& tree, int depth) {
    if (depth > kMaxAstDepth) throw ParseError("ast json: nesting too deep");
    if (!j.is_object()) throw ParseError("ast json: node entries must be objects");
    AstNode node;
    node.kind = require_string(j, "kind", "ast json");
    bool has_value = j.contains("value");
    bool has_children = j.contains("children");
    if (has_value && has_children)
        throw ParseError("ast json: node cannot carry both 'value' and 'children'");
    if (!has_value && !has_children)
        throw ParseError("ast json: node needs either 'value' or 'children'");
    if (has_value) {
        const njson& v = j.at("value");
        if (!v.is_string()) throw ParseError("ast json: 'value' must be a string");
        node.value = v.get<std::string>();
        if (j.contains("id")) {
            const njson& flag = j.at("id");
            if (!flag.is_boolean()) throw ParseError("ast json: 'id' must be a boolean");
            node.is_identifier = flag.get<bool>();
        }
    } else if (j.contains("id")) {
        throw ParseError("ast json: 'id' is only valid on terminal nodes");
    }
    int id = tree.node_count();
    tree.nodes.push_back(std::move(node));
    tree.children.emplace_back();
    if (has_children) {
        const njson& kids = j.at("children");
        if (!kids.is_array()) throw ParseError("ast json: 'children' must be an array");
        if (kids.empty())
            throw ParseError("ast json: non-terminal nodes need at least one child");
        for (const auto& kid : kids) {
            // Recurse first: it grows tree.children and would invalidate a
            // reference taken up front.
            const int child_id = node_from_json(kid, tree, depth + 1);
            tree.children[static_cast<std::size_t>(id)].push_back(child_id);
        }
    }
    return id;
}

} // namespace

std::string encode_ast_json(const AstTree& tree) {
    check_ast(tree);
    return node_to_json(tree, tree.root).dump();
}

AstTree decode_ast_json(std::string_view bytes) {
    njson j = parse_json(bytes, "ast json");
    AstTree tree;
    tree.root = node_from_json(j, tree, 0);
    AstTree out = canonicalize_ast(tree);
    try {
        check_ast(out);
    } catch (const ArgumentError& e) {
        throw ParseError(std::string("ast json: ") + e.what());
    }
    return out;
}

LabeledMultigraph build_program_graph(const AstTree& ast) {
    check_ast(ast);
    MultigraphBuilder b(GraphKind::Code);
    int child = b.add_relation(std::string(kChildRelation));
    int next_token = b.add_relation(std::string(kNextTokenRelation));
    int last_use = b.add_relation(std::string(kLastLexicalUseRelation));

    for (const auto& node : ast.nodes)
        b.add_node(node.is_terminal() ? *node.value : node.kind, node.is_terminal());

    for (int p = 0; p < ast.node_count(); ++p)
        for (int c : ast.children[static_cast<std::size_t>(p)]) b.add_edge(p, c, child);

    std::vector<int> terminals(static_cast<std::size_t>(ast.terminal_count()), -1);
    for (int i = 0; i < ast.node_count(); ++i) {
        const auto& node = ast.nodes[static_cast<std::size_t>(i)];
        if (node.is_terminal()) terminals[static_cast<std::size_t>(node.source_order)] = i;
    }
    for (std::size_t k = 0; k + 1 < terminals.size(); ++k)
        b.add_edge(terminals[k], terminals[k + 1], next_token);

    // Most recent earlier occurrence of the same identifier spelling.
    std::unordered_map<std::string, int> last_seen;
    for (int t : terminals) {
        const auto& node = ast.nodes[static_cast<std::size_t>(t)];
        if (!node.is_identifier) continue;
        auto it = last_seen.find(*node.value);
        if (it != last_seen.end()) b.add_edge(t, it->second, last_use);
        last_seen[*node.value] = t;
    }
    return b.build();
}

} // namespace dgms
