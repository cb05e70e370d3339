#include "dgms/graph.hpp"

#include <algorithm>

#include "graph_json_internal.hpp"
#include "json_util.hpp"

namespace dgms {

std::string_view graph_kind_name(GraphKind kind) {
    return kind == GraphKind::Text ? "text" : "code";
}

GraphKind graph_kind_from_name(std::string_view name) {
    if (name == "text") return GraphKind::Text;
    if (name == "code") return GraphKind::Code;
    throw ParseError("unknown graph kind: '" + std::string(name) + "'");
}

RelationVocab::RelationVocab(std::vector<std::string> names) {
    for (auto& n : names) add(std::move(n));
}

int RelationVocab::add(std::string name) {
    if (name.empty()) throw ArgumentError("relation name must be non-empty");
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(names_.size());
    index_.emplace(name, id);
    names_.push_back(std::move(name));
    return id;
}

int RelationVocab::id_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? -1 : it->second;
}

const std::string& RelationVocab::name_of(int id) const {
    if (id < 0 || id >= size()) throw ArgumentError("relation id out of range");
    return names_[static_cast<std::size_t>(id)];
}

namespace {

bool has_inverse_name(const RelationVocab& vocab) {
    for (const auto& n : vocab.names())
        if (n.size() >= kInverseSuffix.size() &&
            std::string_view(n).substr(n.size() - kInverseSuffix.size()) == kInverseSuffix)
            return true;
    return false;
}

void canonicalize_edges(std::vector<GraphEdge>& edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

} // namespace

bool LabeledMultigraph::is_augmented() const {
    return has_inverse_name(relations);
}

int MultigraphBuilder::add_node(std::string token, bool is_terminal) {
    if (built_) throw StateError("builder already consumed");
    if (token.empty()) throw ArgumentError("node token must be non-empty");
    graph_.nodes.push_back(GraphNode{std::move(token), is_terminal});
    return graph_.node_count() - 1;
}

void MultigraphBuilder::add_edge(int src, int dst, int rel) {
    if (built_) throw StateError("builder already consumed");
    graph_.edges.push_back(GraphEdge{src, dst, rel});
}

LabeledMultigraph MultigraphBuilder::build() {
    if (built_) throw StateError("builder already consumed");
    built_ = true;
    canonicalize_edges(graph_.edges);
    auto report = validate_graph(graph_);
    if (!report.ok()) throw ArgumentError("invalid graph: " + report.violations.front());
    return std::move(graph_);
}

ValidationReport validate_graph(const LabeledMultigraph& g, std::optional<int> node_cap) {
    ValidationReport report;
    if (g.nodes.empty()) report.violations.push_back("empty graph (node count must be >= 1)");
    for (int i = 0; i < g.node_count(); ++i)
        if (g.nodes[static_cast<std::size_t>(i)].token.empty())
            report.violations.push_back("node " + std::to_string(i) + " has an empty token");
    for (const auto& e : g.edges) {
        if (e.src < 0 || e.src >= g.node_count() || e.dst < 0 || e.dst >= g.node_count())
            report.violations.push_back("dangling endpoint on edge (" + std::to_string(e.src) +
                                        "," + std::to_string(e.dst) + "," + std::to_string(e.rel) +
                                        ")");
        if (e.rel < 0 || e.rel >= g.relations.size())
            report.violations.push_back("bad relation id on edge (" + std::to_string(e.src) + "," +
                                        std::to_string(e.dst) + "," + std::to_string(e.rel) + ")");
    }
    if (node_cap && g.node_count() > *node_cap)
        report.violations.push_back("node cap exceeded: " + std::to_string(g.node_count()) +
                                    " > " + std::to_string(*node_cap));
    return report;
}

std::vector<int> in_neighbors(const LabeledMultigraph& g, int node, int rel) {
    if (node < 0 || node >= g.node_count()) throw ArgumentError("in_neighbors: node id out of range");
    if (rel < 0 || rel >= g.relations.size())
        throw ArgumentError("in_neighbors: relation id out of range");
    std::vector<int> srcs;
    for (const auto& e : g.edges)
        if (e.dst == node && e.rel == rel) srcs.push_back(e.src);
    std::sort(srcs.begin(), srcs.end());
    srcs.erase(std::unique(srcs.begin(), srcs.end()), srcs.end());
    return srcs;
}

LabeledMultigraph augment_inverses(const LabeledMultigraph& g) {
    if (g.is_augmented()) throw StateError("graph is already inverse-augmented");
    LabeledMultigraph out = g;
    const int canonical = g.relations.size();
    for (int r = 0; r < canonical; ++r)
        out.relations.add(g.relations.name_of(r) + std::string(kInverseSuffix));
    for (const auto& e : g.edges)
        out.edges.push_back(GraphEdge{e.dst, e.src, e.rel + canonical});
    std::sort(out.edges.begin(), out.edges.end());
    out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
    return out;
}

njson graph_to_njson(const LabeledMultigraph& g) {
    auto report = validate_graph(g);
    if (!report.ok()) throw ArgumentError("cannot encode invalid graph: " + report.violations.front());
    njson j;
    j["kind"] = std::string(graph_kind_name(g.kind));
    j["relations"] = g.relations.names();
    njson nodes = njson::array();
    for (const auto& n : g.nodes) {
        njson jn;
        jn["token"] = n.token;
        jn["terminal"] = n.is_terminal;
        nodes.push_back(std::move(jn));
    }
    j["nodes"] = std::move(nodes);
    njson edges = njson::array();
    std::vector<GraphEdge> sorted = g.edges;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& e : sorted) edges.push_back(njson::array({e.src, e.dst, e.rel}));
    j["edges"] = std::move(edges);
    return j;
}

std::string encode_graph_json(const LabeledMultigraph& g) {
    return graph_to_njson(g).dump();
}

LabeledMultigraph graph_from_njson(const njson& j) {
    LabeledMultigraph g;
    g.kind = graph_kind_from_name(require_string(j, "kind", "graph"));
    const njson& rels = require_array(j, "relations", "graph");
    for (const auto& r : rels) {
        if (!r.is_string()) throw ParseError("graph: relation names must be strings");
        if (g.relations.id_of(r.get<std::string>()) >= 0)
            throw ParseError("graph: duplicate relation name '" + r.get<std::string>() + "'");
        g.relations.add(r.get<std::string>());
    }
    const njson& nodes = require_array(j, "nodes", "graph");
    for (const auto& n : nodes) {
        if (!n.is_object()) throw ParseError("graph: node entries must be objects");
        GraphNode node;
        node.token = require_string(n, "token", "graph node");
        node.is_terminal = require_bool(n, "terminal", "graph node");
        if (node.token.empty()) throw ParseError("graph: node token must be non-empty");
        g.nodes.push_back(std::move(node));
    }
    if (g.nodes.empty()) throw ParseError("graph: node list must be non-empty");
    const njson& edges = require_array(j, "edges", "graph");
    for (const auto& e : edges) {
        if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
            !e[1].is_number_integer() || !e[2].is_number_integer())
            throw ParseError("graph: edges must be [src,dst,rel] integer triples");
        GraphEdge edge{e[0].get<int>(), e[1].get<int>(), e[2].get<int>()};
        if (edge.src < 0 || edge.src >= g.node_count() || edge.dst < 0 ||
            edge.dst >= g.node_count())
            throw ParseError("graph: edge endpoint out of range");
        if (edge.rel < 0 || edge.rel >= g.relations.size())
            throw ParseError("graph: edge relation index out of range");
        g.edges.push_back(edge);
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

LabeledMultigraph decode_graph_json(std::string_view bytes) {
    return graph_from_njson(parse_json(bytes, "graph"));
}

} // namespace dgms
