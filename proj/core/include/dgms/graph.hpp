#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dgms/errors.hpp"

namespace dgms {

// Unicode superscript minus-one, appended to a relation name to form its inverse.
inline constexpr std::string_view kInverseSuffix = "⁻¹";

enum class GraphKind { Text, Code };

std::string_view graph_kind_name(GraphKind kind);
GraphKind graph_kind_from_name(std::string_view name);

/// One node of a text or code graph. Terminals are words / syntax tokens,
/// non-terminals are constituency symbols / syntax-kind names.
struct GraphNode {
    std::string token;
    bool is_terminal = false;

    bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
    int src = 0;
    int dst = 0;
    int rel = 0;

    auto operator<=>(const GraphEdge&) const = default;
};

/// Ordered list of relation names. Inverse relations carry kInverseSuffix.
class RelationVocab {
public:
    RelationVocab() = default;
    explicit RelationVocab(std::vector<std::string> names);

    // Returns the id of `name`, adding it if new. Throws on empty names.
    int add(std::string name);

    int id_of(std::string_view name) const; // -1 when absent
    const std::string& name_of(int id) const;
    int size() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }

    bool operator==(const RelationVocab& o) const { return names_ == o.names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
};

/// Directed labeled multigraph: the shared representation for text and code.
/// Node ids are dense 0-based indices; edges are kept sorted by (src, dst, rel)
/// with exact duplicates removed. Immutable by convention once built.
struct LabeledMultigraph {
    GraphKind kind = GraphKind::Text;
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    RelationVocab relations;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int edge_count() const { return static_cast<int>(edges.size()); }

    // True once inverse relations are present (any name ends with kInverseSuffix).
    bool is_augmented() const;

    bool operator==(const LabeledMultigraph& o) const {
        return kind == o.kind && nodes == o.nodes && edges == o.edges && relations == o.relations;
    }
};

/// Accumulates nodes and edges, then produces a canonical graph: edges sorted
/// ascending and deduplicated. Single-owner while building.
class MultigraphBuilder {
public:
    explicit MultigraphBuilder(GraphKind kind) { graph_.kind = kind; }

    int add_node(std::string token, bool is_terminal);
    int add_relation(std::string name) { return graph_.relations.add(std::move(name)); }
    void add_edge(int src, int dst, int rel);

    int node_count() const { return graph_.node_count(); }

    // Validates endpoints and relation ids; throws ArgumentError on violations.
    LabeledMultigraph build();

private:
    LabeledMultigraph graph_;
    bool built_ = false;
};

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

/// Report-style check of the multigraph invariants; never throws. Pass a cap
/// to also flag graphs whose node count exceeds it.
ValidationReport validate_graph(const LabeledMultigraph& g,
                                std::optional<int> node_cap = std::nullopt);

/// Sources of edges (src, node, rel), deduplicated, ascending.
std::vector<int> in_neighbors(const LabeledMultigraph& g, int node, int rel);

/// For every edge (s, d, r) adds (d, s, r-inverse); doubles the relation
/// vocabulary. Throws StateError when the graph is already augmented.
LabeledMultigraph augment_inverses(const LabeledMultigraph& g);

/// Canonical JSON bytes: {"kind","relations","nodes","edges"} in that order,
/// edges sorted ascending. Byte-deterministic for a given graph.
std::string encode_graph_json(const LabeledMultigraph& g);
LabeledMultigraph decode_graph_json(std::string_view bytes);

} // namespace dgms
