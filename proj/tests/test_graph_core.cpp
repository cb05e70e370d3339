#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dgms/graph.hpp"
#include "support/random_graphs.hpp"

using namespace dgms;

namespace {

LabeledMultigraph two_node_graph(std::vector<GraphEdge> edges) {
    LabeledMultigraph g;
    g.kind = GraphKind::Text;
    g.nodes = {GraphNode{"a", true}, GraphNode{"b", true}};
    g.relations.add("r");
    g.edges = std::move(edges);
    return g;
}

} // namespace

TEST_CASE("validate: minimal legal graph") {
    LabeledMultigraph g;
    g.nodes = {GraphNode{"only", true}};
    CHECK(validate_graph(g).ok());
}

TEST_CASE("validate: dangling endpoint") {
    auto g = two_node_graph({GraphEdge{0, 5, 0}});
    auto report = validate_graph(g);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations.front().find("dangling") != std::string::npos);
}

TEST_CASE("validate: bad relation id") {
    auto g = two_node_graph({GraphEdge{0, 1, 3}});
    auto report = validate_graph(g);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations.front().find("relation") != std::string::npos);
}

TEST_CASE("validate: empty graph rejected") {
    LabeledMultigraph g;
    CHECK_FALSE(validate_graph(g).ok());
}

TEST_CASE("validate: node cap") {
    MultigraphBuilder b(GraphKind::Code);
    for (int i = 0; i < 301; ++i) b.add_node("n" + std::to_string(i), true);
    auto g = b.build();
    CHECK(validate_graph(g).ok());
    auto report = validate_graph(g, 300);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations.front().find("node cap exceeded") != std::string::npos);
    CHECK(validate_graph(g, 301).ok());
}

TEST_CASE("builder dedups parallel edges and sorts") {
    MultigraphBuilder b(GraphKind::Text);
    int r = b.add_relation("r");
    b.add_node("a", true);
    b.add_node("b", true);
    b.add_edge(1, 0, r);
    b.add_edge(0, 1, r);
    b.add_edge(1, 0, r);
    auto g = b.build();
    REQUIRE(g.edge_count() == 2);
    CHECK(g.edges[0] == GraphEdge{0, 1, r});
    CHECK(g.edges[1] == GraphEdge{1, 0, r});
}

TEST_CASE("builder rejects invalid graphs") {
    MultigraphBuilder b(GraphKind::Text);
    int r = b.add_relation("r");
    b.add_node("a", true);
    b.add_edge(0, 7, r);
    CHECK_THROWS_AS(b.build(), ArgumentError);
    CHECK_THROWS_AS(MultigraphBuilder(GraphKind::Text).add_node("", true), ArgumentError);
}

TEST_CASE("in_neighbors: direction, dedup, ordering") {
    auto g = two_node_graph({GraphEdge{1, 0, 0}});
    CHECK(in_neighbors(g, 0, 0) == std::vector<int>{1});
    CHECK(in_neighbors(g, 1, 0).empty());

    MultigraphBuilder b(GraphKind::Text);
    int r = b.add_relation("r");
    for (int i = 0; i < 3; ++i) b.add_node("n" + std::to_string(i), true);
    b.add_edge(2, 0, r);
    b.add_edge(1, 0, r);
    b.add_edge(2, 0, r);
    auto g3 = b.build();
    CHECK(in_neighbors(g3, 0, r) == std::vector<int>{1, 2});

    CHECK_THROWS_AS(in_neighbors(g3, 9, r), ArgumentError);
    CHECK_THROWS_AS(in_neighbors(g3, 0, 4), ArgumentError);
}

TEST_CASE("in_neighbors matches brute-force scan on random graphs") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = dgms::testing::random_graph(rng, GraphKind::Code, 2, 12);
        for (int node = 0; node < g.node_count(); ++node)
            for (int rel = 0; rel < g.relations.size(); ++rel) {
                std::vector<int> expected;
                for (const auto& e : g.edges)
                    if (e.dst == node && e.rel == rel) expected.push_back(e.src);
                std::sort(expected.begin(), expected.end());
                expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
                CHECK(in_neighbors(g, node, rel) == expected);
            }
    }
}

TEST_CASE("augment_inverses adds reversed edges under inverse relations") {
    MultigraphBuilder b(GraphKind::Code);
    int child = b.add_relation("Child");
    b.add_node("Program", false);
    b.add_node("x", true);
    b.add_edge(0, 1, child);
    auto g = augment_inverses(b.build());

    REQUIRE(g.relations.size() == 2);
    CHECK(g.relations.name_of(1) == std::string("Child") + std::string(kInverseSuffix));
    REQUIRE(g.edge_count() == 2);
    CHECK(g.edges[0] == GraphEdge{0, 1, 0});
    CHECK(g.edges[1] == GraphEdge{1, 0, 1});
    CHECK(g.is_augmented());
}

TEST_CASE("augment_inverses on an edgeless graph doubles the vocabulary only") {
    MultigraphBuilder b(GraphKind::Text);
    b.add_relation("A");
    b.add_relation("B");
    b.add_node("n", true);
    auto g = augment_inverses(b.build());
    CHECK(g.relations.size() == 4);
    CHECK(g.edge_count() == 0);
}

TEST_CASE("augment_inverses: 3 edges on 2 relations become 6 on 4") {
    MultigraphBuilder b(GraphKind::Text);
    int a = b.add_relation("A");
    int c = b.add_relation("B");
    for (int i = 0; i < 3; ++i) b.add_node("n" + std::to_string(i), true);
    b.add_edge(0, 1, a);
    b.add_edge(1, 2, a);
    b.add_edge(2, 0, c);
    auto g = augment_inverses(b.build());
    CHECK(g.relations.size() == 4);
    CHECK(g.edge_count() == 6);
}

TEST_CASE("augment_inverses twice is a state error") {
    auto g = augment_inverses(two_node_graph({GraphEdge{0, 1, 0}}));
    CHECK_THROWS_AS(augment_inverses(g), StateError);
}

TEST_CASE("augmented graphs carry an inverse for every edge") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 25; ++trial) {
        auto g = dgms::testing::random_graph(rng, GraphKind::Text, 2, 10);
        const int canonical = g.relations.size();
        auto aug = augment_inverses(g);
        for (const auto& e : g.edges) {
            GraphEdge inverse{e.dst, e.src, e.rel + canonical};
            CHECK(std::find(aug.edges.begin(), aug.edges.end(), inverse) != aug.edges.end());
        }
    }
}

TEST_CASE("graph json round-trips and is byte-deterministic") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        auto g = dgms::testing::random_graph(rng, trial % 2 ? GraphKind::Text : GraphKind::Code,
                                             1, 15);
        const std::string bytes = encode_graph_json(g);
        auto decoded = decode_graph_json(bytes);
        CHECK(decoded == g);
        CHECK(encode_graph_json(decoded) == bytes);
    }
}

TEST_CASE("graph json schema errors") {
    CHECK_THROWS_AS(decode_graph_json("{"), ParseError);
    CHECK_THROWS_AS(decode_graph_json(R"({"kind":"text","nodes":[],"edges":[]})"), ParseError);
    CHECK_THROWS_AS(
        decode_graph_json(
            R"({"kind":"text","relations":["r"],"nodes":[{"token":"a","terminal":true}],"edges":[[0,0,5]]})"),
        ParseError);
    CHECK_THROWS_AS(
        decode_graph_json(R"({"kind":"maze","relations":[],"nodes":[],"edges":[]})"), ParseError);
    CHECK_THROWS_AS(
        decode_graph_json(R"({"kind":"text","relations":["r"],"nodes":[],"edges":[]})"),
        ParseError);
}

TEST_CASE("relation vocab enforces unique non-empty names") {
    RelationVocab vocab;
    CHECK(vocab.add("A") == 0);
    CHECK(vocab.add("B") == 1);
    CHECK(vocab.add("A") == 0);
    CHECK(vocab.id_of("B") == 1);
    CHECK(vocab.id_of("missing") == -1);
    CHECK_THROWS_AS(vocab.add(""), ArgumentError);
    CHECK_THROWS_AS(vocab.name_of(9), ArgumentError);
}
