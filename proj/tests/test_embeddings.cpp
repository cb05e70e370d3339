#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dgms/embeddings.hpp"
#include "dgms/text_graph.hpp"

using namespace dgms;

namespace {

LabeledMultigraph token_graph(const std::vector<std::string>& tokens) {
    MultigraphBuilder b(GraphKind::Text);
    b.add_relation("r");
    for (const auto& t : tokens) b.add_node(t, true);
    return b.build();
}

double norm(const float* row, int d) {
    double acc = 0;
    for (int i = 0; i < d; ++i) acc += static_cast<double>(row[i]) * row[i];
    return std::sqrt(acc);
}

} // namespace

TEST_CASE("parse_embeddings: basic table") {
    auto table = parse_embeddings("the 0.1 0.2 0.3\na 0.4 0.5 0.6\n");
    CHECK(table.size() == 2);
    CHECK(table.dim() == 3);
    auto row = table.lookup("a");
    REQUIRE(row.has_value());
    CHECK((*row)[2] == doctest::Approx(0.6f));
    CHECK_FALSE(table.lookup("missing").has_value());
}

TEST_CASE("parse_embeddings: ragged line is a format error") {
    CHECK_THROWS_AS(parse_embeddings("the 0.1 0.2\na 0.3\n"), DataError);
    CHECK_THROWS_AS(parse_embeddings("the\n"), DataError);
    CHECK_THROWS_AS(parse_embeddings("the 0.1 zzz\n"), DataError);
}

TEST_CASE("parse_embeddings: empty file gives an empty table") {
    auto table = parse_embeddings("");
    CHECK(table.empty());
    CHECK(table.dim() == 0);
    CHECK_FALSE(table.lookup("anything").has_value());
}

TEST_CASE("parse_embeddings: duplicates keep the first row, tokens lowercase") {
    auto table = parse_embeddings("The 1 1\nthe 2 2\n");
    CHECK(table.size() == 1);
    auto row = table.lookup("the");
    REQUIRE(row.has_value());
    CHECK((*row)[0] == doctest::Approx(1.0f));
}

TEST_CASE("split_subtokens") {
    CHECK(split_subtokens("getWindowSize") == std::vector<std::string>{"get", "window", "size"});
    CHECK(split_subtokens("max_value2") == std::vector<std::string>{"max", "value", "2"});
    CHECK(split_subtokens("size") == std::vector<std::string>{"size"});
    CHECK(split_subtokens("HTMLParser") == std::vector<std::string>{"html", "parser"});
    CHECK(split_subtokens("MethodDeclaration") == std::vector<std::string>{"method", "declaration"});
    CHECK(split_subtokens("v2Counter") == std::vector<std::string>{"v", "2", "counter"});
    CHECK(split_subtokens("__init__") == std::vector<std::string>{"init"});
    CHECK(split_subtokens("==") == std::vector<std::string>{});
    CHECK_THROWS_AS(split_subtokens(""), ArgumentError);
}

TEST_CASE("node_features: exact hit, subtoken average, zero fallback") {
    auto table = parse_embeddings("the 0.5 -1\nwindow 1 0\nsize 0 1\n");
    auto g = token_graph({"the", "windowSize", "zzqq", "Window"});
    auto features = node_features(g, table);
    REQUIRE(features.rows == 4);
    REQUIRE(features.cols == 2);

    CHECK(features.at(0, 0) == doctest::Approx(0.5f));
    CHECK(features.at(0, 1) == doctest::Approx(-1.0f));

    // windowSize misses exactly, averages its two found subtokens.
    CHECK(features.at(1, 0) == doctest::Approx(0.5f));
    CHECK(features.at(1, 1) == doctest::Approx(0.5f));

    CHECK(features.at(2, 0) == 0.0f);
    CHECK(features.at(2, 1) == 0.0f);

    // Case-insensitive exact hit.
    CHECK(features.at(3, 0) == doctest::Approx(1.0f));
}

TEST_CASE("node_features: missing subtokens are skipped, not zero-padded") {
    auto table = parse_embeddings("window 1 0\n");
    auto g = token_graph({"windowUnknown"});
    auto features = node_features(g, table);
    CHECK(features.at(0, 0) == doctest::Approx(1.0f));
    CHECK(features.at(0, 1) == doctest::Approx(0.0f));
}

TEST_CASE("node_features: empty table is an argument error") {
    auto g = token_graph({"a"});
    CHECK_THROWS_AS(node_features(g, EmbeddingTable{}), ArgumentError);
}

TEST_CASE("subtoken averages satisfy the convexity bound") {
    auto table = parse_embeddings("get 1 2 2\nwindow -2 0 1\nsize 0 3 -1\n");
    auto g = token_graph({"getWindowSize", "get_size", "window2size"});
    auto features = node_features(g, table);
    double max_row_norm = 0;
    for (const char* t : {"get", "window", "size"})
        max_row_norm = std::max(max_row_norm, norm(table.lookup(t)->data(), 3));
    for (int i = 0; i < features.rows; ++i)
        CHECK(norm(&features.at(i, 0), 3) <= max_row_norm + 1e-6);
}

TEST_CASE("node_features is deterministic") {
    auto table = parse_embeddings("alpha 0.25 0.5\nbeta -0.125 1\n");
    auto g = token_graph({"alpha", "beta", "alphaBeta", "other"});
    auto a = node_features(g, table);
    auto b = node_features(g, table);
    CHECK(a.data == b.data);
}

TEST_CASE("restricted loading keeps only requested tokens") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "dgms_test_glove.txt";
    {
        std::ofstream out(path);
        out << "alpha 1 0\nbeta 0 1\ngamma 1 1\n";
    }
    auto table = load_embeddings_restricted(path, {"ALPHA", "gamma"});
    CHECK(table.size() == 2);
    CHECK(table.lookup("alpha").has_value());
    CHECK_FALSE(table.lookup("beta").has_value());
    auto full = load_embeddings(path);
    CHECK(full.size() == 3);
    fs::remove(path);
    CHECK_THROWS_AS(load_embeddings(path), DataError);
}
