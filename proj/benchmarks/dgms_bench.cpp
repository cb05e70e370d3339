#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "dgms/code_graph.hpp"
#include "dgms/embeddings.hpp"
#include "dgms/model.hpp"
#include "dgms/text_graph.hpp"
#include "dgms/training.hpp"

namespace {

using namespace dgms;

std::string sample_program(int statements) {
    std::string src;
    for (int i = 0; i < statements; ++i) {
        const std::string n = "v" + std::to_string(i % 7);
        src += n + " = f(" + n + ", " + std::to_string(i) + ")\n";
        if (i % 4 == 3) src += "if " + n + " > 0 { " + n + " = " + n + " - 1 }\n";
    }
    src += "return v0\n";
    return src;
}

Matrix<float> random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    Matrix<float> m(rows, cols);
    for (auto& v : m.data) v = dist(rng);
    return m;
}

struct ScoringFixture {
    ModelConfig config;
    DgmsParams<float> params;
    PreparedGraph<float> query;
    PreparedGraph<float> code;

    ScoringFixture() {
        config.input_dim = 64;
        config.rgcn_dim = 100;
        config.agg_dim = 100;
        config.seed = 1;
        params = init_params<float>(config, standard_relation_vocab());

        std::mt19937_64 rng(9);
        auto text = build_text_graph(
            parse_bracketed("(S (VP (VB configure) (NP the window size)) (PP for all users))"));
        auto program = build_program_graph(parse_minilang(sample_program(12)));
        query = prepare_graph<float>(text, random_matrix(rng, text.node_count(), 64),
                                     params.relations);
        code = prepare_graph<float>(program, random_matrix(rng, program.node_count(), 64),
                                    params.relations);
    }
};

void BM_ParseMinilang(benchmark::State& state) {
    const std::string src = sample_program(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(parse_minilang(src));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ParseMinilang)->Arg(4)->Arg(16)->Arg(64);

void BM_BuildProgramGraph(benchmark::State& state) {
    const auto ast = parse_minilang(sample_program(static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(build_program_graph(ast));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_BuildProgramGraph)->Arg(4)->Arg(16)->Arg(64);

void BM_BuildTextGraph(benchmark::State& state) {
    const auto parse = parse_bracketed(
        "(S (NP (DT the) (NN parser)) (VP (VB builds) (NP (DT a) (JJ labeled) (NN graph)) "
        "(PP (IN from) (NP (DT the) (NN sentence)))))");
    for (auto _ : state) benchmark::DoNotOptimize(build_text_graph(parse));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_BuildTextGraph);

void BM_RgcnEncode(benchmark::State& state) {
    ScoringFixture fx;
    for (auto _ : state) benchmark::DoNotOptimize(rgcn_node_embeddings(fx.params, fx.code));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RgcnEncode);

void BM_ScorePair(benchmark::State& state) {
    ScoringFixture fx;
    for (auto _ : state) benchmark::DoNotOptimize(score_pair_value(fx.params, fx.query, fx.code));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ScorePair);

void BM_TripleLossBackward(benchmark::State& state) {
    ScoringFixture fx;
    for (auto _ : state) {
        Tape<float> tape;
        auto staged = stage_params(tape, fx.params, true);
        auto loss =
            triple_loss(tape, staged, fx.config, fx.query, fx.code, fx.code, 0.5f);
        tape.backward(loss);
        benchmark::DoNotOptimize(tape.grad(staged.fc_weight));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TripleLossBackward);

} // namespace

BENCHMARK_MAIN();
