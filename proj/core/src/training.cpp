#include "dgms/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>

#include "dgms/parallel.hpp"
#include "json_util.hpp"

namespace dgms {

void TrainConfig::validate() const {
    if (margin <= 0.0) throw ArgumentError("train config: margin must be > 0");
    if (batch_size < 1) throw ArgumentError("train config: batch size must be >= 1");
    if (epochs < 0) throw ArgumentError("train config: epochs must be >= 0");
    if (learning_rate <= 0.0) throw ArgumentError("train config: learning rate must be > 0");
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 step over seed ^ salt
    std::uint64_t z = (seed ^ salt) + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace

std::vector<Triple> sample_triples(const Corpus& corpus, int epoch, std::uint64_t seed) {
    const int n = corpus.size();
    if (n < 2) throw ArgumentError("sample_triples: corpus needs at least 2 entries");
    std::mt19937_64 rng(mix_seed(seed, 0x7472697065ull + static_cast<std::uint64_t>(epoch)));
    std::vector<Triple> triples;
    triples.reserve(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> pick(0, n - 2);
    for (int i = 0; i < n; ++i) {
        int j = pick(rng);
        if (j >= i) ++j;
        triples.push_back(Triple{i, i, j});
    }
    return triples;
}

template <class S>
Tensor<S> triple_loss(Tape<S>& tape, const StagedParams<S>& staged, const ModelConfig& config,
                      const PreparedGraph<S>& query, const PreparedGraph<S>& positive,
                      const PreparedGraph<S>& negative, S margin) {
    Tensor<S> q_nodes = rgcn_encode(tape, staged, config, query);
    Tensor<S> pos_nodes = rgcn_encode(tape, staged, config, positive);
    Tensor<S> neg_nodes = rgcn_encode(tape, staged, config, negative);
    Tensor<S> s_pos = match_and_score(tape, staged, config, q_nodes, pos_nodes);
    Tensor<S> s_neg = match_and_score(tape, staged, config, q_nodes, neg_nodes);
    return tape.hinge(tape.add(tape.sub(tape.scalar(margin), s_pos), s_neg));
}

template Tensor<float> triple_loss<float>(Tape<float>&, const StagedParams<float>&,
                                          const ModelConfig&, const PreparedGraph<float>&,
                                          const PreparedGraph<float>&, const PreparedGraph<float>&,
                                          float);
template Tensor<double> triple_loss<double>(Tape<double>&, const StagedParams<double>&,
                                            const ModelConfig&, const PreparedGraph<double>&,
                                            const PreparedGraph<double>&,
                                            const PreparedGraph<double>&, double);

template <class S>
void adam_step(DgmsParams<S>& params, const std::vector<Matrix<S>>& grads, AdamState<S>& state,
               const TrainConfig& config) {
    auto refs = param_refs(params);
    if (grads.size() != refs.size())
        throw ShapeError("adam_step: expected " + std::to_string(refs.size()) +
                         " gradients, got " + std::to_string(grads.size()));
    if (state.m.empty()) {
        for (const auto* p : refs) {
            state.m.push_back(Matrix<S>(p->rows, p->cols));
            state.v.push_back(Matrix<S>(p->rows, p->cols));
        }
    }
    if (state.m.size() != refs.size() || state.v.size() != refs.size())
        throw ShapeError("adam_step: optimizer state does not match parameters");

    ++state.step;
    const S b1 = static_cast<S>(config.beta1);
    const S b2 = static_cast<S>(config.beta2);
    const S lr = static_cast<S>(config.learning_rate);
    const S eps = static_cast<S>(config.epsilon);
    const S bc1 = S(1) - static_cast<S>(std::pow(config.beta1, static_cast<double>(state.step)));
    const S bc2 = S(1) - static_cast<S>(std::pow(config.beta2, static_cast<double>(state.step)));

    for (std::size_t i = 0; i < refs.size(); ++i) {
        Matrix<S>& theta = *refs[i];
        const Matrix<S>& g = grads[i];
        if (!theta.same_shape(g))
            throw ShapeError("adam_step: gradient " + std::to_string(i) + " shape mismatch");
        Matrix<S>& m = state.m[i];
        Matrix<S>& v = state.v[i];
        for (std::size_t k = 0; k < theta.data.size(); ++k) {
            m.data[k] = b1 * m.data[k] + (S(1) - b1) * g.data[k];
            v.data[k] = b2 * v.data[k] + (S(1) - b2) * g.data[k] * g.data[k];
            const S m_hat = m.data[k] / bc1;
            const S v_hat = v.data[k] / bc2;
            theta.data[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

template void adam_step<float>(DgmsParams<float>&, const std::vector<Matrix<float>>&,
                               AdamState<float>&, const TrainConfig&);
template void adam_step<double>(DgmsParams<double>&, const std::vector<Matrix<double>>&,
                                AdamState<double>&, const TrainConfig&);

namespace {

struct TripleRun {
    double loss = 0.0;
    std::vector<Matrix<float>> grads; // canonical order; empty in eval mode
};

std::vector<Tensor<float>> staged_leaves(const StagedParams<float>& staged) {
    std::vector<Tensor<float>> leaves;
    for (std::size_t l = 0; l < staged.w_self.size(); ++l) {
        leaves.push_back(staged.w_self[l]);
        for (const auto& w : staged.w_rel[l]) leaves.push_back(w);
    }
    leaves.push_back(staged.fc_weight);
    leaves.push_back(staged.fc_bias);
    return leaves;
}

TripleRun run_triple(const DgmsParams<float>& params, const PreparedCorpus& prepared,
                     const Triple& t, float margin, bool with_grads) {
    Tape<float> tape;
    StagedParams<float> staged = stage_params(tape, params, with_grads);
    Tensor<float> loss = triple_loss(
        tape, staged, params.config, prepared.text[static_cast<std::size_t>(t.query)],
        prepared.code[static_cast<std::size_t>(t.positive)],
        prepared.code[static_cast<std::size_t>(t.negative)], margin);
    TripleRun run;
    run.loss = static_cast<double>(loss.scalar_value());
    if (with_grads) {
        tape.backward(loss);
        for (const auto& leaf : staged_leaves(staged)) run.grads.push_back(tape.grad(leaf));
    }
    return run;
}

double mean_triple_loss(const DgmsParams<float>& params, const PreparedCorpus& prepared,
                        const std::vector<Triple>& triples, float margin, int threads) {
    if (triples.empty()) return 0.0;
    std::vector<double> losses(triples.size());
    parallel_for(triples.size(), threads, [&](std::size_t i) {
        losses[i] = run_triple(params, prepared, triples[i], margin, false).loss;
    });
    double acc = 0.0;
    for (double l : losses) acc += l;
    return acc / static_cast<double>(triples.size());
}

} // namespace

TrainResult train(const Corpus& train_corpus, const Corpus& val_corpus,
                  const ModelConfig& model_config, const TrainConfig& train_config,
                  const EmbeddingTable& table, std::ostream* log,
                  const DgmsParams<float>* warm_start) {
    model_config.validate();
    train_config.validate();
    if (train_corpus.size() == 0 || val_corpus.size() == 0)
        throw ArgumentError("train: corpora must be non-empty");

    DgmsParams<float> params =
        warm_start ? *warm_start : init_params<float>(model_config, standard_relation_vocab());

    TrainResult result;
    result.best_params = params;
    result.final_params = params;
    if (train_config.epochs == 0) return result;

    PreparedCorpus train_prepared =
        prepare_corpus(train_corpus, params, table, train_config.threads);
    PreparedCorpus val_prepared = prepare_corpus(val_corpus, params, table, train_config.threads);

    const float margin = static_cast<float>(train_config.margin);
    // Validation triples are fixed across epochs.
    const std::vector<Triple> val_triples = sample_triples(val_corpus, 0, train_config.seed);
    const std::vector<Triple> frozen =
        train_config.freeze_negatives ? sample_triples(train_corpus, 0, train_config.seed)
                                      : std::vector<Triple>{};

    AdamState<float> adam;
    bool have_best = false;

    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        std::vector<Triple> triples = train_config.freeze_negatives
                                          ? frozen
                                          : sample_triples(train_corpus, epoch, train_config.seed);
        std::vector<std::size_t> order(triples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::mt19937_64 shuffle_rng(
            mix_seed(train_config.seed, 0x6f72646572ull + static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        std::size_t batch_start = 0;
        int batch_index = 0;
        while (batch_start < order.size()) {
            const std::size_t batch_n =
                std::min<std::size_t>(static_cast<std::size_t>(train_config.batch_size),
                                      order.size() - batch_start);
            std::vector<TripleRun> runs(batch_n);
            parallel_for(batch_n, train_config.threads, [&](std::size_t i) {
                runs[i] = run_triple(params, train_prepared,
                                     triples[order[batch_start + i]], margin, true);
            });

            double batch_loss = 0.0;
            std::vector<Matrix<float>> grads;
            for (std::size_t i = 0; i < batch_n; ++i) {
                batch_loss += runs[i].loss;
                if (grads.empty()) {
                    grads = std::move(runs[i].grads);
                } else {
                    for (std::size_t p = 0; p < grads.size(); ++p)
                        for (std::size_t k = 0; k < grads[p].data.size(); ++k)
                            grads[p].data[k] += runs[i].grads[p].data[k];
                }
            }
            batch_loss /= static_cast<double>(batch_n);
            const float inv_n = 1.0f / static_cast<float>(batch_n);
            for (auto& g : grads)
                for (auto& v : g.data) v *= inv_n;

            if (!std::isfinite(batch_loss))
                throw Error("train: non-finite batch loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index));
            adam_step(params, grads, adam, train_config);
            epoch_loss += batch_loss * static_cast<double>(batch_n);
            batch_start += batch_n;
            ++batch_index;
        }
        epoch_loss /= static_cast<double>(triples.size());

        const double val_loss =
            mean_triple_loss(params, val_prepared, val_triples, margin, train_config.threads);
        if (!std::isfinite(val_loss))
            throw Error("train: non-finite validation loss at epoch " + std::to_string(epoch));
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

        result.history.push_back(EpochStats{epoch, epoch_loss, val_loss, seconds});
        if (log) {
            njson line;
            line["epoch"] = epoch;
            line["train_loss"] = epoch_loss;
            line["val_loss"] = val_loss;
            line["seconds"] = seconds;
            (*log) << line.dump() << '\n';
        }
        if (!have_best || val_loss < result.best_val_loss) {
            have_best = true;
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            result.best_params = params;
            result.best_adam = adam;
        }
    }
    result.final_params = params;
    return result;
}

std::string encode_training_checkpoint(const DgmsParams<float>& params,
                                       const AdamState<float>& adam) {
    njson j = parse_json(encode_checkpoint(params), "checkpoint");
    if (adam.step > 0) {
        njson a;
        a["step"] = adam.step;
        auto block = [](const std::vector<Matrix<float>>& mats) {
            njson arr = njson::array();
            for (const auto& m : mats) {
                njson t;
                t["shape"] = njson::array({m.rows, m.cols});
                njson data = njson::array();
                for (float v : m.data) data.push_back(static_cast<double>(v));
                t["data"] = std::move(data);
                arr.push_back(std::move(t));
            }
            return arr;
        };
        a["m"] = block(adam.m);
        a["v"] = block(adam.v);
        j["adam"] = std::move(a);
    }
    return j.dump();
}

DgmsParams<float> decode_training_checkpoint(std::string_view bytes,
                                             AdamState<float>* adam_out) {
    DgmsParams<float> params = decode_checkpoint(bytes);
    if (adam_out) {
        *adam_out = AdamState<float>{};
        njson j = parse_json(bytes, "checkpoint");
        if (j.contains("adam")) {
            const njson& a = j.at("adam");
            adam_out->step = require_int(a, "step", "adam state");
            auto block = [](const njson& arr, const char* what) {
                if (!arr.is_array()) throw ParseError(std::string(what) + ": expected array");
                std::vector<Matrix<float>> mats;
                for (const auto& t : arr) {
                    const njson& shape = require_array(t, "shape", what);
                    Matrix<float> m(shape[0].get<int>(), shape[1].get<int>());
                    const njson& data = require_array(t, "data", what);
                    if (data.size() != m.data.size())
                        throw ParseError(std::string(what) + ": data length mismatch");
                    std::size_t i = 0;
                    for (const auto& v : data) m.data[i++] = static_cast<float>(v.get<double>());
                    mats.push_back(std::move(m));
                }
                return mats;
            };
            adam_out->m = block(require_array(a, "m", "adam state"), "adam m");
            adam_out->v = block(require_array(a, "v", "adam state"), "adam v");
        }
    }
    return params;
}

} // namespace dgms
