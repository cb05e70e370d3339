#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dgms/corpus.hpp"
#include "dgms/model.hpp"
#include "dgms/retrieval.hpp"

namespace dgms {

/// Indices into the corpus: the query's entry, its code as the positive, and
/// a sampled negative code.
struct Triple {
    int query = 0;
    int positive = 0;
    int negative = 0;
};

struct TrainConfig {
    double margin = 0.5;
    double learning_rate = 1e-4;
    int batch_size = 10;
    int epochs = 10;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // Keep the epoch-0 negatives for every epoch instead of resampling.
    bool freeze_negatives = false;
    int threads = 1;

    void validate() const;
};

/// One triple per (doc, code) pair; each negative is drawn uniformly from the
/// other code snippets. Deterministic per (seed, epoch).
std::vector<Triple> sample_triples(const Corpus& corpus, int epoch, std::uint64_t seed);

/// max(0, margin - sim(q, e) + sim(q, negative)); both similarities share the
/// staged parameters and the tape.
template <class S>
Tensor<S> triple_loss(Tape<S>& tape, const StagedParams<S>& staged, const ModelConfig& config,
                      const PreparedGraph<S>& query, const PreparedGraph<S>& positive,
                      const PreparedGraph<S>& negative, S margin);

template <class S>
struct AdamState {
    std::vector<Matrix<S>> m;
    std::vector<Matrix<S>> v;
    long long step = 0;
};

/// Standard bias-corrected Adam over the canonical parameter order.
template <class S>
void adam_step(DgmsParams<S>& params, const std::vector<Matrix<S>>& grads, AdamState<S>& state,
               const TrainConfig& config);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    DgmsParams<float> best_params;
    AdamState<float> best_adam;
    int best_epoch = -1;
    double best_val_loss = 0.0;
    DgmsParams<float> final_params;
    std::vector<EpochStats> history;
};

/// Epoch loop: resample triples, run batches (mean loss, backward, Adam),
/// then score a fixed validation triple set; the checkpoint with the lowest
/// validation loss wins. Writes one JSON line per epoch to `log` when given.
/// Throws on non-finite losses. epochs == 0 returns the initial parameters.
TrainResult train(const Corpus& train_corpus, const Corpus& val_corpus,
                  const ModelConfig& model_config, const TrainConfig& train_config,
                  const EmbeddingTable& table, std::ostream* log = nullptr,
                  const DgmsParams<float>* warm_start = nullptr);

/// Model checkpoint plus the optimizer state block.
std::string encode_training_checkpoint(const DgmsParams<float>& params,
                                       const AdamState<float>& adam);
DgmsParams<float> decode_training_checkpoint(std::string_view bytes,
                                             AdamState<float>* adam_out = nullptr);

} // namespace dgms
