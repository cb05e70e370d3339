#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dgms/graph.hpp"
#include "dgms/matrix.hpp"
#include "dgms/tensor.hpp"

namespace dgms {

/// Node-vs-context comparison applied after cross attention.
enum class MatchOp { None, Sub, Mul, SubMul };

/// Node-embedding pooling into the graph-level vector.
enum class AggOp { Average, Max, FCAvg, FCMax };

std::string_view match_op_name(MatchOp op);
MatchOp match_op_from_name(std::string_view name);
std::string_view agg_op_name(AggOp op);
AggOp agg_op_from_name(std::string_view name);

struct ModelConfig {
    int layers = 1;
    int rgcn_dim = 100;
    MatchOp match_op = MatchOp::SubMul;
    AggOp agg_op = AggOp::FCMax;
    int agg_dim = 100;
    int input_dim = 300;
    std::uint64_t seed = 0;

    // Matched node width d': doubled by SubMul, unchanged otherwise.
    int matched_dim() const { return match_op == MatchOp::SubMul ? 2 * rgcn_dim : rgcn_dim; }
    bool uses_fc() const { return agg_op == AggOp::FCAvg || agg_op == AggOp::FCMax; }
    // Graph-level embedding width.
    int pooled_dim() const { return uses_fc() ? agg_dim : matched_dim(); }

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

/// The trainable parameter set, shared siamese-style across the text and code
/// branches: per layer one self weight and one weight per relation in the
/// unified vocabulary, plus the FC used by FCAvg/FCMax.
template <class S>
struct DgmsParams {
    ModelConfig config;
    RelationVocab relations; // unified text+code vocabulary, inverses included
    std::vector<Matrix<S>> w_self;              // [layer]
    std::vector<std::vector<Matrix<S>>> w_rel;  // [layer][relation]
    Matrix<S> fc_weight;                        // (d', agg_dim)
    Matrix<S> fc_bias;                          // (1, agg_dim)

    int relation_count() const { return relations.size(); }
};

/// Union of the text and code relation vocabularies with inverses appended.
RelationVocab standard_relation_vocab();

/// Glorot-uniform weights, zero biases; deterministic for a fixed seed.
/// The vocabulary must already include inverse relations.
template <class S>
DgmsParams<S> init_params(const ModelConfig& config, const RelationVocab& relations);

template <class S>
DgmsParams<double> params_to_double(const DgmsParams<S>& p);

// Canonical flat order: per layer w_self then w_rel[0..R-1]; fc_weight; fc_bias.
template <class S>
std::vector<Matrix<S>*> param_refs(DgmsParams<S>& p);
template <class S>
std::vector<const Matrix<S>*> param_refs(const DgmsParams<S>& p);
template <class S>
std::vector<Matrix<S>> flatten_params(const DgmsParams<S>& p);

/// Parameters recorded as leaves on one tape; both score_pair branches of a
/// triple share the same staging.
template <class S>
struct StagedParams {
    std::vector<Tensor<S>> w_self;
    std::vector<std::vector<Tensor<S>>> w_rel;
    Tensor<S> fc_weight;
    Tensor<S> fc_bias;
};

template <class S>
StagedParams<S> stage_params(Tape<S>& tape, const DgmsParams<S>& p, bool requires_grad);

/// Reassembles staged parameters from a flat leaf list in canonical order
/// (the grad-check entry point).
template <class S>
StagedParams<S> stage_from_leaves(const std::vector<Tensor<S>>& leaves, const ModelConfig& config,
                                  int relation_count);

/// A graph made ready for the encoder: inverse-augmented, with input features
/// and per-unified-relation gather plans.
template <class S>
struct PreparedGraph {
    LabeledMultigraph graph; // augmented
    Matrix<S> features;      // node_count x input_dim
    std::vector<std::shared_ptr<const GatherPlan>> plans; // [unified relation], null if absent
};

/// Augments the graph when needed and maps its relations into the unified
/// vocabulary by name. Throws on unknown relation names or feature mismatch.
template <class S>
PreparedGraph<S> prepare_graph(const LabeledMultigraph& g, Matrix<S> features,
                               const RelationVocab& unified);

/// One RGCN propagation step: per node the transformed self feature plus, for
/// each relation with in-neighbors, the mean of transformed neighbor features;
/// ReLU last.
template <class S>
Tensor<S> rgcn_layer(Tape<S>& tape, const StagedParams<S>& p, const PreparedGraph<S>& g,
                     Tensor<S> x, int layer);

/// All configured RGCN layers over the graph's input features.
template <class S>
Tensor<S> rgcn_encode(Tape<S>& tape, const StagedParams<S>& p, const ModelConfig& config,
                      const PreparedGraph<S>& g);

/// Pairwise cosine attention: Alpha[i][j] = cosine(Q row i, E row j).
template <class S>
Tensor<S> cross_attention(Tape<S>& tape, Tensor<S> q_nodes, Tensor<S> e_nodes);

/// Attention-weighted context rows: row i = (1/N) * sum_j Alpha[i][j] E[j].
template <class S>
Tensor<S> context_repr(Tape<S>& tape, Tensor<S> alpha, Tensor<S> e_nodes);

/// Sub -> -(x - ctx) ** 2 elementwise, Mul -> x * ctx, SubMul -> [Sub | Mul],
/// None -> x unchanged.
template <class S>
Tensor<S> match_nodes(Tape<S>& tape, Tensor<S> x, Tensor<S> context, MatchOp op);

/// Pools matched node rows into the graph-level vector.
template <class S>
Tensor<S> aggregate(Tape<S>& tape, const StagedParams<S>& p, Tensor<S> x, AggOp op);

/// Matching half of the pipeline given encoded node embeddings of both sides.
template <class S>
Tensor<S> match_and_score(Tape<S>& tape, const StagedParams<S>& p, const ModelConfig& config,
                          Tensor<S> q_nodes, Tensor<S> e_nodes);

/// Full forward: shared RGCN on both graphs, bidirectional cross-attention
/// matching, pooling, cosine of the two graph vectors. Result in [-1, 1].
template <class S>
Tensor<S> score_pair(Tape<S>& tape, const StagedParams<S>& p, const ModelConfig& config,
                     const PreparedGraph<S>& q, const PreparedGraph<S>& e);

/// Inference helpers (fresh private tapes, plain results).
template <class S>
Matrix<S> rgcn_node_embeddings(const DgmsParams<S>& params, const PreparedGraph<S>& g);
template <class S>
S score_pair_value(const DgmsParams<S>& params, const PreparedGraph<S>& q,
                   const PreparedGraph<S>& e);
template <class S>
S score_embedded_value(const DgmsParams<S>& params, const Matrix<S>& q_nodes,
                       const Matrix<S>& e_nodes);

/// Checkpoint JSON: {"version":1,"config":{...},"relations":[...],
/// "tensors":{name:{"shape":[r,c],"data":[...]}}}. Byte-deterministic.
std::string encode_checkpoint(const DgmsParams<float>& params);
DgmsParams<float> decode_checkpoint(std::string_view bytes);

/// FNV-1a hash of the canonical checkpoint bytes, as 16 hex digits.
std::string params_fingerprint(const DgmsParams<float>& params);

} // namespace dgms
