#include "dgms/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dgms/code_graph.hpp"
#include "dgms/text_graph.hpp"
#include "json_util.hpp"

namespace dgms {

std::string_view match_op_name(MatchOp op) {
    switch (op) {
    case MatchOp::None: return "none";
    case MatchOp::Sub: return "sub";
    case MatchOp::Mul: return "mul";
    case MatchOp::SubMul: return "submul";
    }
    throw ArgumentError("unknown match op");
}

MatchOp match_op_from_name(std::string_view name) {
    if (name == "none") return MatchOp::None;
    if (name == "sub") return MatchOp::Sub;
    if (name == "mul") return MatchOp::Mul;
    if (name == "submul") return MatchOp::SubMul;
    throw ArgumentError("unknown match op: '" + std::string(name) + "'");
}

std::string_view agg_op_name(AggOp op) {
    switch (op) {
    case AggOp::Average: return "avg";
    case AggOp::Max: return "max";
    case AggOp::FCAvg: return "fcavg";
    case AggOp::FCMax: return "fcmax";
    }
    throw ArgumentError("unknown aggregation op");
}

AggOp agg_op_from_name(std::string_view name) {
    if (name == "avg") return AggOp::Average;
    if (name == "max") return AggOp::Max;
    if (name == "fcavg") return AggOp::FCAvg;
    if (name == "fcmax") return AggOp::FCMax;
    throw ArgumentError("unknown aggregation op: '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
    if (layers < 1) throw ArgumentError("model config: layers must be >= 1");
    if (rgcn_dim < 1) throw ArgumentError("model config: rgcn_dim must be >= 1");
    if (agg_dim < 1) throw ArgumentError("model config: agg_dim must be >= 1");
    if (input_dim < 1) throw ArgumentError("model config: input_dim must be >= 1");
}

RelationVocab standard_relation_vocab() {
    RelationVocab vocab;
    vocab.add(std::string(kConstituencyRelation));
    vocab.add(std::string(kNextWordRelation));
    vocab.add(std::string(kChildRelation));
    vocab.add(std::string(kNextTokenRelation));
    vocab.add(std::string(kLastLexicalUseRelation));
    const int canonical = vocab.size();
    for (int r = 0; r < canonical; ++r)
        vocab.add(vocab.name_of(r) + std::string(kInverseSuffix));
    return vocab;
}

namespace {

template <class S>
Matrix<S> glorot_uniform(int rows, int cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix<S> m(rows, cols);
    for (auto& v : m.data) v = static_cast<S>(dist(rng));
    return m;
}

} // namespace

template <class S>
DgmsParams<S> init_params(const ModelConfig& config, const RelationVocab& relations) {
    config.validate();
    if (relations.size() == 0) throw ArgumentError("init_params: empty relation vocabulary");
    std::mt19937_64 rng(config.seed);
    DgmsParams<S> p;
    p.config = config;
    p.relations = relations;
    int in_dim = config.input_dim;
    for (int l = 0; l < config.layers; ++l) {
        p.w_self.push_back(glorot_uniform<S>(in_dim, config.rgcn_dim, rng));
        std::vector<Matrix<S>> rel;
        rel.reserve(static_cast<std::size_t>(relations.size()));
        for (int r = 0; r < relations.size(); ++r)
            rel.push_back(glorot_uniform<S>(in_dim, config.rgcn_dim, rng));
        p.w_rel.push_back(std::move(rel));
        in_dim = config.rgcn_dim;
    }
    p.fc_weight = glorot_uniform<S>(config.matched_dim(), config.agg_dim, rng);
    p.fc_bias = Matrix<S>(1, config.agg_dim);
    return p;
}

template <class S>
DgmsParams<double> params_to_double(const DgmsParams<S>& p) {
    DgmsParams<double> out;
    out.config = p.config;
    out.relations = p.relations;
    for (const auto& w : p.w_self) out.w_self.push_back(cast_matrix<double>(w));
    for (const auto& layer : p.w_rel) {
        std::vector<Matrix<double>> rel;
        for (const auto& w : layer) rel.push_back(cast_matrix<double>(w));
        out.w_rel.push_back(std::move(rel));
    }
    out.fc_weight = cast_matrix<double>(p.fc_weight);
    out.fc_bias = cast_matrix<double>(p.fc_bias);
    return out;
}

template <class S>
std::vector<Matrix<S>*> param_refs(DgmsParams<S>& p) {
    std::vector<Matrix<S>*> refs;
    for (std::size_t l = 0; l < p.w_self.size(); ++l) {
        refs.push_back(&p.w_self[l]);
        for (auto& w : p.w_rel[l]) refs.push_back(&w);
    }
    refs.push_back(&p.fc_weight);
    refs.push_back(&p.fc_bias);
    return refs;
}

template <class S>
std::vector<const Matrix<S>*> param_refs(const DgmsParams<S>& p) {
    std::vector<const Matrix<S>*> refs;
    for (std::size_t l = 0; l < p.w_self.size(); ++l) {
        refs.push_back(&p.w_self[l]);
        for (const auto& w : p.w_rel[l]) refs.push_back(&w);
    }
    refs.push_back(&p.fc_weight);
    refs.push_back(&p.fc_bias);
    return refs;
}

template <class S>
std::vector<Matrix<S>> flatten_params(const DgmsParams<S>& p) {
    std::vector<Matrix<S>> flat;
    for (const auto* m : param_refs(p)) flat.push_back(*m);
    return flat;
}

template <class S>
StagedParams<S> stage_params(Tape<S>& tape, const DgmsParams<S>& p, bool requires_grad) {
    StagedParams<S> staged;
    for (std::size_t l = 0; l < p.w_self.size(); ++l) {
        staged.w_self.push_back(tape.leaf(p.w_self[l], requires_grad));
        std::vector<Tensor<S>> rel;
        for (const auto& w : p.w_rel[l]) rel.push_back(tape.leaf(w, requires_grad));
        staged.w_rel.push_back(std::move(rel));
    }
    staged.fc_weight = tape.leaf(p.fc_weight, requires_grad);
    staged.fc_bias = tape.leaf(p.fc_bias, requires_grad);
    return staged;
}

template <class S>
StagedParams<S> stage_from_leaves(const std::vector<Tensor<S>>& leaves, const ModelConfig& config,
                                  int relation_count) {
    const std::size_t expected =
        static_cast<std::size_t>(config.layers) * (1 + static_cast<std::size_t>(relation_count)) +
        2;
    if (leaves.size() != expected)
        throw ArgumentError("stage_from_leaves: expected " + std::to_string(expected) +
                            " leaves, got " + std::to_string(leaves.size()));
    StagedParams<S> staged;
    std::size_t i = 0;
    for (int l = 0; l < config.layers; ++l) {
        staged.w_self.push_back(leaves[i++]);
        std::vector<Tensor<S>> rel;
        for (int r = 0; r < relation_count; ++r) rel.push_back(leaves[i++]);
        staged.w_rel.push_back(std::move(rel));
    }
    staged.fc_weight = leaves[i++];
    staged.fc_bias = leaves[i++];
    return staged;
}

template <class S>
PreparedGraph<S> prepare_graph(const LabeledMultigraph& g, Matrix<S> features,
                               const RelationVocab& unified) {
    PreparedGraph<S> out;
    out.graph = g.is_augmented() ? g : augment_inverses(g);
    if (features.rows != out.graph.node_count())
        throw ShapeError("prepare_graph: feature rows (" + std::to_string(features.rows) +
                         ") != node count (" + std::to_string(out.graph.node_count()) + ")");
    out.features = std::move(features);

    // Unified relation id per local relation; rejects names the model has
    // no weights for.
    std::vector<int> to_unified(static_cast<std::size_t>(out.graph.relations.size()), -1);
    for (int r = 0; r < out.graph.relations.size(); ++r) {
        const std::string& name = out.graph.relations.name_of(r);
        int u = unified.id_of(name);
        if (u < 0)
            throw ArgumentError("prepare_graph: relation '" + name +
                                "' is not in the model vocabulary");
        to_unified[static_cast<std::size_t>(r)] = u;
    }

    const int nodes = out.graph.node_count();
    std::vector<GatherPlan> plans(static_cast<std::size_t>(unified.size()));
    std::vector<char> used(static_cast<std::size_t>(unified.size()), 0);
    for (const auto& e : out.graph.edges) {
        int u = to_unified[static_cast<std::size_t>(e.rel)];
        auto& plan = plans[static_cast<std::size_t>(u)];
        if (plan.sources.empty()) plan.sources.resize(static_cast<std::size_t>(nodes));
        plan.sources[static_cast<std::size_t>(e.dst)].push_back(e.src);
        used[static_cast<std::size_t>(u)] = 1;
    }
    out.plans.resize(static_cast<std::size_t>(unified.size()));
    for (int u = 0; u < unified.size(); ++u) {
        if (!used[static_cast<std::size_t>(u)]) continue;
        auto& plan = plans[static_cast<std::size_t>(u)];
        // Edges are deduplicated and sorted, so each source list is already
        // unique and ascending.
        out.plans[static_cast<std::size_t>(u)] =
            std::make_shared<const GatherPlan>(std::move(plan));
    }
    return out;
}

template <class S>
Tensor<S> rgcn_layer(Tape<S>& tape, const StagedParams<S>& p, const PreparedGraph<S>& g,
                     Tensor<S> x, int layer) {
    if (layer < 0 || layer >= static_cast<int>(p.w_self.size()))
        throw ArgumentError("rgcn_layer: layer index out of range");
    Tensor<S> acc = tape.matmul(x, p.w_self[static_cast<std::size_t>(layer)]);
    const auto& rel_weights = p.w_rel[static_cast<std::size_t>(layer)];
    for (std::size_t r = 0; r < g.plans.size(); ++r) {
        if (!g.plans[r]) continue; // relation absent: no contribution
        if (r >= rel_weights.size())
            throw ArgumentError("rgcn_layer: graph relation id exceeds parameter count");
        Tensor<S> mixed = tape.neighbor_mean(x, g.plans[r]);
        acc = tape.add(acc, tape.matmul(mixed, rel_weights[r]));
    }
    return tape.relu(acc);
}

template <class S>
Tensor<S> rgcn_encode(Tape<S>& tape, const StagedParams<S>& p, const ModelConfig& config,
                      const PreparedGraph<S>& g) {
    if (g.features.cols != config.input_dim)
        throw ShapeError("rgcn_encode: feature dim (" + std::to_string(g.features.cols) +
                         ") != input_dim (" + std::to_string(config.input_dim) + ")");
    Tensor<S> x = tape.leaf(g.features, false);
    for (int l = 0; l < config.layers; ++l) x = rgcn_layer(tape, p, g, x, l);
    return x;
}

template <class S>
Tensor<S> cross_attention(Tape<S>& tape, Tensor<S> q_nodes, Tensor<S> e_nodes) {
    return tape.cross_cosine(q_nodes, e_nodes);
}

template <class S>
Tensor<S> context_repr(Tape<S>& tape, Tensor<S> alpha, Tensor<S> e_nodes) {
    if (alpha.cols() != e_nodes.rows())
        throw ShapeError("context_repr: alpha cols != node rows");
    const S inv = S(1) / static_cast<S>(e_nodes.rows());
    return tape.scale(tape.matmul(alpha, e_nodes), inv);
}

template <class S>
Tensor<S> match_nodes(Tape<S>& tape, Tensor<S> x, Tensor<S> context, MatchOp op) {
    switch (op) {
    case MatchOp::None:
        return x;
    case MatchOp::Sub: {
        Tensor<S> diff = tape.sub(x, context);
        return tape.scale(tape.mul(diff, diff), S(-1));
    }
    case MatchOp::Mul:
        return tape.mul(x, context);
    case MatchOp::SubMul: {
        Tensor<S> diff = tape.sub(x, context);
        Tensor<S> sub = tape.scale(tape.mul(diff, diff), S(-1));
        Tensor<S> mul = tape.mul(x, context);
        return tape.concat_cols(sub, mul);
    }
    }
    throw ArgumentError("unknown match op");
}

template <class S>
Tensor<S> aggregate(Tape<S>& tape, const StagedParams<S>& p, Tensor<S> x, AggOp op) {
    switch (op) {
    case AggOp::Average:
        return tape.col_mean(x);
    case AggOp::Max:
        return tape.col_max(x);
    case AggOp::FCAvg:
        return tape.col_mean(tape.add_row_bias(tape.matmul(x, p.fc_weight), p.fc_bias));
    case AggOp::FCMax:
        return tape.col_max(tape.add_row_bias(tape.matmul(x, p.fc_weight), p.fc_bias));
    }
    throw ArgumentError("unknown aggregation op");
}

template <class S>
Tensor<S> match_and_score(Tape<S>& tape, const StagedParams<S>& p, const ModelConfig& config,
                          Tensor<S> q_nodes, Tensor<S> e_nodes) {
    Tensor<S> alpha = cross_attention(tape, q_nodes, e_nodes);
    Tensor<S> q_context = context_repr(tape, alpha, e_nodes);
    // The code side reuses the same cosines transposed.
    Tensor<S> e_context = context_repr(tape, tape.transpose(alpha), q_nodes);
    Tensor<S> q_matched = match_nodes(tape, q_nodes, q_context, config.match_op);
    Tensor<S> e_matched = match_nodes(tape, e_nodes, e_context, config.match_op);
    Tensor<S> hq = aggregate(tape, p, q_matched, config.agg_op);
    Tensor<S> he = aggregate(tape, p, e_matched, config.agg_op);
    return tape.cosine(hq, he);
}

template <class S>
Tensor<S> score_pair(Tape<S>& tape, const StagedParams<S>& p, const ModelConfig& config,
                     const PreparedGraph<S>& q, const PreparedGraph<S>& e) {
    Tensor<S> q_nodes = rgcn_encode(tape, p, config, q);
    Tensor<S> e_nodes = rgcn_encode(tape, p, config, e);
    return match_and_score(tape, p, config, q_nodes, e_nodes);
}

template <class S>
Matrix<S> rgcn_node_embeddings(const DgmsParams<S>& params, const PreparedGraph<S>& g) {
    Tape<S> tape;
    StagedParams<S> staged = stage_params(tape, params, false);
    return rgcn_encode(tape, staged, params.config, g).value();
}

template <class S>
S score_pair_value(const DgmsParams<S>& params, const PreparedGraph<S>& q,
                   const PreparedGraph<S>& e) {
    Tape<S> tape;
    StagedParams<S> staged = stage_params(tape, params, false);
    return score_pair(tape, staged, params.config, q, e).scalar_value();
}

template <class S>
S score_embedded_value(const DgmsParams<S>& params, const Matrix<S>& q_nodes,
                       const Matrix<S>& e_nodes) {
    Tape<S> tape;
    StagedParams<S> staged = stage_params(tape, params, false);
    Tensor<S> q = tape.leaf(q_nodes, false);
    Tensor<S> e = tape.leaf(e_nodes, false);
    return match_and_score(tape, staged, params.config, q, e).scalar_value();
}

namespace {

njson config_to_json(const ModelConfig& c) {
    njson j;
    j["layers"] = c.layers;
    j["rgcn_dim"] = c.rgcn_dim;
    j["match_op"] = std::string(match_op_name(c.match_op));
    j["agg_op"] = std::string(agg_op_name(c.agg_op));
    j["agg_dim"] = c.agg_dim;
    j["input_dim"] = c.input_dim;
    j["seed"] = c.seed;
    return j;
}

ModelConfig config_from_json(const njson& j) {
    ModelConfig c;
    c.layers = static_cast<int>(require_int(j, "layers", "checkpoint config"));
    c.rgcn_dim = static_cast<int>(require_int(j, "rgcn_dim", "checkpoint config"));
    c.match_op = match_op_from_name(require_string(j, "match_op", "checkpoint config"));
    c.agg_op = agg_op_from_name(require_string(j, "agg_op", "checkpoint config"));
    c.agg_dim = static_cast<int>(require_int(j, "agg_dim", "checkpoint config"));
    c.input_dim = static_cast<int>(require_int(j, "input_dim", "checkpoint config"));
    c.seed = static_cast<std::uint64_t>(require_int(j, "seed", "checkpoint config"));
    return c;
}

njson tensor_to_json(const Matrix<float>& m) {
    njson j;
    j["shape"] = njson::array({m.rows, m.cols});
    njson data = njson::array();
    for (float v : m.data) data.push_back(static_cast<double>(v));
    j["data"] = std::move(data);
    return j;
}

Matrix<float> tensor_from_json(const njson& j, const std::string& name) {
    const njson& shape = require_array(j, "shape", "checkpoint tensor");
    if (shape.size() != 2 || !shape[0].is_number_integer() || !shape[1].is_number_integer())
        throw ParseError("checkpoint tensor '" + name + "': shape must be [rows, cols]");
    Matrix<float> m(shape[0].get<int>(), shape[1].get<int>());
    const njson& data = require_array(j, "data", "checkpoint tensor");
    if (data.size() != m.data.size())
        throw ParseError("checkpoint tensor '" + name + "': data length " +
                         std::to_string(data.size()) + " does not match shape");
    std::size_t i = 0;
    for (const auto& v : data) {
        if (!v.is_number()) throw ParseError("checkpoint tensor '" + name + "': non-numeric data");
        m.data[i++] = static_cast<float>(v.get<double>());
    }
    return m;
}

std::string rel_tensor_name(int layer, const std::string& rel) {
    return "w_rel." + std::to_string(layer) + "." + rel;
}

} // namespace

std::string encode_checkpoint(const DgmsParams<float>& params) {
    njson j;
    j["version"] = 1;
    j["config"] = config_to_json(params.config);
    j["relations"] = params.relations.names();
    njson tensors;
    for (int l = 0; l < params.config.layers; ++l) {
        tensors["w_self." + std::to_string(l)] =
            tensor_to_json(params.w_self[static_cast<std::size_t>(l)]);
        for (int r = 0; r < params.relations.size(); ++r)
            tensors[rel_tensor_name(l, params.relations.name_of(r))] =
                tensor_to_json(params.w_rel[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)]);
    }
    tensors["fc_weight"] = tensor_to_json(params.fc_weight);
    tensors["fc_bias"] = tensor_to_json(params.fc_bias);
    j["tensors"] = std::move(tensors);
    return j.dump();
}

DgmsParams<float> decode_checkpoint(std::string_view bytes) {
    njson j = parse_json(bytes, "checkpoint");
    if (require_int(j, "version", "checkpoint") != 1)
        throw DataError("checkpoint: unsupported version");
    DgmsParams<float> p;
    p.config = config_from_json(require_object(j, "config", "checkpoint"));
    p.config.validate();
    for (const auto& r : require_array(j, "relations", "checkpoint")) {
        if (!r.is_string()) throw ParseError("checkpoint: relation names must be strings");
        p.relations.add(r.get<std::string>());
    }
    if (p.relations.size() == 0) throw DataError("checkpoint: empty relation vocabulary");
    const njson& tensors = require_object(j, "tensors", "checkpoint");

    auto take = [&](const std::string& name, int rows, int cols) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw DataError("checkpoint: missing tensor '" + name + "'");
        Matrix<float> m = tensor_from_json(*it, name);
        if (m.rows != rows || m.cols != cols)
            throw DataError("checkpoint: tensor '" + name + "' has shape (" +
                            std::to_string(m.rows) + "," + std::to_string(m.cols) +
                            "), expected (" + std::to_string(rows) + "," + std::to_string(cols) +
                            ")");
        return m;
    };

    int in_dim = p.config.input_dim;
    for (int l = 0; l < p.config.layers; ++l) {
        p.w_self.push_back(take("w_self." + std::to_string(l), in_dim, p.config.rgcn_dim));
        std::vector<Matrix<float>> rel;
        for (int r = 0; r < p.relations.size(); ++r)
            rel.push_back(
                take(rel_tensor_name(l, p.relations.name_of(r)), in_dim, p.config.rgcn_dim));
        p.w_rel.push_back(std::move(rel));
        in_dim = p.config.rgcn_dim;
    }
    p.fc_weight = take("fc_weight", p.config.matched_dim(), p.config.agg_dim);
    p.fc_bias = take("fc_bias", 1, p.config.agg_dim);
    return p;
}

std::string params_fingerprint(const DgmsParams<float>& params) {
    const std::string bytes = encode_checkpoint(params);
    std::uint64_t hash = 1469598103934665603ull; // FNV offset basis
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull; // FNV prime
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[hash & 0xF];
        hash >>= 4;
    }
    return out;
}

// Explicit instantiations: float for the runtime path, double for checking.
#define DGMS_INSTANTIATE_MODEL(S)                                                                  \
    template DgmsParams<S> init_params<S>(const ModelConfig&, const RelationVocab&);               \
    template DgmsParams<double> params_to_double<S>(const DgmsParams<S>&);                         \
    template std::vector<Matrix<S>*> param_refs<S>(DgmsParams<S>&);                                \
    template std::vector<const Matrix<S>*> param_refs<S>(const DgmsParams<S>&);                    \
    template std::vector<Matrix<S>> flatten_params<S>(const DgmsParams<S>&);                       \
    template StagedParams<S> stage_params<S>(Tape<S>&, const DgmsParams<S>&, bool);                \
    template StagedParams<S> stage_from_leaves<S>(const std::vector<Tensor<S>>&,                   \
                                                  const ModelConfig&, int);                        \
    template PreparedGraph<S> prepare_graph<S>(const LabeledMultigraph&, Matrix<S>,                \
                                               const RelationVocab&);                              \
    template Tensor<S> rgcn_layer<S>(Tape<S>&, const StagedParams<S>&, const PreparedGraph<S>&,    \
                                     Tensor<S>, int);                                              \
    template Tensor<S> rgcn_encode<S>(Tape<S>&, const StagedParams<S>&, const ModelConfig&,        \
                                      const PreparedGraph<S>&);                                    \
    template Tensor<S> cross_attention<S>(Tape<S>&, Tensor<S>, Tensor<S>);                         \
    template Tensor<S> context_repr<S>(Tape<S>&, Tensor<S>, Tensor<S>);                            \
    template Tensor<S> match_nodes<S>(Tape<S>&, Tensor<S>, Tensor<S>, MatchOp);                    \
    template Tensor<S> aggregate<S>(Tape<S>&, const StagedParams<S>&, Tensor<S>, AggOp);           \
    template Tensor<S> match_and_score<S>(Tape<S>&, const StagedParams<S>&, const ModelConfig&,    \
                                          Tensor<S>, Tensor<S>);                                   \
    template Tensor<S> score_pair<S>(Tape<S>&, const StagedParams<S>&, const ModelConfig&,         \
                                     const PreparedGraph<S>&, const PreparedGraph<S>&);            \
    template Matrix<S> rgcn_node_embeddings<S>(const DgmsParams<S>&, const PreparedGraph<S>&);     \
    template S score_pair_value<S>(const DgmsParams<S>&, const PreparedGraph<S>&,                  \
                                   const PreparedGraph<S>&);                                       \
    template S score_embedded_value<S>(const DgmsParams<S>&, const Matrix<S>&, const Matrix<S>&);

DGMS_INSTANTIATE_MODEL(float)
DGMS_INSTANTIATE_MODEL(double)

#undef DGMS_INSTANTIATE_MODEL

} // namespace dgms
