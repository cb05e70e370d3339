#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dgms/corpus.hpp"
#include "dgms/embeddings.hpp"
#include "dgms/model.hpp"

namespace dgms {

/// Corpus graphs augmented, featurized and plan-built once, ready for
/// repeated scoring. Read-only during evaluation; safe to share.
struct PreparedCorpus {
    const Corpus* corpus = nullptr;
    std::vector<PreparedGraph<float>> text;
    std::vector<PreparedGraph<float>> code;
};

PreparedCorpus prepare_corpus(const Corpus& corpus, const DgmsParams<float>& params,
                              const EmbeddingTable& table, int threads = 1);

/// One query's ground truth plus sampled distractors.
struct CandidatePool {
    std::string query_id;
    std::string truth_id;
    std::vector<std::string> distractors;
    std::uint64_t seed = 0;
};

/// One pool per corpus entry; distractors drawn without replacement from the
/// rest of the corpus, deterministically from the seed.
std::vector<CandidatePool> build_pools(const Corpus& corpus, int pool_size, std::uint64_t seed);

std::string encode_pools(const std::vector<CandidatePool>& pools);
std::vector<CandidatePool> decode_pools(std::string_view bytes);

struct ScoredCandidate {
    std::string id;
    double score = 0.0;
};

/// Candidates sorted by descending score, ties broken by ascending id.
/// frank is the 1-based rank of the ground truth (0 when none was given).
struct RankedList {
    std::vector<ScoredCandidate> ranking;
    int frank = 0;
};

/// Pure ranking step shared by evaluation and search.
RankedList rank_scored(std::vector<ScoredCandidate> scored,
                       std::optional<std::string_view> truth_id);

/// Precomputed per-code-graph RGCN node embeddings, pinned to the parameters
/// that produced them.
class EmbeddingIndex {
public:
    std::string fingerprint;
    int rgcn_dim = 0;

    void add(std::string id, Matrix<float> embeddings);
    const Matrix<float>* find(std::string_view id) const;
    int size() const { return static_cast<int>(ids_.size()); }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<Matrix<float>>& embeddings() const { return embeddings_; }

private:
    std::vector<std::string> ids_;
    std::vector<Matrix<float>> embeddings_;
    std::unordered_map<std::string, int> by_id_;
};

EmbeddingIndex build_index(const PreparedCorpus& prepared, const DgmsParams<float>& params,
                           int threads = 1);
/// Directory layout: manifest.json plus one tensor file per entry.
void save_index(const EmbeddingIndex& index, const std::filesystem::path& dir);
EmbeddingIndex load_index(const std::filesystem::path& dir);

/// Scores every pool candidate against the query. With an index, candidate
/// node embeddings come from it (fingerprint-checked); matching and
/// aggregation still run per pair.
RankedList rank_candidates(const CandidatePool& pool, const DgmsParams<float>& params,
                           const PreparedCorpus& prepared, const EmbeddingIndex* index = nullptr,
                           int threads = 1);

/// Mean of reciprocal franks.
double mrr(const std::vector<int>& franks);
/// Fraction of franks <= k.
double success_at_k(const std::vector<int>& franks, int k);

struct EvalReport {
    double mrr = 0.0;
    double s_at_1 = 0.0;
    double s_at_5 = 0.0;
    double s_at_10 = 0.0;
    int pool_size = 0;
    int queries = 0;
    std::uint64_t seed = 0;
};

EvalReport evaluate(const Corpus& corpus, const DgmsParams<float>& params,
                    const EmbeddingTable& table, int pool_size, std::uint64_t seed,
                    const EmbeddingIndex* index = nullptr, int threads = 1);
std::string encode_eval_report(const EvalReport& report);

/// Ranks the whole corpus for a free-form query; the text graph comes from
/// the bracketed parse when given, else from whitespace tokenization.
RankedList search(const std::string& query_text, std::optional<std::string> query_parse,
                  const DgmsParams<float>& params, const PreparedCorpus& prepared,
                  const EmbeddingTable& table, int top_k, const EmbeddingIndex* index = nullptr,
                  int threads = 1);

} // namespace dgms
