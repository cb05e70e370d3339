#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dgms/graph.hpp"
#include "dgms/matrix.hpp"

namespace dgms {

/// Pretrained word vectors keyed by lowercase token. Immutable after load;
/// concurrent lookups are safe.
class EmbeddingTable {
public:
    EmbeddingTable() = default;

    // First insert wins for duplicate tokens; tokens are lowercased.
    void insert(std::string_view token, const std::vector<float>& row);

    std::optional<std::span<const float>> lookup(std::string_view token) const;

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(index_.size()); }
    bool empty() const { return index_.empty(); }

private:
    std::unordered_map<std::string, int> index_;
    std::vector<float> rows_;
    int dim_ = 0;
};

/// GloVe text format: one "token f1 f2 ... fd" line per token. Ragged widths
/// are a format error; the dimension comes from the first line.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(std::string_view text);

/// Restricting loader: keeps only tokens in `keep` (compared lowercase).
EmbeddingTable load_embeddings_restricted(const std::filesystem::path& path,
                                          const std::vector<std::string>& keep);

/// Splits on CamelCase, underscores, punctuation and letter/digit boundaries;
/// parts are lowercased, empties dropped. "getWindowSize" -> get, window, size.
std::vector<std::string> split_subtokens(std::string_view token);

/// Per node: exact lowercase hit -> that row; else the average of the rows
/// found for its subtokens; else all zeros.
Matrix<float> node_features(const LabeledMultigraph& g, const EmbeddingTable& table);

} // namespace dgms
