#include "dgms/embeddings.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace dgms {

namespace {

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

EmbeddingTable parse_embeddings_impl(std::string_view text,
                                     const std::unordered_set<std::string>* keep) {
    EmbeddingTable table;
    std::size_t pos = 0;
    int line_no = 0;
    std::vector<float> row;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        std::size_t sp = line.find(' ');
        if (sp == std::string_view::npos)
            throw DataError("embeddings line " + std::to_string(line_no) +
                            ": expected token and values");
        std::string token = lowercase(line.substr(0, sp));
        row.clear();
        std::size_t cursor = sp;
        while (cursor < line.size()) {
            while (cursor < line.size() && line[cursor] == ' ') ++cursor;
            if (cursor >= line.size()) break;
            std::size_t field_end = line.find(' ', cursor);
            if (field_end == std::string_view::npos) field_end = line.size();
            float value = 0.0f;
            auto [ptr, ec] =
                std::from_chars(line.data() + cursor, line.data() + field_end, value);
            if (ec != std::errc() || ptr != line.data() + field_end)
                throw DataError("embeddings line " + std::to_string(line_no) +
                                ": bad float value");
            row.push_back(value);
            cursor = field_end;
        }
        if (row.empty())
            throw DataError("embeddings line " + std::to_string(line_no) + ": no values");
        if (table.dim() != 0 && static_cast<int>(row.size()) != table.dim())
            throw DataError("embeddings line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.dim()) + " values, got " +
                            std::to_string(row.size()));
        if (keep && !keep->contains(token)) continue;
        table.insert(token, row);
    }
    return table;
}

} // namespace

void EmbeddingTable::insert(std::string_view token, const std::vector<float>& row) {
    if (token.empty()) throw ArgumentError("embedding token must be non-empty");
    if (row.empty()) throw ArgumentError("embedding row must be non-empty");
    if (dim_ == 0) dim_ = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != dim_)
        throw ArgumentError("embedding row width mismatch");
    std::string key = lowercase(token);
    if (index_.contains(key)) return; // first wins
    index_.emplace(std::move(key), static_cast<int>(index_.size()));
    rows_.insert(rows_.end(), row.begin(), row.end());
}

std::optional<std::span<const float>> EmbeddingTable::lookup(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return std::span<const float>(rows_.data() + static_cast<std::size_t>(it->second) * dim_,
                                  static_cast<std::size_t>(dim_));
}

EmbeddingTable parse_embeddings(std::string_view text) {
    return parse_embeddings_impl(text, nullptr);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embeddings file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_embeddings_impl(buf.str(), nullptr);
}

EmbeddingTable load_embeddings_restricted(const std::filesystem::path& path,
                                          const std::vector<std::string>& keep) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embeddings file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::unordered_set<std::string> keys;
    for (const auto& k : keep) keys.insert(lowercase(k));
    return parse_embeddings_impl(buf.str(), &keys);
}

std::vector<std::string> split_subtokens(std::string_view token) {
    if (token.empty()) throw ArgumentError("split_subtokens: token must be non-empty");
    enum class Cls { Lower, Upper, Digit, Other };
    auto classify = [](char c) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::islower(u)) return Cls::Lower;
        if (std::isupper(u)) return Cls::Upper;
        if (std::isdigit(u)) return Cls::Digit;
        return Cls::Other;
    };
    std::vector<std::string> parts;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            parts.push_back(lowercase(current));
            current.clear();
        }
    };
    const std::size_t n = token.size();
    for (std::size_t i = 0; i < n; ++i) {
        char c = token[i];
        Cls cls = classify(c);
        if (cls == Cls::Other) {
            flush();
            continue;
        }
        if (!current.empty()) {
            Cls prev = classify(current.back());
            bool boundary = false;
            // lower/digit -> Upper starts a new word; letter<->digit always splits.
            if (cls == Cls::Upper && prev != Cls::Upper) boundary = true;
            if ((cls == Cls::Digit) != (prev == Cls::Digit)) boundary = true;
            // End of an acronym run: "HTMLParser" splits before the 'P'.
            if (cls == Cls::Upper && prev == Cls::Upper && i + 1 < n &&
                classify(token[i + 1]) == Cls::Lower)
                boundary = true;
            if (boundary) flush();
        }
        current.push_back(c);
    }
    flush();
    return parts;
}

Matrix<float> node_features(const LabeledMultigraph& g, const EmbeddingTable& table) {
    if (table.empty()) throw ArgumentError("node_features: embedding table is empty");
    const int d = table.dim();
    Matrix<float> features(g.node_count(), d);
    for (int i = 0; i < g.node_count(); ++i) {
        const std::string& token = g.nodes[static_cast<std::size_t>(i)].token;
        float* out = &features.at(i, 0);
        if (auto hit = table.lookup(lowercase(token))) {
            for (int k = 0; k < d; ++k) out[k] = (*hit)[static_cast<std::size_t>(k)];
            continue;
        }
        int found = 0;
        for (const auto& sub : split_subtokens(token)) {
            if (auto hit = table.lookup(sub)) {
                for (int k = 0; k < d; ++k) out[k] += (*hit)[static_cast<std::size_t>(k)];
                ++found;
            }
        }
        if (found > 0)
            for (int k = 0; k < d; ++k) out[k] /= static_cast<float>(found);
        // No hits at all: the row stays zero.
    }
    return features;
}

} // namespace dgms
