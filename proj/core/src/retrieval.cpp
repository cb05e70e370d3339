#include "dgms/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "dgms/parallel.hpp"
#include "dgms/text_graph.hpp"
#include "json_util.hpp"

namespace dgms {

PreparedCorpus prepare_corpus(const Corpus& corpus, const DgmsParams<float>& params,
                              const EmbeddingTable& table, int threads) {
    if (table.dim() != params.config.input_dim)
        throw ShapeError("prepare_corpus: embedding dim (" + std::to_string(table.dim()) +
                         ") != model input_dim (" + std::to_string(params.config.input_dim) + ")");
    PreparedCorpus out;
    out.corpus = &corpus;
    out.text.resize(corpus.entries.size());
    out.code.resize(corpus.entries.size());
    parallel_for(corpus.entries.size(), threads, [&](std::size_t i) {
        const CorpusEntry& entry = corpus.entries[i];
        out.text[i] = prepare_graph<float>(entry.text_graph,
                                           node_features(entry.text_graph, table),
                                           params.relations);
        out.code[i] = prepare_graph<float>(entry.code_graph,
                                           node_features(entry.code_graph, table),
                                           params.relations);
    });
    return out;
}

std::vector<CandidatePool> build_pools(const Corpus& corpus, int pool_size, std::uint64_t seed) {
    if (pool_size < 1) throw ArgumentError("build_pools: pool size must be >= 1");
    const int n = corpus.size();
    if (n < pool_size)
        throw ArgumentError("build_pools: corpus has " + std::to_string(n) +
                            " entries, need at least " + std::to_string(pool_size));
    std::mt19937_64 rng(seed);
    std::vector<CandidatePool> pools;
    pools.reserve(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
        CandidatePool pool;
        pool.query_id = corpus.entries[static_cast<std::size_t>(q)].id;
        pool.truth_id = pool.query_id;
        pool.seed = seed;
        std::vector<int> others;
        others.reserve(static_cast<std::size_t>(n - 1));
        for (int i = 0; i < n; ++i)
            if (i != q) others.push_back(i);
        // Partial Fisher-Yates: the first pool_size-1 slots are the sample.
        const int want = pool_size - 1;
        for (int k = 0; k < want; ++k) {
            std::uniform_int_distribution<int> pick(k, static_cast<int>(others.size()) - 1);
            std::swap(others[static_cast<std::size_t>(k)],
                      others[static_cast<std::size_t>(pick(rng))]);
            pool.distractors.push_back(
                corpus.entries[static_cast<std::size_t>(others[static_cast<std::size_t>(k)])].id);
        }
        pools.push_back(std::move(pool));
    }
    return pools;
}

std::string encode_pools(const std::vector<CandidatePool>& pools) {
    njson out = njson::array();
    for (const auto& pool : pools) {
        njson j;
        j["query"] = pool.query_id;
        j["truth"] = pool.truth_id;
        j["distractors"] = pool.distractors;
        j["seed"] = pool.seed;
        out.push_back(std::move(j));
    }
    return out.dump();
}

std::vector<CandidatePool> decode_pools(std::string_view bytes) {
    njson j = parse_json(bytes, "pools");
    if (!j.is_array()) throw ParseError("pools: expected a JSON array");
    std::vector<CandidatePool> pools;
    for (const auto& entry : j) {
        CandidatePool pool;
        pool.query_id = require_string(entry, "query", "pool");
        pool.truth_id = require_string(entry, "truth", "pool");
        for (const auto& d : require_array(entry, "distractors", "pool")) {
            if (!d.is_string()) throw ParseError("pool: distractor ids must be strings");
            pool.distractors.push_back(d.get<std::string>());
        }
        pool.seed = static_cast<std::uint64_t>(require_int(entry, "seed", "pool"));
        pools.push_back(std::move(pool));
    }
    return pools;
}

RankedList rank_scored(std::vector<ScoredCandidate> scored,
                       std::optional<std::string_view> truth_id) {
    std::sort(scored.begin(), scored.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    RankedList out;
    out.ranking = std::move(scored);
    if (truth_id) {
        for (std::size_t i = 0; i < out.ranking.size(); ++i) {
            if (out.ranking[i].id == *truth_id) {
                out.frank = static_cast<int>(i) + 1;
                break;
            }
        }
        if (out.frank == 0) throw ArgumentError("rank_scored: ground truth not among candidates");
    }
    return out;
}

void EmbeddingIndex::add(std::string id, Matrix<float> embeddings) {
    if (by_id_.contains(id)) throw ArgumentError("index: duplicate id '" + id + "'");
    by_id_.emplace(id, static_cast<int>(ids_.size()));
    ids_.push_back(std::move(id));
    embeddings_.push_back(std::move(embeddings));
}

const Matrix<float>* EmbeddingIndex::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return nullptr;
    return &embeddings_[static_cast<std::size_t>(it->second)];
}

EmbeddingIndex build_index(const PreparedCorpus& prepared, const DgmsParams<float>& params,
                           int threads) {
    EmbeddingIndex index;
    index.fingerprint = params_fingerprint(params);
    index.rgcn_dim = params.config.rgcn_dim;
    std::vector<Matrix<float>> rows(prepared.code.size());
    parallel_for(prepared.code.size(), threads, [&](std::size_t i) {
        rows[i] = rgcn_node_embeddings(params, prepared.code[i]);
    });
    for (std::size_t i = 0; i < rows.size(); ++i)
        index.add(prepared.corpus->entries[i].id, std::move(rows[i]));
    return index;
}

namespace {

njson matrix_to_json(const Matrix<float>& m) {
    njson j;
    j["shape"] = njson::array({m.rows, m.cols});
    njson data = njson::array();
    for (float v : m.data) data.push_back(static_cast<double>(v));
    j["data"] = std::move(data);
    return j;
}

Matrix<float> matrix_from_json(const njson& j, const std::string& what) {
    const njson& shape = require_array(j, "shape", what.c_str());
    if (shape.size() != 2 || !shape[0].is_number_integer() || !shape[1].is_number_integer())
        throw ParseError(what + ": shape must be [rows, cols]");
    Matrix<float> m(shape[0].get<int>(), shape[1].get<int>());
    const njson& data = require_array(j, "data", what.c_str());
    if (data.size() != m.data.size()) throw ParseError(what + ": data length mismatch");
    std::size_t i = 0;
    for (const auto& v : data) {
        if (!v.is_number()) throw ParseError(what + ": non-numeric data");
        m.data[i++] = static_cast<float>(v.get<double>());
    }
    return m;
}

std::string index_file_name(int position) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.json", position);
    return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << bytes;
    if (!out) throw DataError("failed writing file: " + path.string());
}

} // namespace

void save_index(const EmbeddingIndex& index, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    njson manifest;
    manifest["params_fingerprint"] = index.fingerprint;
    manifest["rgcn_dim"] = index.rgcn_dim;
    manifest["count"] = index.size();
    njson entries = njson::array();
    for (int i = 0; i < index.size(); ++i) {
        njson e;
        e["id"] = index.ids()[static_cast<std::size_t>(i)];
        e["file"] = index_file_name(i);
        entries.push_back(std::move(e));
        write_text_file(dir / index_file_name(i),
                        matrix_to_json(index.embeddings()[static_cast<std::size_t>(i)]).dump());
    }
    manifest["entries"] = std::move(entries);
    write_text_file(dir / "manifest.json", manifest.dump());
}

EmbeddingIndex load_index(const std::filesystem::path& dir) {
    njson manifest = parse_json(read_text_file(dir / "manifest.json"), "index manifest");
    EmbeddingIndex index;
    index.fingerprint = require_string(manifest, "params_fingerprint", "index manifest");
    index.rgcn_dim = static_cast<int>(require_int(manifest, "rgcn_dim", "index manifest"));
    const long long count = require_int(manifest, "count", "index manifest");
    const njson& entries = require_array(manifest, "entries", "index manifest");
    if (static_cast<long long>(entries.size()) != count)
        throw DataError("index manifest: entry count mismatch");
    for (const auto& e : entries) {
        std::string id = require_string(e, "id", "index entry");
        std::string file = require_string(e, "file", "index entry");
        Matrix<float> m = matrix_from_json(parse_json(read_text_file(dir / file), "index tensor"),
                                           "index tensor " + file);
        if (m.cols != index.rgcn_dim)
            throw DataError("index tensor " + file + ": dim does not match manifest");
        index.add(std::move(id), std::move(m));
    }
    return index;
}

RankedList rank_candidates(const CandidatePool& pool, const DgmsParams<float>& params,
                           const PreparedCorpus& prepared, const EmbeddingIndex* index,
                           int threads) {
    if (index && index->fingerprint != params_fingerprint(params))
        throw DataError("index fingerprint does not match the checkpoint");
    const Corpus& corpus = *prepared.corpus;
    const int qidx = corpus.index_of(pool.query_id);
    if (qidx < 0) throw DataError("rank_candidates: unknown query id '" + pool.query_id + "'");

    std::vector<std::string> candidates;
    candidates.push_back(pool.truth_id);
    std::unordered_set<std::string> seen{pool.truth_id};
    for (const auto& d : pool.distractors) {
        if (d == pool.truth_id)
            throw ArgumentError("rank_candidates: ground truth among distractors");
        if (!seen.insert(d).second)
            throw ArgumentError("rank_candidates: duplicate distractor '" + d + "'");
        candidates.push_back(d);
    }

    const Matrix<float> q_nodes =
        rgcn_node_embeddings(params, prepared.text[static_cast<std::size_t>(qidx)]);
    std::vector<ScoredCandidate> scored(candidates.size());
    parallel_for(candidates.size(), threads, [&](std::size_t i) {
        const std::string& id = candidates[i];
        Matrix<float> e_nodes;
        if (index) {
            const Matrix<float>* hit = index->find(id);
            if (!hit) throw DataError("index is missing candidate '" + id + "'");
            e_nodes = *hit;
        } else {
            const int cidx = corpus.index_of(id);
            if (cidx < 0) throw DataError("rank_candidates: unknown candidate id '" + id + "'");
            e_nodes = rgcn_node_embeddings(params, prepared.code[static_cast<std::size_t>(cidx)]);
        }
        scored[i] = ScoredCandidate{
            id, static_cast<double>(score_embedded_value(params, q_nodes, e_nodes))};
    });
    return rank_scored(std::move(scored), std::string_view(pool.truth_id));
}

double mrr(const std::vector<int>& franks) {
    if (franks.empty()) throw ArgumentError("mrr: empty frank list");
    double acc = 0.0;
    for (int f : franks) {
        if (f < 1) throw ArgumentError("mrr: franks are 1-based");
        acc += 1.0 / static_cast<double>(f);
    }
    return acc / static_cast<double>(franks.size());
}

double success_at_k(const std::vector<int>& franks, int k) {
    if (franks.empty()) throw ArgumentError("success_at_k: empty frank list");
    if (k < 1) throw ArgumentError("success_at_k: k must be >= 1");
    int hits = 0;
    for (int f : franks) {
        if (f < 1) throw ArgumentError("success_at_k: franks are 1-based");
        if (f <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(franks.size());
}

EvalReport evaluate(const Corpus& corpus, const DgmsParams<float>& params,
                    const EmbeddingTable& table, int pool_size, std::uint64_t seed,
                    const EmbeddingIndex* index, int threads) {
    std::vector<CandidatePool> pools = build_pools(corpus, pool_size, seed);
    PreparedCorpus prepared = prepare_corpus(corpus, params, table, threads);
    std::vector<int> franks(pools.size());
    // Pools run in parallel; candidate scoring inside each pool stays serial.
    parallel_for(pools.size(), threads, [&](std::size_t i) {
        franks[i] = rank_candidates(pools[i], params, prepared, index, 1).frank;
    });
    EvalReport report;
    report.mrr = mrr(franks);
    report.s_at_1 = success_at_k(franks, 1);
    report.s_at_5 = success_at_k(franks, 5);
    report.s_at_10 = success_at_k(franks, 10);
    report.pool_size = pool_size;
    report.queries = static_cast<int>(pools.size());
    report.seed = seed;
    return report;
}

std::string encode_eval_report(const EvalReport& report) {
    njson j;
    j["mrr"] = report.mrr;
    njson s;
    s["1"] = report.s_at_1;
    s["5"] = report.s_at_5;
    s["10"] = report.s_at_10;
    j["s_at"] = std::move(s);
    j["pool_size"] = report.pool_size;
    j["queries"] = report.queries;
    j["seed"] = report.seed;
    return j.dump();
}

RankedList search(const std::string& query_text, std::optional<std::string> query_parse,
                  const DgmsParams<float>& params, const PreparedCorpus& prepared,
                  const EmbeddingTable& table, int top_k, const EmbeddingIndex* index,
                  int threads) {
    if (top_k < 0) throw ArgumentError("search: top_k must be >= 0");
    if (index && index->fingerprint != params_fingerprint(params))
        throw DataError("index fingerprint does not match the checkpoint");
    BracketedParse parse = query_parse ? parse_bracketed(*query_parse)
                                       : flat_parse(tokenize_text(query_text));
    LabeledMultigraph query_graph = build_text_graph(parse);
    PreparedGraph<float> query = prepare_graph<float>(
        query_graph, node_features(query_graph, table), params.relations);
    const Matrix<float> q_nodes = rgcn_node_embeddings(params, query);

    const Corpus& corpus = *prepared.corpus;
    std::vector<ScoredCandidate> scored(corpus.entries.size());
    parallel_for(corpus.entries.size(), threads, [&](std::size_t i) {
        const std::string& id = corpus.entries[i].id;
        Matrix<float> e_nodes;
        if (index) {
            const Matrix<float>* hit = index->find(id);
            if (!hit) throw DataError("index is missing candidate '" + id + "'");
            e_nodes = *hit;
        } else {
            e_nodes = rgcn_node_embeddings(params, prepared.code[i]);
        }
        scored[i] = ScoredCandidate{
            id, static_cast<double>(score_embedded_value(params, q_nodes, e_nodes))};
    });
    RankedList full = rank_scored(std::move(scored), std::nullopt);
    if (static_cast<int>(full.ranking.size()) > top_k)
        full.ranking.resize(static_cast<std::size_t>(top_k));
    return full;
}

} // namespace dgms
