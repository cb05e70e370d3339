#include "cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgms/code_graph.hpp"
#include "dgms/corpus.hpp"
#include "dgms/embeddings.hpp"
#include "dgms/model.hpp"
#include "dgms/parallel.hpp"
#include "dgms/retrieval.hpp"
#include "dgms/tensor.hpp"
#include "dgms/text_graph.hpp"
#include "dgms/training.hpp"

namespace dgms::cli {

namespace {

using njson = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << bytes;
    if (!out) throw DataError("failed writing file: " + path);
}

int default_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Required values may arrive via flag or --config, so they are checked here
// rather than by the flag parser.
void need(const std::string& value, const char* flag, const char* command) {
    if (value.empty())
        throw DataError(std::string(command) + ": missing " + flag +
                        " (pass the flag or set it in --config)");
}

// All tunables of every subcommand, preloaded from --config and then
// overridden by explicit flags.
struct Options {
    std::string config_path;
    std::string in_path;
    std::string val_path;
    std::string out_path;
    std::string embeddings_path;
    std::string checkpoint_path;
    std::string index_path;
    std::string log_path;
    std::string pools_path;
    std::string pools_out_path;
    std::string lang = "minilang";
    std::string query;
    std::string query_parse;
    std::string match_op = "submul";
    std::string agg_op = "fcmax";
    bool raw_tokens = false;
    bool repl = false;
    bool non_english_filter = false;
    bool freeze_negatives = false;
    bool restrict_vocab = false;
    int threads = 0; // 0: use DGMS_THREADS or hardware concurrency
    int pool_size = 100;
    int top_k = 10;
    int rgcn_dim = 100;
    int agg_dim = 100;
    int input_dim = 300;
    int layers = 1;
    int epochs = 10;
    int batch = 10;
    int min_lines = 3;
    int min_words = 3;
    int max_nodes = 300;
    int gradcheck_pairs = 20;
    double margin = 0.5;
    double lr = 1e-4;
    std::uint64_t seed = 0;

    int effective_threads() const {
        if (threads > 0) return threads;
        if (const char* env = std::getenv("DGMS_THREADS")) {
            int n = std::atoi(env);
            if (n > 0) return n;
        }
        return default_threads();
    }

    ModelConfig model_config() const {
        ModelConfig config;
        config.layers = layers;
        config.rgcn_dim = rgcn_dim;
        config.match_op = match_op_from_name(match_op);
        config.agg_op = agg_op_from_name(agg_op);
        config.agg_dim = agg_dim;
        config.input_dim = input_dim;
        config.seed = seed;
        return config;
    }

    TrainConfig train_config() const {
        TrainConfig config;
        config.margin = margin;
        config.learning_rate = lr;
        config.batch_size = batch;
        config.epochs = epochs;
        config.seed = seed;
        config.freeze_negatives = freeze_negatives;
        config.threads = effective_threads();
        return config;
    }

    FilterConfig filter_config() const {
        FilterConfig config;
        config.min_code_lines = min_lines;
        config.min_doc_words = min_words;
        config.max_nodes = max_nodes;
        config.non_english_filter = non_english_filter;
        return config;
    }
};

void apply_config_file(Options& opt) {
    if (opt.config_path.empty()) return;
    njson j;
    try {
        j = njson::parse(read_file(opt.config_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("config file: " + std::string(e.what()));
    }
    if (!j.is_object()) throw DataError("config file: expected a JSON object");
    auto str = [&](const char* key, std::string& var) {
        if (j.contains(key)) var = j.at(key).get<std::string>();
    };
    auto num = [&](const char* key, auto& var) {
        if (j.contains(key)) var = j.at(key).get<std::decay_t<decltype(var)>>();
    };
    auto flag = [&](const char* key, bool& var) {
        if (j.contains(key)) var = j.at(key).get<bool>();
    };
    str("in", opt.in_path);
    str("val", opt.val_path);
    str("out", opt.out_path);
    str("embeddings", opt.embeddings_path);
    str("checkpoint", opt.checkpoint_path);
    str("index", opt.index_path);
    str("log", opt.log_path);
    str("pools", opt.pools_path);
    str("pools_out", opt.pools_out_path);
    str("lang", opt.lang);
    str("match_op", opt.match_op);
    str("agg_op", opt.agg_op);
    flag("non_english_filter", opt.non_english_filter);
    flag("restrict_vocab", opt.restrict_vocab);
    flag("freeze_negatives", opt.freeze_negatives);
    num("threads", opt.threads);
    num("pool_size", opt.pool_size);
    num("top_k", opt.top_k);
    num("rgcn_dim", opt.rgcn_dim);
    num("agg_dim", opt.agg_dim);
    num("input_dim", opt.input_dim);
    num("layers", opt.layers);
    num("epochs", opt.epochs);
    num("batch", opt.batch);
    num("min_lines", opt.min_lines);
    num("min_words", opt.min_words);
    num("max_nodes", opt.max_nodes);
    num("gradcheck_pairs", opt.gradcheck_pairs);
    num("margin", opt.margin);
    num("lr", opt.lr);
    num("seed", opt.seed);
}

void echo_config(std::ostream& err, const std::string& command, const njson& extra) {
    njson echo;
    echo["command"] = command;
    for (const auto& [key, value] : extra.items()) echo[key] = value;
    err << echo.dump() << '\n';
}

DgmsParams<float> load_checkpoint_file(const std::string& path) {
    return decode_checkpoint(read_file(path));
}

// With --restrict-vocab, keep only rows for corpus graph tokens and their
// subtokens; feature vectors come out identical to a full load.
EmbeddingTable load_table(const Options& opt, const Corpus& corpus) {
    if (!opt.restrict_vocab) return load_embeddings(opt.embeddings_path);
    std::vector<std::string> keep;
    for (const auto& entry : corpus.entries) {
        for (const auto* g : {&entry.text_graph, &entry.code_graph}) {
            for (const auto& node : g->nodes) {
                keep.push_back(node.token);
                for (auto& sub : split_subtokens(node.token)) keep.push_back(std::move(sub));
            }
        }
    }
    return load_embeddings_restricted(opt.embeddings_path, keep);
}

// ---- subcommand bodies ----------------------------------------------------

int cmd_graph_text(const Options& opt, std::ostream& out, std::ostream& err) {
    need(opt.in_path, "--in", "graph text");
    need(opt.out_path, "--out", "graph text");

    echo_config(err, "graph text",
                {{"in", opt.in_path}, {"out", opt.out_path}, {"raw", opt.raw_tokens}});
    const std::string text = read_file(opt.in_path);
    std::ostringstream result;
    std::size_t pos = 0;
    int graphs = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        BracketedParse parse =
            opt.raw_tokens ? flat_parse(tokenize_text(line)) : parse_bracketed(line);
        result << encode_graph_json(build_text_graph(parse)) << '\n';
        ++graphs;
    }
    if (graphs == 0) throw DataError("graph text: no parses found in the input");
    write_file(opt.out_path, result.str());
    out << "wrote " << opt.out_path << '\n';
    return 0;
}

int cmd_graph_code(const Options& opt, std::ostream& out, std::ostream& err) {
    need(opt.in_path, "--in", "graph code");
    need(opt.out_path, "--out", "graph code");

    echo_config(err, "graph code",
                {{"in", opt.in_path}, {"out", opt.out_path}, {"lang", opt.lang}});
    const std::string source = read_file(opt.in_path);
    AstTree ast;
    if (opt.lang == "minilang") {
        ast = parse_minilang(source);
    } else if (opt.lang == "ast-json") {
        ast = decode_ast_json(source);
    } else {
        throw DataError("graph code: unknown --lang '" + opt.lang + "'");
    }
    write_file(opt.out_path, encode_graph_json(build_program_graph(ast)));
    out << "wrote " << opt.out_path << '\n';
    return 0;
}

int cmd_corpus_build(const Options& opt, std::ostream& out, std::ostream& err) {
    need(opt.in_path, "--in", "corpus build");
    need(opt.out_path, "--out", "corpus build");

    echo_config(err, "corpus build",
                {{"in", opt.in_path},
                 {"out", opt.out_path},
                 {"min_lines", opt.min_lines},
                 {"min_words", opt.min_words},
                 {"max_nodes", opt.max_nodes},
                 {"non_english_filter", opt.non_english_filter},
                 {"threads", opt.effective_threads()}});
    std::vector<IngestMessage> log;
    Corpus corpus =
        ingest_corpus(read_file(opt.in_path), opt.filter_config(), &log, opt.effective_threads());
    for (const auto& message : log)
        err << "skipped " << message.where << ": " << message.reason << '\n';
    write_file(opt.out_path, encode_corpus(corpus));
    const FilterCounts& f = corpus.filters;
    out << "kept " << f.kept << "/" << f.total << " entries (missing_doc " << f.missing_doc
        << ", short_code " << f.short_code << ", short_doc " << f.short_doc << ", non_english "
        << f.non_english << ", duplicate_doc " << f.duplicate_doc << ", unparsable "
        << f.unparsable << ", over_node_cap " << f.over_node_cap << ")\n";
    return 0;
}

int cmd_train(const Options& opt, std::ostream& out, std::ostream& err) {
    need(opt.in_path, "--in", "train");
    need(opt.embeddings_path, "--embeddings", "train");
    need(opt.checkpoint_path, "--checkpoint", "train");

    echo_config(err, "train",
                {{"in", opt.in_path},
                 {"val", opt.val_path.empty() ? opt.in_path : opt.val_path},
                 {"embeddings", opt.embeddings_path},
                 {"checkpoint", opt.checkpoint_path},
                 {"epochs", opt.epochs},
                 {"batch", opt.batch},
                 {"margin", opt.margin},
                 {"lr", opt.lr},
                 {"rgcn_dim", opt.rgcn_dim},
                 {"match_op", opt.match_op},
                 {"agg_op", opt.agg_op},
                 {"seed", opt.seed},
                 {"freeze_negatives", opt.freeze_negatives},
                 {"threads", opt.effective_threads()}});
    Corpus corpus = decode_corpus(read_file(opt.in_path));
    Corpus val = opt.val_path.empty() ? corpus : decode_corpus(read_file(opt.val_path));
    EmbeddingTable table = load_table(opt, corpus);

    ModelConfig model_config = opt.model_config();
    if (table.dim() != model_config.input_dim) {
        err << "note: input_dim " << model_config.input_dim << " adjusted to embedding dim "
            << table.dim() << '\n';
        model_config.input_dim = table.dim();
    }

    std::optional<std::ofstream> log_file;
    std::ostream* log = &err;
    if (!opt.log_path.empty()) {
        log_file.emplace(opt.log_path, std::ios::binary);
        if (!*log_file) throw DataError("cannot write log file: " + opt.log_path);
        log = &*log_file;
    }
    TrainResult result = train(corpus, val, model_config, opt.train_config(), table, log);
    write_file(opt.checkpoint_path, encode_training_checkpoint(result.best_params, result.best_adam));
    out << "best epoch " << result.best_epoch << " val_loss " << result.best_val_loss << ", wrote "
        << opt.checkpoint_path << '\n';
    return 0;
}

LabeledMultigraph random_fixture_graph(std::mt19937_64& rng, GraphKind kind, int min_nodes,
                                       int max_nodes) {
    std::uniform_int_distribution<int> node_count(min_nodes, max_nodes);
    const int n = node_count(rng);
    MultigraphBuilder b(kind);
    std::vector<int> rels;
    if (kind == GraphKind::Text) {
        rels.push_back(b.add_relation(std::string(kConstituencyRelation)));
        rels.push_back(b.add_relation(std::string(kNextWordRelation)));
    } else {
        rels.push_back(b.add_relation(std::string(kChildRelation)));
        rels.push_back(b.add_relation(std::string(kNextTokenRelation)));
        rels.push_back(b.add_relation(std::string(kLastLexicalUseRelation)));
    }
    std::uniform_int_distribution<int> flag(0, 1);
    for (int i = 0; i < n; ++i) b.add_node("n" + std::to_string(i), flag(rng) == 1);
    std::uniform_int_distribution<int> node(0, n - 1);
    std::uniform_int_distribution<int> count(1, 2 * n);
    for (int rel : rels) {
        const int edges = count(rng);
        for (int e = 0; e < edges; ++e) b.add_edge(node(rng), node(rng), rel);
    }
    return b.build();
}

int cmd_gradcheck(const Options& opt, std::ostream& out, std::ostream& err) {
    echo_config(err, "gradcheck", {{"seed", opt.seed}, {"pairs", opt.gradcheck_pairs}});
    const RelationVocab vocab = standard_relation_vocab();
    ModelConfig config;
    config.input_dim = 6;
    config.rgcn_dim = 4;
    config.agg_dim = 4;

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> feature(-1.0, 1.0);
    double worst = 0.0;
    int done = 0;
    int attempts = 0;
    while (done < opt.gradcheck_pairs && attempts < opt.gradcheck_pairs * 10) {
        ++attempts;
        auto gq = random_fixture_graph(rng, GraphKind::Text, 3, 8);
        auto ge = random_fixture_graph(rng, GraphKind::Code, 3, 8);
        Matrix<double> xq(gq.node_count(), config.input_dim);
        Matrix<double> xe(ge.node_count(), config.input_dim);
        for (auto& v : xq.data) v = feature(rng);
        for (auto& v : xe.data) v = feature(rng);
        auto pq = prepare_graph<double>(gq, xq, vocab);
        auto pe = prepare_graph<double>(ge, xe, vocab);

        config.seed = opt.seed + static_cast<std::uint64_t>(attempts);
        auto params = init_params<double>(config, vocab);
        auto flat = flatten_params(params);
        auto loss = [&](Tape<double>& tape, std::vector<Tensor<double>>& leaves) {
            auto staged = stage_from_leaves(leaves, config, vocab.size());
            auto margin = tape.scalar(0.5);
            auto s_pos = score_pair(tape, staged, config, pq, pe);
            auto s_neg = score_pair(tape, staged, config, pe, pq);
            return tape.hinge(tape.add(tape.sub(margin, s_pos), s_neg));
        };
        auto report = grad_check(loss, flat, 1e-5);
        if (report.near_kink) continue; // resample near non-differentiable points
        worst = std::max(worst, report.max_rel_err);
        ++done;
    }
    if (done < opt.gradcheck_pairs) {
        err << "gradcheck: exhausted resampling attempts\n";
        return 3;
    }
    out << "max relative error " << std::scientific << std::setprecision(3) << worst << " over "
        << done << " pairs (tolerance 1e-04)\n";
    return worst < 1e-4 ? 0 : 3;
}

int cmd_index_build(const Options& opt, std::ostream& out, std::ostream& err) {
    need(opt.in_path, "--in", "index build");
    need(opt.checkpoint_path, "--checkpoint", "index build");
    need(opt.embeddings_path, "--embeddings", "index build");

    echo_config(err, "index build",
                {{"in", opt.in_path},
                 {"checkpoint", opt.checkpoint_path},
                 {"embeddings", opt.embeddings_path},
                 {"out", opt.index_path.empty() ? opt.out_path : opt.index_path},
                 {"threads", opt.effective_threads()}});
    Corpus corpus = decode_corpus(read_file(opt.in_path));
    auto params = load_checkpoint_file(opt.checkpoint_path);
    EmbeddingTable table = load_table(opt, corpus);
    auto prepared = prepare_corpus(corpus, params, table, opt.effective_threads());
    auto index = build_index(prepared, params, opt.effective_threads());
    const std::string dir = opt.index_path.empty() ? opt.out_path : opt.index_path;
    if (dir.empty()) throw DataError("index build: missing --out directory");
    save_index(index, dir);
    out << "indexed " << index.size() << " code graphs into " << dir << '\n';
    return 0;
}

int cmd_evaluate(const Options& opt, std::ostream& out, std::ostream& err) {
    need(opt.in_path, "--in", "evaluate");
    need(opt.checkpoint_path, "--checkpoint", "evaluate");
    need(opt.embeddings_path, "--embeddings", "evaluate");

    echo_config(err, "evaluate",
                {{"in", opt.in_path},
                 {"checkpoint", opt.checkpoint_path},
                 {"embeddings", opt.embeddings_path},
                 {"index", opt.index_path},
                 {"pool_size", opt.pool_size},
                 {"pools", opt.pools_path},
                 {"seed", opt.seed},
                 {"threads", opt.effective_threads()}});
    Corpus corpus = decode_corpus(read_file(opt.in_path));
    auto params = load_checkpoint_file(opt.checkpoint_path);
    EmbeddingTable table = load_table(opt, corpus);
    std::optional<EmbeddingIndex> index;
    if (!opt.index_path.empty()) index = load_index(opt.index_path);

    std::vector<CandidatePool> pools = opt.pools_path.empty()
                                           ? build_pools(corpus, opt.pool_size, opt.seed)
                                           : decode_pools(read_file(opt.pools_path));
    if (pools.empty()) throw DataError("evaluate: empty pool list");
    if (!opt.pools_out_path.empty()) write_file(opt.pools_out_path, encode_pools(pools));

    PreparedCorpus prepared = prepare_corpus(corpus, params, table, opt.effective_threads());
    std::vector<int> franks(pools.size());
    parallel_for(pools.size(), opt.effective_threads(), [&](std::size_t i) {
        franks[i] = rank_candidates(pools[i], params, prepared,
                                    index ? &*index : nullptr, 1)
                        .frank;
    });
    EvalReport report;
    report.mrr = mrr(franks);
    report.s_at_1 = success_at_k(franks, 1);
    report.s_at_5 = success_at_k(franks, 5);
    report.s_at_10 = success_at_k(franks, 10);
    report.pool_size = static_cast<int>(pools.front().distractors.size()) + 1;
    report.queries = static_cast<int>(pools.size());
    // Replayed pools keep the seed they were sampled with.
    report.seed = opt.pools_path.empty() ? opt.seed : pools.front().seed;
    const std::string bytes = encode_eval_report(report);
    if (!opt.out_path.empty()) write_file(opt.out_path, bytes);
    out << bytes << '\n';
    return 0;
}

void print_ranking(const RankedList& ranking, const Corpus& corpus, std::ostream& out) {
    out << "rank  score      id\n";
    int rank = 1;
    for (const auto& c : ranking.ranking) {
        std::string doc;
        int idx = corpus.index_of(c.id);
        if (idx >= 0) doc = corpus.entries[static_cast<std::size_t>(idx)].doc;
        if (doc.size() > 60) doc = doc.substr(0, 57) + "...";
        out << std::left << std::setw(6) << rank << std::setw(11) << std::fixed
            << std::setprecision(6) << c.score << c.id << "  " << doc << '\n';
        ++rank;
    }
}

int cmd_search(const Options& opt, std::istream& in, std::ostream& out, std::ostream& err) {
    need(opt.in_path, "--in", "search");
    need(opt.checkpoint_path, "--checkpoint", "search");
    need(opt.embeddings_path, "--embeddings", "search");

    echo_config(err, "search",
                {{"in", opt.in_path},
                 {"checkpoint", opt.checkpoint_path},
                 {"embeddings", opt.embeddings_path},
                 {"index", opt.index_path},
                 {"top_k", opt.top_k},
                 {"repl", opt.repl},
                 {"threads", opt.effective_threads()}});
    Corpus corpus = decode_corpus(read_file(opt.in_path));
    auto params = load_checkpoint_file(opt.checkpoint_path);
    EmbeddingTable table = load_table(opt, corpus);
    std::optional<EmbeddingIndex> index;
    if (!opt.index_path.empty()) index = load_index(opt.index_path);
    auto prepared = prepare_corpus(corpus, params, table, opt.effective_threads());

    auto run_query = [&](const std::string& text, std::optional<std::string> parse) {
        auto ranking = search(text, std::move(parse), params, prepared, table, opt.top_k,
                              index ? &*index : nullptr, opt.effective_threads());
        print_ranking(ranking, corpus, out);
    };

    if (opt.repl) {
        std::string line;
        out << "query> " << std::flush;
        while (std::getline(in, line)) {
            if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos)
                run_query(line, std::nullopt);
            out << "query> " << std::flush;
        }
        out << '\n';
        return 0;
    }
    if (!opt.query_parse.empty()) {
        run_query("", opt.query_parse);
        return 0;
    }
    if (opt.query.empty()) throw DataError("search: need --query, --query-parse, or --repl");
    run_query(opt.query, std::nullopt);
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
    Options opt;

    // --config is honored before regular parsing so flags can override it.
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) opt.config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) opt.config_path = args[i].substr(9);
    }
    try {
        apply_config_file(opt);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        err << njson{{"error", {{"kind", "data"}, {"message", e.what()}}}}.dump() << '\n';
        return 2;
    }

    CLI::App app{"deep graph matching and searching for code retrieval"};
    app.require_subcommand(1);
    app.add_option("--config", opt.config_path, "JSON config file with flag defaults");

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", opt.seed, "random seed");
        cmd->add_option("--threads", opt.threads, "worker threads")->envname("DGMS_THREADS");
        cmd->add_option("--config", opt.config_path, "JSON config file with flag defaults");
    };

    CLI::App* graph = app.add_subcommand("graph", "build graphs from text or code");
    CLI::App* graph_text = graph->add_subcommand("text", "text graphs from parses or tokens");
    graph_text->add_option("--in", opt.in_path, "bracketed parses, one per line");
    graph_text->add_option("--out", opt.out_path, "output graph JSONL");
    graph_text->add_flag("--raw", opt.raw_tokens, "treat lines as raw text, not parses");
    add_common(graph_text);

    CLI::App* graph_code = graph->add_subcommand("code", "program graph from a source file");
    graph_code->add_option("--lang", opt.lang, "minilang or ast-json")
        ->check(CLI::IsMember({"minilang", "ast-json"}));
    graph_code->add_option("--in", opt.in_path, "source or AST JSON file");
    graph_code->add_option("--out", opt.out_path, "output graph JSON");
    add_common(graph_code);

    CLI::App* corpus = app.add_subcommand("corpus", "corpus operations");
    CLI::App* corpus_build = corpus->add_subcommand("build", "ingest and filter raw entries");
    corpus_build->add_option("--in", opt.in_path, "raw corpus JSONL");
    corpus_build->add_option("--out", opt.out_path, "built corpus JSONL");
    corpus_build->add_option("--min-lines", opt.min_lines, "minimum code lines");
    corpus_build->add_option("--min-words", opt.min_words, "minimum doc words");
    corpus_build->add_option("--max-nodes", opt.max_nodes, "graph node cap");
    corpus_build->add_flag("--non-english-filter", opt.non_english_filter,
                           "drop docs failing the ASCII-letter heuristic");
    add_common(corpus_build);

    CLI::App* train_cmd = app.add_subcommand("train", "train a matching model");
    train_cmd->add_option("--in", opt.in_path, "built training corpus");
    train_cmd->add_option("--val", opt.val_path, "built validation corpus");
    train_cmd->add_option("--embeddings", opt.embeddings_path, "GloVe text file");
    train_cmd->add_option("--checkpoint", opt.checkpoint_path, "output checkpoint");
    train_cmd->add_option("--log", opt.log_path, "JSONL training log");
    train_cmd->add_option("--epochs", opt.epochs, "training epochs");
    train_cmd->add_option("--batch", opt.batch, "batch size");
    train_cmd->add_option("--margin", opt.margin, "ranking margin");
    train_cmd->add_option("--lr", opt.lr, "learning rate");
    train_cmd->add_option("--layers", opt.layers, "encoder layers");
    train_cmd->add_option("--rgcn-dim", opt.rgcn_dim, "encoder output dimension");
    train_cmd->add_option("--agg-dim", opt.agg_dim, "pooled dimension for FC aggregation");
    train_cmd->add_option("--match-op", opt.match_op, "none|sub|mul|submul")
        ->check(CLI::IsMember({"none", "sub", "mul", "submul"}));
    train_cmd->add_option("--agg-op", opt.agg_op, "avg|max|fcavg|fcmax")
        ->check(CLI::IsMember({"avg", "max", "fcavg", "fcmax"}));
    train_cmd->add_flag("--freeze-negatives", opt.freeze_negatives,
                        "reuse epoch-0 negatives every epoch");
    train_cmd->add_flag("--restrict-vocab", opt.restrict_vocab,
                        "load only embedding rows the corpus can reach");
    add_common(train_cmd);

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    gradcheck->add_option("--pairs", opt.gradcheck_pairs, "graph pairs to check");
    add_common(gradcheck);

    CLI::App* index = app.add_subcommand("index", "embedding index operations");
    CLI::App* index_build = index->add_subcommand("build", "precompute code-graph embeddings");
    index_build->add_option("--in", opt.in_path, "built corpus");
    index_build->add_option("--checkpoint", opt.checkpoint_path, "model checkpoint");
    index_build->add_option("--embeddings", opt.embeddings_path, "GloVe text file");
    index_build->add_option("--out", opt.out_path, "index directory");
    index_build->add_flag("--restrict-vocab", opt.restrict_vocab,
                        "load only embedding rows the corpus can reach");
    add_common(index_build);

    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "MRR / S@k over candidate pools");
    evaluate_cmd->add_option("--in", opt.in_path, "built corpus");
    evaluate_cmd->add_option("--checkpoint", opt.checkpoint_path, "model checkpoint");
    evaluate_cmd->add_option("--embeddings", opt.embeddings_path, "GloVe text file");
    evaluate_cmd->add_option("--index", opt.index_path, "embedding index directory");
    evaluate_cmd->add_option("--pool-size", opt.pool_size, "candidates per query");
    evaluate_cmd->add_option("--pools", opt.pools_path, "use candidate pools from this file");
    evaluate_cmd->add_option("--pools-out", opt.pools_out_path, "write the pools used");
    evaluate_cmd->add_option("--out", opt.out_path, "write the report JSON here");
    evaluate_cmd->add_flag("--restrict-vocab", opt.restrict_vocab,
                           "load only embedding rows the corpus can reach");
    add_common(evaluate_cmd);

    CLI::App* search_cmd = app.add_subcommand("search", "rank the corpus for a query");
    search_cmd->add_option("--in", opt.in_path, "built corpus");
    search_cmd->add_option("--checkpoint", opt.checkpoint_path, "model checkpoint");
    search_cmd->add_option("--embeddings", opt.embeddings_path, "GloVe text file");
    search_cmd->add_option("--index", opt.index_path, "embedding index directory");
    search_cmd->add_option("--query", opt.query, "free-text query");
    search_cmd->add_option("--query-parse", opt.query_parse, "bracketed constituency parse");
    search_cmd->add_option("--top-k", opt.top_k, "results to show");
    search_cmd->add_flag("--repl", opt.repl, "interactive query loop");
    search_cmd->add_flag("--restrict-vocab", opt.restrict_vocab,
                        "load only embedding rows the corpus can reach");
    add_common(search_cmd);

    std::vector<std::string> argv{"dgms"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::vector<char*> raw;
    raw.reserve(argv.size());
    for (auto& a : argv) raw.push_back(a.data());

    try {
        app.parse(static_cast<int>(raw.size()), raw.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        err << njson{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << '\n';
        return 1;
    }

    try {
        if (graph_text->parsed()) return cmd_graph_text(opt, out, err);
        if (graph_code->parsed()) return cmd_graph_code(opt, out, err);
        if (corpus_build->parsed()) return cmd_corpus_build(opt, out, err);
        if (train_cmd->parsed()) return cmd_train(opt, out, err);
        if (gradcheck->parsed()) return cmd_gradcheck(opt, out, err);
        if (index_build->parsed()) return cmd_index_build(opt, out, err);
        if (evaluate_cmd->parsed()) return cmd_evaluate(opt, out, err);
        if (search_cmd->parsed()) return cmd_search(opt, in, out, err);
        err << "error: missing subcommand\n";
        return 1;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        err << njson{{"error", {{"kind", "data"}, {"message", e.what()}}}}.dump() << '\n';
        return 2;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        err << njson{{"error", {{"kind", "data"}, {"message", e.what()}}}}.dump() << '\n';
        return 2;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        err << njson{{"error", {{"kind", "data"}, {"message", e.what()}}}}.dump() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        err << njson{{"error", {{"kind", "runtime"}, {"message", e.what()}}}}.dump() << '\n';
        return 3;
    }
}

} // namespace dgms::cli
