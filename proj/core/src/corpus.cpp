#include "dgms/corpus.hpp"

#include <cctype>
#include <unordered_set>

#include "dgms/code_graph.hpp"
#include "dgms/parallel.hpp"
#include "dgms/text_graph.hpp"
#include "graph_json_internal.hpp"
#include "json_util.hpp"

namespace dgms {

int Corpus::index_of(std::string_view id) const {
    for (int i = 0; i < size(); ++i)
        if (entries[static_cast<std::size_t>(i)].id == id) return i;
    return -1;
}

namespace {

std::string trimmed(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

int nonblank_line_count(std::string_view code) {
    int count = 0;
    std::size_t pos = 0;
    while (pos <= code.size()) {
        std::size_t end = code.find('\n', pos);
        if (end == std::string_view::npos) end = code.size();
        if (!trimmed(code.substr(pos, end - pos)).empty()) ++count;
        if (end == code.size()) break;
        pos = end + 1;
    }
    return count;
}

int word_count(std::string_view text) {
    int count = 0;
    bool in_word = false;
    for (char c : text) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++count;
        in_word = !space;
    }
    return count;
}

double ascii_letter_ratio(std::string_view doc) {
    int letters = 0, significant = 0;
    for (char c : doc) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isspace(u)) continue;
        ++significant;
        if (std::isalpha(u)) ++letters;
    }
    if (significant == 0) return 0.0;
    return static_cast<double>(letters) / significant;
}

struct RawEntry {
    std::string id;
    std::string doc;
    std::optional<std::string> code;
    std::optional<std::string> ast_json;
    std::optional<std::string> parse;
    int line_no = 0;
};

struct BuiltGraphs {
    LabeledMultigraph text_graph;
    LabeledMultigraph code_graph;
    std::string error; // non-empty when building failed
};

BuiltGraphs build_graphs(const RawEntry& raw) {
    BuiltGraphs out;
    try {
        BracketedParse parse = raw.parse ? parse_bracketed(*raw.parse)
                                         : flat_parse(tokenize_text(raw.doc));
        out.text_graph = build_text_graph(parse);
        AstTree ast =
            raw.ast_json ? decode_ast_json(*raw.ast_json) : parse_minilang(raw.code.value());
        out.code_graph = build_program_graph(ast);
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

} // namespace

Corpus ingest_corpus(std::string_view raw_jsonl, const FilterConfig& config,
                     std::vector<IngestMessage>* log, int threads) {
    Corpus corpus;
    auto note = [&](std::string where, std::string reason) {
        if (log) log->push_back(IngestMessage{std::move(where), std::move(reason)});
    };

    std::vector<RawEntry> staged;
    std::unordered_set<std::string> seen_ids;
    std::unordered_set<std::string> seen_docs;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < raw_jsonl.size()) {
        std::size_t end = raw_jsonl.find('\n', pos);
        if (end == std::string_view::npos) end = raw_jsonl.size();
        std::string_view line = raw_jsonl.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (trimmed(line).empty()) continue;
        ++corpus.filters.total;
        const std::string where = "line " + std::to_string(line_no);

        RawEntry raw;
        raw.line_no = line_no;
        try {
            njson j = parse_json(line, "corpus entry");
            raw.id = require_string(j, "id", "corpus entry");
            if (j.contains("doc")) {
                const njson& d = j.at("doc");
                if (!d.is_string()) throw ParseError("corpus entry: 'doc' must be a string");
                raw.doc = d.get<std::string>();
            }
            if (j.contains("code")) {
                const njson& c = j.at("code");
                if (!c.is_string()) throw ParseError("corpus entry: 'code' must be a string");
                raw.code = c.get<std::string>();
            }
            if (j.contains("ast")) raw.ast_json = j.at("ast").dump();
            if (j.contains("parse")) {
                const njson& p = j.at("parse");
                if (!p.is_string()) throw ParseError("corpus entry: 'parse' must be a string");
                raw.parse = p.get<std::string>();
            }
            if (!raw.code && !raw.ast_json)
                throw ParseError("corpus entry: needs 'code' or 'ast'");
            if (raw.id.empty()) throw ParseError("corpus entry: empty id");
        } catch (const Error& e) {
            ++corpus.filters.unparsable;
            note(where, e.what());
            continue;
        }
        if (!seen_ids.insert(raw.id).second) {
            ++corpus.filters.unparsable;
            note(where, "duplicate id '" + raw.id + "'");
            continue;
        }

        if (trimmed(raw.doc).empty()) {
            ++corpus.filters.missing_doc;
            continue;
        }
        if (raw.code && nonblank_line_count(*raw.code) < config.min_code_lines) {
            ++corpus.filters.short_code;
            continue;
        }
        if (word_count(raw.doc) < config.min_doc_words) {
            ++corpus.filters.short_doc;
            continue;
        }
        if (config.non_english_filter &&
            ascii_letter_ratio(raw.doc) < config.min_ascii_letter_ratio) {
            ++corpus.filters.non_english;
            continue;
        }
        if (!seen_docs.insert(raw.doc).second) {
            ++corpus.filters.duplicate_doc;
            continue;
        }
        staged.push_back(std::move(raw));
    }

    std::vector<BuiltGraphs> built(staged.size());
    parallel_for(staged.size(), threads,
                 [&](std::size_t i) { built[i] = build_graphs(staged[i]); });

    for (std::size_t i = 0; i < staged.size(); ++i) {
        RawEntry& raw = staged[i];
        BuiltGraphs& graphs = built[i];
        if (!graphs.error.empty()) {
            ++corpus.filters.unparsable;
            note(raw.id, graphs.error);
            continue;
        }
        if (graphs.text_graph.node_count() > config.max_nodes ||
            graphs.code_graph.node_count() > config.max_nodes) {
            ++corpus.filters.over_node_cap;
            continue;
        }
        CorpusEntry entry;
        entry.id = std::move(raw.id);
        entry.doc = std::move(raw.doc);
        entry.code = std::move(raw.code);
        entry.ast_json = std::move(raw.ast_json);
        entry.text_graph = std::move(graphs.text_graph);
        entry.code_graph = std::move(graphs.code_graph);
        corpus.entries.push_back(std::move(entry));
        ++corpus.filters.kept;
    }
    return corpus;
}

namespace {

njson filters_to_json(const FilterCounts& f) {
    njson j;
    j["total"] = f.total;
    j["missing_doc"] = f.missing_doc;
    j["short_code"] = f.short_code;
    j["short_doc"] = f.short_doc;
    j["non_english"] = f.non_english;
    j["duplicate_doc"] = f.duplicate_doc;
    j["unparsable"] = f.unparsable;
    j["over_node_cap"] = f.over_node_cap;
    j["kept"] = f.kept;
    return j;
}

FilterCounts filters_from_json(const njson& j) {
    FilterCounts f;
    f.total = static_cast<int>(require_int(j, "total", "corpus meta"));
    f.missing_doc = static_cast<int>(require_int(j, "missing_doc", "corpus meta"));
    f.short_code = static_cast<int>(require_int(j, "short_code", "corpus meta"));
    f.short_doc = static_cast<int>(require_int(j, "short_doc", "corpus meta"));
    f.non_english = static_cast<int>(require_int(j, "non_english", "corpus meta"));
    f.duplicate_doc = static_cast<int>(require_int(j, "duplicate_doc", "corpus meta"));
    f.unparsable = static_cast<int>(require_int(j, "unparsable", "corpus meta"));
    f.over_node_cap = static_cast<int>(require_int(j, "over_node_cap", "corpus meta"));
    f.kept = static_cast<int>(require_int(j, "kept", "corpus meta"));
    return f;
}

} // namespace

std::string encode_corpus(const Corpus& corpus) {
    std::string out;
    njson meta;
    meta["type"] = "dgms-corpus";
    meta["version"] = 1;
    meta["filters"] = filters_to_json(corpus.filters);
    out += meta.dump();
    out += '\n';
    for (const auto& entry : corpus.entries) {
        njson j;
        j["id"] = entry.id;
        j["doc"] = entry.doc;
        if (entry.code) j["code"] = *entry.code;
        if (entry.ast_json) j["ast"] = parse_json(*entry.ast_json, "corpus ast");
        j["text_graph"] = graph_to_njson(entry.text_graph);
        j["code_graph"] = graph_to_njson(entry.code_graph);
        out += j.dump();
        out += '\n';
    }
    return out;
}

Corpus decode_corpus(std::string_view bytes) {
    Corpus corpus;
    std::size_t pos = 0;
    int line_no = 0;
    bool meta_seen = false;
    std::unordered_set<std::string> seen_ids;
    while (pos < bytes.size()) {
        std::size_t end = bytes.find('\n', pos);
        if (end == std::string_view::npos) end = bytes.size();
        std::string_view line = bytes.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (trimmed(line).empty()) continue;
        njson j = parse_json(line, "corpus line " + std::to_string(line_no));
        if (!meta_seen) {
            if (require_string(j, "type", "corpus meta") != "dgms-corpus")
                throw DataError("corpus: unexpected meta type");
            if (require_int(j, "version", "corpus meta") != 1)
                throw DataError("corpus: unsupported version");
            corpus.filters = filters_from_json(require_object(j, "filters", "corpus meta"));
            meta_seen = true;
            continue;
        }
        CorpusEntry entry;
        entry.id = require_string(j, "id", "corpus entry");
        entry.doc = require_string(j, "doc", "corpus entry");
        if (j.contains("code")) entry.code = j.at("code").get<std::string>();
        if (j.contains("ast")) entry.ast_json = j.at("ast").dump();
        entry.text_graph = graph_from_njson(require_object(j, "text_graph", "corpus entry"));
        entry.code_graph = graph_from_njson(require_object(j, "code_graph", "corpus entry"));
        if (!seen_ids.insert(entry.id).second)
            throw DataError("corpus: duplicate id '" + entry.id + "'");
        corpus.entries.push_back(std::move(entry));
    }
    if (!meta_seen) throw DataError("corpus: missing meta line");
    return corpus;
}

} // namespace dgms
