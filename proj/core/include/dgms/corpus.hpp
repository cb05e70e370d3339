#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dgms/graph.hpp"

namespace dgms {

struct FilterConfig {
    int min_code_lines = 3;
    int min_doc_words = 3;
    int max_nodes = 300;
    // Crude stand-in for a language check: fraction of ASCII letters among
    // the doc's non-space characters.
    bool non_english_filter = false;
    double min_ascii_letter_ratio = 0.5;
};

struct FilterCounts {
    int total = 0;
    int missing_doc = 0;
    int short_code = 0;
    int short_doc = 0;
    int non_english = 0;
    int duplicate_doc = 0;
    int unparsable = 0;
    int over_node_cap = 0;
    int kept = 0;

    bool operator==(const FilterCounts&) const = default;
};

struct CorpusEntry {
    std::string id;
    std::string doc;
    std::optional<std::string> code;     // MiniLang source when ingested as text
    std::optional<std::string> ast_json; // raw AST JSON when ingested that way
    LabeledMultigraph text_graph;
    LabeledMultigraph code_graph;
};

struct Corpus {
    std::vector<CorpusEntry> entries;
    FilterCounts filters;

    int size() const { return static_cast<int>(entries.size()); }
    /// Index of the entry with this id, or -1.
    int index_of(std::string_view id) const;
};

struct IngestMessage {
    std::string where; // entry id or "line N"
    std::string reason;
};

/// Applies the corpus filters in order (missing doc, short code, short doc,
/// optional non-English heuristic, duplicate doc), builds both graphs, then
/// drops entries over the node cap. Unparsable entries are skipped with a
/// logged reason, never fatal. Raw format: JSONL of
/// {"id","doc","code"} or {"id","doc","ast":<AST JSON>}, plus an optional
/// "parse" carrying a bracketed constituency parse of the doc.
Corpus ingest_corpus(std::string_view raw_jsonl, const FilterConfig& config,
                     std::vector<IngestMessage>* log = nullptr, int threads = 1);

/// Built-corpus JSONL: a meta line with the filter provenance, then one
/// entry per line with both graphs inline.
std::string encode_corpus(const Corpus& corpus);
Corpus decode_corpus(std::string_view bytes);

} // namespace dgms
