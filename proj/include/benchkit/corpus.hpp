#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "benchkit/jsonl.hpp"

namespace benchkit {

// One user query as it enters curation. Immutable after ingestion; every
// downstream stage annotates by id.
struct PromptRecord {
    std::string id;
    std::string text;
    std::string source;
    int turn_count = 1;
    std::string language = "und";  // ISO-639-1 or "und"
    std::map<std::string, std::string> metadata;

    Json to_json() const;
    static PromptRecord from_json(const Json& j);
};

struct Corpus {
    std::vector<PromptRecord> records;

    size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    const PromptRecord* find(const std::string& id) const;
};

// Maps text -> ISO-639-1 code (or "und"). The default is a crude heuristic:
// "en" when the ASCII-alphabetic fraction of non-whitespace characters is
// >= 0.6. Swap in a real detector for anything serious.
using LanguageDetector = std::function<std::string(const std::string&)>;
std::string heuristic_language(const std::string& text);

// Lowercased, whitespace-collapsed form used as the duplicate key.
std::string normalized_text(const std::string& text);

// Parses line-delimited records {id?, text, turn_count?, language?, source?,
// metadata?}. Records without an id get a content hash of their text
// (repeat texts get an ordinal suffix so ids stay unique). Records without a
// language tag run through the detector. Malformed lines throw IngestError
// listing every offending line number. Empty input is an empty corpus.
Corpus ingest(std::istream& in, const LanguageDetector& detect = heuristic_language);
Corpus ingest_file(const std::string& path, const LanguageDetector& detect = heuristic_language);

struct FilterRules {
    bool drop_duplicates = true;
    bool drop_multiturn = true;
    bool drop_non_english = true;
};

struct FilterReport {
    size_t input = 0;
    size_t kept = 0;
    size_t duplicates = 0;
    size_t multiturn = 0;
    size_t non_english = 0;

    Json to_json() const;
};

struct FilterOutcome {
    Corpus corpus;
    FilterReport report;
};

// Keeps the first occurrence of each normalized text; drops turn_count > 1
// and language != "en" per the rules. Survivor order preserves input order.
// Idempotent. A record matching several rules is charged to the first one in
// the order duplicates, multiturn, non_english.
FilterOutcome dedup_and_filter(const Corpus& corpus, const FilterRules& rules = {});

void write_corpus_file(const std::string& path, const Corpus& corpus);
Corpus read_corpus_file(const std::string& path);

}  // namespace benchkit
