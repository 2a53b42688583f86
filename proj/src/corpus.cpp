#include "benchkit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "benchkit/errors.hpp"
#include "benchkit/hash.hpp"

namespace benchkit {

Json PromptRecord::to_json() const {
    Json j{{"id", id},
           {"text", text},
           {"turn_count", turn_count},
           {"language", language}};
    if (!source.empty()) j["source"] = source;
    if (!metadata.empty()) j["metadata"] = metadata;
    return j;
}

PromptRecord PromptRecord::from_json(const Json& j) {
    PromptRecord r;
    r.id = j.value("id", "");
    r.text = j.at("text").get<std::string>();
    r.source = j.value("source", "");
    r.turn_count = j.value("turn_count", 1);
    r.language = j.value("language", "und");
    if (j.contains("metadata")) {
        for (auto it = j["metadata"].begin(); it != j["metadata"].end(); ++it)
            r.metadata[it.key()] = it.value().get<std::string>();
    }
    return r;
}

const PromptRecord* Corpus::find(const std::string& id) const {
    for (const auto& r : records)
        if (r.id == id) return &r;
    return nullptr;
}

std::string heuristic_language(const std::string& text) {
    size_t alpha = 0, visible = 0;
    for (unsigned char c : text) {
        if (std::isspace(c)) continue;
        ++visible;
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) ++alpha;
    }
    if (visible == 0) return "und";
    return (static_cast<double>(alpha) / static_cast<double>(visible) >= 0.6) ? "en" : "und";
}

std::string normalized_text(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

namespace {

std::string trimmed(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Corpus ingest(std::istream& in, const LanguageDetector& detect) {
    Corpus corpus;
    std::vector<std::string> errors;
    std::unordered_set<std::string> seen_ids;
    std::unordered_map<std::string, int> hash_uses;

    auto fail = [&](size_t line, const std::string& msg) {
        errors.push_back("line " + std::to_string(line) + ": " + msg);
    };

    for_each_jsonl(
        in,
        [&](size_t line, const Json& j) {
            if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
                fail(line, "missing text field");
                return;
            }
            PromptRecord r;
            r.text = j["text"].get<std::string>();
            if (trimmed(r.text).empty()) {
                fail(line, "text empty after trimming");
                return;
            }
            if (j.contains("turn_count")) {
                if (!j["turn_count"].is_number_integer() || j["turn_count"].get<int>() < 1) {
                    fail(line, "turn_count must be a positive integer");
                    return;
                }
                r.turn_count = j["turn_count"].get<int>();
            }
            r.source = j.value("source", "");
            if (j.contains("language") && j["language"].is_string() &&
                !j["language"].get<std::string>().empty()) {
                r.language = j["language"].get<std::string>();
            } else {
                r.language = detect(r.text);
            }
            if (j.contains("metadata") && j["metadata"].is_object()) {
                for (auto it = j["metadata"].begin(); it != j["metadata"].end(); ++it)
                    if (it.value().is_string()) r.metadata[it.key()] = it.value().get<std::string>();
            }
            if (j.contains("id") && j["id"].is_string() && !j["id"].get<std::string>().empty()) {
                r.id = j["id"].get<std::string>();
                if (!seen_ids.insert(r.id).second) {
                    fail(line, "duplicate id '" + r.id + "'");
                    return;
                }
            } else {
                // Content hash; identical texts are legal here (dedup is a
                // separate pass) so repeats get an ordinal suffix.
                std::string h = fnv1a64_hex(r.text);
                int n = ++hash_uses[h];
                r.id = (n == 1) ? h : h + "-" + std::to_string(n);
                seen_ids.insert(r.id);
            }
            corpus.records.push_back(std::move(r));
        },
        fail);

    if (!errors.empty()) {
        std::ostringstream msg;
        msg << errors.size() << " malformed record(s):";
        for (const auto& e : errors) msg << "\n  " << e;
        throw IngestError(msg.str());
    }
    return corpus;
}

Corpus ingest_file(const std::string& path, const LanguageDetector& detect) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path);
    return ingest(in, detect);
}

Json FilterReport::to_json() const {
    return Json{{"input", input},
                {"kept", kept},
                {"duplicates", duplicates},
                {"multiturn", multiturn},
                {"non_english", non_english}};
}

FilterOutcome dedup_and_filter(const Corpus& corpus, const FilterRules& rules) {
    FilterOutcome out;
    out.report.input = corpus.size();
    std::unordered_set<uint64_t> seen;
    for (const auto& r : corpus.records) {
        if (rules.drop_duplicates && !seen.insert(fnv1a64(normalized_text(r.text))).second) {
            ++out.report.duplicates;
            continue;
        }
        if (rules.drop_multiturn && r.turn_count > 1) {
            ++out.report.multiturn;
            continue;
        }
        if (rules.drop_non_english && r.language != "en") {
            ++out.report.non_english;
            continue;
        }
        out.corpus.records.push_back(r);
    }
    out.report.kept = out.corpus.size();
    return out;
}

void write_corpus_file(const std::string& path, const Corpus& corpus) {
    std::vector<Json> rows;
    rows.reserve(corpus.size());
    for (const auto& r : corpus.records) rows.push_back(r.to_json());
    write_jsonl_file(path, rows);
}

Corpus read_corpus_file(const std::string& path) {
    Corpus corpus;
    for (const auto& j : read_jsonl_file(path)) corpus.records.push_back(PromptRecord::from_json(j));
    return corpus;
}

}  // namespace benchkit
