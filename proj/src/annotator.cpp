#include "benchkit/annotator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <sstream>
#include <thread>

#include "benchkit/errors.hpp"
#include "benchkit/templates.hpp"

namespace benchkit {

Json QualityAnnotation::to_json() const {
    return Json{{"prompt_id", prompt_id},
                {"satisfied", std::vector<int>(satisfied.begin(), satisfied.end())},
                {"score", score},
                {"annotator_model", annotator_model}};
}

QualityAnnotation QualityAnnotation::from_json(const Json& j) {
    QualityAnnotation a;
    a.prompt_id = j.at("prompt_id").get<std::string>();
    for (int c : j.at("satisfied").get<std::vector<int>>()) a.satisfied.insert(c);
    a.score = j.value("score", static_cast<int>(a.satisfied.size()));
    a.annotator_model = j.value("annotator_model", "");
    return a;
}

std::string render_criteria(const std::set<int>& satisfied) {
    std::ostringstream out;
    out << "Criteria Satisfied: [";
    bool first = true;
    for (int c : satisfied) {
        if (!first) out << ", ";
        out << c;
        first = false;
    }
    out << "]";
    return out.str();
}

std::set<int> parse_criteria(const std::string& response) {
    static const std::string marker = "Criteria Satisfied:";
    size_t pos = response.rfind(marker);
    if (pos == std::string::npos)
        throw AnnotationParseError("no 'Criteria Satisfied:' marker in response", response);

    size_t i = pos + marker.size();
    auto skip_ws = [&] {
        while (i < response.size() && std::isspace(static_cast<unsigned char>(response[i]))) ++i;
    };
    skip_ws();
    if (i >= response.size() || response[i] != '[')
        throw AnnotationParseError("expected '[' after 'Criteria Satisfied:'", response);
    ++i;

    std::set<int> out;
    skip_ws();
    if (i < response.size() && response[i] == ']') return out;  // empty set
    for (;;) {
        skip_ws();
        size_t start = i;
        while (i < response.size() && std::isdigit(static_cast<unsigned char>(response[i]))) ++i;
        if (i == start) throw AnnotationParseError("expected integer in criteria array", response);
        int value = std::stoi(response.substr(start, i - start));
        if (value < 1 || value > 7)
            throw AnnotationParseError("criterion " + std::to_string(value) + " outside 1..7",
                                       response);
        out.insert(value);
        skip_ws();
        if (i < response.size() && response[i] == ',') {
            ++i;
            continue;
        }
        if (i < response.size() && response[i] == ']') return out;
        throw AnnotationParseError("expected ',' or ']' in criteria array", response);
    }
}

QualityAnnotation annotate(const PromptRecord& prompt, const std::string& annotator_model,
                           Gateway& gateway, const AnnotatorOptions& opts) {
    if (prompt.text.empty()) throw PreconditionError("annotate: empty prompt text");
    ChatRequest req;
    req.model = annotator_model;
    req.system = kAnnotatorSystemInstruction;
    req.user = prompt.text;
    req.temperature = opts.temperature;
    req.max_tokens = opts.max_tokens;
    ChatResponse res = gateway.chat(req);

    QualityAnnotation a;
    a.prompt_id = prompt.id;
    a.annotator_model = annotator_model;
    a.raw_response = res.text;
    a.satisfied = parse_criteria(res.text);
    a.score = static_cast<int>(a.satisfied.size());
    return a;
}

AnnotationSet annotate_corpus(const Corpus& corpus, const std::string& annotator_model,
                              Gateway& gateway, const AnnotatorOptions& opts) {
    AnnotationSet set;
    set.annotator_model = annotator_model;
    set.annotations.resize(corpus.size());

    std::vector<std::string> failures(corpus.size());
    std::vector<bool> failed(corpus.size(), false);

    // Fan out; the gateway enforces the in-flight bound.
    size_t workers = std::min<size_t>(corpus.size(),
                                      static_cast<size_t>(gateway.config().max_in_flight));
    if (workers == 0) workers = 1;
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= corpus.size()) return;
                try {
                    set.annotations[i] = annotate(corpus.records[i], annotator_model, gateway, opts);
                } catch (const std::exception& e) {
                    failed[i] = true;
                    failures[i] = e.what();
                }
            }
        });
    }
    for (auto& t : pool) t.join();

    size_t n_failed = 0;
    std::ostringstream failing_ids;
    for (size_t i = 0; i < corpus.size(); ++i) {
        if (failed[i]) {
            ++n_failed;
            failing_ids << "\n  " << corpus.records[i].id << ": " << failures[i];
        }
    }
    if (corpus.size() > 0 &&
        static_cast<double>(n_failed) > opts.max_failure_fraction * static_cast<double>(corpus.size())) {
        throw Error("annotation failure rate " + std::to_string(n_failed) + "/" +
                    std::to_string(corpus.size()) + " exceeds threshold; failing prompts:" +
                    failing_ids.str());
    }
    if (n_failed > 0) {
        // Keep only successes; ids of failures were reported above threshold.
        std::vector<QualityAnnotation> kept;
        kept.reserve(corpus.size() - n_failed);
        for (size_t i = 0; i < corpus.size(); ++i)
            if (!failed[i]) kept.push_back(std::move(set.annotations[i]));
        set.annotations = std::move(kept);
    }
    return set;
}

const QualityAnnotation* AnnotationSet::find(const std::string& prompt_id) const {
    for (const auto& a : annotations)
        if (a.prompt_id == prompt_id) return &a;
    return nullptr;
}

int AnnotationSet::score_of(const std::string& prompt_id) const {
    const QualityAnnotation* a = find(prompt_id);
    if (!a) throw Error("no annotation for prompt " + prompt_id);
    return a->score;
}

double cross_validate(const std::vector<std::string>& prompt_ids,
                      const std::vector<AnnotationSet>& voters, const AnnotationSet& reference,
                      int retain_threshold) {
    if (voters.size() < 3) throw PreconditionError("cross_validate: need at least 3 vote annotators");
    if (voters.size() % 2 == 0)
        throw PreconditionError("cross_validate: need an odd number of vote annotators");
    if (prompt_ids.empty()) throw PreconditionError("cross_validate: empty prompt sample");

    size_t agree = 0;
    for (const auto& id : prompt_ids) {
        // Majority label per criterion.
        int majority_score = 0;
        for (int c = 1; c <= 7; ++c) {
            size_t votes = 0;
            for (const auto& v : voters) {
                const QualityAnnotation* a = v.find(id);
                if (!a) throw Error("cross_validate: voter missing annotation for " + id);
                if (a->satisfied.count(c)) ++votes;
            }
            if (votes * 2 > voters.size()) ++majority_score;
        }
        const QualityAnnotation* ref = reference.find(id);
        if (!ref) throw Error("cross_validate: reference missing annotation for " + id);
        bool ref_retains = ref->score >= retain_threshold;
        bool majority_retains = majority_score >= retain_threshold;
        if (ref_retains == majority_retains) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(prompt_ids.size());
}

void write_annotations_file(const std::string& path, const AnnotationSet& set) {
    std::vector<Json> rows;
    rows.reserve(set.annotations.size());
    for (const auto& a : set.annotations) rows.push_back(a.to_json());
    write_jsonl_file(path, rows);
}

AnnotationSet read_annotations_file(const std::string& path) {
    AnnotationSet set;
    for (const auto& j : read_jsonl_file(path)) {
        set.annotations.push_back(QualityAnnotation::from_json(j));
        if (set.annotator_model.empty()) set.annotator_model = set.annotations.back().annotator_model;
    }
    return set;
}

}  // namespace benchkit
