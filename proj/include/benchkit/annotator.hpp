#pragma once

#include <set>
#include <string>
#include <vector>

#include "benchkit/corpus.hpp"
#include "benchkit/llm_gateway.hpp"

namespace benchkit {

// Scoring outcome for one prompt: which of the seven key qualities hold.
struct QualityAnnotation {
    std::string prompt_id;
    std::set<int> satisfied;  // subset of {1..7}
    int score = 0;            // |satisfied|
    std::string annotator_model;
    std::string raw_response;

    Json to_json() const;
    static QualityAnnotation from_json(const Json& j);
};

// Renders "Criteria Satisfied: [1, 2, 4]" for a criteria set.
std::string render_criteria(const std::set<int>& satisfied);

// Grammar: "Criteria Satisfied:" then a bracketed, comma-separated integer
// list; whitespace-tolerant. The last occurrence in the response is
// authoritative (annotators often restate). Throws AnnotationParseError when
// no occurrence exists, the last one is malformed, or a number falls outside
// 1..7.
std::set<int> parse_criteria(const std::string& response);

struct AnnotatorOptions {
    double temperature = 0.0;
    int max_tokens = 2048;
    double max_failure_fraction = 0.05;  // abort threshold for annotate_corpus
};

QualityAnnotation annotate(const PromptRecord& prompt, const std::string& annotator_model,
                           Gateway& gateway, const AnnotatorOptions& opts = {});

struct AnnotationSet {
    std::vector<QualityAnnotation> annotations;
    std::string annotator_model;

    const QualityAnnotation* find(const std::string& prompt_id) const;
    int score_of(const std::string& prompt_id) const;  // throws if missing
};

// Annotates every prompt, fanning out through the gateway. Individual
// failures are collected; if more than max_failure_fraction of the corpus
// fails, throws with a summary listing the failing ids. Results are ordered
// by corpus order regardless of completion order.
AnnotationSet annotate_corpus(const Corpus& corpus, const std::string& annotator_model,
                              Gateway& gateway, const AnnotatorOptions& opts = {});

// Prompt-level agreement between a reference annotator and the majority
// vote of >= 3 (odd) vote annotators. Ground truth per prompt: each
// criterion is satisfied when a majority of voters says so. Agreement is
// the fraction of prompts where the reference's retain/discard decision
// (score >= retain_threshold) matches the majority label's decision.
double cross_validate(const std::vector<std::string>& prompt_ids,
                      const std::vector<AnnotationSet>& voters, const AnnotationSet& reference,
                      int retain_threshold = 6);

void write_annotations_file(const std::string& path, const AnnotationSet& set);
AnnotationSet read_annotations_file(const std::string& path);

}  // namespace benchkit
