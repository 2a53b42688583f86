#pragma once

#include <array>
#include <functional>
#include <string>

#include "benchkit/jsonl.hpp"

namespace benchkit {

// The four style covariates of an answer: length plus markdown usage,
// expressed as element counts per 100 tokens.
struct StyleFeatures {
    long token_count = 0;
    double header_density = 0.0;  // 100 * headers / tokens
    double bold_density = 0.0;
    double list_density = 0.0;

    // Order used wherever features become a vector: length first.
    std::array<double, 4> as_array() const {
        return {static_cast<double>(token_count), header_density, bold_density, list_density};
    }
    static constexpr int kFeatureCount = 4;
    static const char* feature_name(int i);

    Json to_json() const;
    static StyleFeatures from_json(const Json& j);
};

// Raw markdown element counts, before densities.
struct MarkdownCounts {
    long headers = 0;  // line-leading #{1,6} followed by a space
    long bold = 0;     // same-line, non-overlapping **..** or __..__ spans
    long list_items = 0;  // lines whose first non-blank is -, *, + or digits. then a space
};

// Counts markdown elements. Content inside fenced code blocks (``` or ~~~)
// is inert. Unterminated bold markers do not count.
MarkdownCounts count_markdown(const std::string& text);

// Returns the number of tokens in a text. Default counts
// whitespace-delimited tokens; supply a model tokenizer for fidelity.
// Swapping tokenizers rescales densities but never changes element counts.
using Tokenizer = std::function<long(const std::string&)>;
long whitespace_token_count(const std::string& text);

StyleFeatures extract_style(const std::string& text, const Tokenizer& tokenizer = whitespace_token_count);

}  // namespace benchkit
