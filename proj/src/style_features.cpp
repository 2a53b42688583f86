#include "benchkit/style_features.hpp"

#include <cctype>
#include <sstream>

namespace benchkit {

const char* StyleFeatures::feature_name(int i) {
    static const char* names[kFeatureCount] = {"token_count", "header_density", "bold_density",
                                               "list_density"};
    return names[i];
}

Json StyleFeatures::to_json() const {
    return Json{{"token_count", token_count},
                {"header_density", header_density},
                {"bold_density", bold_density},
                {"list_density", list_density}};
}

StyleFeatures StyleFeatures::from_json(const Json& j) {
    StyleFeatures f;
    f.token_count = j.value("token_count", 0L);
    f.header_density = j.value("header_density", 0.0);
    f.bold_density = j.value("bold_density", 0.0);
    f.list_density = j.value("list_density", 0.0);
    return f;
}

long whitespace_token_count(const std::string& text) {
    long n = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++n;
        }
    }
    return n;
}

namespace {

bool is_fence(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    return line.compare(i, 3, "```") == 0 || line.compare(i, 3, "~~~") == 0;
}

bool is_header(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && line[i] == '#') ++i;
    return i >= 1 && i <= 6 && i < line.size() && line[i] == ' ';
}

bool is_list_item(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) return false;
    char c = line[i];
    if (c == '-' || c == '*' || c == '+') return i + 1 < line.size() && line[i + 1] == ' ';
    if (std::isdigit(static_cast<unsigned char>(c))) {
        size_t j = i;
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        return j < line.size() && line[j] == '.' && j + 1 < line.size() && line[j + 1] == ' ';
    }
    return false;
}

// Non-overlapping delimiter pairs on one line; a span needs at least one
// character between its delimiters.
long count_spans(const std::string& line, const std::string& delim) {
    long n = 0;
    size_t pos = 0;
    for (;;) {
        size_t open = line.find(delim, pos);
        if (open == std::string::npos) break;
        size_t close = line.find(delim, open + delim.size());
        if (close == std::string::npos) break;
        if (close > open + delim.size()) {
            ++n;
            pos = close + delim.size();
        } else {
            // empty span ("****"): skip the first delimiter only
            pos = open + delim.size();
        }
    }
    return n;
}

}  // namespace

MarkdownCounts count_markdown(const std::string& text) {
    MarkdownCounts counts;
    std::istringstream in(text);
    std::string line;
    bool in_fence = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_fence(line)) {
            in_fence = !in_fence;
            continue;
        }
        if (in_fence) continue;
        if (is_header(line)) ++counts.headers;
        if (is_list_item(line)) ++counts.list_items;
        counts.bold += count_spans(line, "**") + count_spans(line, "__");
    }
    return counts;
}

StyleFeatures extract_style(const std::string& text, const Tokenizer& tokenizer) {
    StyleFeatures f;
    f.token_count = tokenizer(text);
    MarkdownCounts c = count_markdown(text);
    if (f.token_count > 0) {
        double t = static_cast<double>(f.token_count);
        f.header_density = 100.0 * static_cast<double>(c.headers) / t;
        f.bold_density = 100.0 * static_cast<double>(c.bold) / t;
        f.list_density = 100.0 * static_cast<double>(c.list_items) / t;
    }
    return f;
}

}  // namespace benchkit
