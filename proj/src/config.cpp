#include "benchkit/config.hpp"

#include <cctype>
#include <filesystem>

#include "benchkit/errors.hpp"
#include "benchkit/hash.hpp"
#include "benchkit/jsonl.hpp"

namespace benchkit {

namespace fs = std::filesystem;

std::string model_slug(const std::string& model) {
    std::string out;
    out.reserve(model.size());
    for (char c : model)
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_');
    return out;
}

std::shared_ptr<Provider> RunConfig::make_provider() const {
    if (provider_kind == "stub") return std::make_shared<StubProvider>();
    if (provider_kind == "openai") return std::make_shared<HttpProvider>(http);
    throw ConfigError("unknown provider kind '" + provider_kind + "' (expected stub or openai)");
}

std::shared_ptr<Gateway> RunConfig::make_gateway() const {
    return std::make_shared<Gateway>(make_provider(), gateway);
}

std::string RunConfig::corpus_path() const { return workdir + "/corpus.jsonl"; }
std::string RunConfig::filter_report_path() const { return workdir + "/filter_report.json"; }
std::string RunConfig::annotations_path() const { return workdir + "/annotations.jsonl"; }
std::string RunConfig::clusters_path() const { return workdir + "/clusters.jsonl"; }
std::string RunConfig::benchmark_path() const { return workdir + "/benchmark.jsonl"; }
std::string RunConfig::answers_path(const std::string& model) const {
    return workdir + "/answers/" + model_slug(model) + ".jsonl";
}
std::string RunConfig::battles_path(const std::string& candidate, const std::string& judge) const {
    return workdir + "/battles/" + model_slug(candidate) + "__vs__" + model_slug(baseline_model) +
           "__" + model_slug(judge) + ".jsonl";
}
std::string RunConfig::leaderboard_path() const { return workdir + "/leaderboard.txt"; }
std::string RunConfig::ratings_table_path() const { return workdir + "/ratings.jsonl"; }
std::string RunConfig::samples_path() const { return workdir + "/samples.json"; }
std::string RunConfig::quality_report_path(bool json) const {
    return workdir + (json ? "/quality_report.json" : "/quality_report.txt");
}
std::string RunConfig::report_path() const { return workdir + "/report.txt"; }
std::string RunConfig::winrate_by_quality_path() const {
    return workdir + "/winrate_by_quality.tsv";
}
std::string RunConfig::manifest_path(const std::string& stage) const {
    return workdir + "/manifests/" + stage + ".manifest.json";
}

RunConfig load_config(const std::string& path) {
    std::string raw = read_text_file(path);
    Json j = Json::parse(raw, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config " + path + " is not valid JSON");

    RunConfig c;
    c.config_checksum = fnv1a64_hex(raw);

    if (j.contains("provider")) {
        const Json& p = j["provider"];
        c.provider_kind = p.value("kind", c.provider_kind);
        c.http.base_url = p.value("base_url", c.http.base_url);
        c.http.api_key_env = p.value("api_key_env", c.http.api_key_env);
        c.http.timeout_seconds = p.value("timeout_seconds", c.http.timeout_seconds);
    }
    if (j.contains("gateway")) {
        const Json& g = j["gateway"];
        c.gateway.cache_dir = g.value("cache_dir", c.gateway.cache_dir);
        c.gateway.max_attempts = g.value("max_attempts", c.gateway.max_attempts);
        c.gateway.backoff_base_ms = g.value("backoff_base_ms", c.gateway.backoff_base_ms);
        c.gateway.max_in_flight = g.value("max_in_flight", c.gateway.max_in_flight);
        c.gateway.embed_batch_limit = g.value("embed_batch_limit", c.gateway.embed_batch_limit);
    }
    if (j.contains("models")) {
        const Json& m = j["models"];
        c.annotator_model = m.value("annotator", c.annotator_model);
        c.embedding_model = m.value("embedding", c.embedding_model);
        c.naming_model = m.value("naming", c.naming_model);
        if (m.contains("judges")) c.judge_models = m["judges"].get<std::vector<std::string>>();
        c.baseline_model = m.value("baseline", c.baseline_model);
        if (m.contains("candidates"))
            c.candidate_models = m["candidates"].get<std::vector<std::string>>();
    }
    if (j.contains("filters")) {
        const Json& f = j["filters"];
        c.filters.drop_duplicates = f.value("drop_duplicates", true);
        c.filters.drop_multiturn = f.value("drop_multiturn", true);
        c.filters.drop_non_english = f.value("drop_non_english", true);
    }
    if (j.contains("curation")) {
        const Json& q = j["curation"];
        c.bench.prompts_per_cluster = q.value("prompts_per_cluster", c.bench.prompts_per_cluster);
        c.bench.clusters_to_sample = q.value("clusters_to_sample", c.bench.clusters_to_sample);
        c.bench.prompt_score_min = q.value("prompt_score_min", c.bench.prompt_score_min);
        c.bench.cluster_mean_min = q.value("cluster_mean_min", c.bench.cluster_mean_min);
        c.clustering.distance_threshold =
            q.value("distance_threshold", c.clustering.distance_threshold);
        c.clustering.min_cluster_size = q.value("min_cluster_size", c.clustering.min_cluster_size);
        c.reduce_dim = q.value("reduce_dim", c.reduce_dim);
        c.name_topic_clusters = q.value("name_clusters", c.name_topic_clusters);
        c.max_annotation_failure_fraction =
            q.value("max_failure_fraction", c.max_annotation_failure_fraction);
    }
    if (j.contains("rating")) {
        const Json& r = j["rating"];
        c.bootstrap_rounds = r.value("rounds", c.bootstrap_rounds);
        c.seed = r.value("seed", c.seed);
        c.style_control = r.value("style_control", c.style_control);
        c.likert.strong = r.value("strong_weight", c.likert.strong);
        c.likert.tie = r.value("tie_weight", c.likert.tie);
        c.l2_penalty = r.value("l2_penalty", c.l2_penalty);
    }
    if (j.contains("paths")) {
        const Json& p = j["paths"];
        c.workdir = p.value("workdir", c.workdir);
        c.raw_input = p.value("raw", c.raw_input);
        c.reference_path = p.value("reference", c.reference_path);
    }
    c.bench.seed = c.seed;

    // Resolve relative paths against the config file's directory so runs do
    // not depend on the invoking cwd.
    fs::path base = fs::path(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && !fs::path(p).is_absolute()) p = (base / p).string();
    };
    resolve(c.workdir);
    resolve(c.raw_input);
    resolve(c.reference_path);
    resolve(c.gateway.cache_dir);
    return c;
}

}  // namespace benchkit
