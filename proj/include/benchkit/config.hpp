#pragma once

#include <memory>
#include <string>
#include <vector>

#include "benchkit/corpus.hpp"
#include "benchkit/llm_gateway.hpp"
#include "benchkit/rating_engine.hpp"
#include "benchkit/topic_pipeline.hpp"

namespace benchkit {

// Everything a pipeline run needs, loaded from one JSON config file.
// Credentials never live in the config, only the names of environment
// variables holding them.
struct RunConfig {
    // provider
    std::string provider_kind = "stub";  // "stub" or "openai"
    HttpProviderConfig http;
    GatewayConfig gateway;

    // models
    std::string annotator_model = "quality-annotator";
    std::string embedding_model = "text-embedder";
    std::string naming_model = "topic-namer";
    std::vector<std::string> judge_models;
    std::string baseline_model = "gpt-4-0314";
    std::vector<std::string> candidate_models;

    // curation
    FilterRules filters;
    BenchmarkSpec bench;
    ClusterConfig clustering;
    int reduce_dim = 8;
    bool name_topic_clusters = true;
    double max_annotation_failure_fraction = 0.05;

    // rating
    int bootstrap_rounds = 100;
    uint64_t seed = 0;
    bool style_control = false;
    LikertWeights likert;
    double l2_penalty = 1e-4;

    // io
    std::string workdir = "run";
    std::string raw_input;       // ingest source
    std::string reference_path;  // reference ranking for meta

    // checksum of the config file bytes, for manifests
    std::string config_checksum;

    std::shared_ptr<Provider> make_provider() const;
    std::shared_ptr<Gateway> make_gateway() const;

    // Artifact locations inside workdir.
    std::string corpus_path() const;
    std::string filter_report_path() const;
    std::string annotations_path() const;
    std::string clusters_path() const;
    std::string benchmark_path() const;
    std::string answers_path(const std::string& model) const;
    std::string battles_path(const std::string& candidate, const std::string& judge) const;
    std::string leaderboard_path() const;
    std::string ratings_table_path() const;
    std::string samples_path() const;
    std::string quality_report_path(bool json) const;
    std::string report_path() const;
    std::string winrate_by_quality_path() const;
    std::string manifest_path(const std::string& stage) const;
};

RunConfig load_config(const std::string& path);

// Filesystem-safe slug for a model id.
std::string model_slug(const std::string& model);

}  // namespace benchkit
