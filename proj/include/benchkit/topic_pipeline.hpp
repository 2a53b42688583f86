#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "benchkit/annotator.hpp"
#include "benchkit/corpus.hpp"
#include "benchkit/llm_gateway.hpp"

namespace benchkit {

// ---------------------------------------------------------------------------
// Reduction (principal-components projection; the default backend of the
// pluggable reduction stage).

struct ReducedEmbedding {
    Eigen::MatrixXd points;        // n x target_dim, row order preserved
    Eigen::VectorXd eigenvalues;   // all covariance eigenvalues, descending
    bool degenerate = false;       // all-identical input batch

    // Fraction of total variance captured by the kept components.
    double explained_variance_ratio() const;
};

// Centers the batch and projects onto the top principal components.
// Requires at least target_dim + 1 points. A zero-variance batch yields an
// all-zero projection flagged degenerate.
ReducedEmbedding reduce_dimensions(const Eigen::MatrixXd& points, int target_dim);

// ---------------------------------------------------------------------------
// Clustering (average-linkage agglomerative on cosine distance; the default
// backend of the pluggable clustering stage).

struct TopicCluster {
    int cluster_id = 0;
    std::vector<std::string> member_ids;  // sorted by id
    double mean_score = 0.0;              // attach_scores fills this
    bool has_mean_score = false;
    std::optional<std::string> name;

    Json to_json() const;
    static TopicCluster from_json(const Json& j);
};

struct ClusterConfig {
    double distance_threshold = 0.3;  // merge while linkage distance < this
    int min_cluster_size = 3;         // smaller groups become noise
};

struct ClusterOutcome {
    std::vector<TopicCluster> clusters;  // ordered by size desc, then first id
    std::vector<std::string> noise_ids;  // sorted
};

// Deterministic given the input *set*: points are put in a canonical order
// before linkage so tie-breaks do not depend on input order. ids and point
// rows correspond positionally.
ClusterOutcome cluster_topics(const std::vector<std::string>& ids, const Eigen::MatrixXd& points,
                              const ClusterConfig& config = {});

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// ---------------------------------------------------------------------------
// Cluster enrichment

// Names each cluster from a sample of at most 10 member prompts. Failures
// and empty replies leave the name unset; nothing here is fatal.
void name_clusters(std::vector<TopicCluster>& clusters, const Corpus& corpus,
                   const std::string& naming_model, Gateway& gateway);

// mean_score = arithmetic mean of member scores, computed over *all* members
// (before any prompt-level filtering). Throws when a member lacks an
// annotation, naming the prompt id.
void attach_scores(std::vector<TopicCluster>& clusters, const AnnotationSet& annotations);

// ---------------------------------------------------------------------------
// Benchmark assembly

struct BenchmarkSpec {
    int prompts_per_cluster = 2;
    int clusters_to_sample = 250;
    int prompt_score_min = 6;
    double cluster_mean_min = 5.0;
    uint64_t seed = 0;
};

struct BenchmarkPrompt {
    std::string question_id;
    std::string text;
    int cluster_id = 0;
    std::optional<std::string> cluster_name;
    int quality_score = 0;
};

struct Benchmark {
    std::vector<BenchmarkPrompt> prompts;

    // Stable content hash; battle files carry it so only results produced
    // from the same benchmark can be pooled.
    std::string checksum() const;
};

struct BuildOutcome {
    Benchmark benchmark;
    std::vector<std::string> warnings;  // e.g. clusters dropped for thin qualifying pools
};

// Discards clusters below cluster_mean_min, then prompts below
// prompt_score_min inside the survivors, then uniformly samples
// clusters_to_sample clusters and prompts_per_cluster prompts per cluster
// (both seeded). Throws when fewer clusters qualify than requested,
// reporting the shortfall.
BuildOutcome build_benchmark(const std::vector<TopicCluster>& clusters, const Corpus& corpus,
                             const AnnotationSet& annotations, const BenchmarkSpec& spec);

// Embeds corpus texts through the gateway into an n x d matrix.
Eigen::MatrixXd embed_corpus(const Corpus& corpus, const std::string& embedding_model,
                             Gateway& gateway);

void write_benchmark_file(const std::string& path, const Benchmark& benchmark);
Benchmark read_benchmark_file(const std::string& path);
void write_clusters_file(const std::string& path, const std::vector<TopicCluster>& clusters,
                         const std::vector<std::string>& noise_ids);
std::vector<TopicCluster> read_clusters_file(const std::string& path);

}  // namespace benchkit
