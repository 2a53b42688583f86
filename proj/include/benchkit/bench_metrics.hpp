#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "benchkit/annotator.hpp"
#include "benchkit/judge_harness.hpp"
#include "benchkit/rating_engine.hpp"

namespace benchkit {

// Per-model outcome of running a benchmark: point score with a confidence
// interval, plus bootstrap distribution stats. `samples` may be empty when
// only summary numbers are available (e.g. a reference leaderboard).
struct ModelScore {
    double score = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double boot_mean = 0.0;
    double boot_std = 0.0;
    std::vector<double> samples;  // shared bootstrap rounds, may be empty
};

struct BenchmarkResult {
    std::string name;
    std::map<std::string, ModelScore> scores;

    static BenchmarkResult from_rating_set(const RatingSet& ratings, const std::string& name);
    static BenchmarkResult from_samples_file(const std::string& path, const std::string& name);
};

// External ranking consumed as ground truth (rank 1 = best). CIs are
// optional; entries without one are treated as zero-width intervals at
// their score (a point ranking separates every strictly ordered pair).
struct ReferenceEntry {
    std::string model;
    int rank = 0;
    std::optional<double> score;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
};

struct ReferenceRanking {
    std::string source;
    std::vector<ReferenceEntry> entries;

    std::vector<std::string> best_to_worst() const;
    BenchmarkResult as_result() const;
};

ReferenceRanking read_reference_file(const std::string& path);

// Percentage of unordered model pairs whose confidence intervals are
// disjoint. Needs >= 2 models.
double separability_percent(const BenchmarkResult& result);

// Mean over unordered pairs of the common model set: +1 when both
// benchmarks separate the pair and order it the same way, -1 when both
// separate it and disagree, 0 when either cannot separate it. Throws when
// fewer than 2 models are shared.
double agreement_with_ci(const BenchmarkResult& a, const BenchmarkResult& b);

enum class BrierMode { kNormal, kEmpirical };

// Mean squared error of the benchmark's pairwise order probabilities
// against the reference order. Normal mode: P(f*(i) < f*(j)) =
// Phi((mu_j - mu_i)/sqrt(sigma_i^2 + sigma_j^2)), with 0.5 when both
// deviations vanish and the means tie. Empirical mode uses shared bootstrap
// rounds, preserving correlation between models.
double pair_rank_brier(const BenchmarkResult& result,
                       const std::vector<std::string>& reference_best_to_worst,
                       BrierMode mode = BrierMode::kNormal);

// Standard normal CDF.
double normal_cdf(double x);

// Rank correlations between two paired value vectors. Spearman uses average
// ranks for ties; Kendall is the tau-b variant. Both return NaN when
// undefined (a constant vector).
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);
double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b);

struct RankCorrelations {
    double spearman = 0.0;
    double kendall = 0.0;
    int common_models = 0;
};

// Correlates result scores with the reference order over the common model
// set (needs >= 3 models).
RankCorrelations rank_correlations(const BenchmarkResult& result,
                                   const ReferenceRanking& reference);

struct QualityBin {
    int score_lo = 0;  // inclusive
    int score_hi = 0;  // inclusive
    size_t n_battles = 0;
    double win_rate = 0.5;
    double ci_low = 0.5;
    double ci_high = 0.5;
};

struct WinrateByQuality {
    std::string favored_model;  // higher overall mean outcome of the pair
    std::string other_model;
    std::vector<QualityBin> bins;
    std::vector<std::string> notes;  // e.g. omitted empty bins
};

// Groups battles of one model pair by their prompt quality score into bins
// of `bin_width` and reports the favored model's win-rate per bin with a
// percentile bootstrap CI. Every battle's question must be annotated.
WinrateByQuality winrate_by_quality(const std::vector<Battle>& battles,
                                    const AnnotationSet& annotations, int bin_width = 2,
                                    int rounds = 100, uint64_t seed = 0);

// The meta-metric table for one benchmark against a reference.
struct QualityReport {
    std::string benchmark;
    std::string reference;
    int common_models = 0;
    double confidence_agreement = 0.0;
    double separability = 0.0;
    double spearman = 0.0;
    double kendall = 0.0;
    double brier = 0.0;
    BrierMode brier_mode = BrierMode::kNormal;
};

QualityReport benchmark_quality_report(const BenchmarkResult& result,
                                       const ReferenceRanking& reference);
std::string render_quality_report(const QualityReport& report);
Json quality_report_json(const QualityReport& report);

}  // namespace benchkit
