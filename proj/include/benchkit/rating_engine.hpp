#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "benchkit/judge_harness.hpp"

namespace benchkit {

// Numerically stable logistic function; sigmoid(0) is exactly 0.5.
double sigmoid(double x);
// log(1 + exp(x)) without overflow.
double softplus(double x);

// Verdict-to-outcome mapping. Strong verdicts count like `strong` battles;
// ties enter as a soft 0.5 outcome.
struct LikertWeights {
    double strong = 3.0;
    double slight = 1.0;
    double tie = 1.0;
};

// One battle as a regression row: exactly one +1 (first position) and one
// -1 (second position) in the model indicator, outcome 1 when the first
// position won, plus optional standardized style-difference covariates.
struct DesignRow {
    int first_model = 0;
    int second_model = 0;
    double outcome = 0.5;
    double weight = 1.0;
    Eigen::VectorXd style;  // empty unless style control is on
};

struct DesignMatrix {
    std::vector<std::string> models;  // sorted; index space for rows
    int baseline_index = 0;
    int style_dim = 0;
    std::vector<DesignRow> rows;
};

// Raw per-battle style differences r = (f_first - f_second)/(f_first +
// f_second) per feature, defined 0 when both sides are 0. One row per
// battle, one column per style feature.
Eigen::MatrixXd raw_style_differences(const std::vector<Battle>& battles);

struct StyleNormalization {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
    std::vector<int> zero_variance_columns;  // zeroed out, with warning
};

// Standardizes each column to mean 0, variance 1 over the battle set.
// Zero-variance columns become all-zeros and are reported.
Eigen::MatrixXd normalize_style(const Eigen::MatrixXd& raw, StyleNormalization* info = nullptr);

DesignMatrix battles_to_rows(const std::vector<Battle>& battles, const std::string& baseline_model,
                             bool style_control, const LikertWeights& weights = {});

struct BtOptions {
    double l2_penalty = 1e-4;    // keeps separated data finite
    double gradient_tol = 1e-10;
    int max_iterations = 10000;
};

struct BtFit {
    Eigen::VectorXd coefficients;        // per model (DesignMatrix order); baseline exactly 0
    Eigen::VectorXd style_coefficients;  // per style feature
    int iterations = 0;
    double gradient_norm = 0.0;
};

// Minimizes the weighted binary-cross-entropy (normalized by total weight)
// plus an L2 penalty on all coefficients, with the baseline model anchored
// at 0. Newton iterations with step halving; throws ConvergenceError with
// diagnostics if the gradient tolerance is not reached.
BtFit fit_bt(const DesignMatrix& dm, const BtOptions& opts = {});

struct ModelRating {
    std::string model;
    double coefficient = 0.0;  // baseline anchored at 0
    double win_rate = 0.5;     // sigmoid(coefficient), vs baseline
    double ci_low = 0.5;
    double ci_high = 0.5;
    long n_battles = 0;
    int skipped_rounds = 0;  // bootstrap rounds where the model was absent
};

struct RatingSet {
    std::vector<ModelRating> ratings;  // DesignMatrix model order
    std::string baseline_model;
    int rounds = 0;
    uint64_t seed = 0;
    bool style_control = false;
    std::vector<std::string> models;
    // rounds x models; NaN where a model was absent from the resample.
    Eigen::MatrixXd samples;

    const ModelRating* find(const std::string& model) const;
};

struct BootstrapOptions {
    int rounds = 100;
    uint64_t seed = 0;
    bool style_control = false;
    LikertWeights weights;
    BtOptions fit;
};

// Full-data fit for the point estimates, then `rounds` resamples of the
// battles with replacement, refit each (style standardization recomputed per
// resample), percentile 2.5/97.5 confidence intervals.
RatingSet bootstrap_ratings(const std::vector<Battle>& battles, const std::string& baseline_model,
                            const BootstrapOptions& opts = {});

// Linear-interpolation percentile of a sample (q in [0,1]).
double percentile(std::vector<double> values, double q);

struct LeaderboardRow {
    std::string model;
    double win_rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    long n_battles = 0;
    double avg_tokens = 0.0;
};

// Descending by win-rate, ties broken alphabetically. avg_tokens comes from
// the style features stored on the battles.
std::vector<LeaderboardRow> leaderboard(const RatingSet& ratings,
                                        const std::vector<Battle>& battles);
std::string render_leaderboard(const std::vector<LeaderboardRow>& rows);

void write_ratings_table(const std::string& path, const std::vector<LeaderboardRow>& rows);
// Machine-readable per-round win-rate samples (consumed by bench metrics).
void write_samples_file(const std::string& path, const RatingSet& ratings);

}  // namespace benchkit
