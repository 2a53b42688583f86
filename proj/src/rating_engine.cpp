#include "benchkit/rating_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "benchkit/errors.hpp"
#include "benchkit/rng.hpp"

namespace benchkit {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

Eigen::MatrixXd raw_style_differences(const std::vector<Battle>& battles) {
    Eigen::MatrixXd raw(battles.size(), StyleFeatures::kFeatureCount);
    for (size_t i = 0; i < battles.size(); ++i) {
        auto f = battles[i].first_style.as_array();
        auto s = battles[i].second_style.as_array();
        for (int k = 0; k < StyleFeatures::kFeatureCount; ++k) {
            double denom = f[k] + s[k];
            raw(i, k) = (denom == 0.0) ? 0.0 : (f[k] - s[k]) / denom;
        }
    }
    return raw;
}

Eigen::MatrixXd normalize_style(const Eigen::MatrixXd& raw, StyleNormalization* info) {
    const Eigen::Index n = raw.rows();
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, raw.cols());
    StyleNormalization norm;
    norm.mean = Eigen::VectorXd::Zero(raw.cols());
    norm.stddev = Eigen::VectorXd::Zero(raw.cols());
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        double mean = raw.col(c).mean();
        double var = (raw.col(c).array() - mean).square().sum() / static_cast<double>(n);
        norm.mean(c) = mean;
        if (var <= 0.0) {
            norm.zero_variance_columns.push_back(static_cast<int>(c));
            continue;  // column stays zero
        }
        double sd = std::sqrt(var);
        norm.stddev(c) = sd;
        z.col(c) = (raw.col(c).array() - mean) / sd;
    }
    if (info) *info = std::move(norm);
    return z;
}

namespace {

// Array-of-columns form of the design; what the solver actually works on.
// DesignRow remains the documented row shape, this is its packed mirror.
struct CompactDesign {
    int n_models = 0;
    int baseline_index = 0;
    int style_dim = 0;
    Eigen::ArrayXi first;    // model index presented first
    Eigen::ArrayXi second;   // model index presented second
    Eigen::ArrayXd outcome;  // 1 first won, 0.5 tie, 0 second won
    Eigen::ArrayXd weight;
    Eigen::MatrixXd style;   // n x style_dim standardized differences
};

CompactDesign compact_from_rows(const DesignMatrix& dm) {
    CompactDesign cd;
    cd.n_models = static_cast<int>(dm.models.size());
    cd.baseline_index = dm.baseline_index;
    cd.style_dim = dm.style_dim;
    const Eigen::Index n = static_cast<Eigen::Index>(dm.rows.size());
    cd.first.resize(n);
    cd.second.resize(n);
    cd.outcome.resize(n);
    cd.weight.resize(n);
    cd.style.resize(n, dm.style_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const DesignRow& row = dm.rows[static_cast<size_t>(i)];
        cd.first(i) = row.first_model;
        cd.second(i) = row.second_model;
        cd.outcome(i) = row.outcome;
        cd.weight(i) = row.weight;
        for (int s = 0; s < dm.style_dim; ++s) cd.style(i, s) = row.style(s);
    }
    return cd;
}

struct CompactFit {
    Eigen::VectorXd theta;  // (n_models - 1) model params + style params
    int iterations = 0;
    double gradient_norm = 0.0;
};

// Weighted binary cross-entropy (normalized by total weight) plus an L2
// penalty, baseline anchored at 0, full Newton with step halving. The loss
// terms are written symmetrically so that swapping positions (negated
// indicator, flipped outcome, negated covariates) yields the same numbers.
CompactFit fit_compact(const CompactDesign& cd, const BtOptions& opts) {
    const Eigen::Index n = cd.first.size();
    if (cd.n_models < 1) throw PreconditionError("fit_bt: no models");
    if (n == 0) throw PreconditionError("fit_bt: no rows");

    const int n_params = cd.n_models - 1 + cd.style_dim;
    auto param_of_model = [&](int m) {
        if (m == cd.baseline_index) return -1;
        return m < cd.baseline_index ? m : m - 1;
    };
    // Param index per row endpoint, resolved once.
    Eigen::ArrayXi pfirst(n), psecond(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        pfirst(i) = param_of_model(cd.first(i));
        psecond(i) = param_of_model(cd.second(i));
    }
    const double wsum = cd.weight.sum();

    auto margins = [&](const Eigen::VectorXd& theta, Eigen::ArrayXd& eta) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double e = 0.0;
            if (pfirst(i) >= 0) e += theta(pfirst(i));
            if (psecond(i) >= 0) e -= theta(psecond(i));
            eta(i) = e;
        }
        if (cd.style_dim > 0)
            eta += (cd.style * theta.tail(cd.style_dim)).array();
    };
    auto loss_of = [&](const Eigen::VectorXd& theta, Eigen::ArrayXd& eta) {
        margins(theta, eta);
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            total += cd.weight(i) * (cd.outcome(i) * softplus(-eta(i)) +
                                     (1.0 - cd.outcome(i)) * softplus(eta(i)));
        }
        return total / wsum + opts.l2_penalty * theta.squaredNorm();
    };

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n_params);
    Eigen::ArrayXd eta(n);
    Eigen::VectorXd grad(n_params);
    Eigen::MatrixXd hess(n_params, n_params);

    double current_loss = loss_of(theta, eta);
    int iter = 0;
    double gnorm = std::numeric_limits<double>::infinity();
    for (; iter < opts.max_iterations; ++iter) {
        margins(theta, eta);
        grad.setZero();
        hess.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            double p = sigmoid(eta(i));
            double resid = cd.weight(i) * (p - cd.outcome(i));
            double curv = cd.weight(i) * p * (1.0 - p);
            int a = pfirst(i), b = psecond(i);
            if (a >= 0) {
                grad(a) += resid;
                hess(a, a) += curv;
            }
            if (b >= 0) {
                grad(b) -= resid;
                hess(b, b) += curv;
                if (a >= 0) {
                    hess(a, b) -= curv;
                    hess(b, a) -= curv;
                }
            }
            for (int s = 0; s < cd.style_dim; ++s) {
                double zs = cd.style(i, s);
                if (zs == 0.0) continue;
                int q = cd.n_models - 1 + s;
                grad(q) += resid * zs;
                hess(q, q) += curv * zs * zs;
                if (a >= 0) {
                    hess(a, q) += curv * zs;
                    hess(q, a) += curv * zs;
                }
                if (b >= 0) {
                    hess(b, q) -= curv * zs;
                    hess(q, b) -= curv * zs;
                }
                for (int s2 = s + 1; s2 < cd.style_dim; ++s2) {
                    double cross = curv * zs * cd.style(i, s2);
                    hess(q, cd.n_models - 1 + s2) += cross;
                    hess(cd.n_models - 1 + s2, q) += cross;
                }
            }
        }
        grad /= wsum;
        hess /= wsum;
        grad += 2.0 * opts.l2_penalty * theta;
        hess.diagonal().array() += 2.0 * opts.l2_penalty;

        gnorm = grad.norm();
        if (gnorm < opts.gradient_tol) break;

        Eigen::VectorXd step = hess.ldlt().solve(grad);
        double scale = 1.0;
        Eigen::VectorXd candidate;
        double next_loss;
        for (int h = 0;; ++h) {
            candidate = theta - scale * step;
            next_loss = loss_of(candidate, eta);
            if (next_loss <= current_loss + 1e-15) break;
            scale *= 0.5;
            if (h >= 60) break;  // step has underflowed; the gradient check decides
        }
        theta = candidate;
        current_loss = next_loss;
    }
    if (gnorm >= opts.gradient_tol && gnorm >= 1e-8) {
        std::ostringstream msg;
        msg << "fit_bt: no convergence after " << iter << " iterations (|grad| = " << gnorm
            << ", loss = " << current_loss << ", params = " << n_params << ", rows = " << n << ")";
        throw ConvergenceError(msg.str());
    }
    return {std::move(theta), iter, gnorm};
}

BtFit unpack_fit(const CompactDesign& cd, CompactFit&& cf) {
    BtFit fit;
    fit.coefficients = Eigen::VectorXd::Zero(cd.n_models);
    for (int m = 0; m < cd.n_models; ++m) {
        if (m == cd.baseline_index) continue;
        int p = m < cd.baseline_index ? m : m - 1;
        fit.coefficients(m) = cf.theta(p);
    }
    fit.style_coefficients = cf.theta.tail(cd.style_dim);
    fit.iterations = cf.iterations;
    fit.gradient_norm = cf.gradient_norm;
    return fit;
}

}  // namespace

DesignMatrix battles_to_rows(const std::vector<Battle>& battles, const std::string& baseline_model,
                             bool style_control, const LikertWeights& weights) {
    DesignMatrix dm;
    std::set<std::string> names;
    for (const auto& b : battles) {
        names.insert(b.first_model);
        names.insert(b.second_model);
    }
    names.insert(baseline_model);
    dm.models.assign(names.begin(), names.end());
    dm.baseline_index = static_cast<int>(
        std::find(dm.models.begin(), dm.models.end(), baseline_model) - dm.models.begin());

    std::map<std::string, int> index;
    for (size_t i = 0; i < dm.models.size(); ++i) index[dm.models[i]] = static_cast<int>(i);

    Eigen::MatrixXd z;
    if (style_control && !battles.empty()) {
        z = normalize_style(raw_style_differences(battles));
        dm.style_dim = static_cast<int>(z.cols());
    }

    dm.rows.reserve(battles.size());
    for (size_t i = 0; i < battles.size(); ++i) {
        const Battle& b = battles[i];
        DesignRow row;
        row.first_model = index[b.first_model];
        row.second_model = index[b.second_model];
        switch (b.verdict) {
            case Verdict::A_MUCH_BETTER: row.outcome = 1.0; row.weight = weights.strong; break;
            case Verdict::A_BETTER:      row.outcome = 1.0; row.weight = weights.slight; break;
            case Verdict::TIE:           row.outcome = 0.5; row.weight = weights.tie;    break;
            case Verdict::B_BETTER:      row.outcome = 0.0; row.weight = weights.slight; break;
            case Verdict::B_MUCH_BETTER: row.outcome = 0.0; row.weight = weights.strong; break;
        }
        if (style_control) row.style = z.row(static_cast<Eigen::Index>(i));
        dm.rows.push_back(std::move(row));
    }
    return dm;
}

BtFit fit_bt(const DesignMatrix& dm, const BtOptions& opts) {
    if (dm.models.empty()) throw PreconditionError("fit_bt: no models");
    CompactDesign cd = compact_from_rows(dm);
    return unpack_fit(cd, fit_compact(cd, opts));
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    double pos = q * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

const ModelRating* RatingSet::find(const std::string& model) const {
    for (const auto& r : ratings)
        if (r.model == model) return &r;
    return nullptr;
}

RatingSet bootstrap_ratings(const std::vector<Battle>& battles, const std::string& baseline_model,
                            const BootstrapOptions& opts) {
    if (battles.empty()) throw PreconditionError("bootstrap_ratings: no battles");

    // Full-data fit for the point estimates.
    DesignMatrix full = battles_to_rows(battles, baseline_model, opts.style_control, opts.weights);
    BtFit point = fit_bt(full, opts.fit);

    // Packed base arrays; bootstrap rounds gather from these instead of
    // copying battle records.
    CompactDesign base = compact_from_rows(full);
    Eigen::MatrixXd raw;
    if (opts.style_control) raw = raw_style_differences(battles);

    const Eigen::Index n = base.first.size();
    const size_t M = full.models.size();

    RatingSet out;
    out.baseline_model = baseline_model;
    out.rounds = opts.rounds;
    out.seed = opts.seed;
    out.style_control = opts.style_control;
    out.models = full.models;
    out.samples = Eigen::MatrixXd::Constant(opts.rounds, static_cast<Eigen::Index>(M),
                                            std::numeric_limits<double>::quiet_NaN());

    CompactDesign round_design;
    round_design.n_models = base.n_models;
    round_design.baseline_index = base.baseline_index;
    round_design.style_dim = base.style_dim;
    round_design.first.resize(n);
    round_design.second.resize(n);
    round_design.outcome.resize(n);
    round_design.weight.resize(n);
    Eigen::MatrixXd round_raw(n, raw.cols());

    std::vector<char> present(M);
    for (int round = 0; round < opts.rounds; ++round) {
        Rng rng(derive_seed(opts.seed, static_cast<uint64_t>(round)));
        std::fill(present.begin(), present.end(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index k = static_cast<Eigen::Index>(rng.uniform_index(static_cast<size_t>(n)));
            round_design.first(i) = base.first(k);
            round_design.second(i) = base.second(k);
            round_design.outcome(i) = base.outcome(k);
            round_design.weight(i) = base.weight(k);
            if (opts.style_control) round_raw.row(i) = raw.row(k);
            present[static_cast<size_t>(base.first(k))] = 1;
            present[static_cast<size_t>(base.second(k))] = 1;
        }
        present[static_cast<size_t>(base.baseline_index)] = 1;
        // Standardization is part of the estimator, so it is refit on every
        // resample.
        if (opts.style_control) round_design.style = normalize_style(round_raw);

        CompactFit cf = fit_compact(round_design, opts.fit);
        for (size_t m = 0; m < M; ++m) {
            if (!present[m]) continue;
            double beta = 0.0;
            if (static_cast<int>(m) != base.baseline_index) {
                int p = static_cast<int>(m) < base.baseline_index ? static_cast<int>(m)
                                                                  : static_cast<int>(m) - 1;
                beta = cf.theta(p);
            }
            out.samples(round, static_cast<Eigen::Index>(m)) = sigmoid(beta);
        }
    }

    for (size_t m = 0; m < M; ++m) {
        ModelRating r;
        r.model = full.models[m];
        r.coefficient = point.coefficients(static_cast<Eigen::Index>(m));
        r.win_rate = sigmoid(r.coefficient);
        for (const auto& b : battles)
            if (b.first_model == r.model || b.second_model == r.model) ++r.n_battles;

        std::vector<double> samples;
        samples.reserve(opts.rounds);
        for (int round = 0; round < opts.rounds; ++round) {
            double v = out.samples(round, static_cast<Eigen::Index>(m));
            if (std::isnan(v))
                ++r.skipped_rounds;
            else
                samples.push_back(v);
        }
        if (!samples.empty()) {
            r.ci_low = percentile(samples, 0.025);
            r.ci_high = percentile(samples, 0.975);
        } else {
            r.ci_low = r.ci_high = r.win_rate;
        }
        out.ratings.push_back(std::move(r));
    }
    return out;
}

std::vector<LeaderboardRow> leaderboard(const RatingSet& ratings,
                                        const std::vector<Battle>& battles) {
    std::map<std::string, std::pair<double, long>> tokens;  // sum, count
    for (const auto& b : battles) {
        auto& f = tokens[b.first_model];
        f.first += static_cast<double>(b.first_style.token_count);
        f.second += 1;
        auto& s = tokens[b.second_model];
        s.first += static_cast<double>(b.second_style.token_count);
        s.second += 1;
    }

    std::vector<LeaderboardRow> rows;
    rows.reserve(ratings.ratings.size());
    for (const auto& r : ratings.ratings) {
        LeaderboardRow row;
        row.model = r.model;
        row.win_rate = r.win_rate;
        row.ci_low = r.ci_low;
        row.ci_high = r.ci_high;
        row.n_battles = r.n_battles;
        auto it = tokens.find(r.model);
        if (it != tokens.end() && it->second.second > 0)
            row.avg_tokens = it->second.first / static_cast<double>(it->second.second);
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
        if (a.win_rate != b.win_rate) return a.win_rate > b.win_rate;
        return a.model < b.model;
    });
    return rows;
}

std::string render_leaderboard(const std::vector<LeaderboardRow>& rows) {
    std::ostringstream out;
    size_t name_w = 5;
    for (const auto& r : rows) name_w = std::max(name_w, r.model.size());
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-*s  %9s  %16s  %9s  %10s\n", static_cast<int>(name_w),
                  "model", "win-rate", "95% CI", "battles", "avg tokens");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-*s  %8.1f%%  (%+6.1f, %+6.1f)  %9ld  %10.0f\n",
                      static_cast<int>(name_w), r.model.c_str(), 100.0 * r.win_rate,
                      100.0 * (r.ci_low - r.win_rate), 100.0 * (r.ci_high - r.win_rate),
                      r.n_battles, r.avg_tokens);
        out << buf;
    }
    return out.str();
}

void write_ratings_table(const std::string& path, const std::vector<LeaderboardRow>& rows) {
    std::vector<Json> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(Json{{"model", r.model},
                           {"win_rate", r.win_rate},
                           {"ci_low", r.ci_low},
                           {"ci_high", r.ci_high},
                           {"n_battles", r.n_battles},
                           {"avg_tokens", r.avg_tokens}});
    }
    write_jsonl_file(path, out);
}

void write_samples_file(const std::string& path, const RatingSet& ratings) {
    Json samples = Json::object();
    for (size_t m = 0; m < ratings.models.size(); ++m) {
        Json col = Json::array();
        for (int round = 0; round < ratings.rounds; ++round) {
            double v = ratings.samples(round, static_cast<Eigen::Index>(m));
            if (std::isnan(v))
                col.push_back(nullptr);
            else
                col.push_back(v);
        }
        samples[ratings.models[m]] = std::move(col);
    }
    Json point = Json::object();
    for (const auto& r : ratings.ratings) {
        point[r.model] = Json{{"win_rate", r.win_rate},
                              {"coefficient", r.coefficient},
                              {"ci_low", r.ci_low},
                              {"ci_high", r.ci_high},
                              {"n_battles", r.n_battles},
                              {"skipped_rounds", r.skipped_rounds}};
    }
    Json j{{"baseline_model", ratings.baseline_model},
           {"rounds", ratings.rounds},
           {"seed", ratings.seed},
           {"style_control", ratings.style_control},
           {"models", ratings.models},
           {"point", point},
           {"samples", samples}};
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace benchkit
