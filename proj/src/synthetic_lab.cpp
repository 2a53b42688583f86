#include "benchkit/synthetic_lab.hpp"

#include <cmath>

#include "benchkit/errors.hpp"
#include "benchkit/rng.hpp"

namespace benchkit {

namespace {

StyleFeatures sample_style(const SyntheticModel& m, Rng& rng) {
    auto jitter = [&](double center, double spread) {
        return center * (1.0 + spread * (2.0 * rng.uniform() - 1.0));
    };
    StyleFeatures f;
    f.token_count = std::max<long>(1, std::lround(jitter(m.mean_tokens, m.token_spread)));
    f.header_density = std::max(0.0, jitter(m.header_density, m.density_spread));
    f.bold_density = std::max(0.0, jitter(m.bold_density, m.density_spread));
    f.list_density = std::max(0.0, jitter(m.list_density, m.density_spread));
    return f;
}

double normalized_difference(double a, double b) {
    double denom = a + b;
    return denom == 0.0 ? 0.0 : (a - b) / denom;
}

Verdict discretize(double latent, const SyntheticJudge& judge) {
    if (latent > judge.strong_threshold) return Verdict::A_MUCH_BETTER;
    if (latent > judge.tie_threshold) return Verdict::A_BETTER;
    if (latent >= -judge.tie_threshold) return Verdict::TIE;
    if (latent >= -judge.strong_threshold) return Verdict::B_BETTER;
    return Verdict::B_MUCH_BETTER;
}

}  // namespace

BattleSet generate_battles(const std::vector<SyntheticModel>& models, const SyntheticJudge& judge,
                           size_t n_battles, uint64_t seed) {
    if (models.size() < 2) throw PreconditionError("generate_battles: need at least 2 models");

    std::vector<std::pair<size_t, size_t>> pairs;
    for (size_t i = 0; i < models.size(); ++i)
        for (size_t j = i + 1; j < models.size(); ++j) pairs.emplace_back(i, j);

    BattleSet set;
    set.benchmark_checksum = "synthetic";
    set.candidate_model = models.back().name;
    set.baseline_model = models.front().name;
    set.battles.reserve(n_battles);

    Rng rng(seed);
    size_t question = 0;
    while (set.battles.size() < n_battles) {
        for (size_t p = 0; p < pairs.size() && set.battles.size() < n_battles; ++p, ++question) {
            for (int game = 1; game <= 2 && set.battles.size() < n_battles; ++game) {
                const SyntheticModel& first = models[game == 1 ? pairs[p].first : pairs[p].second];
                const SyntheticModel& second = models[game == 1 ? pairs[p].second : pairs[p].first];

                StyleFeatures fs = sample_style(first, rng);
                StyleFeatures ss = sample_style(second, rng);

                double r_len = normalized_difference(static_cast<double>(fs.token_count),
                                                     static_cast<double>(ss.token_count));
                double r_md = (normalized_difference(fs.header_density, ss.header_density) +
                               normalized_difference(fs.bold_density, ss.bold_density) +
                               normalized_difference(fs.list_density, ss.list_density)) /
                              3.0;

                double latent = first.skill - second.skill + judge.length_bias * r_len +
                                judge.markdown_bias * r_md;
                if (judge.noise_temperature > 0.0)
                    latent += judge.noise_temperature * rng.logistic();

                Battle b;
                b.question_id = "syn-" + std::to_string(question);
                b.first_model = first.name;
                b.second_model = second.name;
                b.verdict = discretize(latent, judge);
                b.judge_model = "synthetic-judge";
                b.game_index = game;
                b.first_style = fs;
                b.second_style = ss;
                set.battles.push_back(std::move(b));
            }
        }
    }
    return set;
}

BtFit brute_force_bt(const DesignMatrix& dm, double l2_penalty) {
    if (dm.models.size() > 4)
        throw PreconditionError("brute_force_bt: limited to 4 models");
    if (dm.rows.size() > 500)
        throw PreconditionError("brute_force_bt: limited to 500 rows");
    if (dm.rows.empty()) throw PreconditionError("brute_force_bt: no rows");

    const int n_models = static_cast<int>(dm.models.size());
    const int n_params = n_models - 1 + dm.style_dim;
    auto param_of_model = [&](int m) {
        if (m == dm.baseline_index) return -1;
        return m < dm.baseline_index ? m : m - 1;
    };

    double wsum = 0.0;
    for (const auto& row : dm.rows) wsum += row.weight;

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n_params);
    auto margin = [&](const DesignRow& row) {
        double eta = 0.0;
        if (int p = param_of_model(row.first_model); p >= 0) eta += theta(p);
        if (int p = param_of_model(row.second_model); p >= 0) eta -= theta(p);
        for (int s = 0; s < dm.style_dim; ++s) eta += row.style(s) * theta(n_models - 1 + s);
        return eta;
    };
    auto direction = [&](const DesignRow& row, int j) {
        double d = 0.0;
        if (param_of_model(row.first_model) == j) d += 1.0;
        if (param_of_model(row.second_model) == j) d -= 1.0;
        if (j >= n_models - 1) d = row.style(j - (n_models - 1));
        return d;
    };

    // Cyclic 1-D Newton; each coordinate step is a full-data pass. Slow and
    // simple on purpose: this is the oracle, not the engine.
    for (int cycle = 0; cycle < 200000; ++cycle) {
        double max_step = 0.0;
        for (int j = 0; j < n_params; ++j) {
            double g = 0.0, h = 0.0;
            for (const auto& row : dm.rows) {
                double d = direction(row, j);
                if (d == 0.0) continue;
                double p = sigmoid(margin(row));
                g += row.weight * (p - row.outcome) * d;
                h += row.weight * p * (1.0 - p) * d * d;
            }
            g = g / wsum + 2.0 * l2_penalty * theta(j);
            h = h / wsum + 2.0 * l2_penalty;
            double step = g / h;
            theta(j) -= step;
            max_step = std::max(max_step, std::abs(step));
        }
        if (max_step < 1e-12) break;
    }

    BtFit fit;
    fit.coefficients = Eigen::VectorXd::Zero(n_models);
    for (int m = 0; m < n_models; ++m)
        if (int p = param_of_model(m); p >= 0) fit.coefficients(m) = theta(p);
    fit.style_coefficients = Eigen::VectorXd::Zero(dm.style_dim);
    for (int s = 0; s < dm.style_dim; ++s) fit.style_coefficients(s) = theta(n_models - 1 + s);
    return fit;
}

}  // namespace benchkit
