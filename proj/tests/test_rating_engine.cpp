#include <doctest.h>

#include <cmath>

#include "benchkit/errors.hpp"
#include "benchkit/rating_engine.hpp"
#include "benchkit/rng.hpp"
#include "benchkit/synthetic_lab.hpp"

using namespace benchkit;

namespace {

Battle make_battle(const std::string& first, const std::string& second, Verdict v,
                   long first_tokens = 100, long second_tokens = 100) {
    Battle b;
    b.question_id = "q";
    b.first_model = first;
    b.second_model = second;
    b.verdict = v;
    b.judge_model = "j";
    b.first_style.token_count = first_tokens;
    b.second_style.token_count = second_tokens;
    return b;
}

// n battles each way between two models with a fixed verdict.
std::vector<Battle> symmetric_battles(int n, Verdict forward, Verdict backward) {
    std::vector<Battle> battles;
    for (int i = 0; i < n; ++i) {
        battles.push_back(make_battle("alpha", "beta", forward));
        battles.push_back(make_battle("beta", "alpha", backward));
    }
    return battles;
}

}  // namespace

TEST_CASE("battles_to_rows: the verdict mapping table") {
    std::vector<Battle> battles{
        make_battle("a", "b", Verdict::TIE),
        make_battle("a", "b", Verdict::A_MUCH_BETTER),
        make_battle("a", "b", Verdict::A_BETTER),
        make_battle("a", "b", Verdict::B_BETTER),
        make_battle("a", "b", Verdict::B_MUCH_BETTER),
    };
    DesignMatrix dm = battles_to_rows(battles, "a", false);
    REQUIRE(dm.rows.size() == 5);
    CHECK(dm.rows[0].outcome == 0.5);
    CHECK(dm.rows[0].weight == 1.0);
    CHECK(dm.rows[1].outcome == 1.0);
    CHECK(dm.rows[1].weight == 3.0);
    CHECK(dm.rows[2].outcome == 1.0);
    CHECK(dm.rows[2].weight == 1.0);
    CHECK(dm.rows[3].outcome == 0.0);
    CHECK(dm.rows[3].weight == 1.0);
    CHECK(dm.rows[4].outcome == 0.0);
    CHECK(dm.rows[4].weight == 3.0);
    // exactly one +1 and one -1 per row
    for (const auto& row : dm.rows) CHECK(row.first_model != row.second_model);
}

TEST_CASE("battles_to_rows: swapping a battle mirrors the row") {
    std::vector<Battle> battles{make_battle("a", "b", Verdict::A_BETTER, 120, 80),
                                make_battle("b", "a", Verdict::B_BETTER, 80, 120)};
    DesignMatrix dm = battles_to_rows(battles, "a", true);
    REQUIRE(dm.rows.size() == 2);
    CHECK(dm.rows[0].first_model == dm.rows[1].second_model);
    CHECK(dm.rows[0].second_model == dm.rows[1].first_model);
    CHECK(dm.rows[0].outcome == doctest::Approx(1.0 - dm.rows[1].outcome));
    CHECK(dm.rows[0].weight == dm.rows[1].weight);
    for (int s = 0; s < dm.style_dim; ++s)
        CHECK(dm.rows[0].style(s) == doctest::Approx(-dm.rows[1].style(s)).epsilon(1e-12));
}

TEST_CASE("normalize_style: the worked normalized-difference examples") {
    std::vector<Battle> battles{make_battle("a", "b", Verdict::TIE, 500, 520),
                                make_battle("a", "b", Verdict::TIE, 20, 40)};
    Eigen::MatrixXd raw = raw_style_differences(battles);
    CHECK(raw(0, 0) == doctest::Approx(-20.0 / 1020.0).epsilon(1e-9));  // -0.019608
    CHECK(raw(1, 0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-9));      // -0.333333
    // both-zero features stay zero
    CHECK(raw(0, 1) == 0.0);

    StyleNormalization info;
    Eigen::MatrixXd z = normalize_style(raw, &info);
    CHECK(std::abs(z.col(0).mean()) < 1e-12);
    double var = (z.col(0).array() - z.col(0).mean()).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    // zero-variance columns are zeroed and reported
    CHECK(z.col(1).isZero(0.0));
    CHECK(std::find(info.zero_variance_columns.begin(), info.zero_variance_columns.end(), 1) !=
          info.zero_variance_columns.end());
}

TEST_CASE("fit_bt: symmetric battles give both models win-rate one half") {
    std::vector<Battle> battles = symmetric_battles(50, Verdict::A_BETTER, Verdict::A_BETTER);
    DesignMatrix dm = battles_to_rows(battles, "alpha", false);
    BtFit fit = fit_bt(dm);
    CHECK(sigmoid(fit.coefficients(0)) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(sigmoid(fit.coefficients(1)) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("fit_bt: identical answers make style control a no-op") {
    Rng rng(17);
    std::vector<Battle> battles;
    for (int i = 0; i < 400; ++i) {
        Verdict v = rng.uniform() < 0.65 ? Verdict::A_BETTER : Verdict::B_BETTER;
        battles.push_back(make_battle(i % 2 ? "alpha" : "beta", i % 2 ? "beta" : "alpha", v));
    }
    BtFit plain = fit_bt(battles_to_rows(battles, "alpha", false));
    BtFit styled = fit_bt(battles_to_rows(battles, "alpha", true));
    CHECK(plain.coefficients(1) == doctest::Approx(styled.coefficients(1)).epsilon(1e-8));
    CHECK(styled.style_coefficients.isZero(0.0));
}

TEST_CASE("fit_bt: duplicating every row leaves the fit unchanged") {
    std::vector<Battle> battles;
    Rng rng(23);
    for (int i = 0; i < 120; ++i) {
        Verdict v = rng.uniform() < 0.6
                        ? (rng.uniform() < 0.3 ? Verdict::A_MUCH_BETTER : Verdict::A_BETTER)
                        : (rng.uniform() < 0.5 ? Verdict::TIE : Verdict::B_BETTER);
        battles.push_back(make_battle(i % 2 ? "gamma" : "delta", i % 2 ? "delta" : "gamma", v,
                                      100 + i % 7, 90 + i % 5));
    }
    std::vector<Battle> doubled = battles;
    doubled.insert(doubled.end(), battles.begin(), battles.end());

    BtFit once = fit_bt(battles_to_rows(battles, "delta", false));
    BtFit twice = fit_bt(battles_to_rows(doubled, "delta", false));
    CHECK(once.coefficients(0) == doctest::Approx(twice.coefficients(0)).epsilon(1e-9));
    CHECK(once.coefficients(1) == doctest::Approx(twice.coefficients(1)).epsilon(1e-9));
}

TEST_CASE("fit_bt: position-swap invariance at the row level") {
    std::vector<SyntheticModel> models{{"base", 0.0}, {"mid", 0.4}, {"top", 0.9}};
    models[1].mean_tokens = 620;
    models[2].mean_tokens = 480;
    BattleSet set = generate_battles(models, SyntheticJudge{}, 900, 71);

    DesignMatrix dm = battles_to_rows(set.battles, "base", true);
    BtFit fit = fit_bt(dm);

    DesignMatrix swapped = dm;
    for (auto& row : swapped.rows) {
        std::swap(row.first_model, row.second_model);
        row.outcome = 1.0 - row.outcome;
        row.style = -row.style;
    }
    BtFit fit_swapped = fit_bt(swapped);
    for (int m = 0; m < 3; ++m)
        CHECK(fit.coefficients(m) == doctest::Approx(fit_swapped.coefficients(m)).epsilon(1e-10));
    for (int s = 0; s < dm.style_dim; ++s)
        CHECK(fit.style_coefficients(s) ==
              doctest::Approx(fit_swapped.style_coefficients(s)).epsilon(1e-10));
}

TEST_CASE("fit_bt: gradient at the optimum matches finite differences") {
    std::vector<SyntheticModel> models{{"base", 0.0}, {"other", 0.7}};
    BattleSet set = generate_battles(models, SyntheticJudge{}, 200, 5);
    DesignMatrix dm = battles_to_rows(set.battles, "base", true);
    BtFit fit = fit_bt(dm);
    CHECK(fit.gradient_norm < 1e-8);

    // finite-difference check of the loss gradient at a nearby point
    const double lambda = 1e-4;
    auto loss_at = [&](const Eigen::VectorXd& theta) {
        double total = 0.0, wsum = 0.0;
        for (const auto& row : dm.rows) {
            double eta = 0.0;
            if (row.first_model == 1) eta += theta(0);
            if (row.second_model == 1) eta -= theta(0);
            for (int s = 0; s < dm.style_dim; ++s) eta += row.style(s) * theta(1 + s);
            total += row.weight *
                     (row.outcome * softplus(-eta) + (1.0 - row.outcome) * softplus(eta));
            wsum += row.weight;
        }
        return total / wsum + lambda * theta.squaredNorm();
    };

    Eigen::VectorXd theta(1 + dm.style_dim);
    theta(0) = fit.coefficients(1) + 0.05;
    for (int s = 0; s < dm.style_dim; ++s) theta(1 + s) = fit.style_coefficients(s) - 0.02;

    const double h = 1e-6;
    for (int k = 0; k < theta.size(); ++k) {
        Eigen::VectorXd up = theta, down = theta;
        up(k) += h;
        down(k) -= h;
        double numeric = (loss_at(up) - loss_at(down)) / (2.0 * h);

        // analytic gradient component
        double analytic = 2.0 * lambda * theta(k);
        double wsum = 0.0, acc = 0.0;
        for (const auto& row : dm.rows) {
            double eta = 0.0;
            if (row.first_model == 1) eta += theta(0);
            if (row.second_model == 1) eta -= theta(0);
            for (int s = 0; s < dm.style_dim; ++s) eta += row.style(s) * theta(1 + s);
            double d = 0.0;
            if (k == 0) d = (row.first_model == 1 ? 1.0 : 0.0) - (row.second_model == 1 ? 1.0 : 0.0);
            else d = row.style(k - 1);
            acc += row.weight * (sigmoid(eta) - row.outcome) * d;
            wsum += row.weight;
        }
        analytic += acc / wsum;
        CHECK(numeric == doctest::Approx(analytic).epsilon(1e-5));
    }
}

TEST_CASE("fit_bt: preconditions") {
    DesignMatrix empty;
    CHECK_THROWS_AS(fit_bt(empty), PreconditionError);
}

TEST_CASE("bootstrap: seeding contract and degenerate round count") {
    std::vector<SyntheticModel> models{{"base", 0.0}, {"cand", 0.6}};
    BattleSet set = generate_battles(models, SyntheticJudge{}, 400, 9);

    BootstrapOptions opts;
    opts.rounds = 50;
    opts.seed = 1;
    RatingSet a = bootstrap_ratings(set.battles, "base", opts);
    RatingSet b = bootstrap_ratings(set.battles, "base", opts);
    opts.seed = 2;
    RatingSet c = bootstrap_ratings(set.battles, "base", opts);

    const ModelRating* ra = a.find("cand");
    const ModelRating* rb = b.find("cand");
    const ModelRating* rc = c.find("cand");
    CHECK(ra->ci_low == rb->ci_low);
    CHECK(ra->ci_high == rb->ci_high);
    CHECK((ra->ci_low != rc->ci_low || ra->ci_high != rc->ci_high));
    // heavy overlap between seeds on the same data
    CHECK(std::max(ra->ci_low, rc->ci_low) < std::min(ra->ci_high, rc->ci_high));

    opts.rounds = 1;
    RatingSet single = bootstrap_ratings(set.battles, "base", opts);
    const ModelRating* rs = single.find("cand");
    CHECK(rs->ci_low == rs->ci_high);  // degenerate at the single refit value

    // point estimate inside the CI at a realistic round count
    opts.rounds = 100;
    RatingSet full = bootstrap_ratings(set.battles, "base", opts);
    const ModelRating* rf = full.find("cand");
    CHECK(rf->ci_low <= rf->win_rate);
    CHECK(rf->win_rate <= rf->ci_high);
    CHECK(rf->n_battles == 400);
}

TEST_CASE("bootstrap: baseline is anchored at exactly one half with a zero-width CI") {
    std::vector<SyntheticModel> models{{"base", 0.0}, {"cand", 1.0}};
    BattleSet set = generate_battles(models, SyntheticJudge{}, 300, 3);
    BootstrapOptions opts;
    opts.rounds = 40;
    RatingSet rs = bootstrap_ratings(set.battles, "base", opts);
    const ModelRating* base = rs.find("base");
    CHECK(base->win_rate == 0.5);
    CHECK(base->ci_low == 0.5);
    CHECK(base->ci_high == 0.5);
    CHECK(base->skipped_rounds == 0);
}

TEST_CASE("pooling a battle set with itself leaves win-rates unchanged") {
    std::vector<SyntheticModel> models{{"base", 0.0}, {"cand", 0.8}};
    BattleSet set = generate_battles(models, SyntheticJudge{}, 500, 21);
    BattleSet doubled = pool_judgments({set, set});

    BtFit once = fit_bt(battles_to_rows(set.battles, "base", false));
    BtFit twice = fit_bt(battles_to_rows(doubled.battles, "base", false));
    CHECK(sigmoid(once.coefficients(1)) ==
          doctest::Approx(sigmoid(twice.coefficients(1))).epsilon(1e-9));
}

TEST_CASE("judges with opposite fixed verdicts pool to a half win-rate") {
    // judge 1 always prefers the first position, judge 2 always the second;
    // positions alternate, so the pooled data is exactly symmetric
    std::vector<Battle> pooled;
    for (int i = 0; i < 40; ++i) {
        const std::string first = i % 2 ? "cand" : "base";
        const std::string second = i % 2 ? "base" : "cand";
        Battle b1 = make_battle(first, second, Verdict::A_MUCH_BETTER);
        b1.judge_model = "always-first";
        Battle b2 = make_battle(first, second, Verdict::B_MUCH_BETTER);
        b2.judge_model = "always-second";
        pooled.push_back(b1);
        pooled.push_back(b2);
    }
    BtFit fit = fit_bt(battles_to_rows(pooled, "base", false));
    CHECK(sigmoid(fit.coefficients(1)) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("leaderboard ordering, baseline row and tie-breaks") {
    std::vector<SyntheticModel> models{{"base", 0.0}, {"weak", -0.8}, {"strong", 0.9}};
    BattleSet set = generate_battles(models, SyntheticJudge{}, 1200, 33);
    BootstrapOptions opts;
    opts.rounds = 30;
    RatingSet rs = bootstrap_ratings(set.battles, "base", opts);
    std::vector<LeaderboardRow> rows = leaderboard(rs, set.battles);

    REQUIRE(rows.size() == 3);
    CHECK(rows[0].model == "strong");
    CHECK(rows[1].model == "base");
    CHECK(rows[2].model == "weak");
    CHECK(rows[1].win_rate == 0.5);
    CHECK(rows[1].ci_low == 0.5);
    CHECK(rows[1].ci_high == 0.5);
    CHECK(rows[0].avg_tokens > 0.0);

    // alphabetical tie-break on identical ratings
    RatingSet tied;
    tied.models = {"bbb", "aaa"};
    tied.rounds = 0;
    tied.samples.resize(0, 2);
    ModelRating r1;
    r1.model = "bbb";
    ModelRating r2;
    r2.model = "aaa";
    tied.ratings = {r1, r2};
    std::vector<LeaderboardRow> tied_rows = leaderboard(tied, {});
    CHECK(tied_rows[0].model == "aaa");
    CHECK(tied_rows[1].model == "bbb");

    std::string text = render_leaderboard(rows);
    CHECK(text.find("strong") < text.find("base"));
    CHECK(text.find("50.0%") != std::string::npos);
}

TEST_CASE("percentile: linear interpolation and edge cases") {
    CHECK(percentile({1.0}, 0.025) == 1.0);
    CHECK(percentile({1.0}, 0.975) == 1.0);
    CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.5) == 3.0);
    CHECK(percentile({1.0, 2.0}, 0.5) == doctest::Approx(1.5));
    CHECK(std::isnan(percentile({}, 0.5)));
}
