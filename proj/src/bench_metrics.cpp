#include "benchkit/bench_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "benchkit/errors.hpp"
#include "benchkit/rng.hpp"

namespace benchkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool disjoint(const ModelScore& a, const ModelScore& b) {
    return a.ci_high < b.ci_low || b.ci_high < a.ci_low;
}

std::vector<std::string> common_models(const BenchmarkResult& a, const BenchmarkResult& b) {
    std::vector<std::string> out;
    for (const auto& [model, score] : a.scores)
        if (b.scores.count(model)) out.push_back(model);
    return out;
}

}  // namespace

BenchmarkResult BenchmarkResult::from_rating_set(const RatingSet& ratings,
                                                 const std::string& name) {
    BenchmarkResult out;
    out.name = name;
    for (size_t m = 0; m < ratings.models.size(); ++m) {
        const ModelRating* r = ratings.find(ratings.models[m]);
        ModelScore s;
        s.score = r->win_rate;
        s.ci_low = r->ci_low;
        s.ci_high = r->ci_high;
        for (int round = 0; round < ratings.rounds; ++round) {
            double v = ratings.samples(round, static_cast<Eigen::Index>(m));
            if (!std::isnan(v)) s.samples.push_back(v);
        }
        if (!s.samples.empty()) {
            double sum = 0.0;
            for (double v : s.samples) sum += v;
            s.boot_mean = sum / static_cast<double>(s.samples.size());
            double ss = 0.0;
            for (double v : s.samples) ss += (v - s.boot_mean) * (v - s.boot_mean);
            s.boot_std = s.samples.size() > 1
                             ? std::sqrt(ss / static_cast<double>(s.samples.size() - 1))
                             : 0.0;
        } else {
            s.boot_mean = s.score;
            s.boot_std = 0.0;
        }
        out.scores[ratings.models[m]] = std::move(s);
    }
    return out;
}

BenchmarkResult BenchmarkResult::from_samples_file(const std::string& path,
                                                   const std::string& name) {
    Json j = Json::parse(read_text_file(path));
    BenchmarkResult out;
    out.name = name;
    for (const auto& model : j.at("models").get<std::vector<std::string>>()) {
        const Json& p = j.at("point").at(model);
        ModelScore s;
        s.score = p.at("win_rate").get<double>();
        s.ci_low = p.at("ci_low").get<double>();
        s.ci_high = p.at("ci_high").get<double>();
        for (const auto& v : j.at("samples").at(model))
            if (!v.is_null()) s.samples.push_back(v.get<double>());
        if (!s.samples.empty()) {
            double sum = 0.0;
            for (double v : s.samples) sum += v;
            s.boot_mean = sum / static_cast<double>(s.samples.size());
            double ss = 0.0;
            for (double v : s.samples) ss += (v - s.boot_mean) * (v - s.boot_mean);
            s.boot_std = s.samples.size() > 1
                             ? std::sqrt(ss / static_cast<double>(s.samples.size() - 1))
                             : 0.0;
        }
        out.scores[model] = std::move(s);
    }
    return out;
}

std::vector<std::string> ReferenceRanking::best_to_worst() const {
    std::vector<const ReferenceEntry*> sorted;
    sorted.reserve(entries.size());
    for (const auto& e : entries) sorted.push_back(&e);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const ReferenceEntry* a, const ReferenceEntry* b) { return a->rank < b->rank; });
    std::vector<std::string> out;
    out.reserve(sorted.size());
    for (const auto* e : sorted) out.push_back(e->model);
    return out;
}

BenchmarkResult ReferenceRanking::as_result() const {
    BenchmarkResult out;
    out.name = source.empty() ? "reference" : source;
    for (const auto& e : entries) {
        ModelScore s;
        s.score = e.score ? *e.score : -static_cast<double>(e.rank);
        s.ci_low = e.ci_low ? *e.ci_low : s.score;
        s.ci_high = e.ci_high ? *e.ci_high : s.score;
        s.boot_mean = s.score;
        s.boot_std = 0.0;
        out.scores[e.model] = std::move(s);
    }
    return out;
}

ReferenceRanking read_reference_file(const std::string& path) {
    ReferenceRanking out;
    std::set<std::string> seen;
    for (const auto& j : read_jsonl_file(path)) {
        if (j.contains("source") && !j.contains("model")) {
            out.source = j["source"].get<std::string>();
            continue;
        }
        ReferenceEntry e;
        e.model = j.at("model").get<std::string>();
        e.rank = j.at("rank").get<int>();
        if (j.contains("score")) e.score = j["score"].get<double>();
        if (j.contains("ci_low")) e.ci_low = j["ci_low"].get<double>();
        if (j.contains("ci_high")) e.ci_high = j["ci_high"].get<double>();
        if (!seen.insert(e.model).second)
            throw Error("reference ranking lists model '" + e.model + "' twice");
        out.entries.push_back(std::move(e));
    }
    return out;
}

double separability_percent(const BenchmarkResult& result) {
    if (result.scores.size() < 2)
        throw PreconditionError("separability: need at least 2 models");
    size_t total = 0, separated = 0;
    for (auto i = result.scores.begin(); i != result.scores.end(); ++i) {
        for (auto j = std::next(i); j != result.scores.end(); ++j) {
            ++total;
            if (disjoint(i->second, j->second)) ++separated;
        }
    }
    return 100.0 * static_cast<double>(separated) / static_cast<double>(total);
}

double agreement_with_ci(const BenchmarkResult& a, const BenchmarkResult& b) {
    std::vector<std::string> models = common_models(a, b);
    if (models.size() < 2)
        throw PreconditionError("agreement_with_ci: need at least 2 common models (have " +
                                std::to_string(models.size()) + ")");
    double total = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < models.size(); ++i) {
        for (size_t j = i + 1; j < models.size(); ++j) {
            ++pairs;
            const ModelScore& ai = a.scores.at(models[i]);
            const ModelScore& aj = a.scores.at(models[j]);
            const ModelScore& bi = b.scores.at(models[i]);
            const ModelScore& bj = b.scores.at(models[j]);
            if (!disjoint(ai, aj) || !disjoint(bi, bj)) continue;  // score 0
            bool a_says_i_better = ai.score > aj.score;
            bool b_says_i_better = bi.score > bj.score;
            total += (a_says_i_better == b_says_i_better) ? 1.0 : -1.0;
        }
    }
    return total / static_cast<double>(pairs);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double pair_rank_brier(const BenchmarkResult& result,
                       const std::vector<std::string>& reference_best_to_worst, BrierMode mode) {
    // Position in the reference order; smaller = better.
    std::map<std::string, size_t> position;
    for (size_t i = 0; i < reference_best_to_worst.size(); ++i)
        position[reference_best_to_worst[i]] = i;

    std::vector<std::string> models;
    for (const auto& [model, score] : result.scores)
        if (position.count(model)) models.push_back(model);
    if (models.size() < 2)
        throw PreconditionError("pair_brier: need at least 2 models shared with the reference");

    double total = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < models.size(); ++i) {
        for (size_t j = i + 1; j < models.size(); ++j) {
            const ModelScore& si = result.scores.at(models[i]);
            const ModelScore& sj = result.scores.at(models[j]);

            double p_i_worse;  // P(f*(i) < f*(j))
            if (mode == BrierMode::kEmpirical) {
                if (si.samples.empty() || sj.samples.empty() ||
                    si.samples.size() != sj.samples.size())
                    throw PreconditionError(
                        "pair_brier: empirical mode needs shared bootstrap samples");
                double hits = 0.0;
                for (size_t r = 0; r < si.samples.size(); ++r) {
                    if (si.samples[r] < sj.samples[r])
                        hits += 1.0;
                    else if (si.samples[r] == sj.samples[r])
                        hits += 0.5;
                }
                p_i_worse = hits / static_cast<double>(si.samples.size());
            } else {
                double mu_i = si.samples.empty() ? si.score : si.boot_mean;
                double mu_j = sj.samples.empty() ? sj.score : sj.boot_mean;
                double var = si.boot_std * si.boot_std + sj.boot_std * sj.boot_std;
                if (var <= 0.0) {
                    p_i_worse = mu_i < mu_j ? 1.0 : (mu_i > mu_j ? 0.0 : 0.5);
                } else {
                    p_i_worse = normal_cdf((mu_j - mu_i) / std::sqrt(var));
                }
            }

            double o_i_worse = position.at(models[i]) > position.at(models[j]) ? 1.0 : 0.0;
            total += (p_i_worse - o_i_worse) * (p_i_worse - o_i_worse);
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

namespace {

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(const std::vector<double>& values) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return kNaN;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) return kNaN;
    return pearson(average_ranks(a), average_ranks(b));
}

double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) return kNaN;
    double concordant = 0.0, discordant = 0.0, ties_a = 0.0, ties_b = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        for (size_t j = i + 1; j < a.size(); ++j) {
            double da = a[i] - a[j];
            double db = b[i] - b[j];
            if (da == 0.0 && db == 0.0) continue;  // tied in both: dropped by tau-b
            if (da == 0.0)
                ties_a += 1.0;
            else if (db == 0.0)
                ties_b += 1.0;
            else if (da * db > 0.0)
                concordant += 1.0;
            else
                discordant += 1.0;
        }
    }
    double denom =
        std::sqrt((concordant + discordant + ties_a) * (concordant + discordant + ties_b));
    if (denom <= 0.0) return kNaN;
    return (concordant - discordant) / denom;
}

RankCorrelations rank_correlations(const BenchmarkResult& result,
                                   const ReferenceRanking& reference) {
    std::map<std::string, int> rank;
    for (const auto& e : reference.entries) rank[e.model] = e.rank;

    std::vector<double> scores, ref_quality;
    for (const auto& [model, score] : result.scores) {
        auto it = rank.find(model);
        if (it == rank.end()) continue;
        scores.push_back(score.score);
        ref_quality.push_back(-static_cast<double>(it->second));  // higher = better
    }
    if (scores.size() < 3)
        throw PreconditionError("rank_correlations: need at least 3 common models (have " +
                                std::to_string(scores.size()) + ")");
    RankCorrelations out;
    out.common_models = static_cast<int>(scores.size());
    out.spearman = spearman_rho(scores, ref_quality);
    out.kendall = kendall_tau_b(scores, ref_quality);
    return out;
}

WinrateByQuality winrate_by_quality(const std::vector<Battle>& battles,
                                    const AnnotationSet& annotations, int bin_width, int rounds,
                                    uint64_t seed) {
    if (battles.empty()) throw PreconditionError("winrate_by_quality: no battles");
    if (bin_width < 1) throw PreconditionError("winrate_by_quality: bin width must be >= 1");

    std::set<std::string> models;
    for (const auto& b : battles) {
        models.insert(b.first_model);
        models.insert(b.second_model);
    }
    if (models.size() != 2)
        throw PreconditionError("winrate_by_quality: battles must cover exactly one model pair");

    std::map<std::string, int> score;
    for (const auto& a : annotations.annotations) score[a.prompt_id] = a.score;

    WinrateByQuality out;
    std::string model_a = *models.begin();
    std::string model_b = *std::next(models.begin());

    // Model-relative outcome for model_a per battle, plus the prompt score.
    auto outcome_for_a = [&](const Battle& b) {
        double first_outcome = 0.5;
        switch (b.verdict) {
            case Verdict::A_MUCH_BETTER:
            case Verdict::A_BETTER: first_outcome = 1.0; break;
            case Verdict::TIE: first_outcome = 0.5; break;
            case Verdict::B_BETTER:
            case Verdict::B_MUCH_BETTER: first_outcome = 0.0; break;
        }
        return b.first_model == model_a ? first_outcome : 1.0 - first_outcome;
    };

    std::vector<double> outcomes;
    std::vector<int> scores;
    outcomes.reserve(battles.size());
    for (const auto& b : battles) {
        auto it = score.find(b.question_id);
        if (it == score.end())
            throw Error("winrate_by_quality: no annotation for question " + b.question_id);
        outcomes.push_back(outcome_for_a(b));
        scores.push_back(it->second);
    }

    double mean_a = 0.0;
    for (double o : outcomes) mean_a += o;
    mean_a /= static_cast<double>(outcomes.size());
    bool a_favored = mean_a >= 0.5;
    out.favored_model = a_favored ? model_a : model_b;
    out.other_model = a_favored ? model_b : model_a;

    const int max_score = 7;
    for (int lo = 0; lo <= max_score; lo += bin_width) {
        int hi = std::min(max_score, lo + bin_width - 1);
        std::vector<double> bin;
        for (size_t i = 0; i < outcomes.size(); ++i)
            if (scores[i] >= lo && scores[i] <= hi)
                bin.push_back(a_favored ? outcomes[i] : 1.0 - outcomes[i]);
        if (bin.empty()) {
            out.notes.push_back("bin " + std::to_string(lo) + "-" + std::to_string(hi) +
                                " empty; omitted");
            continue;
        }
        QualityBin qb;
        qb.score_lo = lo;
        qb.score_hi = hi;
        qb.n_battles = bin.size();
        double mean = 0.0;
        for (double o : bin) mean += o;
        qb.win_rate = mean / static_cast<double>(bin.size());

        Rng rng(derive_seed(seed, static_cast<uint64_t>(lo)));
        std::vector<double> resampled;
        resampled.reserve(rounds);
        for (int r = 0; r < rounds; ++r) {
            double sum = 0.0;
            for (size_t k = 0; k < bin.size(); ++k) sum += bin[rng.uniform_index(bin.size())];
            resampled.push_back(sum / static_cast<double>(bin.size()));
        }
        qb.ci_low = percentile(resampled, 0.025);
        qb.ci_high = percentile(resampled, 0.975);
        out.bins.push_back(qb);
    }
    return out;
}

QualityReport benchmark_quality_report(const BenchmarkResult& result,
                                       const ReferenceRanking& reference) {
    QualityReport report;
    report.benchmark = result.name;
    report.reference = reference.source.empty() ? "reference" : reference.source;

    BenchmarkResult ref_result = reference.as_result();
    report.separability = separability_percent(result);
    report.confidence_agreement = agreement_with_ci(result, ref_result);

    RankCorrelations rc = rank_correlations(result, reference);
    report.spearman = rc.spearman;
    report.kendall = rc.kendall;
    report.common_models = rc.common_models;

    bool have_samples = true;
    for (const auto& [model, score] : result.scores)
        if (score.samples.empty()) have_samples = false;
    report.brier_mode = have_samples ? BrierMode::kEmpirical : BrierMode::kNormal;
    report.brier = pair_rank_brier(result, reference.best_to_worst(), report.brier_mode);
    return report;
}

std::string render_quality_report(const QualityReport& report) {
    std::ostringstream out;
    char buf[128];
    out << "benchmark: " << report.benchmark << "  (reference: " << report.reference << ", "
        << report.common_models << " common models)\n";
    std::snprintf(buf, sizeof(buf), "%-24s %7.1f%%\n", "Confidence Agreement",
                  100.0 * report.confidence_agreement);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%-24s %7.1f%%\n", "Separability", report.separability);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%-24s %7.1f%%\n", "Spearman Correlation",
                  100.0 * report.spearman);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%-24s %7.1f%%\n", "Kendall Tau Correlation",
                  100.0 * report.kendall);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%-24s %8.3f  (%s)\n", "Brier Score", report.brier,
                  report.brier_mode == BrierMode::kEmpirical ? "empirical" : "normal");
    out << buf;
    return out.str();
}

Json quality_report_json(const QualityReport& report) {
    return Json{{"benchmark", report.benchmark},
                {"reference", report.reference},
                {"common_models", report.common_models},
                {"confidence_agreement", report.confidence_agreement},
                {"separability_percent", report.separability},
                {"spearman", report.spearman},
                {"kendall_tau_b", report.kendall},
                {"brier", report.brier},
                {"brier_mode", report.brier_mode == BrierMode::kEmpirical ? "empirical" : "normal"}};
}

}  // namespace benchkit
