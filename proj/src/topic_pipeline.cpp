#include "benchkit/topic_pipeline.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "benchkit/errors.hpp"
#include "benchkit/hash.hpp"
#include "benchkit/rng.hpp"
#include "benchkit/templates.hpp"

namespace benchkit {

// ---------------------------------------------------------------------------
// Reduction

double ReducedEmbedding::explained_variance_ratio() const {
    double total = eigenvalues.sum();
    if (total <= 0.0) return 0.0;
    return eigenvalues.head(points.cols()).sum() / total;
}

ReducedEmbedding reduce_dimensions(const Eigen::MatrixXd& points, int target_dim) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    if (target_dim < 1 || target_dim > d)
        throw PreconditionError("reduce: target_dim must be in [1, input dim]");
    if (n < target_dim + 1)
        throw PreconditionError("reduce: need at least target_dim + 1 points");

    Eigen::RowVectorXd mean = points.colwise().mean();
    Eigen::MatrixXd centered = points.rowwise() - mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

    ReducedEmbedding out;
    if (cov.trace() <= 1e-300) {
        out.points = Eigen::MatrixXd::Zero(n, target_dim);
        out.eigenvalues = Eigen::VectorXd::Zero(d);
        out.degenerate = true;
        return out;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("reduce: eigendecomposition failed");

    // Eigen returns ascending order; flip to descending.
    Eigen::VectorXd evals = solver.eigenvalues().reverse();
    Eigen::MatrixXd evecs = solver.eigenvectors().rowwise().reverse();

    // Deterministic sign: largest-magnitude entry of each component positive.
    Eigen::MatrixXd basis = evecs.leftCols(target_dim);
    for (Eigen::Index c = 0; c < basis.cols(); ++c) {
        Eigen::Index imax;
        basis.col(c).cwiseAbs().maxCoeff(&imax);
        if (basis(imax, c) < 0) basis.col(c) = -basis.col(c);
    }

    out.points = centered * basis;
    out.eigenvalues = evals;
    return out;
}

// ---------------------------------------------------------------------------
// Clustering

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double na = a.norm(), nb = b.norm();
    if (na == 0.0 && nb == 0.0) return 0.0;
    if (na == 0.0 || nb == 0.0) return 1.0;
    double c = a.dot(b) / (na * nb);
    c = std::clamp(c, -1.0, 1.0);
    return 1.0 - c;
}

Json TopicCluster::to_json() const {
    Json j{{"cluster_id", cluster_id}, {"size", member_ids.size()}, {"member_ids", member_ids}};
    if (has_mean_score) j["mean_score"] = mean_score;
    if (name) j["name"] = *name;
    return j;
}

TopicCluster TopicCluster::from_json(const Json& j) {
    TopicCluster c;
    c.cluster_id = j.at("cluster_id").get<int>();
    c.member_ids = j.at("member_ids").get<std::vector<std::string>>();
    if (j.contains("mean_score")) {
        c.mean_score = j["mean_score"].get<double>();
        c.has_mean_score = true;
    }
    if (j.contains("name")) c.name = j["name"].get<std::string>();
    return c;
}

ClusterOutcome cluster_topics(const std::vector<std::string>& ids, const Eigen::MatrixXd& points,
                              const ClusterConfig& config) {
    const size_t n = ids.size();
    if (points.rows() != static_cast<Eigen::Index>(n))
        throw PreconditionError("cluster: ids and points disagree in length");
    if (n < 2) throw PreconditionError("cluster: need at least 2 points");

    // Canonical order: lexicographic by coordinates, ties by id. Linkage
    // tie-breaks then depend only on the input set, not its order.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        for (Eigen::Index k = 0; k < points.cols(); ++k) {
            if (points(a, k) != points(b, k)) return points(a, k) < points(b, k);
        }
        return ids[a] < ids[b];
    });

    // Pairwise cosine distances in canonical order.
    Eigen::MatrixXd dist(n, n);
    for (size_t i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (size_t j = i + 1; j < n; ++j) {
            double d = cosine_distance(points.row(order[i]), points.row(order[j]));
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }

    // Average-linkage agglomeration, Lance-Williams update, merge while the
    // closest pair is under the threshold.
    std::vector<bool> alive(n, true);
    std::vector<std::vector<size_t>> members(n);
    for (size_t i = 0; i < n; ++i) members[i] = {i};

    for (;;) {
        double best = std::numeric_limits<double>::infinity();
        size_t bi = 0, bj = 0;
        for (size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (size_t j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                if (dist(i, j) < best) {
                    best = dist(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        if (!std::isfinite(best) || best >= config.distance_threshold) break;

        double ni = static_cast<double>(members[bi].size());
        double nj = static_cast<double>(members[bj].size());
        for (size_t k = 0; k < n; ++k) {
            if (!alive[k] || k == bi || k == bj) continue;
            double d = (ni * dist(bi, k) + nj * dist(bj, k)) / (ni + nj);
            dist(bi, k) = d;
            dist(k, bi) = d;
        }
        members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
        members[bj].clear();
        alive[bj] = false;
    }

    ClusterOutcome out;
    std::vector<std::vector<std::string>> groups;
    for (size_t i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        std::vector<std::string> group;
        group.reserve(members[i].size());
        for (size_t m : members[i]) group.push_back(ids[order[m]]);
        std::sort(group.begin(), group.end());
        if (group.size() < static_cast<size_t>(config.min_cluster_size)) {
            out.noise_ids.insert(out.noise_ids.end(), group.begin(), group.end());
        } else {
            groups.push_back(std::move(group));
        }
    }
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a.front() < b.front();
    });
    std::sort(out.noise_ids.begin(), out.noise_ids.end());

    out.clusters.reserve(groups.size());
    for (size_t g = 0; g < groups.size(); ++g) {
        TopicCluster c;
        c.cluster_id = static_cast<int>(g + 1);
        c.member_ids = std::move(groups[g]);
        out.clusters.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Enrichment

void name_clusters(std::vector<TopicCluster>& clusters, const Corpus& corpus,
                   const std::string& naming_model, Gateway& gateway) {
    for (auto& cluster : clusters) {
        std::ostringstream user;
        user << "Sample prompts from this cluster:\n";
        size_t shown = 0;
        for (const auto& id : cluster.member_ids) {
            if (shown >= 10) break;
            const PromptRecord* rec = corpus.find(id);
            if (!rec) continue;
            std::string text = rec->text.substr(0, 300);
            user << (shown + 1) << ". " << text << "\n";
            ++shown;
        }
        if (shown == 0) continue;

        ChatRequest req;
        req.model = naming_model;
        req.system = kNamingSystemInstruction;
        req.user = user.str();
        req.temperature = 0.0;
        req.max_tokens = 64;
        try {
            ChatResponse res = gateway.chat(req);
            std::string name = res.text;
            // single line, trimmed
            if (auto nl = name.find('\n'); nl != std::string::npos) name = name.substr(0, nl);
            size_t b = name.find_first_not_of(" \t\r");
            size_t e = name.find_last_not_of(" \t\r");
            name = (b == std::string::npos) ? "" : name.substr(b, e - b + 1);
            if (!name.empty()) cluster.name = name;
        } catch (const std::exception&) {
            // naming is best-effort
        }
    }
}

void attach_scores(std::vector<TopicCluster>& clusters, const AnnotationSet& annotations) {
    std::unordered_map<std::string, int> score;
    for (const auto& a : annotations.annotations) score[a.prompt_id] = a.score;
    for (auto& cluster : clusters) {
        double sum = 0.0;
        for (const auto& id : cluster.member_ids) {
            auto it = score.find(id);
            if (it == score.end()) throw Error("attach_scores: no annotation for prompt " + id);
            sum += it->second;
        }
        cluster.mean_score = sum / static_cast<double>(cluster.member_ids.size());
        cluster.has_mean_score = true;
    }
}

// ---------------------------------------------------------------------------
// Benchmark assembly

std::string Benchmark::checksum() const {
    Fnv1a64 h;
    for (const auto& p : prompts) {
        h.field(p.question_id).field(p.text).field(std::to_string(p.cluster_id))
            .field(std::to_string(p.quality_score));
    }
    return h.hex();
}

BuildOutcome build_benchmark(const std::vector<TopicCluster>& clusters, const Corpus& corpus,
                             const AnnotationSet& annotations, const BenchmarkSpec& spec) {
    if (spec.prompts_per_cluster < 1 || spec.clusters_to_sample < 1)
        throw PreconditionError("build_benchmark: spec counts must be positive");

    std::unordered_map<std::string, int> score;
    for (const auto& a : annotations.annotations) score[a.prompt_id] = a.score;

    BuildOutcome out;

    // Qualifying pool: cluster mean over all members must clear the bar,
    // then only prompts clearing the prompt bar remain eligible inside it.
    struct Eligible {
        const TopicCluster* cluster;
        std::vector<std::string> prompt_ids;  // sorted by id
    };
    std::vector<Eligible> pool;
    for (const auto& cluster : clusters) {
        if (!cluster.has_mean_score)
            throw PreconditionError("build_benchmark: cluster " +
                                    std::to_string(cluster.cluster_id) + " has no mean score");
        if (cluster.mean_score < spec.cluster_mean_min) continue;
        Eligible e{&cluster, {}};
        for (const auto& id : cluster.member_ids) {
            auto it = score.find(id);
            if (it == score.end()) throw Error("build_benchmark: no annotation for prompt " + id);
            if (it->second >= spec.prompt_score_min) e.prompt_ids.push_back(id);
        }
        if (static_cast<int>(e.prompt_ids.size()) < spec.prompts_per_cluster) {
            out.warnings.push_back("cluster " + std::to_string(cluster.cluster_id) +
                                   " excluded: only " + std::to_string(e.prompt_ids.size()) +
                                   " prompt(s) clear score >= " +
                                   std::to_string(spec.prompt_score_min));
            continue;
        }
        pool.push_back(std::move(e));
    }

    if (static_cast<int>(pool.size()) < spec.clusters_to_sample)
        throw Error("build_benchmark: " + std::to_string(spec.clusters_to_sample) +
                    " clusters requested but only " + std::to_string(pool.size()) +
                    " qualify (shortfall " +
                    std::to_string(spec.clusters_to_sample - static_cast<int>(pool.size())) + ")");

    Rng rng(spec.seed);
    std::vector<size_t> picked =
        rng.sample_without_replacement(pool.size(), static_cast<size_t>(spec.clusters_to_sample));

    for (size_t pi : picked) {
        const Eligible& e = pool[pi];
        std::vector<size_t> chosen = rng.sample_without_replacement(
            e.prompt_ids.size(), static_cast<size_t>(spec.prompts_per_cluster));
        for (size_t ci : chosen) {
            const std::string& id = e.prompt_ids[ci];
            const PromptRecord* rec = corpus.find(id);
            if (!rec) throw Error("build_benchmark: prompt " + id + " not found in corpus");
            BenchmarkPrompt p;
            p.question_id = id;
            p.text = rec->text;
            p.cluster_id = e.cluster->cluster_id;
            p.cluster_name = e.cluster->name;
            p.quality_score = score.at(id);
            out.benchmark.prompts.push_back(std::move(p));
        }
    }
    return out;
}

Eigen::MatrixXd embed_corpus(const Corpus& corpus, const std::string& embedding_model,
                             Gateway& gateway) {
    if (corpus.empty()) throw PreconditionError("embed_corpus: empty corpus");
    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const auto& r : corpus.records) texts.push_back(r.text);
    std::vector<EmbeddingVector> vecs = gateway.embed(embedding_model, texts);

    Eigen::MatrixXd points(vecs.size(), vecs.front().values.size());
    for (size_t i = 0; i < vecs.size(); ++i)
        for (size_t k = 0; k < vecs[i].values.size(); ++k) points(i, k) = vecs[i].values[k];
    return points;
}

// ---------------------------------------------------------------------------
// IO

void write_benchmark_file(const std::string& path, const Benchmark& benchmark) {
    std::vector<Json> rows;
    rows.reserve(benchmark.prompts.size());
    for (const auto& p : benchmark.prompts) {
        Json j{{"question_id", p.question_id},
               {"prompt", p.text},
               {"cluster_id", p.cluster_id},
               {"quality_score", p.quality_score}};
        if (p.cluster_name) j["cluster_name"] = *p.cluster_name;
        rows.push_back(std::move(j));
    }
    write_jsonl_file(path, rows);
}

Benchmark read_benchmark_file(const std::string& path) {
    Benchmark b;
    for (const auto& j : read_jsonl_file(path)) {
        BenchmarkPrompt p;
        p.question_id = j.at("question_id").get<std::string>();
        p.text = j.at("prompt").get<std::string>();
        p.cluster_id = j.value("cluster_id", 0);
        p.quality_score = j.value("quality_score", 0);
        if (j.contains("cluster_name")) p.cluster_name = j["cluster_name"].get<std::string>();
        b.prompts.push_back(std::move(p));
    }
    return b;
}

void write_clusters_file(const std::string& path, const std::vector<TopicCluster>& clusters,
                         const std::vector<std::string>& noise_ids) {
    std::vector<Json> rows;
    rows.reserve(clusters.size() + 1);
    for (const auto& c : clusters) rows.push_back(c.to_json());
    if (!noise_ids.empty()) rows.push_back(Json{{"noise_ids", noise_ids}});
    write_jsonl_file(path, rows);
}

std::vector<TopicCluster> read_clusters_file(const std::string& path) {
    std::vector<TopicCluster> clusters;
    for (const auto& j : read_jsonl_file(path)) {
        if (j.contains("noise_ids")) continue;
        clusters.push_back(TopicCluster::from_json(j));
    }
    return clusters;
}

}  // namespace benchkit
