#include <doctest.h>

#include <algorithm>

#include "benchkit/errors.hpp"
#include "benchkit/rng.hpp"
#include "benchkit/topic_pipeline.hpp"

using namespace benchkit;

namespace {

Eigen::MatrixXd random_matrix(int n, int d, uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
    return m;
}

double pairwise_distance_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double worst = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = i + 1; j < a.rows(); ++j) {
            double da = (a.row(i) - a.row(j)).norm();
            double db = (b.row(i) - b.row(j)).norm();
            worst = std::max(worst, std::abs(da - db));
        }
    return worst;
}

AnnotationSet scores_for(const std::vector<std::pair<std::string, int>>& entries) {
    AnnotationSet set;
    set.annotator_model = "anno";
    for (const auto& [id, score] : entries) {
        QualityAnnotation a;
        a.prompt_id = id;
        for (int c = 1; c <= score; ++c) a.satisfied.insert(c);
        a.score = score;
        a.annotator_model = "anno";
        set.annotations.push_back(std::move(a));
    }
    return set;
}

}  // namespace

TEST_CASE("reduce: full-dimension projection preserves pairwise distances") {
    Eigen::MatrixXd points = random_matrix(20, 5, 7);
    ReducedEmbedding red = reduce_dimensions(points, 5);
    CHECK_FALSE(red.degenerate);
    CHECK(pairwise_distance_gap(points, red.points) < 1e-9);
}

TEST_CASE("reduce: collinear points keep their ordering on the line") {
    Eigen::MatrixXd points(3, 10);
    Eigen::RowVectorXd direction = Eigen::RowVectorXd::LinSpaced(10, 0.3, 1.2);
    points.row(0) = 1.0 * direction;
    points.row(1) = 2.0 * direction;
    points.row(2) = 5.0 * direction;
    ReducedEmbedding red = reduce_dimensions(points, 1);
    double a = red.points(0, 0), b = red.points(1, 0), c = red.points(2, 0);
    CHECK(((a < b && b < c) || (a > b && b > c)));
    // spacing reflects the 1:3 gap ratio along the line
    CHECK(std::abs(c - b) / std::abs(b - a) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("reduce: explained variance matches an independent SVD oracle") {
    Eigen::MatrixXd points = random_matrix(200, 50, 11);
    ReducedEmbedding red = reduce_dimensions(points, 10);

    // oracle: singular values of the centered data, an independent route
    Eigen::MatrixXd centered = points.rowwise() - points.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    Eigen::VectorXd sv = svd.singularValues();
    double top = 0.0, total = 0.0;
    for (int i = 0; i < sv.size(); ++i) {
        double ev = sv(i) * sv(i);
        total += ev;
        if (i < 10) top += ev;
    }
    CHECK(red.explained_variance_ratio() == doctest::Approx(top / total).epsilon(1e-6));
}

TEST_CASE("reduce: degenerate batch returns a zero projection with the flag set") {
    Eigen::MatrixXd points = Eigen::MatrixXd::Constant(8, 6, 3.25);
    ReducedEmbedding red = reduce_dimensions(points, 2);
    CHECK(red.degenerate);
    CHECK(red.points.isZero(0.0));
}

TEST_CASE("reduce: preconditions") {
    Eigen::MatrixXd points = random_matrix(3, 5, 1);
    CHECK_THROWS_AS(reduce_dimensions(points, 3), PreconditionError);  // need >= k+1 points
    CHECK_THROWS_AS(reduce_dimensions(points, 0), PreconditionError);
    CHECK_THROWS_AS(reduce_dimensions(points, 6), PreconditionError);
}

TEST_CASE("cluster: two well-separated blobs against a nearest-centroid oracle") {
    Rng rng(13);
    const int per_blob = 20;
    Eigen::MatrixXd points(2 * per_blob, 4);
    std::vector<std::string> ids;
    Eigen::RowVector4d center_a(10.0, 0.0, 0.0, 0.0);
    Eigen::RowVector4d center_b(0.0, 10.0, 0.0, 0.0);
    for (int i = 0; i < 2 * per_blob; ++i) {
        Eigen::RowVector4d noise;
        for (int k = 0; k < 4; ++k) noise(k) = 0.05 * rng.normal();
        points.row(i) = (i < per_blob ? center_a : center_b) + noise;
        ids.push_back((i < per_blob ? "a" : "b") + std::to_string(i));
    }

    ClusterOutcome out = cluster_topics(ids, points, {});
    REQUIRE(out.clusters.size() == 2);
    CHECK(out.noise_ids.empty());

    // oracle: nearest centroid must agree with the cluster assignment
    for (const auto& cluster : out.clusters) {
        for (const auto& id : cluster.member_ids) {
            size_t idx = std::stoul(id.substr(1)) ;
            bool in_a = id[0] == 'a';
            double da = (points.row(static_cast<Eigen::Index>(idx)) - center_a).norm();
            double db = (points.row(static_cast<Eigen::Index>(idx)) - center_b).norm();
            CHECK(in_a == (da < db));
        }
        // all members share a blob prefix
        char prefix = cluster.member_ids.front()[0];
        for (const auto& id : cluster.member_ids) CHECK(id[0] == prefix);
    }
}

TEST_CASE("cluster: identical points form one cluster") {
    Eigen::MatrixXd points = Eigen::MatrixXd::Constant(5, 3, 1.0);
    std::vector<std::string> ids{"p1", "p2", "p3", "p4", "p5"};
    ClusterOutcome out = cluster_topics(ids, points, {});
    REQUIRE(out.clusters.size() == 1);
    CHECK(out.clusters[0].member_ids.size() == 5);
}

TEST_CASE("cluster: groups under min_cluster_size become noise") {
    Eigen::MatrixXd points(2, 3);
    points << 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
    ClusterOutcome out = cluster_topics({"x", "y"}, points, {});
    CHECK(out.clusters.empty());
    CHECK(out.noise_ids.size() == 2);
}

TEST_CASE("cluster: output does not depend on input order") {
    Eigen::MatrixXd points = random_matrix(30, 6, 99);
    // three tight groups around distinct anchors
    for (int i = 0; i < 30; ++i) {
        points.row(i) *= 0.02;
        points(i, i % 3) += 5.0;
    }
    std::vector<std::string> ids;
    for (int i = 0; i < 30; ++i) ids.push_back("p" + std::to_string(i));

    ClusterOutcome original = cluster_topics(ids, points, {});

    std::vector<size_t> perm(30);
    for (size_t i = 0; i < 30; ++i) perm[i] = i;
    Rng rng(5);
    rng.shuffle(perm);
    Eigen::MatrixXd shuffled_points(30, 6);
    std::vector<std::string> shuffled_ids(30);
    for (size_t i = 0; i < 30; ++i) {
        shuffled_points.row(static_cast<Eigen::Index>(i)) =
            points.row(static_cast<Eigen::Index>(perm[i]));
        shuffled_ids[i] = ids[perm[i]];
    }
    ClusterOutcome shuffled = cluster_topics(shuffled_ids, shuffled_points, {});

    REQUIRE(original.clusters.size() == shuffled.clusters.size());
    for (size_t c = 0; c < original.clusters.size(); ++c)
        CHECK(original.clusters[c].member_ids == shuffled.clusters[c].member_ids);
    CHECK(original.noise_ids == shuffled.noise_ids);
}

TEST_CASE("attach_scores: arithmetic means and missing annotations") {
    TopicCluster c;
    c.cluster_id = 1;
    c.member_ids = {"p1", "p2", "p3"};
    std::vector<TopicCluster> clusters{c};

    attach_scores(clusters, scores_for({{"p1", 2}, {"p2", 3}, {"p3", 3}}));
    CHECK(clusters[0].mean_score == doctest::Approx(8.0 / 3.0).epsilon(1e-12));

    attach_scores(clusters, scores_for({{"p1", 7}, {"p2", 7}, {"p3", 7}}));
    CHECK(clusters[0].mean_score == doctest::Approx(7.0));

    AnnotationSet missing = scores_for({{"p1", 2}, {"p2", 3}});
    CHECK_THROWS_WITH_AS(attach_scores(clusters, missing), doctest::Contains("p3"), Error);
}

TEST_CASE("attach_scores: a trivial-greeting cluster stays below the mean threshold") {
    TopicCluster c;
    c.cluster_id = 1;
    c.member_ids = {"g1", "g2", "g3"};
    std::vector<TopicCluster> clusters{c};
    attach_scores(clusters, scores_for({{"g1", 3}, {"g2", 2}, {"g3", 3}}));
    CHECK(clusters[0].mean_score == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
    CHECK(clusters[0].mean_score < 5.0);
}

TEST_CASE("name_clusters: stub names, empty replies leave the name unset") {
    Corpus corpus;
    for (int i = 0; i < 4; ++i) {
        PromptRecord r;
        r.id = "p" + std::to_string(i);
        r.text = "implement dijkstra shortest path over weighted graphs " + std::to_string(i);
        corpus.records.push_back(std::move(r));
    }
    TopicCluster c;
    c.cluster_id = 1;
    c.member_ids = {"p0", "p1", "p2", "p3"};
    std::vector<TopicCluster> clusters{c};

    auto stub = std::make_shared<StubProvider>();
    Gateway gw(stub, GatewayConfig{});
    name_clusters(clusters, corpus, "namer", gw);
    REQUIRE(clusters[0].name.has_value());
    CHECK_FALSE(clusters[0].name->empty());

    class EmptyNamer : public Provider {
    public:
        ChatResponse chat(const ChatRequest&) override { return {"", 0, 0, false}; }
        std::vector<EmbeddingVector> embed(const std::string&,
                                           const std::vector<std::string>&) override {
            throw Error("not used");
        }
    };
    clusters[0].name.reset();
    Gateway gw2(std::make_shared<EmptyNamer>(), GatewayConfig{});
    name_clusters(clusters, corpus, "namer", gw2);
    CHECK_FALSE(clusters[0].name.has_value());
}

namespace {

// A synthetic curation universe: `good` clusters qualifying on every rule,
// plus clusters failing the mean bar and clusters with thin qualifying
// pools.
struct CurationFixture {
    std::vector<TopicCluster> clusters;
    Corpus corpus;
    AnnotationSet annotations;

    CurationFixture(int good, int low_mean, int thin) {
        annotations.annotator_model = "anno";
        int next_cluster = 1;
        auto add_prompt = [&](const std::string& id, int score) {
            PromptRecord r;
            r.id = id;
            r.text = "prompt text for " + id;
            r.language = "en";
            corpus.records.push_back(std::move(r));
            QualityAnnotation a;
            a.prompt_id = id;
            for (int c = 1; c <= score; ++c) a.satisfied.insert(c);
            a.score = score;
            annotations.annotations.push_back(std::move(a));
        };
        for (int g = 0; g < good; ++g) {
            TopicCluster c;
            c.cluster_id = next_cluster++;
            for (int m = 0; m < 4; ++m) {
                std::string id = "good" + std::to_string(g) + "_" + std::to_string(m);
                add_prompt(id, m < 3 ? 7 : 6);
                c.member_ids.push_back(id);
            }
            clusters.push_back(std::move(c));
        }
        for (int g = 0; g < low_mean; ++g) {
            TopicCluster c;
            c.cluster_id = next_cluster++;
            for (int m = 0; m < 4; ++m) {
                std::string id = "low" + std::to_string(g) + "_" + std::to_string(m);
                add_prompt(id, m == 0 ? 7 : 2);  // mean 3.25 < 5, one qualifying prompt
                c.member_ids.push_back(id);
            }
            clusters.push_back(std::move(c));
        }
        for (int g = 0; g < thin; ++g) {
            TopicCluster c;
            c.cluster_id = next_cluster++;
            for (int m = 0; m < 4; ++m) {
                // mean 5.5 >= 5, but only one prompt clears score >= 6
                std::string id = "thin" + std::to_string(g) + "_" + std::to_string(m);
                add_prompt(id, m == 0 ? 7 : 5);
                c.member_ids.push_back(id);
            }
            clusters.push_back(std::move(c));
        }
        attach_scores(clusters, annotations);
    }
};

}  // namespace

TEST_CASE("build_benchmark: thresholds, per-cluster contribution and seeding") {
    CurationFixture fx(12, 3, 2);
    BenchmarkSpec spec;
    spec.prompts_per_cluster = 2;
    spec.clusters_to_sample = 10;
    spec.prompt_score_min = 6;
    spec.cluster_mean_min = 5.0;
    spec.seed = 41;

    BuildOutcome out = build_benchmark(fx.clusters, fx.corpus, fx.annotations, spec);
    CHECK(out.benchmark.prompts.size() == 20);
    CHECK(out.warnings.size() == 2);  // the thin clusters

    std::map<int, int> per_cluster;
    for (const auto& p : out.benchmark.prompts) {
        CHECK(p.quality_score >= 6);
        per_cluster[p.cluster_id]++;
    }
    for (const auto& [cid, count] : per_cluster) CHECK(count == 2);
    CHECK(per_cluster.size() == 10);

    // same seed reproduces, different seed samples differently
    BuildOutcome again = build_benchmark(fx.clusters, fx.corpus, fx.annotations, spec);
    REQUIRE(again.benchmark.prompts.size() == out.benchmark.prompts.size());
    for (size_t i = 0; i < out.benchmark.prompts.size(); ++i)
        CHECK(again.benchmark.prompts[i].question_id == out.benchmark.prompts[i].question_id);

    spec.seed = 42;
    BuildOutcome other = build_benchmark(fx.clusters, fx.corpus, fx.annotations, spec);
    bool any_difference = false;
    for (size_t i = 0; i < out.benchmark.prompts.size(); ++i)
        if (other.benchmark.prompts[i].question_id != out.benchmark.prompts[i].question_id)
            any_difference = true;
    CHECK(any_difference);
    std::map<int, int> other_counts;
    for (const auto& p : other.benchmark.prompts) other_counts[p.cluster_id]++;
    for (const auto& [cid, count] : other_counts) CHECK(count == 2);
}

TEST_CASE("build_benchmark: unreachable prompt bar reports the shortfall") {
    CurationFixture fx(5, 0, 0);
    BenchmarkSpec spec;
    spec.clusters_to_sample = 5;
    spec.prompt_score_min = 8;  // no prompt can score 8
    CHECK_THROWS_AS(build_benchmark(fx.clusters, fx.corpus, fx.annotations, spec), Error);
}

TEST_CASE("build_benchmark: insufficient qualifying clusters reports the shortfall") {
    CurationFixture fx(4, 2, 0);
    BenchmarkSpec spec;
    spec.clusters_to_sample = 10;
    CHECK_THROWS_WITH_AS(build_benchmark(fx.clusters, fx.corpus, fx.annotations, spec),
                         doctest::Contains("shortfall"), Error);
}

TEST_CASE("benchmark file round-trip preserves provenance") {
    CurationFixture fx(6, 0, 0);
    BenchmarkSpec spec;
    spec.clusters_to_sample = 5;
    spec.seed = 3;
    BuildOutcome out = build_benchmark(fx.clusters, fx.corpus, fx.annotations, spec);

    write_benchmark_file("test_benchmark.jsonl", out.benchmark);
    Benchmark back = read_benchmark_file("test_benchmark.jsonl");
    REQUIRE(back.prompts.size() == out.benchmark.prompts.size());
    CHECK(back.checksum() == out.benchmark.checksum());
    CHECK(back.prompts[0].cluster_id == out.benchmark.prompts[0].cluster_id);
    std::remove("test_benchmark.jsonl");
}

TEST_CASE("clusters file round-trip") {
    CurationFixture fx(3, 1, 0);
    fx.clusters[0].name = "Graph Algorithms";
    write_clusters_file("test_clusters.jsonl", fx.clusters, {"noise1"});
    std::vector<TopicCluster> back = read_clusters_file("test_clusters.jsonl");
    REQUIRE(back.size() == fx.clusters.size());
    CHECK(back[0].name == fx.clusters[0].name);
    CHECK(back[0].member_ids == fx.clusters[0].member_ids);
    CHECK(back[0].mean_score == doctest::Approx(fx.clusters[0].mean_score));
    std::remove("test_clusters.jsonl");
}

TEST_CASE("embed_corpus produces one row per record through the gateway") {
    Corpus corpus;
    for (int i = 0; i < 6; ++i) {
        PromptRecord r;
        r.id = "p" + std::to_string(i);
        r.text = "text sample " + std::to_string(i);
        corpus.records.push_back(std::move(r));
    }
    Gateway gw(std::make_shared<StubProvider>(), GatewayConfig{});
    Eigen::MatrixXd m = embed_corpus(corpus, "embedder", gw);
    CHECK(m.rows() == 6);
    CHECK(m.cols() == StubProvider::kEmbedDim);
}
