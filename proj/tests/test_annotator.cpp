#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>

#include "benchkit/annotator.hpp"
#include "benchkit/errors.hpp"
#include "benchkit/templates.hpp"

using namespace benchkit;
namespace fs = std::filesystem;

namespace {

// Replies with a scripted response per prompt text; default is a clean
// five-criteria verdict.
class ScriptedAnnotator : public Provider {
public:
    std::map<std::string, std::string> responses;
    std::string fallback =
        "The prompt is detailed and technical.\nCriteria Satisfied: [1, 2, 4, 6, 7]";
    std::atomic<int> calls{0};

    ChatResponse chat(const ChatRequest& req) override {
        ++calls;
        ChatResponse res;
        auto it = responses.find(req.user);
        res.text = it != responses.end() ? it->second : fallback;
        return res;
    }
    std::vector<EmbeddingVector> embed(const std::string&,
                                       const std::vector<std::string>&) override {
        throw Error("not used");
    }
};

Corpus make_corpus(int n) {
    Corpus c;
    for (int i = 0; i < n; ++i) {
        PromptRecord r;
        r.id = "p" + std::to_string(i);
        r.text = "prompt number " + std::to_string(i);
        r.language = "en";
        c.records.push_back(std::move(r));
    }
    return c;
}

AnnotationSet constant_set(const std::string& model, int n, const std::set<int>& satisfied) {
    AnnotationSet s;
    s.annotator_model = model;
    for (int i = 0; i < n; ++i) {
        QualityAnnotation a;
        a.prompt_id = "p" + std::to_string(i);
        a.satisfied = satisfied;
        a.score = static_cast<int>(satisfied.size());
        a.annotator_model = model;
        s.annotations.push_back(std::move(a));
    }
    return s;
}

}  // namespace

TEST_CASE("parse_criteria: the documented examples") {
    CHECK(parse_criteria("analysis...\nCriteria Satisfied: [1, 2, 4, 6, 7]") ==
          std::set<int>{1, 2, 4, 6, 7});
    CHECK(parse_criteria("Criteria Satisfied: []").empty());
    // last occurrence wins
    CHECK(parse_criteria("Criteria Satisfied: [1]\n...revised...\nCriteria Satisfied: [2, 3]") ==
          std::set<int>{2, 3});
}

TEST_CASE("parse_criteria: whitespace tolerance and failure modes") {
    CHECK(parse_criteria("Criteria Satisfied:   [ 3 ,5, 7 ]") == std::set<int>{3, 5, 7});
    CHECK_THROWS_AS(parse_criteria("no marker at all"), AnnotationParseError);
    CHECK_THROWS_AS(parse_criteria("Criteria Satisfied: 1, 2"), AnnotationParseError);
    CHECK_THROWS_AS(parse_criteria("Criteria Satisfied: [0]"), AnnotationParseError);
    CHECK_THROWS_AS(parse_criteria("Criteria Satisfied: [8]"), AnnotationParseError);
    CHECK_THROWS_AS(parse_criteria("Criteria Satisfied: [1, ]"), AnnotationParseError);
    try {
        parse_criteria("garbled");
    } catch (const AnnotationParseError& e) {
        CHECK(e.raw_response == "garbled");
    }
}

TEST_CASE("criteria grammar round-trips all 128 subsets") {
    for (int mask = 0; mask < 128; ++mask) {
        std::set<int> s;
        for (int c = 1; c <= 7; ++c)
            if (mask & (1 << (c - 1))) s.insert(c);
        CHECK(parse_criteria(render_criteria(s)) == s);
    }
}

TEST_CASE("score is the cardinality of the satisfied set, monotone under inclusion") {
    ScriptedAnnotator* raw = new ScriptedAnnotator();
    std::shared_ptr<Provider> provider(raw);
    Gateway gw(provider, GatewayConfig{});
    PromptRecord p{"p0", "some prompt", "", 1, "en", {}};

    raw->fallback = "Criteria Satisfied: [2, 5]";
    QualityAnnotation small = annotate(p, "anno", gw);
    raw->fallback = "Criteria Satisfied: [2, 3, 5, 7]";
    QualityAnnotation large = annotate(p, "anno", gw);

    CHECK(small.score == 2);
    CHECK(large.score == 4);
    CHECK(small.score <= large.score);
    CHECK(small.raw_response.find("[2, 5]") != std::string::npos);
    CHECK(small.annotator_model == "anno");
}

TEST_CASE("annotate sends the canonical instruction verbatim") {
    class CapturingProvider : public ScriptedAnnotator {
    public:
        std::string last_system;
        ChatResponse chat(const ChatRequest& req) override {
            last_system = req.system;
            return ScriptedAnnotator::chat(req);
        }
    };
    auto provider = std::make_shared<CapturingProvider>();
    Gateway gw(provider, GatewayConfig{});
    annotate({"p0", "text", "", 1, "en", {}}, "anno", gw);
    CHECK(provider->last_system == kAnnotatorSystemInstruction);
}

TEST_CASE("annotate_corpus: full coverage on a clean mock") {
    auto provider = std::make_shared<ScriptedAnnotator>();
    Gateway gw(provider, GatewayConfig{});
    Corpus corpus = make_corpus(10);
    AnnotationSet set = annotate_corpus(corpus, "anno", gw);
    REQUIRE(set.annotations.size() == 10);
    // assembly is ordered by corpus order regardless of completion order
    for (int i = 0; i < 10; ++i) CHECK(set.annotations[i].prompt_id == "p" + std::to_string(i));
}

TEST_CASE("annotate_corpus: failure over the threshold aborts naming the id") {
    auto provider = std::make_shared<ScriptedAnnotator>();
    provider->responses["prompt number 7"] = "no parseable verdict here";
    Gateway gw(provider, GatewayConfig{});
    Corpus corpus = make_corpus(10);  // 1/10 = 10% > 5%
    CHECK_THROWS_WITH_AS(annotate_corpus(corpus, "anno", gw), doctest::Contains("p7"), Error);
}

TEST_CASE("annotate_corpus: rerun after abort hits only the cache") {
    fs::path tmp = fs::temp_directory_path() /
                   ("benchkit_anno_" +
                    std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(tmp);
    GatewayConfig config;
    config.cache_dir = (tmp / "cache").string();

    auto provider = std::make_shared<ScriptedAnnotator>();
    provider->responses["prompt number 3"] = "still not parseable";
    Corpus corpus = make_corpus(10);
    {
        Gateway gw(provider, config);
        CHECK_THROWS_AS(annotate_corpus(corpus, "anno", gw), Error);
        CHECK(provider->calls == 10);
    }
    {
        Gateway gw(provider, config);
        CHECK_THROWS_AS(annotate_corpus(corpus, "anno", gw), Error);
        CHECK(provider->calls == 10);  // zero new provider calls
        CHECK(gw.stats().provider_calls == 0);
        CHECK(gw.stats().cache_hits == 10);
    }
    fs::remove_all(tmp);
}

TEST_CASE("cross_validate: identity and antisymmetry") {
    std::vector<std::string> ids;
    for (int i = 0; i < 20; ++i) ids.push_back("p" + std::to_string(i));

    AnnotationSet high = constant_set("v", 20, {1, 2, 3, 4, 5, 6});  // score 6: retain
    std::vector<AnnotationSet> voters{high, high, high};
    CHECK(cross_validate(ids, voters, high) == doctest::Approx(1.0));

    AnnotationSet low = constant_set("ref", 20, {1});  // score 1: discard
    CHECK(cross_validate(ids, voters, low) == doctest::Approx(0.0));
}

TEST_CASE("cross_validate: 200-prompt fixture with 29 flipped decisions scores 0.855") {
    // voters: first 100 prompts retained (score 7), rest discarded (score 0);
    // reference flips the decision on prompts 0..28
    std::vector<std::string> ids;
    AnnotationSet v1, v2, v3, ref;
    v1.annotator_model = "v1";
    v2.annotator_model = "v2";
    v3.annotator_model = "v3";
    ref.annotator_model = "ref";
    for (int i = 0; i < 200; ++i) {
        std::string id = "p" + std::to_string(i);
        ids.push_back(id);
        std::set<int> majority = i < 100 ? std::set<int>{1, 2, 3, 4, 5, 6, 7} : std::set<int>{};
        for (AnnotationSet* s : {&v1, &v2, &v3}) {
            QualityAnnotation a;
            a.prompt_id = id;
            a.satisfied = majority;
            a.score = static_cast<int>(majority.size());
            s->annotations.push_back(a);
        }
        QualityAnnotation r;
        r.prompt_id = id;
        bool flip = i < 29;
        bool retain = (i < 100) != flip;
        r.satisfied = retain ? std::set<int>{1, 2, 3, 4, 5, 6, 7} : std::set<int>{};
        r.score = static_cast<int>(r.satisfied.size());
        ref.annotations.push_back(r);
    }
    double agreement = cross_validate(ids, {v1, v2, v3}, ref);
    CHECK(agreement == doctest::Approx(0.855).epsilon(1e-12));
}

TEST_CASE("cross_validate: preconditions on the voter panel") {
    std::vector<std::string> ids{"p0"};
    AnnotationSet s = constant_set("v", 1, {1, 2, 3, 4, 5, 6});
    CHECK_THROWS_AS(cross_validate(ids, {s, s}, s), PreconditionError);
    CHECK_THROWS_AS(cross_validate(ids, {s, s, s, s}, s), PreconditionError);
}

TEST_CASE("annotations file round-trip") {
    AnnotationSet set = constant_set("anno", 3, {1, 4, 7});
    std::string path = "test_annotations_roundtrip.jsonl";
    write_annotations_file(path, set);
    AnnotationSet back = read_annotations_file(path);
    REQUIRE(back.annotations.size() == 3);
    CHECK(back.annotations[1].satisfied == std::set<int>{1, 4, 7});
    CHECK(back.annotations[1].score == 3);
    CHECK(back.annotator_model == "anno");
    std::remove(path.c_str());
}
