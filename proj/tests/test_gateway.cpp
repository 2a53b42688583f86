#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

#include "benchkit/errors.hpp"
#include "benchkit/llm_gateway.hpp"

using namespace benchkit;
namespace fs = std::filesystem;

namespace {

// Provider double that counts calls, can fail the first N of them, and
// tracks the in-flight high-water mark.
class RecordingProvider : public Provider {
public:
    int embed_dim = 4;
    int fail_first = 0;              // transport-fail this many calls
    int sleep_ms = 0;
    std::string canned = "canned response";

    std::atomic<int> chat_calls{0};
    std::atomic<int> embed_calls{0};
    std::atomic<int> in_flight{0};
    std::atomic<int> max_in_flight_seen{0};
    std::vector<std::vector<std::string>> embed_batches;
    std::mutex batches_mutex;

    ChatResponse chat(const ChatRequest& req) override {
        Flight f(*this);
        int n = ++chat_calls;
        if (n <= fail_first) throw TransportError("simulated 429");
        ChatResponse res;
        res.text = canned.empty() ? req.system : canned;
        return res;
    }

    std::vector<EmbeddingVector> embed(const std::string& model,
                                       const std::vector<std::string>& texts) override {
        Flight f(*this);
        int n = ++embed_calls;
        if (n <= fail_first) throw TransportError("simulated 503");
        {
            std::lock_guard lock(batches_mutex);
            embed_batches.push_back(texts);
        }
        std::vector<EmbeddingVector> out;
        for (const auto& t : texts) {
            EmbeddingVector v;
            v.model = model;
            v.values.assign(embed_dim, static_cast<double>(t.size()));
            out.push_back(std::move(v));
        }
        return out;
    }

private:
    struct Flight {
        RecordingProvider& p;
        explicit Flight(RecordingProvider& prov) : p(prov) {
            int now = ++p.in_flight;
            int seen = p.max_in_flight_seen.load();
            while (now > seen && !p.max_in_flight_seen.compare_exchange_weak(seen, now)) {
            }
            if (p.sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(p.sleep_ms));
        }
        ~Flight() { --p.in_flight; }
    };
};

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("benchkit_test_" + std::to_string(std::chrono::steady_clock::now()
                                                      .time_since_epoch()
                                                      .count()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

GatewayConfig fast_config(const std::string& cache_dir = "") {
    GatewayConfig c;
    c.cache_dir = cache_dir;
    c.backoff_base_ms = 0;
    return c;
}

}  // namespace

TEST_CASE("chat: identical request twice is served from cache with no second call") {
    TempDir tmp;
    auto provider = std::make_shared<RecordingProvider>();
    Gateway gw(provider, fast_config((tmp.path / "cache").string()));

    ChatRequest req{"m", "sys", "user", 0.0, 128};
    ChatResponse a = gw.chat(req);
    ChatResponse b = gw.chat(req);
    CHECK(provider->chat_calls == 1);
    CHECK(a.text == b.text);
    CHECK_FALSE(a.from_cache);
    CHECK(b.from_cache);
    CHECK(gw.stats().cache_hits == 1);
}

TEST_CASE("chat: a cold gateway over the same cache dir replays with zero calls") {
    TempDir tmp;
    std::string cache = (tmp.path / "cache").string();
    ChatRequest req{"m", "sys", "user text", 0.0, 128};
    {
        auto provider = std::make_shared<RecordingProvider>();
        Gateway gw(provider, fast_config(cache));
        gw.chat(req);
        CHECK(provider->chat_calls == 1);
    }
    auto provider2 = std::make_shared<RecordingProvider>();
    provider2->canned = "should never be produced";
    Gateway gw2(provider2, fast_config(cache));
    ChatResponse res = gw2.chat(req);
    CHECK(provider2->chat_calls == 0);
    CHECK(res.text == "canned response");
    CHECK(res.from_cache);
}

TEST_CASE("chat: mock provider echo") {
    auto provider = std::make_shared<RecordingProvider>();
    provider->canned = "";  // echo the system prompt
    Gateway gw(provider, fast_config());
    ChatResponse res = gw.chat({"m", "the configured stub", "u", 0.0, 16});
    CHECK(res.text == "the configured stub");
}

TEST_CASE("retry: two transient failures then success within three attempts") {
    auto provider = std::make_shared<RecordingProvider>();
    provider->fail_first = 2;
    Gateway gw(provider, fast_config());
    ChatResponse res = gw.chat({"m", "s", "u", 0.0, 16});
    CHECK(res.text == "canned response");
    CHECK(provider->chat_calls == 3);
    CHECK(gw.stats().retries == 2);
}

TEST_CASE("retry: exhausted budget surfaces the transport error") {
    auto provider = std::make_shared<RecordingProvider>();
    provider->fail_first = 99;
    Gateway gw(provider, fast_config());
    CHECK_THROWS_AS(gw.chat({"m", "s", "u", 0.0, 16}), TransportError);
    CHECK(provider->chat_calls == 3);  // max_attempts
}

TEST_CASE("embed: one vector per text, shape preserved") {
    auto provider = std::make_shared<RecordingProvider>();
    Gateway gw(provider, fast_config());
    auto vecs = gw.embed("e", {"a", "bb", "ccc"});
    REQUIRE(vecs.size() == 3);
    for (const auto& v : vecs) CHECK(v.values.size() == 4);
    CHECK(vecs[0].values[0] == 1.0);
    CHECK(vecs[2].values[0] == 3.0);
}

TEST_CASE("embed: empty batch violates the precondition") {
    auto provider = std::make_shared<RecordingProvider>();
    Gateway gw(provider, fast_config());
    CHECK_THROWS_AS(gw.embed("e", {}), PreconditionError);
}

TEST_CASE("embed: batch of 2500 with provider limit 2048 makes 2 calls in order") {
    auto provider = std::make_shared<RecordingProvider>();
    GatewayConfig config = fast_config();
    config.embed_batch_limit = 2048;
    Gateway gw(provider, config);

    std::vector<std::string> texts;
    texts.reserve(2500);
    for (int i = 0; i < 2500; ++i) texts.push_back("t" + std::to_string(i));
    auto vecs = gw.embed("e", texts);

    REQUIRE(vecs.size() == 2500);
    CHECK(provider->embed_calls == 2);
    REQUIRE(provider->embed_batches.size() == 2);
    CHECK(provider->embed_batches[0].size() == 2048);
    CHECK(provider->embed_batches[1].size() == 452);
    // order preserved end to end
    CHECK(provider->embed_batches[0].front() == "t0");
    CHECK(provider->embed_batches[1].back() == "t2499");
    for (int i = 0; i < 2500; ++i)
        CHECK(vecs[i].values[0] == static_cast<double>(texts[i].size()));
}

TEST_CASE("gateway bounds concurrent provider calls") {
    auto provider = std::make_shared<RecordingProvider>();
    provider->sleep_ms = 5;
    GatewayConfig config = fast_config();
    config.max_in_flight = 3;
    Gateway gw(provider, config);

    std::vector<std::thread> threads;
    for (int i = 0; i < 12; ++i) {
        threads.emplace_back([&gw, i] {
            gw.chat({"m", "s", "u" + std::to_string(i), 0.0, 16});
        });
    }
    for (auto& t : threads) t.join();
    CHECK(provider->chat_calls == 12);
    CHECK(provider->max_in_flight_seen <= 3);
}

TEST_CASE("cache key is a pure function of request content") {
    ChatRequest a{"m", "s", "u", 0.5, 100};
    ChatRequest b{"m", "s", "u", 0.5, 100};
    ChatRequest c{"m", "s", "u", 0.5, 101};
    CHECK(Gateway::chat_cache_key(a) == Gateway::chat_cache_key(b));
    CHECK(Gateway::chat_cache_key(a) != Gateway::chat_cache_key(c));
    CHECK(Gateway::embed_cache_key("m", "x") != Gateway::embed_cache_key("m", "y"));
}

TEST_CASE("stub provider: deterministic and distinct per role") {
    StubProvider stub;
    ChatRequest annotate{"anno", "... Criteria Satisfied ...", "a prompt with several words here",
                         0.0, 64};
    ChatResponse r1 = stub.chat(annotate);
    ChatResponse r2 = stub.chat(annotate);
    CHECK(r1.text == r2.text);
    CHECK(r1.text.find("Criteria Satisfied: [") != std::string::npos);

    auto vecs = stub.embed("e", {"one two three", "one two three", "different text entirely"});
    CHECK(vecs[0].values == vecs[1].values);
    CHECK(vecs[0].values != vecs[2].values);
}
