#include "benchkit/judge_harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <sstream>
#include <thread>

#include "benchkit/errors.hpp"
#include "benchkit/templates.hpp"

namespace benchkit {

namespace {

struct LabelEntry {
    Verdict verdict;
    const char* label;   // bracketed form in judgments
    const char* token;   // stored form
};

// Longest-first so "[[A>>B]]" is never read as "[[A>B]]".
constexpr std::array<LabelEntry, 5> kLabels{{
    {Verdict::A_MUCH_BETTER, "[[A>>B]]", "A>>B"},
    {Verdict::B_MUCH_BETTER, "[[B>>A]]", "B>>A"},
    {Verdict::A_BETTER, "[[A>B]]", "A>B"},
    {Verdict::B_BETTER, "[[B>A]]", "B>A"},
    {Verdict::TIE, "[[A=B]]", "A=B"},
}};

}  // namespace

std::string render_verdict_label(Verdict v) {
    for (const auto& e : kLabels)
        if (e.verdict == v) return e.label;
    throw Error("unknown verdict");
}

std::string verdict_token(Verdict v) {
    for (const auto& e : kLabels)
        if (e.verdict == v) return e.token;
    throw Error("unknown verdict");
}

Verdict verdict_from_token(const std::string& token) {
    for (const auto& e : kLabels)
        if (token == e.token) return e.verdict;
    throw Error("unknown verdict token '" + token + "'");
}

Verdict parse_verdict(const std::string& judgment) {
    bool found = false;
    Verdict last = Verdict::TIE;
    size_t pos = 0;
    while ((pos = judgment.find("[[", pos)) != std::string::npos) {
        bool matched = false;
        for (const auto& e : kLabels) {
            if (judgment.compare(pos, std::char_traits<char>::length(e.label), e.label) == 0) {
                last = e.verdict;
                found = true;
                pos += std::char_traits<char>::length(e.label);
                matched = true;
                break;
            }
        }
        if (!matched) pos += 2;
    }
    if (!found) throw VerdictParseError("no verdict label in judgment", judgment);
    return last;
}

Json Answer::to_json() const {
    return Json{{"question_id", question_id},
                {"model", model},
                {"text", text},
                {"style", style.to_json()}};
}

Answer Answer::from_json(const Json& j) {
    Answer a;
    a.question_id = j.at("question_id").get<std::string>();
    a.model = j.at("model").get<std::string>();
    a.text = j.at("text").get<std::string>();
    if (j.contains("style")) a.style = StyleFeatures::from_json(j["style"]);
    return a;
}

const Answer* AnswerSet::find(const std::string& question_id) const {
    for (const auto& a : answers)
        if (a.question_id == question_id) return &a;
    return nullptr;
}

Json Battle::to_json() const {
    return Json{{"question_id", question_id},
                {"first_model", first_model},
                {"second_model", second_model},
                {"verdict", verdict_token(verdict)},
                {"judge_model", judge_model},
                {"game_index", game_index},
                {"raw_judgment", raw_judgment},
                {"first_style", first_style.to_json()},
                {"second_style", second_style.to_json()}};
}

Battle Battle::from_json(const Json& j) {
    Battle b;
    b.question_id = j.at("question_id").get<std::string>();
    b.first_model = j.at("first_model").get<std::string>();
    b.second_model = j.at("second_model").get<std::string>();
    b.verdict = verdict_from_token(j.at("verdict").get<std::string>());
    b.judge_model = j.value("judge_model", "");
    b.game_index = j.value("game_index", 1);
    b.raw_judgment = j.value("raw_judgment", "");
    if (j.contains("first_style")) b.first_style = StyleFeatures::from_json(j["first_style"]);
    if (j.contains("second_style")) b.second_style = StyleFeatures::from_json(j["second_style"]);
    return b;
}

AnswerSet generate_answers(const Benchmark& benchmark, const std::string& model, Gateway& gateway,
                           const std::string& system_prompt, int max_tokens) {
    AnswerSet set;
    set.model = model;
    set.answers.resize(benchmark.prompts.size());
    std::vector<bool> ok(benchmark.prompts.size(), false);

    size_t workers =
        std::min<size_t>(benchmark.prompts.size(), static_cast<size_t>(gateway.config().max_in_flight));
    if (workers == 0) workers = 1;
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= benchmark.prompts.size()) return;
                const auto& prompt = benchmark.prompts[i];
                ChatRequest req;
                req.model = model;
                req.system = system_prompt.empty() ? kAnswerSystemInstruction : system_prompt;
                req.user = prompt.text;
                req.temperature = 0.0;
                req.max_tokens = max_tokens;
                try {
                    ChatResponse res = gateway.chat(req);
                    Answer a;
                    a.question_id = prompt.question_id;
                    a.model = model;
                    a.text = res.text;
                    a.style = extract_style(res.text);
                    set.answers[i] = std::move(a);
                    ok[i] = true;
                } catch (const std::exception&) {
                    // recorded as a gap below
                }
            }
        });
    }
    for (auto& t : pool) t.join();

    std::vector<Answer> kept;
    kept.reserve(set.answers.size());
    for (size_t i = 0; i < set.answers.size(); ++i) {
        if (ok[i])
            kept.push_back(std::move(set.answers[i]));
        else
            set.missing.push_back(benchmark.prompts[i].question_id);
    }
    set.answers = std::move(kept);
    return set;
}

std::string compose_judge_user_message(const std::string& question, const std::string& answer_a,
                                       const std::string& answer_b) {
    std::ostringstream out;
    out << "<|User Prompt|>\n" << question << "\n\n";
    out << "<|The Start of Assistant A's Answer|>\n" << answer_a
        << "\n<|The End of Assistant A's Answer|>\n\n";
    out << "<|The Start of Assistant B's Answer|>\n" << answer_b
        << "\n<|The End of Assistant B's Answer|>";
    return out.str();
}

Battle judge_pair(const std::string& question_id, const std::string& question,
                  const Answer& answer_a, const Answer& answer_b, const std::string& judge_model,
                  Gateway& gateway, const JudgeOptions& opts) {
    ChatRequest req;
    req.model = judge_model;
    req.system = kJudgeSystemInstruction;
    req.user = compose_judge_user_message(question, answer_a.text, answer_b.text);
    req.temperature = opts.temperature;
    req.max_tokens = opts.max_tokens;
    ChatResponse res = gateway.chat(req);

    Battle b;
    b.question_id = question_id;
    b.first_model = answer_a.model;
    b.second_model = answer_b.model;
    b.judge_model = judge_model;
    b.raw_judgment = res.text;
    b.verdict = parse_verdict(res.text);
    b.first_style = answer_a.style;
    b.second_style = answer_b.style;
    return b;
}

BattleSet run_evaluation(const Benchmark& benchmark, const AnswerSet& candidate,
                         const AnswerSet& baseline, const std::string& judge_model,
                         Gateway& gateway, const JudgeOptions& opts) {
    BattleSet set;
    set.benchmark_checksum = benchmark.checksum();
    set.candidate_model = candidate.model;
    set.baseline_model = baseline.model;

    struct Game {
        size_t prompt_index;
        int game_index;
    };
    std::vector<Game> games;
    for (size_t i = 0; i < benchmark.prompts.size(); ++i) {
        const auto& p = benchmark.prompts[i];
        if (!candidate.find(p.question_id) || !baseline.find(p.question_id)) {
            set.skipped.push_back(p.question_id);
            continue;
        }
        games.push_back({i, 1});
        games.push_back({i, 2});
    }

    std::vector<Battle> battles(games.size());
    std::vector<bool> ok(games.size(), false);
    size_t workers = std::min<size_t>(games.size(), static_cast<size_t>(gateway.config().max_in_flight));
    if (workers == 0) workers = 1;
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t g = next.fetch_add(1);
                if (g >= games.size()) return;
                const auto& prompt = benchmark.prompts[games[g].prompt_index];
                const Answer* cand = candidate.find(prompt.question_id);
                const Answer* base = baseline.find(prompt.question_id);
                // Game 1 presents the candidate first; game 2 swaps.
                const Answer* first = (games[g].game_index == 1) ? cand : base;
                const Answer* second = (games[g].game_index == 1) ? base : cand;
                try {
                    Battle b = judge_pair(prompt.question_id, prompt.text, *first, *second,
                                          judge_model, gateway, opts);
                    b.game_index = games[g].game_index;
                    battles[g] = std::move(b);
                    ok[g] = true;
                } catch (const std::exception&) {
                    // gap recorded below
                }
            }
        });
    }
    for (auto& t : pool) t.join();

    for (size_t g = 0; g < games.size(); ++g) {
        if (ok[g]) {
            set.battles.push_back(std::move(battles[g]));
        } else {
            const auto& qid = benchmark.prompts[games[g].prompt_index].question_id;
            if (std::find(set.skipped.begin(), set.skipped.end(), qid) == set.skipped.end())
                set.skipped.push_back(qid);
        }
    }
    return set;
}

BattleSet pool_judgments(const std::vector<BattleSet>& sets) {
    if (sets.empty()) throw PreconditionError("pool_judgments: no battle sets");
    BattleSet out;
    out.benchmark_checksum = sets.front().benchmark_checksum;
    out.candidate_model = sets.front().candidate_model;
    out.baseline_model = sets.front().baseline_model;
    for (const auto& s : sets) {
        if (s.benchmark_checksum != out.benchmark_checksum)
            throw Error("pool_judgments: battle sets come from different benchmarks");
        if (s.candidate_model != out.candidate_model || s.baseline_model != out.baseline_model)
            throw Error("pool_judgments: battle sets cover different model pairs");
        out.battles.insert(out.battles.end(), s.battles.begin(), s.battles.end());
        out.skipped.insert(out.skipped.end(), s.skipped.begin(), s.skipped.end());
    }
    return out;
}

void write_answers_file(const std::string& path, const AnswerSet& set) {
    std::vector<Json> rows;
    rows.reserve(set.answers.size() + 1);
    Json header{{"model", set.model}};
    if (!set.missing.empty()) header["missing"] = set.missing;
    rows.push_back(std::move(header));
    for (const auto& a : set.answers) rows.push_back(a.to_json());
    write_jsonl_file(path, rows);
}

AnswerSet read_answers_file(const std::string& path) {
    AnswerSet set;
    bool first = true;
    for (const auto& j : read_jsonl_file(path)) {
        if (first) {
            first = false;
            if (j.contains("model") && !j.contains("question_id")) {
                set.model = j["model"].get<std::string>();
                if (j.contains("missing"))
                    set.missing = j["missing"].get<std::vector<std::string>>();
                continue;
            }
        }
        set.answers.push_back(Answer::from_json(j));
        if (set.model.empty()) set.model = set.answers.back().model;
    }
    return set;
}

void write_battles_file(const std::string& path, const BattleSet& set) {
    std::vector<Json> rows;
    rows.reserve(set.battles.size() + 1);
    Json header{{"benchmark_checksum", set.benchmark_checksum},
                {"candidate_model", set.candidate_model},
                {"baseline_model", set.baseline_model}};
    if (!set.skipped.empty()) header["skipped"] = set.skipped;
    rows.push_back(std::move(header));
    for (const auto& b : set.battles) rows.push_back(b.to_json());
    write_jsonl_file(path, rows);
}

BattleSet read_battles_file(const std::string& path) {
    BattleSet set;
    bool first = true;
    for (const auto& j : read_jsonl_file(path)) {
        if (first) {
            first = false;
            if (j.contains("benchmark_checksum")) {
                set.benchmark_checksum = j["benchmark_checksum"].get<std::string>();
                set.candidate_model = j.value("candidate_model", "");
                set.baseline_model = j.value("baseline_model", "");
                if (j.contains("skipped"))
                    set.skipped = j["skipped"].get<std::vector<std::string>>();
                continue;
            }
        }
        set.battles.push_back(Battle::from_json(j));
    }
    return set;
}

}  // namespace benchkit
