#pragma once

#include <optional>
#include <string>
#include <vector>

#include "benchkit/llm_gateway.hpp"
#include "benchkit/style_features.hpp"
#include "benchkit/topic_pipeline.hpp"

namespace benchkit {

// 5-point pairwise preference, always relative to positions (A = presented
// first). Model-relative outcomes are derived downstream, never stored.
enum class Verdict { A_MUCH_BETTER, A_BETTER, TIE, B_BETTER, B_MUCH_BETTER };

// "[[A>>B]]" etc.
std::string render_verdict_label(Verdict v);
// Token stored in battle records: "A>>B" etc.
std::string verdict_token(Verdict v);
Verdict verdict_from_token(const std::string& token);

// Scans a judgment for verdict labels; the last occurrence wins (the
// instruction asks for a *final* verdict, and judges often restate).
// Throws VerdictParseError when no label is present.
Verdict parse_verdict(const std::string& judgment);

struct Answer {
    std::string question_id;
    std::string model;
    std::string text;
    StyleFeatures style;

    Json to_json() const;
    static Answer from_json(const Json& j);
};

struct AnswerSet {
    std::string model;
    std::vector<Answer> answers;
    std::vector<std::string> missing;  // question ids that failed generation

    const Answer* find(const std::string& question_id) const;
};

struct Battle {
    std::string question_id;
    std::string first_model;
    std::string second_model;
    Verdict verdict = Verdict::TIE;
    std::string judge_model;
    int game_index = 1;  // game 2 swaps first/second of game 1
    std::string raw_judgment;
    StyleFeatures first_style;
    StyleFeatures second_style;

    Json to_json() const;
    static Battle from_json(const Json& j);
};

struct BattleSet {
    std::string benchmark_checksum;  // provenance guard for pooling
    std::string candidate_model;
    std::string baseline_model;
    std::vector<Battle> battles;
    std::vector<std::string> skipped;  // question ids without both answers
};

struct JudgeOptions {
    double temperature = 0.0;
    int max_tokens = 4096;
};

// One answer per benchmark prompt. Provider failures after retries leave a
// gap recorded in `missing` rather than aborting the run. Style features are
// computed at write time.
AnswerSet generate_answers(const Benchmark& benchmark, const std::string& model, Gateway& gateway,
                           const std::string& system_prompt = "", int max_tokens = 4096);

// Runs one positional game. The composed user message carries the question
// and both answers in fixed delimited sections.
Battle judge_pair(const std::string& question_id, const std::string& question,
                  const Answer& answer_a, const Answer& answer_b, const std::string& judge_model,
                  Gateway& gateway, const JudgeOptions& opts = {});

std::string compose_judge_user_message(const std::string& question, const std::string& answer_a,
                                       const std::string& answer_b);

// Two games per prompt: game 1 candidate first, game 2 baseline first.
// Prompts missing either answer are skipped and reported.
BattleSet run_evaluation(const Benchmark& benchmark, const AnswerSet& candidate,
                         const AnswerSet& baseline, const std::string& judge_model,
                         Gateway& gateway, const JudgeOptions& opts = {});

// Concatenates battle sets from multiple judges over the same benchmark and
// model pair; each battle keeps its judge_model and downstream weighting is
// per battle (equal weight per judgment).
BattleSet pool_judgments(const std::vector<BattleSet>& sets);

void write_answers_file(const std::string& path, const AnswerSet& set);
AnswerSet read_answers_file(const std::string& path);
void write_battles_file(const std::string& path, const BattleSet& set);
BattleSet read_battles_file(const std::string& path);

}  // namespace benchkit
