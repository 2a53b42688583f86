// benchkit: curate benchmark prompts from conversation logs and evaluate
// models on them with pairwise LLM judging and Bradley-Terry ratings.
//
// The pipeline is a chain of subcommands communicating only through files in
// the configured workdir:
//   ingest -> annotate -> cluster -> build-bench -> gen-answers -> judge
//     -> rate -> meta -> report
// Each stage writes its artifacts plus a manifest (config checksum, seed,
// input/output hashes, gateway counters). Rerunning a stage with the same
// seed and a warm cache reproduces its outputs byte-for-byte.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>

#include "benchkit/bench_metrics.hpp"
#include "benchkit/config.hpp"
#include "benchkit/errors.hpp"
#include "benchkit/hash.hpp"
#include "benchkit/manifest.hpp"
#include "benchkit/synthetic_lab.hpp"
#include "benchkit/templates.hpp"

namespace fs = std::filesystem;
using namespace benchkit;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<int> rounds;
    bool style_control = false;
    std::optional<std::string> judge;
    std::optional<std::string> baseline;
};

RunConfig load_with_overrides(const CommonArgs& args) {
    RunConfig config = load_config(args.config_path);
    if (args.seed) {
        config.seed = *args.seed;
        config.bench.seed = *args.seed;
    }
    if (args.rounds) config.bootstrap_rounds = *args.rounds;
    if (args.style_control) config.style_control = true;
    if (args.judge) config.judge_models = {*args.judge};
    if (args.baseline) config.baseline_model = *args.baseline;
    fs::create_directories(config.workdir);
    return config;
}

void finish_stage(const RunConfig& config, const std::string& stage,
                  const std::vector<std::string>& inputs, const std::vector<std::string>& outputs,
                  const Gateway* gateway = nullptr) {
    StageManifest m;
    m.stage = stage;
    m.config_checksum = config.config_checksum;
    m.seed = config.seed;
    for (const auto& p : inputs)
        if (fs::exists(p)) m.inputs.emplace_back(p, file_checksum(p));
    for (const auto& p : outputs)
        if (fs::exists(p)) m.outputs.emplace_back(p, file_checksum(p));
    if (gateway) m.gateway = gateway->stats();
    m.write(config.manifest_path(stage));
}

// ---------------------------------------------------------------------------

int cmd_ingest(const CommonArgs& args, const std::string& input_override) {
    RunConfig config = load_with_overrides(args);
    std::string raw = input_override.empty() ? config.raw_input : input_override;
    if (raw.empty()) throw ConfigError("ingest: no input file (set paths.raw or pass --input)");

    Corpus corpus = ingest_file(raw);
    FilterOutcome outcome = dedup_and_filter(corpus, config.filters);
    write_corpus_file(config.corpus_path(), outcome.corpus);
    write_text_file(config.filter_report_path(), outcome.report.to_json().dump(2) + "\n");

    std::cout << "ingest: " << outcome.report.input << " records in, " << outcome.report.kept
              << " kept (duplicates " << outcome.report.duplicates << ", multiturn "
              << outcome.report.multiturn << ", non-english " << outcome.report.non_english
              << ")\n";
    finish_stage(config, "ingest", {raw}, {config.corpus_path(), config.filter_report_path()});
    return 0;
}

int cmd_annotate(const CommonArgs& args) {
    RunConfig config = load_with_overrides(args);
    require_artifact(config.corpus_path(), "ingest", config);
    Corpus corpus = read_corpus_file(config.corpus_path());

    auto gateway = config.make_gateway();
    AnnotatorOptions opts;
    opts.max_failure_fraction = config.max_annotation_failure_fraction;
    AnnotationSet set = annotate_corpus(corpus, config.annotator_model, *gateway, opts);
    write_annotations_file(config.annotations_path(), set);

    std::cout << "annotate: " << set.annotations.size() << "/" << corpus.size()
              << " prompts annotated by " << config.annotator_model << "\n";
    finish_stage(config, "annotate", {config.corpus_path()}, {config.annotations_path()},
                 gateway.get());
    return 0;
}

int cmd_cluster(const CommonArgs& args) {
    RunConfig config = load_with_overrides(args);
    require_artifact(config.corpus_path(), "ingest", config);
    require_artifact(config.annotations_path(), "annotate", config);
    Corpus corpus = read_corpus_file(config.corpus_path());
    AnnotationSet annotations = read_annotations_file(config.annotations_path());

    auto gateway = config.make_gateway();
    Eigen::MatrixXd embedded = embed_corpus(corpus, config.embedding_model, *gateway);

    int target = std::min<int>(config.reduce_dim, static_cast<int>(embedded.cols()));
    target = std::min<int>(target, static_cast<int>(embedded.rows()) - 1);
    if (target < 1) target = 1;
    ReducedEmbedding reduced = reduce_dimensions(embedded, target);
    if (reduced.degenerate)
        std::cerr << "warning: zero-variance embedding batch; all prompts identical?\n";

    std::vector<std::string> ids;
    ids.reserve(corpus.size());
    for (const auto& r : corpus.records) ids.push_back(r.id);
    ClusterOutcome clusters = cluster_topics(ids, reduced.points, config.clustering);

    attach_scores(clusters.clusters, annotations);
    if (config.name_topic_clusters)
        name_clusters(clusters.clusters, corpus, config.naming_model, *gateway);

    write_clusters_file(config.clusters_path(), clusters.clusters, clusters.noise_ids);
    std::cout << "cluster: " << clusters.clusters.size() << " topic clusters, "
              << clusters.noise_ids.size() << " noise prompts (dim " << embedded.cols() << " -> "
              << target << ", explained variance "
              << static_cast<int>(100.0 * reduced.explained_variance_ratio()) << "%)\n";
    finish_stage(config, "cluster", {config.corpus_path(), config.annotations_path()},
                 {config.clusters_path()}, gateway.get());
    return 0;
}

int cmd_build_bench(const CommonArgs& args) {
    RunConfig config = load_with_overrides(args);
    require_artifact(config.corpus_path(), "ingest", config);
    require_artifact(config.annotations_path(), "annotate", config);
    require_artifact(config.clusters_path(), "cluster", config);

    Corpus corpus = read_corpus_file(config.corpus_path());
    AnnotationSet annotations = read_annotations_file(config.annotations_path());
    std::vector<TopicCluster> clusters = read_clusters_file(config.clusters_path());

    BuildOutcome outcome = build_benchmark(clusters, corpus, annotations, config.bench);
    for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
    write_benchmark_file(config.benchmark_path(), outcome.benchmark);

    std::cout << "build-bench: " << outcome.benchmark.prompts.size() << " prompts ("
              << config.bench.clusters_to_sample << " clusters x "
              << config.bench.prompts_per_cluster << ", seed " << config.bench.seed
              << ", checksum " << outcome.benchmark.checksum() << ")\n";
    finish_stage(config, "build-bench",
                 {config.corpus_path(), config.annotations_path(), config.clusters_path()},
                 {config.benchmark_path()});
    return 0;
}

int cmd_gen_answers(const CommonArgs& args, const std::string& model_override) {
    RunConfig config = load_with_overrides(args);
    require_artifact(config.benchmark_path(), "build-bench", config);
    Benchmark benchmark = read_benchmark_file(config.benchmark_path());

    std::vector<std::string> models;
    if (!model_override.empty()) {
        models.push_back(model_override);
    } else {
        models = config.candidate_models;
        models.push_back(config.baseline_model);
    }
    if (models.empty()) throw ConfigError("gen-answers: no models configured");

    auto gateway = config.make_gateway();
    fs::create_directories(fs::path(config.workdir) / "answers");
    std::vector<std::string> outputs;
    for (const auto& model : models) {
        AnswerSet set = generate_answers(benchmark, model, *gateway);
        write_answers_file(config.answers_path(model), set);
        outputs.push_back(config.answers_path(model));
        std::cout << "gen-answers: " << model << ": " << set.answers.size() << " answers";
        if (!set.missing.empty()) std::cout << ", " << set.missing.size() << " missing";
        std::cout << "\n";
    }
    finish_stage(config, "gen-answers", {config.benchmark_path()}, outputs, gateway.get());
    return 0;
}

int cmd_judge(const CommonArgs& args, const std::string& candidate_override) {
    RunConfig config = load_with_overrides(args);
    require_artifact(config.benchmark_path(), "build-bench", config);
    Benchmark benchmark = read_benchmark_file(config.benchmark_path());

    std::vector<std::string> candidates =
        candidate_override.empty() ? config.candidate_models
                                   : std::vector<std::string>{candidate_override};
    if (candidates.empty()) throw ConfigError("judge: no candidate models configured");
    if (config.judge_models.empty()) throw ConfigError("judge: no judge models configured");

    require_artifact(config.answers_path(config.baseline_model), "gen-answers", config);
    AnswerSet baseline = read_answers_file(config.answers_path(config.baseline_model));

    auto gateway = config.make_gateway();
    fs::create_directories(fs::path(config.workdir) / "battles");
    std::vector<std::string> inputs{config.benchmark_path(),
                                    config.answers_path(config.baseline_model)};
    std::vector<std::string> outputs;
    for (const auto& candidate : candidates) {
        require_artifact(config.answers_path(candidate), "gen-answers", config);
        AnswerSet cand = read_answers_file(config.answers_path(candidate));
        inputs.push_back(config.answers_path(candidate));
        for (const auto& judge : config.judge_models) {
            BattleSet battles = run_evaluation(benchmark, cand, baseline, judge, *gateway);
            write_battles_file(config.battles_path(candidate, judge), battles);
            outputs.push_back(config.battles_path(candidate, judge));
            std::cout << "judge: " << candidate << " vs " << config.baseline_model << " under "
                      << judge << ": " << battles.battles.size() << " battles";
            if (!battles.skipped.empty()) std::cout << ", " << battles.skipped.size() << " skipped";
            std::cout << "\n";
        }
    }
    finish_stage(config, "judge", inputs, outputs, gateway.get());
    return 0;
}

std::vector<std::string> battle_files(const RunConfig& config) {
    std::vector<std::string> files;
    fs::path dir = fs::path(config.workdir) / "battles";
    if (fs::exists(dir))
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".jsonl") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<Battle> load_all_battles(const RunConfig& config) {
    std::vector<std::string> files = battle_files(config);
    if (files.empty())
        throw Error("missing input artifact " + config.workdir + "/battles/*.jsonl - run `judge` first");
    std::vector<Battle> battles;
    std::string checksum;
    for (const auto& f : files) {
        BattleSet set = read_battles_file(f);
        if (checksum.empty()) checksum = set.benchmark_checksum;
        if (set.benchmark_checksum != checksum)
            throw Error("battle files disagree on the benchmark checksum; refusing to mix runs");
        battles.insert(battles.end(), set.battles.begin(), set.battles.end());
    }
    return battles;
}

int cmd_rate(const CommonArgs& args) {
    RunConfig config = load_with_overrides(args);
    std::vector<Battle> battles = load_all_battles(config);

    BootstrapOptions opts;
    opts.rounds = config.bootstrap_rounds;
    opts.seed = config.seed;
    opts.style_control = config.style_control;
    opts.weights = config.likert;
    opts.fit.l2_penalty = config.l2_penalty;
    RatingSet ratings = bootstrap_ratings(battles, config.baseline_model, opts);

    std::vector<LeaderboardRow> rows = leaderboard(ratings, battles);
    std::string table = render_leaderboard(rows);
    write_text_file(config.leaderboard_path(), table);
    write_ratings_table(config.ratings_table_path(), rows);
    write_samples_file(config.samples_path(), ratings);

    std::cout << (config.style_control ? "rate (style control):\n" : "rate:\n") << table;
    std::vector<std::string> inputs = battle_files(config);
    finish_stage(config, "rate", inputs,
                 {config.leaderboard_path(), config.ratings_table_path(), config.samples_path()});
    return 0;
}

int cmd_meta(const CommonArgs& args, const std::string& reference_override) {
    RunConfig config = load_with_overrides(args);
    require_artifact(config.samples_path(), "rate", config);
    std::string ref_path = reference_override.empty() ? config.reference_path : reference_override;
    if (ref_path.empty())
        throw ConfigError("meta: no reference ranking (set paths.reference or pass --reference)");
    if (!fs::exists(ref_path)) throw Error("meta: reference file " + ref_path + " not found");

    BenchmarkResult result =
        BenchmarkResult::from_samples_file(config.samples_path(), fs::path(config.workdir).filename().string());
    ReferenceRanking reference = read_reference_file(ref_path);

    QualityReport report = benchmark_quality_report(result, reference);
    std::string text = render_quality_report(report);
    write_text_file(config.quality_report_path(false), text);
    write_text_file(config.quality_report_path(true), quality_report_json(report).dump(2) + "\n");

    std::cout << text;
    finish_stage(config, "meta", {config.samples_path(), ref_path},
                 {config.quality_report_path(false), config.quality_report_path(true)});
    return 0;
}

int cmd_report(const CommonArgs& args) {
    RunConfig config = load_with_overrides(args);
    require_artifact(config.leaderboard_path(), "rate", config);
    require_artifact(config.quality_report_path(false), "meta", config);
    require_artifact(config.annotations_path(), "annotate", config);

    AnnotationSet annotations = read_annotations_file(config.annotations_path());
    std::vector<Battle> battles = load_all_battles(config);

    // Quality-stratified win-rates, one block per candidate pair.
    std::ostringstream tsv;
    tsv << "candidate\tbaseline\tscore_lo\tscore_hi\tn_battles\twin_rate\tci_low\tci_high\n";
    Json winrate_json = Json::array();
    for (const auto& candidate : config.candidate_models) {
        std::vector<Battle> pair_battles;
        for (const auto& b : battles) {
            if ((b.first_model == candidate && b.second_model == config.baseline_model) ||
                (b.first_model == config.baseline_model && b.second_model == candidate))
                pair_battles.push_back(b);
        }
        if (pair_battles.empty()) continue;
        WinrateByQuality wq =
            winrate_by_quality(pair_battles, annotations, 2, config.bootstrap_rounds, config.seed);
        for (const auto& bin : wq.bins) {
            tsv << candidate << '\t' << config.baseline_model << '\t' << bin.score_lo << '\t'
                << bin.score_hi << '\t' << bin.n_battles << '\t' << bin.win_rate << '\t'
                << bin.ci_low << '\t' << bin.ci_high << '\n';
            winrate_json.push_back(Json{{"candidate", candidate},
                                        {"favored_model", wq.favored_model},
                                        {"score_lo", bin.score_lo},
                                        {"score_hi", bin.score_hi},
                                        {"n_battles", bin.n_battles},
                                        {"win_rate", bin.win_rate},
                                        {"ci_low", bin.ci_low},
                                        {"ci_high", bin.ci_high}});
        }
        for (const auto& note : wq.notes)
            std::cerr << "note: " << candidate << ": " << note << "\n";
    }
    write_text_file(config.winrate_by_quality_path(), tsv.str());

    std::string leaderboard_text = read_text_file(config.leaderboard_path());
    std::string quality_text = read_text_file(config.quality_report_path(false));
    std::ostringstream text;
    text << "== Leaderboard ==\n"
         << leaderboard_text << "\n== Benchmark quality ==\n"
         << quality_text << "\n== Win-rate by prompt quality score ==\nsee "
         << config.winrate_by_quality_path() << "\n";
    write_text_file(config.report_path(), text.str());

    Json leaderboard_json = Json::array();
    for (const auto& j : read_jsonl_file(config.ratings_table_path())) leaderboard_json.push_back(j);
    Json combined{{"leaderboard", leaderboard_json},
                  {"quality_report", Json::parse(read_text_file(config.quality_report_path(true)))},
                  {"winrate_by_quality", winrate_json}};
    write_text_file(config.workdir + "/report.json", combined.dump(2) + "\n");

    std::cout << text.str();
    finish_stage(config, "report",
                 {config.leaderboard_path(), config.quality_report_path(false),
                  config.annotations_path()},
                 {config.report_path(), config.workdir + "/report.json",
                  config.winrate_by_quality_path()});
    return 0;
}

int cmd_style_features(const std::string& file) {
    std::string text = read_text_file(file);
    StyleFeatures f = extract_style(text);
    MarkdownCounts c = count_markdown(text);
    Json j = f.to_json();
    j["raw_counts"] = Json{{"headers", c.headers}, {"bold", c.bold}, {"list_items", c.list_items}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"benchmark curation and pairwise model evaluation pipeline"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string input_override, model_override, candidate_override, reference_override,
        style_file;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "run configuration file (JSON)")
            ->required();
        cmd->add_option("--seed", common.seed, "override the run seed");
        cmd->add_option("--rounds", common.rounds, "override bootstrap rounds");
        cmd->add_flag("--style-control", common.style_control,
                      "fit style-controlled ratings (rate)");
        cmd->add_option("--judge", common.judge, "use a single judge model");
        cmd->add_option("--baseline", common.baseline, "override the baseline model");
    };

    auto* ingest_cmd = app.add_subcommand("ingest", "normalize and filter raw conversation logs");
    add_common(ingest_cmd);
    ingest_cmd->add_option("--input", input_override, "raw line-delimited records");

    add_common(app.add_subcommand("annotate", "score prompts on the seven key qualities"));
    add_common(app.add_subcommand("cluster", "embed, reduce and cluster prompts into topics"));
    add_common(app.add_subcommand("build-bench", "apply thresholds and sample the benchmark"));

    auto* gen_cmd = app.add_subcommand("gen-answers", "generate model answers for the benchmark");
    add_common(gen_cmd);
    gen_cmd->add_option("--model", model_override, "generate for one model only");

    auto* judge_cmd = app.add_subcommand("judge", "run pairwise judge games against the baseline");
    add_common(judge_cmd);
    judge_cmd->add_option("--candidate", candidate_override, "judge one candidate only");

    add_common(app.add_subcommand("rate", "fit Bradley-Terry ratings with bootstrap CIs"));

    auto* meta_cmd = app.add_subcommand("meta", "benchmark quality metrics vs a reference ranking");
    add_common(meta_cmd);
    meta_cmd->add_option("--reference", reference_override, "reference ranking file");

    add_common(app.add_subcommand("report", "render leaderboard, quality and win-rate reports"));

    auto* style_cmd =
        app.add_subcommand("style-features", "print style features for a text file (debug aid)");
    style_cmd->add_option("file", style_file, "text file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("ingest")) return cmd_ingest(common, input_override);
        if (app.got_subcommand("annotate")) return cmd_annotate(common);
        if (app.got_subcommand("cluster")) return cmd_cluster(common);
        if (app.got_subcommand("build-bench")) return cmd_build_bench(common);
        if (app.got_subcommand("gen-answers")) return cmd_gen_answers(common, model_override);
        if (app.got_subcommand("judge")) return cmd_judge(common, candidate_override);
        if (app.got_subcommand("rate")) return cmd_rate(common);
        if (app.got_subcommand("meta")) return cmd_meta(common, reference_override);
        if (app.got_subcommand("report")) return cmd_report(common);
        if (app.got_subcommand("style-features")) return cmd_style_features(style_file);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
