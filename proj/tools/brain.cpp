#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <brain/brain.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum Exit : int {
    kOk = 0,
    kUsage = 2,
    kInput = 3,
    kMissingIndex = 4,
    kUnknownBug = 5,
    kOracleUnavailable = 6,
    kOracleAuth = 7,
    kPartial = 8,
};

struct MissingIndex : brain::Error {
    using brain::Error::Error;
};

struct Options {
    std::string config_file;
    std::vector<std::string> settings;
    std::string corpus_root;
    std::string index_dir;
    std::string cache_dir;
    std::string mode;
    std::optional<std::size_t> k;
    std::optional<std::size_t> jobs;
    bool explain = false;
    bool best_effort = false;
    std::string dump_graph;
    bool verbose = false;

    std::string system;
    std::string version;
    std::string bug_id;
    std::string dataset;
    std::string title;
    std::string description;
    std::string modes = "full,baseline_vsm";
    std::string out_dir = ".";
};

brain::PipelineConfig resolve_config(const Options& opt) {
    brain::PipelineConfig cfg = opt.config_file.empty() ? brain::PipelineConfig{} : brain::load_config(opt.config_file);
    for (const auto& setting : opt.settings) {
        const auto eq = setting.find('=');
        if (eq == std::string::npos) throw brain::ConfigError("--set expects KEY=VALUE, got '" + setting + "'");
        brain::apply_setting(cfg, setting.substr(0, eq), setting.substr(eq + 1));
    }
    if (!opt.corpus_root.empty()) cfg.corpus_root = opt.corpus_root;
    if (!opt.index_dir.empty()) cfg.index_dir = opt.index_dir;
    if (!opt.cache_dir.empty()) cfg.cache_dir = opt.cache_dir;
    if (!opt.mode.empty()) cfg.ranking.mode = brain::parse_mode(opt.mode);
    if (opt.k) cfg.ranking.result_k = *opt.k;
    if (opt.jobs) cfg.jobs = *opt.jobs;
    if (opt.best_effort) cfg.feedback.best_effort = true;
    cfg.validate();
    return cfg;
}

bool needs_oracle(brain::Mode mode) {
    return mode != brain::Mode::baseline_vsm && mode != brain::Mode::no_expansion_no_rescoring;
}

struct FeedbackStack {
    std::unique_ptr<brain::RelevanceOracle> oracle;
    std::unique_ptr<brain::FeedbackEngine> engine;
};

FeedbackStack make_feedback(const brain::PipelineConfig& cfg) {
    FeedbackStack stack;
    stack.oracle = brain::make_oracle(cfg.oracle);
    brain::FeedbackOptions options;
    options.supports_system_role = cfg.oracle.supports_system_role;
    options.max_prompt_chars = cfg.feedback.max_prompt_chars;
    options.max_segments_per_doc = cfg.feedback.max_segments_per_doc;
    options.concurrency = static_cast<std::size_t>(cfg.oracle.max_concurrency);
    options.best_effort = cfg.feedback.best_effort;
    std::shared_ptr<const brain::VerdictCache> cache;
    if (!cfg.cache_dir.empty()) cache = std::make_shared<brain::VerdictCache>(cfg.cache_dir);
    stack.engine = std::make_unique<brain::FeedbackEngine>(*stack.oracle, options, cache);
    return stack;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw brain::IngestError("cannot write " + path.string());
    out << content;
    if (!out) throw brain::IngestError("error while writing " + path.string());
}

void dump_graph(const Options& opt, const brain::LocalizeOutcome& outcome) {
    if (opt.dump_graph.empty() || !outcome.trace.term_graph || !outcome.trace.term_scores) return;
    fs::create_directories(opt.dump_graph);
    const fs::path file = fs::path(opt.dump_graph) /
                          (outcome.result.bug_id + "." + std::string(brain::to_string(outcome.result.mode)) + ".graph.json");
    write_file(file, brain::dump_term_graph(*outcome.trace.term_graph, *outcome.trace.term_scores));
}

int cmd_index(const Options& opt) {
    const brain::PipelineConfig cfg = resolve_config(opt);
    if (cfg.corpus_root.empty()) throw brain::ConfigError("corpus_root is not set");
    std::error_code ec;
    if (!fs::is_directory(cfg.corpus_root, ec)) {
        throw brain::IngestError("corpus root is missing or not a directory: " + cfg.corpus_root.string());
    }
    std::vector<std::pair<std::string, std::string>> snapshots;
    for (const auto& sys : fs::directory_iterator(cfg.corpus_root)) {
        if (!sys.is_directory()) continue;
        const std::string system = sys.path().filename().string();
        if (!opt.system.empty() && system != opt.system) continue;
        for (const auto& ver : fs::directory_iterator(sys.path())) {
            if (!ver.is_directory()) continue;
            const std::string version = ver.path().filename().string();
            if (!opt.version.empty() && version != opt.version) continue;
            snapshots.emplace_back(system, version);
        }
    }
    std::sort(snapshots.begin(), snapshots.end());
    if (snapshots.empty()) {
        throw brain::EmptyCorpusError("no <system>/<version> directories under " + cfg.corpus_root.string());
    }
    for (const auto& [system, version] : snapshots) {
        const auto docs = brain::ingest_snapshot(cfg.corpus_root / system / version, system, version);
        const auto index = brain::InvertedIndex::build(docs, cfg.retrieval.bm25);
        const fs::path file = brain::IndexCatalog::snapshot_path(cfg.index_dir, system, version);
        fs::create_directories(file.parent_path());
        index.save(file);
        std::cout << "indexed " << index.doc_count() << " documents for " << system << "/" << version << "\n";
    }
    return kOk;
}

brain::InvertedIndex load_index(const brain::PipelineConfig& cfg, const std::string& system, const std::string& version) {
    const fs::path file = brain::IndexCatalog::snapshot_path(cfg.index_dir, system, version);
    std::error_code ec;
    if (!fs::is_regular_file(file, ec)) {
        throw MissingIndex("no index for " + system + "/" + version + " (expected " + file.string() + ")");
    }
    return brain::InvertedIndex::load(file);
}

int cmd_localize(const Options& opt) {
    const brain::PipelineConfig cfg = resolve_config(opt);
    brain::BugReport report;
    if (!opt.bug_id.empty()) {
        if (opt.dataset.empty()) throw brain::ConfigError("--bug needs --dataset");
        bool found = false;
        for (auto& bug : brain::load_bug_reports(opt.dataset)) {
            if (bug.bug_id == opt.bug_id) {
                report = std::move(bug);
                found = true;
                break;
            }
        }
        if (!found) throw brain::LookupError("unknown bug id: " + opt.bug_id);
    } else {
        if (opt.title.empty() || opt.system.empty() || opt.version.empty()) {
            throw brain::ConfigError("give --bug with --dataset, or --title with --system and --version");
        }
        report.bug_id = "inline";
        report.system = opt.system;
        report.version = opt.version;
        report.title = opt.title;
        report.description = opt.description;
    }

    const brain::InvertedIndex index = load_index(cfg, report.system, report.version);
    FeedbackStack feedback;
    if (needs_oracle(cfg.ranking.mode)) feedback = make_feedback(cfg);
    const brain::LocalizeOutcome outcome = brain::localize(report, index, cfg, cfg.ranking.mode, feedback.engine.get());
    dump_graph(opt, outcome);
    std::cout << (opt.explain ? brain::to_explained_json(outcome) : brain::to_json(outcome.result)) << "\n";
    if (!outcome.result.diagnostic.empty()) spdlog::warn("{}", outcome.result.diagnostic);
    if (outcome.result.degraded) spdlog::warn("oracle failures were treated as irrelevant verdicts");
    return kOk;
}

int cmd_evaluate(const Options& opt) {
    const brain::PipelineConfig cfg = resolve_config(opt);
    if (opt.dataset.empty()) throw brain::ConfigError("--dataset is required");
    const auto modes = brain::parse_modes(opt.modes);
    const auto dataset = brain::load_bug_reports(opt.dataset);
    const auto catalog = brain::IndexCatalog::load_directory(cfg.index_dir);

    FeedbackStack feedback;
    if (std::any_of(modes.begin(), modes.end(), needs_oracle)) feedback = make_feedback(cfg);
    const brain::EvalReport report = brain::evaluate(dataset, catalog, cfg, modes, feedback.engine.get(), cfg.jobs);

    fs::create_directories(opt.out_dir);
    write_file(fs::path(opt.out_dir) / "eval_report.json", brain::to_json(report));
    write_file(fs::path(opt.out_dir) / "eval_summary.csv", brain::summary_csv(report));
    write_file(fs::path(opt.out_dir) / "eval_per_bug.csv", brain::per_bug_csv(report));
    std::cout << brain::summary_table(report);
    for (const auto& s : report.skipped) spdlog::warn("skipped {}: {}", s.bug_id, s.reason);
    for (const auto& e : report.errors) spdlog::error("{}: {}", e.bug_id, e.reason);
    if (feedback.engine) {
        spdlog::info("oracle calls: {}, cache hits: {}", feedback.engine->oracle_calls(), feedback.engine->cache_hits());
    }
    return report.partial() ? kPartial : kOk;
}

int cmd_oracle_check(const Options& opt) {
    const brain::PipelineConfig cfg = resolve_config(opt);
    brain::BugReport report;
    report.bug_id = "oracle-check";
    report.title = "NullPointerException when saving user profile";
    report.description = "Saving a profile without an avatar crashes in ProfileService.saveProfile.";
    brain::CodeSegment segment;
    segment.doc_id = "oracle-check";
    segment.kind = brain::SegmentKind::method;
    segment.name = "saveProfile";
    segment.body_text =
        "public void saveProfile(Profile profile) {\n"
        "    avatarStore.put(profile.getAvatar().getId(), profile.getAvatar());\n"
        "    repository.save(profile);\n"
        "}";
    const brain::Prompt prompt = brain::build_prompt(report, segment, cfg.oracle.supports_system_role,
                                                     cfg.feedback.max_prompt_chars);
    const auto oracle = brain::make_oracle(cfg.oracle);
    const auto start = std::chrono::steady_clock::now();
    const std::string raw = oracle->complete(prompt);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    const brain::RelevanceVerdict verdict = brain::parse_verdict(raw);
    std::cout << "model: " << oracle->model_name() << "\n"
              << "verdict: " << (verdict.relevant ? "yes" : "no") << "\n"
              << "source: " << brain::to_string(verdict.source) << "\n"
              << "latency_ms: " << elapsed.count() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_st("cli"));
    spdlog::set_pattern("[%l] %v");

    CLI::App app{"Bug localization with LLM relevance feedback"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--config", opt.config_file, "JSON config of dotted keys")->check(CLI::ExistingFile);
    app.add_option("--set", opt.settings, "Override one config key (KEY=VALUE)");
    app.add_option("--corpus-root", opt.corpus_root, "Corpus root holding <system>/<version> trees");
    app.add_option("--index-dir", opt.index_dir, "Directory for index snapshots");
    app.add_option("--cache-dir", opt.cache_dir, "Directory for the verdict cache");
    app.add_option("--mode", opt.mode, "full, no_expansion, no_rescoring, no_expansion_no_rescoring or baseline_vsm");
    app.add_option("--k", opt.k, "Result list length")->check(CLI::PositiveNumber);
    app.add_option("--jobs", opt.jobs, "Worker threads for evaluation")->check(CLI::PositiveNumber);
    app.add_flag("--explain", opt.explain, "Include candidates, verdicts and expansion terms");
    app.add_flag("--oracle-best-effort", opt.best_effort, "Treat oracle failures as irrelevant verdicts");
    app.add_option("--dump-graph", opt.dump_graph, "Write term graphs as JSON into this directory");
    app.add_flag("-v,--verbose", opt.verbose, "Debug logging");

    auto* index = app.add_subcommand("index", "Build index snapshots for every <system>/<version>");
    index->add_option("--system", opt.system, "Only this system");
    index->add_option("--version", opt.version, "Only this version");

    auto* localize = app.add_subcommand("localize", "Rank source files for one bug report");
    localize->add_option("--bug", opt.bug_id, "Bug id from --dataset");
    localize->add_option("--dataset", opt.dataset, "Bug reports (JSON lines)");
    localize->add_option("--title", opt.title, "Inline report title");
    localize->add_option("--description", opt.description, "Inline report description");
    localize->add_option("--system", opt.system, "System of the inline report");
    localize->add_option("--version", opt.version, "Version of the inline report");

    auto* evaluate = app.add_subcommand("evaluate", "Localize a dataset and report MAP, MRR and HIT@K");
    evaluate->add_option("--dataset", opt.dataset, "Bug reports (JSON lines)")->required();
    evaluate->add_option("--modes", opt.modes, "Comma-separated modes")->capture_default_str();
    evaluate->add_option("--out", opt.out_dir, "Output directory for report files")->capture_default_str();

    auto* oracle_check = app.add_subcommand("oracle-check", "Send one canned prompt to the configured oracle");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    spdlog::set_level(opt.verbose ? spdlog::level::debug : spdlog::level::info);
    if (auto core = spdlog::get("brain")) core->set_level(spdlog::get_level());

    try {
        if (*index) return cmd_index(opt);
        if (*localize) return cmd_localize(opt);
        if (*evaluate) return cmd_evaluate(opt);
        if (*oracle_check) return cmd_oracle_check(opt);
    } catch (const brain::ConfigError& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const MissingIndex& e) {
        spdlog::error("{}", e.what());
        return kMissingIndex;
    } catch (const brain::LookupError& e) {
        spdlog::error("{}", e.what());
        return kUnknownBug;
    } catch (const brain::OracleAuthError& e) {
        spdlog::error("oracle rejected the credentials: {}", e.what());
        return kOracleAuth;
    } catch (const brain::OracleUnavailableError& e) {
        spdlog::error("oracle unavailable: {}", e.what());
        return kOracleUnavailable;
    } catch (const brain::Error& e) {
        spdlog::error("{}", e.what());
        return kInput;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kInput;
    }
    return kUsage;
}
