#include "saup/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "saup/eval.hpp"
#include "saup/parallel.hpp"
#include "saup/remote_scorer.hpp"
#include "saup/synth.hpp"
#include "saup/training.hpp"

namespace saup::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string require_string(const json& cfg, const char* key, const char* flag) {
    if (!cfg.contains(key) || !cfg.at(key).is_string() || cfg.at(key).get<std::string>().empty())
        throw UsageError(std::string("missing required ") + flag);
    return cfg.at(key).get<std::string>();
}

std::uint64_t require_seed(const json& cfg) {
    if (!cfg.contains("seed")) throw UsageError("this subcommand is stochastic and needs --seed");
    return cfg.at("seed").get<std::uint64_t>();
}

unsigned jobs_of(const json& cfg) { return cfg.contains("jobs") ? cfg.at("jobs").get<unsigned>() : 0u; }

fs::path prepare_out(const json& cfg) {
    const fs::path out = require_string(cfg, "out", "--out");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error(Errc::Io, "cannot create output directory '" + out.string() + "': " + ec.message());
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
    f << content;
    if (!f) throw Error(Errc::Io, "write to '" + path.string() + "' failed");
}

// Everything that determines the outputs; the output location and job count do not.
void write_manifest(const fs::path& out, const std::string& command, json cfg) {
    cfg.erase("out");
    cfg.erase("jobs");
    const std::string canonical = cfg.dump();
    json manifest{{"command", command},
                  {"tool_version", kVersion},
                  {"config", cfg},
                  {"config_hash", hex64(fnv1a64(command + "\n" + canonical))},
                  {"seed", cfg.contains("seed") ? cfg.at("seed") : json(nullptr)},
                  {"libraries", {{"nlohmann_json", "3.11.3"}, {"cli11", CLI11_VERSION}}}};
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
}

std::shared_ptr<const RelevanceScorer> make_scorer(const json& cfg) {
    std::string spec = cfg.value("scorer", "");
    if (spec.empty()) {
        if (const char* env = std::getenv("SAUP_SCORER_URL"); env && *env) spec = env;
    }
    std::shared_ptr<const RelevanceScorer> inner;
    if (spec.empty() || spec == "stub") {
        inner = std::make_shared<StubScorer>();
    } else {
        inner = std::make_shared<RemoteScorer>(spec);
    }
    return std::make_shared<CachingScorer>(inner);
}

DistanceConfig top_distance(const json& cfg) {
    json probe{{"name", "_"}};
    if (cfg.contains("distance")) probe["distance"] = cfg.at("distance");
    return method_from_json(probe).distance;
}

ObservationMode top_obs_mode(const json& cfg) {
    json probe{{"name", "_"}};
    if (cfg.contains("obs_mode")) probe["obs_mode"] = cfg.at("obs_mode");
    return method_from_json(probe).obs_mode;
}

std::vector<MethodConfig> resolve_methods(const json& cfg, const Dataset& d, std::ostream& err) {
    const DistanceConfig distance = top_distance(cfg);
    const ObservationMode obs_mode = top_obs_mode(cfg);
    const std::string default_model = cfg.value("model", "");
    std::map<std::string, std::shared_ptr<const ChmmModel>> models;

    auto finish = [&](MethodConfig m, const json& spec) {
        const bool explicit_distance = spec.is_object() && spec.contains("distance");
        const bool explicit_obs = spec.is_object() && spec.contains("obs_mode");
        if (!explicit_distance) m.distance = distance;
        if (!explicit_obs) m.obs_mode = obs_mode;
        if (m.surrogate == Surrogate::Hmm) {
            if (m.model_path.empty()) m.model_path = default_model;
            if (m.model_path.empty())
                throw UsageError("method '" + m.name + "' uses the hmm surrogate; pass --model");
            auto& slot = models[m.model_path];
            if (!slot) slot = std::make_shared<const ChmmModel>(load_model(m.model_path));
            m.model = slot;
        }
        return m;
    };

    std::vector<MethodConfig> out;
    if (cfg.contains("methods") && !cfg.at("methods").empty()) {
        for (const json& spec : cfg.at("methods")) out.push_back(finish(method_from_json(spec), spec));
        return out;
    }
    for (const std::string& name : method_preset_names()) {
        if (name == "saup-hmmd" && default_model.empty()) continue;
        if (name == "normalized-entropy") continue;  // same pipeline as last-step
        MethodConfig m = finish(*method_preset(name), json(name));
        try {
            check_method_requirements(d, m);
        } catch (const Error& e) {
            if (e.code() != Errc::FieldUnavailable) throw;
            err << "note: skipping default method '" << name << "': " << e.what() << '\n';
            continue;
        }
        out.push_back(std::move(m));
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

int cmd_ingest(const json& cfg, std::ostream& out, std::ostream& err) {
    const std::string path = require_string(cfg, "dataset", "--dataset");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open dataset '" + path + "'");
    const ParseReport report = parse_dataset_lenient(in, path);
    for (const ParseIssue& issue : report.issues) err << issue.message << '\n';

    const Dataset& d = report.dataset;
    const DatasetSummary s = summarize(d);
    std::size_t steps = 0, with_logits = 0, with_samples = 0, with_ptrue = 0;
    for (const Trajectory& t : d.trajectories)
        for (const Step& st : t.steps) {
            ++steps;
            with_logits += step_supports(st, Estimator::NormalizedEntropy);
            with_samples += step_supports(st, Estimator::SemanticEntropy);
            with_ptrue += step_supports(st, Estimator::PTrue);
        }
    out << "trajectories: " << s.n_trajectories << '\n'
        << "steps: " << steps << '\n'
        << "labeled: " << s.n_labeled << " (correct " << s.n_correct << ", incorrect " << s.n_incorrect << ")\n"
        << "steps with token_logprobs: " << with_logits << '\n'
        << "steps with samples: " << with_samples << '\n'
        << "steps with p_true: " << with_ptrue << '\n'
        << "invalid lines: " << report.issues.size() << '\n';
    return report.issues.empty() ? kOk : kDataError;
}

int cmd_score(const json& cfg, std::ostream& out, std::ostream& err) {
    const Dataset d = load_dataset(require_string(cfg, "dataset", "--dataset"));
    const fs::path dir = prepare_out(cfg);
    const auto scorer = make_scorer(cfg);
    const auto methods = resolve_methods(cfg, d, err);
    for (const auto& m : methods) {
        validate_method(m);
        check_method_requirements(d, m);
    }
    std::ostringstream csv;
    csv << "id,method,score,correct,n_steps\n";
    json jm = json::array();
    const unsigned jobs = jobs_of(cfg);
    for (const auto& m : methods) {
        std::vector<double> scores(d.trajectories.size());
        parallel_for(d.trajectories.size(), jobs,
                     [&](std::size_t i) { scores[i] = score_trajectory(d.trajectories[i], m, *scorer).value; });
        json records = json::array();
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const Trajectory& t = d.trajectories[i];
            const std::string correct = t.correct ? (*t.correct ? "true" : "false") : "";
            csv << csv_field(t.id) << ',' << csv_field(m.name) << ',' << format_sig9(scores[i]) << ',' << correct
                << ',' << t.steps.size() << '\n';
            records.push_back({{"id", t.id},
                               {"score", round_sig9(scores[i])},
                               {"correct", t.correct ? json(*t.correct) : json(nullptr)},
                               {"n_steps", t.steps.size()}});
        }
        jm.push_back({{"name", m.name}, {"config", method_to_json(m)}, {"records", std::move(records)}});
    }
    write_file(dir / "scores.csv", csv.str());
    write_file(dir / "scores.json", json{{"schema", "saup-scores"}, {"version", 1}, {"methods", jm}}.dump(2) + "\n");
    write_manifest(dir, "score", cfg);
    out << "scored " << d.trajectories.size() << " trajectories under " << methods.size() << " methods\n";
    return kOk;
}

int cmd_train_hmm(const json& cfg, std::ostream& out, std::ostream&) {
    const Dataset d = load_dataset(require_string(cfg, "dataset", "--dataset"));
    const json train = cfg.value("train", json::object());
    const std::string labels = train.value("labels", cfg.value("labels", std::string()));
    if (labels.empty()) throw UsageError("missing required --labels (state-path sidecar)");
    const std::uint64_t seed = require_seed(cfg);
    const fs::path dir = prepare_out(cfg);
    const auto scorer = make_scorer(cfg);

    HmmTrainingConfig tc;
    tc.distance = top_distance(cfg);
    tc.obs_mode = top_obs_mode(cfg);
    tc.n_states = train.value("n_states", std::size_t{3});
    tc.fit.n_components = train.value("n_components", std::size_t{1});
    tc.fit.max_iters = train.value("max_iters", 200);
    tc.fit.rel_tol = train.value("rel_tol", 1e-6);
    tc.fit.seed = seed;
    tc.fit.jobs = jobs_of(cfg);
    const std::string missing = train.value("missing_states", std::string("error"));
    if (missing == "global_moments")
        tc.missing_states = MissingStatePolicy::GlobalMoments;
    else if (missing != "error")
        throw UsageError("train.missing_states must be 'error' or 'global_moments'");

    const HmmTrainingResult res = train_situational_hmm(d, load_state_paths(labels), *scorer, tc);
    save_model(res.fit.model, (dir / "model.json").string());
    std::ostringstream trace;
    trace << "iteration,loglik\n";
    for (std::size_t i = 0; i < res.fit.report.loglik_trace.size(); ++i)
        trace << i << ',' << format_sig9(res.fit.report.loglik_trace[i]) << '\n';
    write_file(dir / "trace.csv", trace.str());
    json fit{{"iterations", res.fit.report.iterations},
             {"converged", res.fit.report.converged},
             {"initial_loglik", res.fit.report.loglik_trace.front()},
             {"final_loglik", res.fit.report.loglik_trace.back()},
             {"n_sequences", res.n_sequences},
             {"n_labeled", res.n_labeled},
             {"degenerate_events", res.fit.report.degenerate.size()}};
    write_file(dir / "fit.json", fit.dump(2) + "\n");
    write_manifest(dir, "train-hmm", cfg);
    out << "trained " << tc.n_states << "-state model on " << res.n_sequences << " sequences (" << res.n_labeled
        << " labeled); loglik " << format_sig9(res.fit.report.loglik_trace.front()) << " -> "
        << format_sig9(res.fit.report.loglik_trace.back()) << " in " << res.fit.report.iterations
        << " iterations\n";
    return kOk;
}

int cmd_eval(const json& cfg, std::ostream& out, std::ostream& err) {
    const Dataset d = load_dataset(require_string(cfg, "dataset", "--dataset"));
    const fs::path dir = prepare_out(cfg);
    const auto scorer = make_scorer(cfg);
    const auto methods = resolve_methods(cfg, d, err);
    if (methods.empty()) throw UsageError("no runnable methods");
    const EvalReport report = evaluate(d, methods, *scorer, jobs_of(cfg));
    json doc = report_to_json(report);
    json configs = json::array();
    for (const auto& m : methods) configs.push_back(method_to_json(m));
    doc["method_configs"] = std::move(configs);
    write_file(dir / "report.json", doc.dump(2) + "\n");
    write_file(dir / "report.csv", report_table_csv(report));
    write_manifest(dir, "eval", cfg);
    out << report_table_csv(report);
    return kOk;
}

int cmd_synth(const json& cfg, std::ostream& out, std::ostream&) {
    const std::uint64_t seed = require_seed(cfg);
    const fs::path dir = prepare_out(cfg);
    SynthConfig sc;
    sc.seed = seed;
    const json s = cfg.value("synth", json::object());
    sc.n_trajectories = s.value("n_trajectories", sc.n_trajectories);
    sc.min_steps = s.value("min_steps", sc.min_steps);
    sc.max_steps = s.value("max_steps", sc.max_steps);
    sc.link_a = s.value("link_a", sc.link_a);
    sc.link_b = s.value("link_b", sc.link_b);
    const LabeledDataset ld = generate(sc);
    std::ostringstream corpus;
    serialize_dataset(ld.dataset, corpus);
    write_file(dir / "corpus.jsonl", corpus.str());
    write_file(dir / "truth.json", truth_to_json(ld, seed).dump() + "\n");
    write_manifest(dir, "synth", cfg);
    const DatasetSummary sum = summarize(ld.dataset);
    out << "generated " << sum.n_trajectories << " trajectories (" << sum.n_incorrect << " incorrect)\n";
    return kOk;
}

int cmd_scatter(const json& cfg, std::ostream& out, std::ostream&) {
    const json sc = cfg.value("scatter", json::object());
    const std::string report_path = sc.value("report", std::string());
    if (report_path.empty()) throw UsageError("missing required --report");
    const fs::path dir = prepare_out(cfg);
    std::ifstream in(report_path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open report '" + report_path + "'");
    EvalReport report;
    try {
        report = report_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw Error(Errc::InvalidConfig, e.what());
    }
    const std::string norm_name = sc.value("normalization", std::string("minmax"));
    ScatterNormalization norm;
    if (norm_name == "minmax")
        norm = ScatterNormalization::MinMax;
    else if (norm_name == "none")
        norm = ScatterNormalization::None;
    else
        throw UsageError("--normalization must be 'minmax' or 'none'");

    const std::string only = sc.value("method", std::string());
    std::size_t written = 0;
    for (const MethodResult& m : report.methods) {
        if (!only.empty() && m.name != only) continue;
        const auto rows = export_scatter(m, norm);
        write_file(dir / ("scatter_" + m.name + ".csv"), scatter_csv(rows));
        ++written;
    }
    if (!only.empty() && written == 0) throw UsageError("report has no method '" + only + "'");
    write_manifest(dir, "scatter", cfg);
    out << "wrote " << written << " scatter file(s)\n";
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Situation-aware uncertainty propagation for recorded agent trajectories", "saup"};
    app.require_subcommand(1);

    std::string config_path, dataset, scorer_url, scorer, model, out_dir, labels, report, normalization, window,
        distance_mode, obs_mode;
    std::uint64_t seed = 0;
    unsigned jobs = 0;
    std::size_t n_trajectories = 0;
    int max_iters = 0;
    std::vector<std::string> methods;

    auto* o_config = app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    auto* o_dataset = app.add_option("--dataset", dataset, "Trajectory corpus (JSONL)");
    auto* o_scorer_url = app.add_option("--scorer-url", scorer_url, "Relevance scorer service base URL");
    auto* o_scorer = app.add_option("--scorer", scorer, "Relevance scorer: 'stub' or a URL");
    app.add_option("--model", model, "CHMM model JSON for the hmm surrogate");
    auto* o_seed = app.add_option("--seed", seed, "Seed for every stochastic step");
    auto* o_jobs = app.add_option("--jobs", jobs, "Worker threads (0 = all cores)");
    auto* o_out = app.add_option("--out", out_dir, "Output directory");
    auto* o_methods = app.add_option("--method", methods, "Method preset name (repeatable)");
    auto* o_window = app.add_option("--window", window, "Drift context window")
                         ->check(CLI::IsMember({"cumulative", "current_step"}));
    auto* o_dmode = app.add_option("--distance-mode", distance_mode, "Score-to-distance conversion")
                        ->check(CLI::IsMember({"one_minus", "reciprocal"}));
    auto* o_obs = app.add_option("--obs", obs_mode, "HMM observation layout")->check(CLI::IsMember({"pair", "sum"}));
    app.fallthrough();

    auto* ingest = app.add_subcommand("ingest", "Validate a corpus and print a summary");
    auto* score = app.add_subcommand("score", "Score trajectories to CSV/JSON");
    auto* train = app.add_subcommand("train-hmm", "Fit the situational CHMM from an annotated corpus");
    auto* o_labels = train->add_option("--labels", labels, "State-path sidecar JSON");
    auto* o_iters = train->add_option("--max-iters", max_iters, "EM iteration cap")->check(CLI::PositiveNumber);
    auto* eval = app.add_subcommand("eval", "Evaluate methods and write an AUROC report");
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
    auto* o_n = synth->add_option("--n", n_trajectories, "Number of trajectories")->check(CLI::PositiveNumber);
    auto* scatter = app.add_subcommand("scatter", "Export normalized scores per trajectory");
    auto* o_report = scatter->add_option("--report", report, "report.json from eval");
    auto* o_norm = scatter->add_option("--normalization", normalization, "minmax or none")
                       ->check(CLI::IsMember({"minmax", "none"}));
    for (auto* sub : {ingest, score, train, eval, synth, scatter}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        app.exit(e, err, err);
        err << app.help();
        return kUsageError;
    }

    try {
        json cfg = json::object();
        if (o_config->count()) {
            std::ifstream in(config_path, std::ios::binary);
            try {
                cfg = json::parse(in);
            } catch (const json::parse_error& e) {
                throw UsageError(std::string("config is not valid JSON: ") + e.what());
            }
            if (!cfg.is_object()) throw UsageError("config must be a JSON object");
        }
        if (o_dataset->count()) cfg["dataset"] = dataset;
        if (o_scorer->count()) cfg["scorer"] = scorer;
        if (o_scorer_url->count()) cfg["scorer"] = scorer_url;
        if (!model.empty()) cfg["model"] = model;
        if (o_seed->count()) cfg["seed"] = seed;
        if (o_jobs->count()) cfg["jobs"] = jobs;
        if (o_out->count()) cfg["out"] = out_dir;
        if (o_methods->count()) {
            // For scatter, --method selects which report method to export.
            if (scatter->parsed()) {
                if (methods.size() != 1) throw UsageError("scatter takes at most one --method");
                cfg["scatter"]["method"] = methods.front();
            } else {
                cfg["methods"] = methods;
            }
        }
        if (o_window->count()) cfg["distance"]["window"] = window;
        if (o_dmode->count()) cfg["distance"]["mode"] = distance_mode;
        if (o_obs->count()) cfg["obs_mode"] = obs_mode;
        if (o_labels->count()) cfg["train"]["labels"] = labels;
        if (o_iters->count()) cfg["train"]["max_iters"] = max_iters;
        if (o_n->count()) cfg["synth"]["n_trajectories"] = n_trajectories;
        if (o_report->count()) cfg["scatter"]["report"] = report;
        if (o_norm->count()) cfg["scatter"]["normalization"] = normalization;

        if (ingest->parsed()) return cmd_ingest(cfg, out, err);
        if (score->parsed()) return cmd_score(cfg, out, err);
        if (train->parsed()) return cmd_train_hmm(cfg, out, err);
        if (eval->parsed()) return cmd_eval(cfg, out, err);
        if (synth->parsed()) return cmd_synth(cfg, out, err);
        if (scatter->parsed()) return cmd_scatter(cfg, out, err);
        err << app.help();
        return kUsageError;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        if (e.code() == Errc::ScorerUnavailable) return kScorerError;
        if (e.code() == Errc::InvalidConfig) return kUsageError;
        return kDataError;
    } catch (const json::exception& e) {
        err << "usage error: bad configuration value: " << e.what() << '\n';
        return kUsageError;
    }
}

}  // namespace saup::cli
