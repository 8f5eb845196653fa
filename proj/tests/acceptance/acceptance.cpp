// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../unit/chmm_util.hpp"
#include "saup/chmm.hpp"
#include "saup/cli.hpp"
#include "saup/eval.hpp"
#include "saup/propagation.hpp"
#include "saup/rng.hpp"
#include "saup/step_uncertainty.hpp"
#include "saup/synth.hpp"
#include "saup/training.hpp"

using namespace saup;

namespace {

constexpr double kAurocTol = 1e-12;
constexpr double kAggregateTol = 1e-12;
constexpr double kForwardBackwardTol = 1e-8;
constexpr double kTraceSlack = 1e-9;
constexpr double kMeanRelTol = 0.10;
constexpr double kTransTol = 0.05;
constexpr double kDirectionalMargin = 0.03;
constexpr double kEstimatorTol = 1e-9;

constexpr double kAurocSeconds = 5.0;
constexpr double kEmSeconds = 30.0;
constexpr double kRecoverySeconds = 60.0;
constexpr double kDirectionalSeconds = 120.0;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail = what;
            pass = false;
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome auroc_oracle() {
    Outcome o;
    const auto t0 = Clock::now();
    Rng rng(20240601);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(2, 200));
        std::vector<double> s(n);
        std::vector<int> y(n);
        const int levels = static_cast<int>(rng.uniform_int(2, 25));
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = rng.bernoulli(0.5) ? static_cast<double>(rng.uniform_int(0, levels)) : rng.normal();
            y[i] = rng.bernoulli(rng.uniform(0.1, 0.9)) ? 1 : 0;
        }
        y[0] = 0;
        y[n - 1] = 1;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (y[i] == 1 && y[j] == 0) {
                    num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
                    den += 1.0;
                }
        worst = std::max(worst, std::abs(auroc(s, y) - num / den));
    }
    const double secs = seconds_since(t0);
    o.require(worst <= kAurocTol, fmt("max deviation %.3g", worst));
    o.require(secs < kAurocSeconds, fmt("took %.2fs", secs));
    if (o.pass) o.detail = fmt("200 instances, max deviation %.3g, %.2fs", worst, secs);
    return o;
}

Outcome weighted_rms_reduction() {
    Outcome o;
    Rng rng(7);
    double worst_unit = 0.0, worst_homog = 0.0, worst_perm = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> u(static_cast<std::size_t>(rng.uniform_int(1, 40)));
        for (double& x : u) x = rng.uniform(0.0, 4.0);
        WeightVector ones{std::vector<double>(u.size(), 1.0)};
        worst_unit = std::max(worst_unit, std::abs(aggregate_weighted(u, ones).value -
                                                   aggregate_simple(u, SimpleMode::Rms).value));

        WeightVector w{std::vector<double>(u.size())};
        for (double& x : w.w) x = rng.uniform(0.05, 3.0);
        const double base = aggregate_weighted(u, w).value;
        const double c = rng.uniform(0.0, 5.0);
        std::vector<double> cu(u);
        for (double& x : cu) x *= c;
        worst_homog = std::max(worst_homog, std::abs(aggregate_weighted(cu, w).value - c * base));

        std::vector<std::size_t> perm(u.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        std::vector<double> pu(u.size());
        WeightVector pw{std::vector<double>(u.size())};
        for (std::size_t i = 0; i < perm.size(); ++i) {
            pu[i] = u[perm[i]];
            pw.w[i] = w.w[perm[i]];
        }
        worst_perm = std::max(worst_perm, std::abs(aggregate_weighted(pu, pw).value - base));
    }
    o.require(worst_unit <= kAggregateTol, fmt("unit weights deviate from RMS by %.3g", worst_unit));
    o.require(worst_homog <= kAggregateTol, fmt("homogeneity off by %.3g", worst_homog));
    o.require(worst_perm <= kAggregateTol, fmt("permutation changes score by %.3g", worst_perm));
    if (o.pass)
        o.detail = fmt("100 vectors, max deviations unit %.3g / scale %.3g / perm %.3g", worst_unit, worst_homog,
                       worst_perm);
    return o;
}

Outcome em_correctness() {
    Outcome o;
    const auto t0 = Clock::now();
    Rng rng(31337);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto S = static_cast<std::size_t>(rng.uniform_int(1, 3));
        const auto D = static_cast<std::size_t>(rng.uniform_int(1, 2));
        const auto K = static_cast<std::size_t>(rng.uniform_int(1, 2));
        const auto T = static_cast<std::size_t>(rng.uniform_int(1, 6));
        ChmmModel m = test::random_model(rng, S, D, K);
        auto seq = test::random_sequence(rng, D, T);
        const double brute = std::log(test::brute_force_likelihood(m, seq));
        worst = std::max(worst, std::abs(log_likelihood(m, seq) - brute));
    }
    o.require(worst <= kForwardBackwardTol, fmt("forward-backward off by %.3g", worst));

    double worst_drop = 0.0;
    int total_iters = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng r(1000 + seed);
        const auto K = static_cast<std::size_t>(r.uniform_int(1, 2));
        ChmmModel truth = test::random_model(r, 3, 2, K);
        auto sampled = sample_chmm(truth, 30, 8, seed);
        std::vector<ObservationSequence> seqs;
        for (auto& s : sampled) seqs.push_back(std::move(s.obs));
        FitConfig cfg;
        cfg.max_iters = 60;
        cfg.n_components = K;
        cfg.seed = seed;
        FitResult fit = baum_welch_fit(random_init(seqs, 3, K, seed), seqs, cfg);
        const auto& tr = fit.report.loglik_trace;
        for (std::size_t i = 1; i < tr.size(); ++i) worst_drop = std::max(worst_drop, tr[i - 1] - tr[i]);
        total_iters += fit.report.iterations;
    }
    const double secs = seconds_since(t0);
    o.require(worst_drop <= kTraceSlack, fmt("loglik trace dropped by %.3g", worst_drop));
    o.require(secs < kEmSeconds, fmt("took %.2fs", secs));
    if (o.pass)
        o.detail = fmt("100 models max |dLL| %.3g; 50 fits (%d updates) worst drop %.3g; %.2fs", worst, total_iters,
                       worst_drop, secs);
    return o;
}

Outcome planted_recovery() {
    Outcome o;
    const auto t0 = Clock::now();
    ChmmModel truth;
    truth.n_states = 3;
    truth.obs_dim = 2;
    truth.pi = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    truth.trans = {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}};
    for (double mu : {0.1, 0.5, 0.9})
        truth.emissions.push_back(GaussianMixture{{1.0}, {{mu, mu}}, {{0.01 * 0.01, 0.01 * 0.01}}});

    const auto labeled = sample_chmm(truth, 500, 10, 42);
    std::vector<ObservationSequence> seqs;
    for (const auto& ls : labeled) seqs.push_back(ls.obs);
    const ChmmModel init = supervised_init(labeled, 3);
    const FitResult fit = baum_welch_fit(init, seqs, FitConfig{});

    std::vector<std::size_t> perm{0, 1, 2}, best_perm;
    double best_err = INFINITY;
    do {
        double err = 0.0;
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t d = 0; d < 2; ++d) {
                const double want = truth.emissions[j].means[0][d];
                err = std::max(err, std::abs(fit.model.emissions[perm[j]].means[0][d] - want) / want);
            }
        if (err < best_err) {
            best_err = err;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    double worst_trans = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            worst_trans = std::max(worst_trans,
                                   std::abs(fit.model.trans[best_perm[i]][best_perm[j]] - truth.trans[i][j]));
    const double secs = seconds_since(t0);
    o.require(best_err <= kMeanRelTol, fmt("mean relative error %.4f", best_err));
    o.require(worst_trans <= kTransTol, fmt("transition error %.4f", worst_trans));
    o.require(secs < kRecoverySeconds, fmt("took %.2fs", secs));
    if (o.pass)
        o.detail = fmt("mean rel err %.2e, max |dA| %.4f, %d iterations, %.2fs", best_err, worst_trans,
                       fit.report.iterations, secs);
    return o;
}

Outcome directional() {
    Outcome o;
    const auto t0 = Clock::now();
    SynthConfig bench;
    bench.seed = 42;
    bench.n_trajectories = 2000;
    const LabeledDataset eval_set = generate(bench);

    // The situational model is trained on a separate annotated corpus.
    SynthConfig train_cfg;
    train_cfg.seed = 43;
    train_cfg.n_trajectories = 500;
    const LabeledDataset train_set = generate(train_cfg);
    StatePaths paths;
    for (std::size_t i = 0; i < train_set.truth.size(); ++i)
        paths[train_set.dataset.trajectories[i].id] = train_set.truth[i].states;

    auto scorer = std::make_shared<StubScorer>();
    CachingScorer cache(scorer);
    HmmTrainingConfig tc;
    const HmmTrainingResult trained = train_situational_hmm(train_set.dataset, paths, cache, tc);

    MethodConfig hmmd = *method_preset("saup-hmmd");
    hmmd.model = std::make_shared<const ChmmModel>(trained.fit.model);
    std::vector<MethodConfig> methods{hmmd, *method_preset("rms"), *method_preset("last-step")};
    const EvalReport r = evaluate(eval_set.dataset, methods, cache, 0);
    const double a_hmmd = r.method("saup-hmmd").auroc, a_rms = r.method("rms").auroc,
                 a_last = r.method("last-step").auroc;
    const double secs = seconds_since(t0);
    const std::string nums = fmt("HMMD %.4f, RMS %.4f, last-step %.4f", a_hmmd, a_rms, a_last);
    o.require(a_hmmd >= a_rms + kDirectionalMargin, nums + " (HMMD margin)");
    o.require(a_rms >= a_last + kDirectionalMargin, nums + " (RMS margin)");
    o.require(secs < kDirectionalSeconds, fmt("took %.2fs", secs));
    if (o.pass) o.detail = nums + fmt(", %.2fs", secs);
    return o;
}

Outcome estimator_identities() {
    Outcome o;
    const double ln2 = std::log(2.0);
    auto near = [&](double got, double want, const char* what) {
        o.require(std::abs(got - want) <= kEstimatorTol, fmt("%s: got %.12g want %.12g", what, got, want));
    };
    auto seq = [](std::vector<double> v) { return TokenSequence{"x", std::move(v)}; };
    const std::vector<double> lp987{std::log(0.9), std::log(0.8), std::log(0.7)};

    // independently evaluated (mpmath, 30 digits)
    near(normalized_entropy(seq({0, 0}), seq({})).value, 0.0, "NE certain");
    near(normalized_entropy(seq({std::log(0.5), std::log(0.5)}), seq({})).value, ln2, "NE halves");
    near(normalized_entropy(seq(lp987), seq({})).value, 0.228393003636922806, "NE 0.9/0.8/0.7");
    near(likelihood_uncertainty(seq({0}), seq({})).value, 0.0, "likelihood certain");
    near(likelihood_uncertainty(seq({std::log(0.5), std::log(0.5)}), seq({})).value, 2 * ln2, "likelihood halves");
    near(likelihood_uncertainty(seq(lp987), seq({})).value, 0.685179010910768419, "likelihood 0.9/0.8/0.7");
    std::vector<Sample> s1{{0.0, 0, {}}};
    std::vector<Sample> s2{{std::log(0.5), 0, {}}, {std::log(0.5), 1, {}}};
    std::vector<Sample> s3{{std::log(0.9), 0, {}}, {std::log(0.1), 1, {}}};
    near(predictive_entropy(s1).value, 0.0, "predictive single");
    near(predictive_entropy(s2).value, ln2, "predictive halves");
    near(predictive_entropy(s3).value, 1.20397280432593595, "predictive 0.9/0.1");
    near(p_true_uncertainty(1.0).value, 0.0, "p_true 1");
    near(p_true_uncertainty(0.0).value, 1.0, "p_true 0");
    near(p_true_uncertainty(0.25).value, 0.75, "p_true 0.25");
    std::vector<Sample> one{{-1.0, 4, {}}, {-3.0, 4, {}}};
    std::vector<Sample> half{{std::log(0.2), 0, {}}, {std::log(0.2), 1, {}}};
    std::vector<Sample> q{{std::log(0.75), 0, {}}, {std::log(0.25), 1, {}}};
    near(semantic_entropy(one).value, 0.0, "SE one cluster");
    near(semantic_entropy(half).value, ln2, "SE equal mass");
    near(semantic_entropy(q).value, 0.562335144618808350, "SE 0.75/0.25");

    Rng rng(99);
    double worst = -INFINITY;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Sample> s(static_cast<std::size_t>(rng.uniform_int(1, 16)));
        std::set<std::int64_t> clusters;
        for (Sample& x : s) {
            x.total_logprob = -rng.uniform(0.0, 50.0);
            x.cluster_id = rng.uniform_int(0, 7);
            clusters.insert(x.cluster_id);
        }
        worst = std::max(worst, semantic_entropy(s).value - std::log(static_cast<double>(clusters.size())));
    }
    o.require(worst <= 1e-12, fmt("semantic entropy exceeds ln(#clusters) by %.3g", worst));
    if (o.pass) o.detail = fmt("15 examples; 1000 random inputs, max SE - ln k = %.3g", worst);
    return o;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
    args.insert(args.begin(), "saup");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (err_text) *err_text = err.str();
    return code;
}

Outcome e2e_determinism() {
    Outcome o;
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / ("saup-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string dir = root.string();
    std::string err;
    int code = cli({"synth", "--seed", "42", "--n", "400", "--out", dir + "/syn"}, &err);
    o.require(code == 0, "synth failed: " + err);
    code = cli({"train-hmm", "--dataset", dir + "/syn/corpus.jsonl", "--labels", dir + "/syn/truth.json", "--seed",
                "42", "--out", dir + "/hmm"},
               &err);
    o.require(code == 0, "train-hmm failed: " + err);
    std::vector<std::string> files{"report.json", "report.csv", "manifest.json"};
    std::vector<std::string> first;
    for (int run = 0; run < 2 && o.pass; ++run) {
        code = cli({"eval", "--dataset", dir + "/syn/corpus.jsonl", "--model", dir + "/hmm/model.json", "--seed", "42",
                    "--jobs", run == 0 ? "1" : "4", "--out", dir + "/eval"},
                   &err);
        o.require(code == 0, "eval failed: " + err);
        for (std::size_t i = 0; i < files.size(); ++i) {
            std::string bytes = slurp(root / "eval" / files[i]);
            o.require(!bytes.empty(), files[i] + " missing");
            if (run == 0)
                first.push_back(bytes);
            else
                o.require(bytes == first[i], files[i] + " differs between runs");
        }
        fs::remove_all(root / "eval");
    }
    fs::remove_all(root);
    if (o.pass) o.detail = "report.json, report.csv, manifest.json identical (jobs 1 vs 4)";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria{
        {"auroc_oracle_equivalence", auroc_oracle},
        {"weighted_rms_reduction", weighted_rms_reduction},
        {"em_correctness", em_correctness},
        {"planted_model_recovery", planted_recovery},
        {"directional_ordering", directional},
        {"estimator_identities", estimator_identities},
        {"end_to_end_determinism", e2e_determinism},
    };
    const std::string only = argc > 1 ? argv[1] : "";
    int failed = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && only != c.name) continue;
        ++ran;
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    if (ran == 0) {
        std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
        return 2;
    }
    std::printf("%d/%d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
