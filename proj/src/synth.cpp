#include "saup/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "saup/rng.hpp"

namespace saup {

using nlohmann::json;

namespace {

constexpr std::size_t kQuestionTokens = 40;
// Distinct tokens across a step's action and observation text.
constexpr std::size_t kInteractionTokens = 20;
constexpr std::size_t kVocabulary = 1000;
constexpr const char* kStatePools[kSynthStates] = {"fact", "aside", "detour"};

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
}

std::string join(const std::vector<std::string>& toks) {
    std::string out;
    for (const auto& t : toks) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double v = rng.normal(mean, sd);
        if (v >= lo && v <= hi) return v;
    }
    return std::clamp(mean, lo, hi);
}

struct StepText {
    std::string thought, action, observation;
};

// Builds text whose Jaccard token overlaps give 1 - d_a against the question
// (current step only) and 1 - d_o between observation and action.
StepText realize_step(Rng& rng, const std::vector<std::string>& question, double d_a, double d_o, int state,
                      std::size_t& counter) {
    const double j_a = 1.0 - d_a;
    const double j_o = 1.0 - d_o;
    const auto shared = static_cast<std::size_t>(std::lround(j_o * static_cast<double>(kInteractionTokens)));

    // r question tokens inside the interaction union, k question tokens overall.
    std::size_t best_r = kInteractionTokens, best_k = kQuestionTokens;
    double best_err = 2.0;
    for (std::size_t r = kInteractionTokens + 1; r-- > 0;) {
        const double denom = static_cast<double>(kQuestionTokens + kInteractionTokens - r);
        const auto k = static_cast<std::size_t>(std::lround(j_a * denom));
        if (k < r || k > kQuestionTokens) continue;
        const double err = std::abs(static_cast<double>(k) / denom - j_a);
        if (err < best_err - 1e-15) {
            best_err = err;
            best_r = r;
            best_k = k;
        }
    }

    std::vector<std::size_t> qidx(question.size());
    for (std::size_t i = 0; i < qidx.size(); ++i) qidx[i] = i;
    shuffle(qidx, rng);

    std::vector<std::string> interaction;
    for (std::size_t i = 0; i < best_r; ++i) interaction.push_back(question[qidx[i]]);
    for (std::size_t i = best_r; i < kInteractionTokens; ++i)
        interaction.push_back(std::string(kStatePools[state]) + std::to_string(counter++));
    shuffle(interaction, rng);

    std::vector<std::string> thought;
    for (std::size_t i = best_r; i < best_k; ++i) thought.push_back(question[qidx[i]]);

    const std::size_t action_only = (kInteractionTokens - shared + 1) / 2;
    std::vector<std::string> action(interaction.begin(), interaction.begin() + static_cast<std::ptrdiff_t>(shared));
    std::vector<std::string> observation = action;
    for (std::size_t i = shared; i < shared + action_only; ++i) action.push_back(interaction[i]);
    for (std::size_t i = shared + action_only; i < kInteractionTokens; ++i) observation.push_back(interaction[i]);
    shuffle(action, rng);
    shuffle(observation, rng);
    return {join(thought), join(action), join(observation)};
}

void check_stochastic(std::span<const double> row, const char* what) {
    double sum = 0.0;
    for (double p : row) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw Error(Errc::InvalidConfig, std::string(what) + " has a negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(Errc::InvalidConfig, std::string(what) + " does not sum to 1");
}

}  // namespace

void validate_synth_config(const SynthConfig& cfg) {
    if (cfg.n_trajectories < 1) throw Error(Errc::InvalidConfig, "n_trajectories must be >= 1");
    if (cfg.min_steps < 1 || cfg.max_steps < cfg.min_steps)
        throw Error(Errc::InvalidConfig, "step lengths need 1 <= min_steps <= max_steps");
    check_stochastic(cfg.pi, "pi");
    for (const auto& row : cfg.trans) check_stochastic(row, "trans row");
    for (const auto& s : cfg.states)
        if (!(s.sd_da > 0.0) || !(s.sd_do > 0.0) || !(s.sd_u > 0.0) || !std::isfinite(s.mean_da + s.mean_do + s.mean_u))
            throw Error(Errc::InvalidConfig, "per-state spreads must be positive and means finite");
    if (!std::isfinite(cfg.link_a) || !std::isfinite(cfg.link_b))
        throw Error(Errc::InvalidConfig, "link coefficients must be finite");
    if (cfg.logprob_tokens < 1 || cfg.samples_per_step < 1)
        throw Error(Errc::InvalidConfig, "logprob_tokens and samples_per_step must be >= 1");
}

LabeledDataset generate(const SynthConfig& cfg) {
    validate_synth_config(cfg);
    Rng rng(cfg.seed);
    LabeledDataset out;
    out.dataset.source = "synth:seed=" + std::to_string(cfg.seed);
    out.dataset.trajectories.reserve(cfg.n_trajectories);
    out.truth.reserve(cfg.n_trajectories);

    std::vector<std::size_t> vocab(kVocabulary);
    for (std::size_t i = 0; i < vocab.size(); ++i) vocab[i] = i;

    for (std::size_t n = 0; n < cfg.n_trajectories; ++n) {
        char id[32];
        std::snprintf(id, sizeof id, "syn-%05zu", n);
        Trajectory t;
        t.id = id;
        t.meta["source"] = "synth";

        shuffle(vocab, rng);
        std::vector<std::string> question;
        for (std::size_t i = 0; i < kQuestionTokens; ++i) question.push_back("w" + std::to_string(vocab[i]));
        t.question = join(question);

        const auto len = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(cfg.min_steps), static_cast<std::int64_t>(cfg.max_steps)));
        PlantedTrajectory truth;
        int state = static_cast<int>(rng.categorical(cfg.pi));
        std::size_t counter = 0;
        double state_sum = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            if (i > 0) state = static_cast<int>(rng.categorical(cfg.trans[static_cast<std::size_t>(state)]));
            const SynthStateParams& sp = cfg.states[static_cast<std::size_t>(state)];
            const double d_a = truncated_normal(rng, sp.mean_da, sp.sd_da, 0.0, 1.0);
            const double d_o = truncated_normal(rng, sp.mean_do, sp.sd_do, 0.0, 1.0);
            const double u = truncated_normal(rng, sp.mean_u, sp.sd_u, 0.0, HUGE_VAL);
            truth.states.push_back(state);
            truth.d_a.push_back(d_a);
            truth.d_o.push_back(d_o);
            truth.u.push_back(u);
            state_sum += state;

            StepText text = realize_step(rng, question, d_a, d_o, state, counter);
            Step step;
            step.index = static_cast<int>(i) + 1;
            const double lp = u == 0.0 ? 0.0 : -u;
            step.thought = {std::move(text.thought), std::vector<double>(cfg.logprob_tokens, lp)};
            step.action = {std::move(text.action), std::vector<double>(cfg.logprob_tokens, lp)};
            step.observation = std::move(text.observation);

            const auto n_tokens = static_cast<std::int64_t>(2 * cfg.logprob_tokens);
            const std::int64_t clusters = 1 + state;
            std::vector<Sample> samples;
            for (std::size_t k = 0; k < cfg.samples_per_step; ++k) {
                const double total = -u * static_cast<double>(n_tokens) * rng.uniform(0.5, 1.5);
                samples.push_back({total == 0.0 ? 0.0 : total, rng.uniform_int(0, clusters - 1), n_tokens});
            }
            step.samples = std::move(samples);
            step.p_true = std::exp(-u);
            t.steps.push_back(std::move(step));
        }
        const double mean_state = state_sum / static_cast<double>(len);
        const double p_incorrect = 1.0 / (1.0 + std::exp(-(cfg.link_a * mean_state + cfg.link_b)));
        t.correct = !rng.bernoulli(p_incorrect);
        t.final_answer = "answer " + t.id;

        out.dataset.trajectories.push_back(std::move(t));
        out.truth.push_back(std::move(truth));
    }
    return out;
}

json truth_to_json(const LabeledDataset& ld, std::uint64_t seed) {
    json trajectories = json::object();
    for (std::size_t i = 0; i < ld.truth.size(); ++i) {
        const PlantedTrajectory& p = ld.truth[i];
        trajectories[ld.dataset.trajectories[i].id] = {
            {"states", p.states}, {"u", p.u}, {"d_a", p.d_a}, {"d_o", p.d_o}};
    }
    return json{{"version", 1}, {"seed", seed}, {"trajectories", std::move(trajectories)}};
}

StatePaths state_paths_from_json(const json& doc) {
    try {
        if (doc.value("version", 0) != 1) throw Error(Errc::InvalidConfig, "unsupported state-path sidecar version");
        StatePaths out;
        for (const auto& [id, entry] : doc.at("trajectories").items())
            out[id] = entry.at("states").get<std::vector<int>>();
        return out;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidConfig, std::string("malformed state-path sidecar: ") + e.what());
    }
}

StatePaths load_state_paths(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open state paths '" + path + "'");
    try {
        return state_paths_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw Error(Errc::InvalidConfig, e.what());
    }
}

std::vector<LabeledSequence> sample_chmm(const ChmmModel& m, std::size_t n_sequences, std::size_t length,
                                         std::uint64_t seed) {
    validate_model(m);
    Rng rng(seed);
    std::vector<LabeledSequence> out;
    out.reserve(n_sequences);
    std::vector<double> x(m.obs_dim);
    for (std::size_t s = 0; s < n_sequences; ++s) {
        LabeledSequence ls{ObservationSequence(m.obs_dim), {}};
        std::size_t state = rng.categorical(m.pi);
        for (std::size_t t = 0; t < length; ++t) {
            if (t > 0) state = rng.categorical(m.trans[state]);
            const GaussianMixture& g = m.emissions[state];
            const std::size_t k = rng.categorical(g.weights);
            for (std::size_t d = 0; d < m.obs_dim; ++d) x[d] = rng.normal(g.means[k][d], std::sqrt(g.diag_covs[k][d]));
            ls.obs.push_back(x);
            ls.states.push_back(static_cast<int>(state));
        }
        out.push_back(std::move(ls));
    }
    return out;
}

}  // namespace saup
