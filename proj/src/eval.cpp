#include "saup/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include "saup/parallel.hpp"

namespace saup {

using nlohmann::json;

namespace {

template <typename E>
struct EnumName {
    E value;
    const char* name;
};

constexpr EnumName<Aggregation> kAggregations[] = {{Aggregation::Arithmetic, "arithmetic"},
                                                   {Aggregation::Geometric, "geometric"},
                                                   {Aggregation::Rms, "rms"},
                                                   {Aggregation::LastStep, "last_step"}};
constexpr EnumName<Surrogate> kSurrogates[] = {{Surrogate::None, "none"},
                                               {Surrogate::Position, "position"},
                                               {Surrogate::Plain, "plain"},
                                               {Surrogate::Hybrid, "hybrid"},
                                               {Surrogate::Hmm, "hmm"}};
constexpr EnumName<Stabilizer> kStabilizers[] = {{Stabilizer::None, "none"}, {Stabilizer::Log1p, "log1p"}};
constexpr EnumName<ObservationMode> kObsModes[] = {{ObservationMode::Pair, "pair"}, {ObservationMode::Sum, "sum"}};
constexpr EnumName<DistanceMode> kDistanceModes[] = {{DistanceMode::OneMinus, "one_minus"},
                                                     {DistanceMode::Reciprocal, "reciprocal"}};
constexpr EnumName<ContextWindow> kWindows[] = {{ContextWindow::Cumulative, "cumulative"},
                                                {ContextWindow::CurrentStep, "current_step"}};

template <typename E, std::size_t N>
const char* to_name(const EnumName<E> (&table)[N], E v) {
    for (const auto& e : table)
        if (e.value == v) return e.name;
    return "unknown";
}

template <typename E, std::size_t N>
E from_name(const EnumName<E> (&table)[N], const std::string& name, const char* what) {
    for (const auto& e : table)
        if (name == e.name) return e.value;
    throw Error(Errc::InvalidConfig, std::string("unknown ") + what + " '" + name + "'");
}

json distance_to_json(const DistanceConfig& d) {
    return json{{"mode", to_name(kDistanceModes, d.mode)},
                {"epsilon", d.epsilon},
                {"window", to_name(kWindows, d.window)},
                {"query_includes_thought", d.query_includes_thought}};
}

void distance_from_json(const json& j, DistanceConfig& d) {
    if (!j.is_object()) throw Error(Errc::InvalidConfig, "'distance' must be an object");
    if (j.contains("mode")) d.mode = from_name(kDistanceModes, j.at("mode").get<std::string>(), "distance mode");
    if (j.contains("epsilon")) d.epsilon = j.at("epsilon").get<double>();
    if (j.contains("window")) d.window = from_name(kWindows, j.at("window").get<std::string>(), "context window");
    if (j.contains("query_includes_thought")) d.query_includes_thought = j.at("query_includes_thought").get<bool>();
}

MethodConfig make(std::string name, Estimator e, Aggregation a, Surrogate s = Surrogate::None) {
    MethodConfig m;
    m.name = std::move(name);
    m.estimator = e;
    m.aggregation = a;
    m.surrogate = s;
    return m;
}

bool needs_all_steps(const MethodConfig& m) {
    return !(m.surrogate == Surrogate::None && m.aggregation == Aggregation::LastStep);
}

bool needs_distances(const MethodConfig& m) {
    return m.surrogate == Surrogate::Plain || m.surrogate == Surrogate::Hybrid || m.surrogate == Surrogate::Hmm;
}

json opt_bool(const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); }

}  // namespace

std::optional<MethodConfig> method_preset(const std::string& name) {
    using E = Estimator;
    using A = Aggregation;
    if (name == "saup-hmmd") return make(name, E::NormalizedEntropy, A::Rms, Surrogate::Hmm);
    if (name == "saup-d") return make(name, E::NormalizedEntropy, A::Rms, Surrogate::Plain);
    if (name == "saup-p") return make(name, E::NormalizedEntropy, A::Rms, Surrogate::Position);
    if (name == "saup-pd") return make(name, E::NormalizedEntropy, A::Rms, Surrogate::Hybrid);
    if (name == "rms") return make(name, E::NormalizedEntropy, A::Rms);
    if (name == "arithmetic") return make(name, E::NormalizedEntropy, A::Arithmetic);
    if (name == "geometric") return make(name, E::NormalizedEntropy, A::Geometric);
    if (name == "last-step") return make(name, E::NormalizedEntropy, A::LastStep);
    if (name == "normalized-entropy") return make(name, E::NormalizedEntropy, A::LastStep);
    if (name == "likelihood") return make(name, E::Likelihood, A::LastStep);
    if (name == "predictive-entropy") return make(name, E::PredictiveEntropy, A::LastStep);
    if (name == "p-true") return make(name, E::PTrue, A::LastStep);
    if (name == "semantic-entropy") return make(name, E::SemanticEntropy, A::LastStep);
    return std::nullopt;
}

std::vector<std::string> method_preset_names() {
    return {"saup-hmmd", "saup-d",     "saup-p",     "saup-pd",        "rms",  "arithmetic", "geometric",
            "last-step", "normalized-entropy", "likelihood", "predictive-entropy", "p-true", "semantic-entropy"};
}

MethodConfig method_from_json(const json& j) {
    try {
        if (j.is_string()) {
            auto m = method_preset(j.get<std::string>());
            if (!m) throw Error(Errc::InvalidConfig, "unknown method preset '" + j.get<std::string>() + "'");
            return *m;
        }
        if (!j.is_object()) throw Error(Errc::InvalidConfig, "method must be a preset name or an object");
        MethodConfig m;
        if (j.contains("preset")) {
            auto base = method_preset(j.at("preset").get<std::string>());
            if (!base) throw Error(Errc::InvalidConfig, "unknown method preset '" + j.at("preset").get<std::string>() + "'");
            m = *base;
        }
        if (j.contains("name")) m.name = j.at("name").get<std::string>();
        if (m.name.empty()) throw Error(Errc::InvalidConfig, "method needs a name");
        if (j.contains("estimator")) {
            const auto name = j.at("estimator").get<std::string>();
            auto e = parse_estimator(name);
            if (!e) throw Error(Errc::InvalidConfig, "unknown estimator '" + name + "'");
            m.estimator = *e;
        }
        if (j.contains("aggregation"))
            m.aggregation = from_name(kAggregations, j.at("aggregation").get<std::string>(), "aggregation");
        if (j.contains("surrogate")) m.surrogate = from_name(kSurrogates, j.at("surrogate").get<std::string>(), "surrogate");
        if (j.contains("alpha")) m.alpha = j.at("alpha").get<double>();
        if (j.contains("beta")) m.beta = j.at("beta").get<double>();
        if (j.contains("stabilizer"))
            m.stabilizer = from_name(kStabilizers, j.at("stabilizer").get<std::string>(), "stabilizer");
        if (j.contains("state_weights")) m.state_weights.weights = j.at("state_weights").get<std::vector<double>>();
        if (j.contains("obs_mode")) m.obs_mode = from_name(kObsModes, j.at("obs_mode").get<std::string>(), "obs_mode");
        if (j.contains("model")) m.model_path = j.at("model").get<std::string>();
        if (j.contains("distance")) distance_from_json(j.at("distance"), m.distance);
        if (j.contains("semantic_length_normalize"))
            m.semantic.length_normalize = j.at("semantic_length_normalize").get<bool>();
        return m;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidConfig, e.what());
    }
}

json method_to_json(const MethodConfig& m) {
    json j{{"name", m.name},
           {"estimator", std::string(estimator_name(m.estimator))},
           {"aggregation", to_name(kAggregations, m.aggregation)},
           {"surrogate", to_name(kSurrogates, m.surrogate)},
           {"stabilizer", to_name(kStabilizers, m.stabilizer)},
           {"semantic_length_normalize", m.semantic.length_normalize}};
    if (m.surrogate == Surrogate::Position || m.surrogate == Surrogate::Hybrid) j["beta"] = m.beta;
    if (m.surrogate == Surrogate::Hybrid) j["alpha"] = m.alpha;
    if (m.surrogate == Surrogate::Hmm) {
        j["state_weights"] = m.state_weights.weights;
        j["obs_mode"] = to_name(kObsModes, m.obs_mode);
        if (!m.model_path.empty()) j["model"] = m.model_path;
    }
    if (needs_distances(m)) j["distance"] = distance_to_json(m.distance);
    return j;
}

void validate_method(const MethodConfig& m) {
    const std::string tag = "method '" + m.name + "': ";
    if (m.surrogate != Surrogate::None && m.aggregation != Aggregation::Rms)
        throw Error(Errc::InvalidConfig, tag + "weighted propagation requires rms aggregation");
    if (!(m.beta > 0.0)) throw Error(Errc::InvalidConfig, tag + "beta must be positive");
    if (!(m.alpha >= 0.0 && m.alpha <= 1.0)) throw Error(Errc::InvalidConfig, tag + "alpha must lie in [0, 1]");
    if (!(m.distance.epsilon > 0.0)) throw Error(Errc::InvalidConfig, tag + "distance epsilon must be positive");
    if (m.surrogate == Surrogate::Hmm) {
        if (!m.model) throw Error(Errc::InvalidConfig, tag + "hmm surrogate requires a model");
        const std::size_t dim = m.obs_mode == ObservationMode::Pair ? 2 : 1;
        if (m.model->obs_dim != dim)
            throw Error(Errc::DimensionMismatch, tag + "model observation dimension does not match obs_mode");
        if (m.state_weights.weights.size() != m.model->n_states)
            throw Error(Errc::DimensionMismatch, tag + "state weight map length differs from model state count");
        for (double w : m.state_weights.weights)
            if (!(w > 0.0)) throw Error(Errc::InvalidConfig, tag + "state weights must be positive");
    }
}

void check_method_requirements(const Dataset& d, const MethodConfig& m) {
    const bool all_steps = needs_all_steps(m);
    for (const Trajectory& t : d.trajectories) {
        if (t.steps.empty()) throw Error(Errc::FieldUnavailable, "trajectory '" + t.id + "' has no steps");
        const std::size_t first = all_steps ? 0 : t.steps.size() - 1;
        for (std::size_t i = first; i < t.steps.size(); ++i)
            if (!step_supports(t.steps[i], m.estimator))
                throw Error(Errc::FieldUnavailable,
                            "method '" + m.name + "' needs '" + std::string(step_field_name(required_field(m.estimator))) +
                                "' but trajectory '" + t.id + "' step " + std::to_string(i + 1) + " lacks it");
    }
}

AgentScore score_trajectory(const Trajectory& t, const MethodConfig& m, const RelevanceScorer& scorer) {
    if (t.steps.empty()) throw Error(Errc::EmptyInput, "trajectory '" + t.id + "' has no steps");
    AgentScore out;
    if (!needs_all_steps(m)) {
        out = {estimate_step(t.steps.back(), m.estimator, m.semantic).value, m.name};
        return out;
    }
    std::vector<double> u;
    u.reserve(t.steps.size());
    for (const Step& s : t.steps) u.push_back(estimate_step(s, m.estimator, m.semantic).value);

    if (m.surrogate == Surrogate::None) {
        switch (m.aggregation) {
            case Aggregation::Arithmetic: out = aggregate_simple(u, SimpleMode::Arithmetic); break;
            case Aggregation::Geometric: out = aggregate_simple(u, SimpleMode::Geometric); break;
            case Aggregation::Rms: out = aggregate_simple(u, SimpleMode::Rms); break;
            case Aggregation::LastStep: out = last_step(u); break;
        }
        out.method = m.name;
        return out;
    }

    WeightVector w;
    if (m.surrogate == Surrogate::Position) {
        w = weights_position(u.size(), m.beta);
    } else {
        const auto distances = compute_distances(t, scorer, m.distance);
        std::vector<StepFeatures> features(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            features[i] = {StepUncertainty{u[i], m.estimator}, distances[i].d_a, distances[i].d_o};
        switch (m.surrogate) {
            case Surrogate::Plain: w = weights_plain(features); break;
            case Surrogate::Hybrid: w = weights_hybrid(features, m.alpha, m.beta); break;
            case Surrogate::Hmm:
                w = weights_hmm(*m.model, observations_from_features(features, m.obs_mode), m.state_weights);
                break;
            default: break;
        }
    }
    out = aggregate_weighted(u, w, m.stabilizer);
    out.method = m.name;
    return out;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw Error(Errc::LengthMismatch, std::to_string(scores.size()) + " scores but " +
                                              std::to_string(labels.size()) + " labels");
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw Error(Errc::OutOfRange, "labels must be 0 or 1");
        if (std::isnan(scores[i])) throw Error(Errc::OutOfRange, "score is NaN");
        n_pos += static_cast<std::size_t>(labels[i]);
    }
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw Error(Errc::SingleClass, "AUROC needs both correct and incorrect labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Ranks are 1-based; a tie group spanning positions [i, j) gets the average (i + 1 + j) / 2.
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

const MethodResult& EvalReport::method(const std::string& name) const {
    for (const auto& m : methods)
        if (m.name == name) return m;
    throw Error(Errc::InvalidConfig, "report has no method '" + name + "'");
}

DatasetSummary summarize(const Dataset& d) {
    DatasetSummary s;
    s.n_trajectories = d.trajectories.size();
    for (const Trajectory& t : d.trajectories) {
        if (!t.correct) continue;
        ++s.n_labeled;
        if (*t.correct)
            ++s.n_correct;
        else
            ++s.n_incorrect;
    }
    return s;
}

EvalReport evaluate(const Dataset& d, std::span<const MethodConfig> methods, const RelevanceScorer& scorer,
                    unsigned jobs) {
    EvalReport report;
    report.summary = summarize(d);
    if (report.summary.n_correct == 0 || report.summary.n_incorrect == 0)
        throw Error(Errc::SingleClass, "dataset needs at least one correct and one incorrect labeled trajectory");
    for (const MethodConfig& m : methods) {
        validate_method(m);
        check_method_requirements(d, m);
    }
    for (const MethodConfig& m : methods) {
        MethodResult res;
        res.name = m.name;
        res.records.resize(d.trajectories.size());
        parallel_for(d.trajectories.size(), jobs, [&](std::size_t i) {
            const Trajectory& t = d.trajectories[i];
            res.records[i] = {t.id, score_trajectory(t, m, scorer).value, t.correct, t.steps.size()};
        });
        std::vector<double> scores;
        std::vector<int> labels;
        for (const auto& r : res.records) {
            if (!r.correct) continue;
            scores.push_back(r.score);
            labels.push_back(*r.correct ? 0 : 1);
        }
        res.n_labeled = scores.size();
        res.auroc = auroc(scores, labels);
        report.methods.push_back(std::move(res));
    }
    return report;
}

std::vector<ScatterRow> export_scatter(const MethodResult& result, ScatterNormalization norm) {
    std::vector<ScatterRow> rows;
    rows.reserve(result.records.size());
    double lo = 0.0, hi = 0.0;
    if (!result.records.empty()) {
        lo = hi = result.records.front().score;
        for (const auto& r : result.records) {
            lo = std::min(lo, r.score);
            hi = std::max(hi, r.score);
        }
    }
    for (const auto& r : result.records) {
        double v = r.score;
        if (norm == ScatterNormalization::MinMax) v = hi > lo ? (r.score - lo) / (hi - lo) : 0.0;
        rows.push_back({r.id, r.n_steps, v, r.correct});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ScatterRow& a, const ScatterRow& b) { return a.id < b.id; });
    return rows;
}

std::string format_sig9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

double round_sig9(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(format_sig9(v).c_str(), nullptr);
}

json report_to_json(const EvalReport& r) {
    json methods = json::array();
    for (const auto& m : r.methods) {
        json records = json::array();
        for (const auto& rec : m.records)
            records.push_back({{"id", rec.id},
                               {"score", round_sig9(rec.score)},
                               {"correct", opt_bool(rec.correct)},
                               {"n_steps", rec.n_steps}});
        methods.push_back({{"name", m.name},
                           {"auroc", round_sig9(m.auroc)},
                           {"n_labeled", m.n_labeled},
                           {"records", std::move(records)}});
    }
    return json{{"schema", "saup-eval-report"},
                {"version", 1},
                {"summary",
                 {{"n_trajectories", r.summary.n_trajectories},
                  {"n_labeled", r.summary.n_labeled},
                  {"n_correct", r.summary.n_correct},
                  {"n_incorrect", r.summary.n_incorrect}}},
                {"methods", std::move(methods)}};
}

EvalReport report_from_json(const json& j) {
    try {
        if (j.value("schema", "") != "saup-eval-report" || j.value("version", 0) != 1)
            throw Error(Errc::InvalidConfig, "not a version-1 evaluation report");
        EvalReport r;
        const json& s = j.at("summary");
        r.summary = {s.at("n_trajectories").get<std::size_t>(), s.at("n_labeled").get<std::size_t>(),
                     s.at("n_correct").get<std::size_t>(), s.at("n_incorrect").get<std::size_t>()};
        for (const json& m : j.at("methods")) {
            MethodResult res;
            res.name = m.at("name").get<std::string>();
            res.auroc = m.at("auroc").get<double>();
            res.n_labeled = m.at("n_labeled").get<std::size_t>();
            for (const json& rec : m.at("records")) {
                TrajectoryRecord tr;
                tr.id = rec.at("id").get<std::string>();
                tr.score = rec.at("score").get<double>();
                if (!rec.at("correct").is_null()) tr.correct = rec.at("correct").get<bool>();
                tr.n_steps = rec.at("n_steps").get<std::size_t>();
                res.records.push_back(std::move(tr));
            }
            r.methods.push_back(std::move(res));
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidConfig, std::string("malformed report: ") + e.what());
    }
}

std::string report_table_csv(const EvalReport& r) {
    std::ostringstream os;
    os << "method,auroc,n\n";
    for (const auto& m : r.methods) os << m.name << ',' << format_sig9(m.auroc) << ',' << m.n_labeled << '\n';
    return os.str();
}

std::string scatter_csv(std::span<const ScatterRow> rows) {
    std::ostringstream os;
    os << "id,n_steps,normalized_score,correct\n";
    for (const auto& r : rows)
        os << r.id << ',' << r.n_steps << ',' << format_sig9(r.normalized_score) << ','
           << (r.correct ? (*r.correct ? "true" : "false") : "") << '\n';
    return os.str();
}

}  // namespace saup
