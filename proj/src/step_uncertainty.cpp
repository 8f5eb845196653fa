#include "saup/step_uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace saup {

std::string_view estimator_name(Estimator e) noexcept {
    switch (e) {
        case Estimator::NormalizedEntropy: return "normalized_entropy";
        case Estimator::Likelihood: return "likelihood";
        case Estimator::PredictiveEntropy: return "predictive_entropy";
        case Estimator::PTrue: return "p_true";
        case Estimator::SemanticEntropy: return "semantic_entropy";
    }
    return "unknown";
}

std::optional<Estimator> parse_estimator(std::string_view name) noexcept {
    for (Estimator e : {Estimator::NormalizedEntropy, Estimator::Likelihood, Estimator::PredictiveEntropy,
                        Estimator::PTrue, Estimator::SemanticEntropy})
        if (estimator_name(e) == name) return e;
    return std::nullopt;
}

namespace {

// Sum of thought then action log-probs, and the token count.
std::pair<double, std::size_t> joint_logprob(const TokenSequence& thought, const TokenSequence& action) {
    const std::size_t n = thought.token_logprobs.size() + action.token_logprobs.size();
    if (n == 0) throw Error(Errc::NoLogits, "step has no token log-probabilities");
    double sum = 0.0;
    for (double lp : thought.token_logprobs) sum += lp;
    for (double lp : action.token_logprobs) sum += lp;
    return {sum, n};
}

// fold -0.0 into +0.0
double nonneg(double v) { return v <= 0.0 ? 0.0 : v; }

}  // namespace

StepUncertainty normalized_entropy(const TokenSequence& thought, const TokenSequence& action) {
    const auto [sum, n] = joint_logprob(thought, action);
    return {nonneg(-sum / static_cast<double>(n)), Estimator::NormalizedEntropy};
}

StepUncertainty likelihood_uncertainty(const TokenSequence& thought, const TokenSequence& action) {
    const auto [sum, n] = joint_logprob(thought, action);
    (void)n;
    return {nonneg(-sum), Estimator::Likelihood};
}

StepUncertainty predictive_entropy(std::span<const Sample> samples) {
    if (samples.empty()) throw Error(Errc::NoSamples, "predictive entropy needs at least one sample");
    double sum = 0.0;
    for (const Sample& s : samples) sum += s.total_logprob;
    return {nonneg(-sum / static_cast<double>(samples.size())), Estimator::PredictiveEntropy};
}

StepUncertainty p_true_uncertainty(double p_true) {
    if (!(p_true >= 0.0 && p_true <= 1.0))
        throw Error(Errc::OutOfRange, "p_true " + std::to_string(p_true) + " outside [0, 1]");
    return {1.0 - p_true, Estimator::PTrue};
}

StepUncertainty semantic_entropy(std::span<const Sample> samples, const SemanticEntropyOptions& opts) {
    if (samples.empty()) throw Error(Errc::NoSamples, "semantic entropy needs at least one sample");
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();

    // Per-cluster log-mass via running log-sum-exp; std::map keeps cluster order fixed.
    std::map<std::int64_t, double> log_mass;
    for (const Sample& s : samples) {
        double lp = s.total_logprob;
        if (opts.length_normalize) {
            if (!s.n_tokens || *s.n_tokens < 1)
                throw Error(Errc::FieldUnavailable, "length-normalized semantic entropy needs n_tokens on every sample");
            lp /= static_cast<double>(*s.n_tokens);
        }
        auto [it, inserted] = log_mass.emplace(s.cluster_id, lp);
        if (!inserted) {
            const double hi = std::max(it->second, lp);
            if (hi != kNegInf) it->second = hi + std::log(std::exp(it->second - hi) + std::exp(lp - hi));
        }
    }

    double hi = kNegInf;
    for (const auto& [c, lm] : log_mass) hi = std::max(hi, lm);
    if (hi == kNegInf) throw Error(Errc::DegenerateMass, "every sample has zero probability mass");

    double z = 0.0;
    for (const auto& [c, lm] : log_mass) z += std::exp(lm - hi);
    const double log_z = hi + std::log(z);

    double h = 0.0;
    for (const auto& [c, lm] : log_mass) {
        if (lm == kNegInf) continue;
        const double log_p = lm - log_z;
        h -= std::exp(log_p) * log_p;
    }
    return {nonneg(h), Estimator::SemanticEntropy};
}

StepField required_field(Estimator e) noexcept {
    switch (e) {
        case Estimator::NormalizedEntropy:
        case Estimator::Likelihood: return StepField::TokenLogprobs;
        case Estimator::PredictiveEntropy:
        case Estimator::SemanticEntropy: return StepField::Samples;
        case Estimator::PTrue: return StepField::PTrue;
    }
    return StepField::TokenLogprobs;
}

std::string_view step_field_name(StepField f) noexcept {
    switch (f) {
        case StepField::TokenLogprobs: return "token_logprobs";
        case StepField::Samples: return "samples";
        case StepField::PTrue: return "p_true";
    }
    return "unknown";
}

bool step_supports(const Step& step, Estimator e) noexcept {
    switch (required_field(e)) {
        case StepField::TokenLogprobs:
            return !step.thought.token_logprobs.empty() || !step.action.token_logprobs.empty();
        case StepField::Samples: return step.samples && !step.samples->empty();
        case StepField::PTrue: return step.p_true.has_value();
    }
    return false;
}

StepUncertainty estimate_step(const Step& step, Estimator e, const SemanticEntropyOptions& opts) {
    switch (e) {
        case Estimator::NormalizedEntropy: return normalized_entropy(step.thought, step.action);
        case Estimator::Likelihood: return likelihood_uncertainty(step.thought, step.action);
        case Estimator::PredictiveEntropy:
            if (!step.samples) throw Error(Errc::NoSamples, "step " + std::to_string(step.index) + " has no samples");
            return predictive_entropy(*step.samples);
        case Estimator::PTrue:
            if (!step.p_true)
                throw Error(Errc::FieldUnavailable, "step " + std::to_string(step.index) + " has no p_true");
            return p_true_uncertainty(*step.p_true);
        case Estimator::SemanticEntropy:
            if (!step.samples) throw Error(Errc::NoSamples, "step " + std::to_string(step.index) + " has no samples");
            return semantic_entropy(*step.samples, opts);
    }
    throw Error(Errc::InvalidConfig, "unknown estimator");
}

}  // namespace saup
