#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "saup/trajectory.hpp"

namespace saup {

enum class Estimator { NormalizedEntropy, Likelihood, PredictiveEntropy, PTrue, SemanticEntropy };

std::string_view estimator_name(Estimator e) noexcept;
std::optional<Estimator> parse_estimator(std::string_view name) noexcept;

/// Single-step uncertainty; higher means less confident. Always >= 0.
struct StepUncertainty {
    double value = 0.0;
    Estimator estimator = Estimator::NormalizedEntropy;
};

struct SemanticEntropyOptions {
    /// Divide each sample's total log-probability by its token count before
    /// accumulating cluster mass. Requires `Sample::n_tokens`.
    bool length_normalize = false;
};

/// Negated mean token log-probability over thought followed by action.
/// Throws NoLogits when neither sequence carries log-probabilities.
StepUncertainty normalized_entropy(const TokenSequence& thought, const TokenSequence& action);

/// Negated total token log-probability over thought followed by action.
StepUncertainty likelihood_uncertainty(const TokenSequence& thought, const TokenSequence& action);

/// Monte-Carlo predictive entropy: negated mean sequence log-probability of the samples.
StepUncertainty predictive_entropy(std::span<const Sample> samples);

/// 1 - p_true. Throws OutOfRange outside [0, 1].
StepUncertainty p_true_uncertainty(double p_true);

/// Entropy of the normalized cluster-mass distribution, accumulated in log space.
StepUncertainty semantic_entropy(std::span<const Sample> samples, const SemanticEntropyOptions& opts = {});

/// Which optional step fields an estimator needs.
enum class StepField { TokenLogprobs, Samples, PTrue };
StepField required_field(Estimator e) noexcept;
std::string_view step_field_name(StepField f) noexcept;

/// True when `step` carries the data `e` needs.
bool step_supports(const Step& step, Estimator e) noexcept;

/// Dispatches to the estimator named by `e`.
StepUncertainty estimate_step(const Step& step, Estimator e, const SemanticEntropyOptions& opts = {});

}  // namespace saup
