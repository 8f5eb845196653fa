#pragma once

#include <span>
#include <vector>

#include "saup/chmm.hpp"
#include "saup/distance.hpp"

namespace saup {

/// Situational weights, one strictly positive entry per step.
struct WeightVector {
    std::vector<double> w;
};

/// Weight assigned to each hidden state (index = state).
struct StateWeightMap {
    std::vector<double> weights{1.0, 2.0, 3.0};
};

/// Keeps distance-based weights strictly positive.
inline constexpr double kPlainWeightFloor = 1e-6;

/// How per-step distances become HMM observations.
enum class ObservationMode {
    Pair,  // (d_a, d_o), 2-dim
    Sum,   // d_a + d_o, 1-dim
};

ObservationSequence observations_from_features(std::span<const StepFeatures> features, ObservationMode mode);

/// w_i = (i / n)^beta.
WeightVector weights_position(std::size_t n_steps, double beta = 1.0);

/// w_i = d_a + d_o + floor.
WeightVector weights_plain(std::span<const StepFeatures> features);

/// alpha * position + (1 - alpha) * max-normalized plain distance.
WeightVector weights_hybrid(std::span<const StepFeatures> features, double alpha, double beta = 1.0);

/// Posterior-expected state weight: w_i = sum_k gamma_i(k) * map(k).
WeightVector weights_hmm(const ChmmModel& model, const ObservationSequence& seq, const StateWeightMap& map);

/// Same, from an existing posterior matrix.
WeightVector weights_from_posterior(const PosteriorMatrix& posterior, const StateWeightMap& map);

}  // namespace saup
