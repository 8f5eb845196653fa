#pragma once

#include "saup/chmm.hpp"
#include "saup/distance.hpp"
#include "saup/synth.hpp"
#include "saup/weights.hpp"

namespace saup {

struct HmmTrainingConfig {
    DistanceConfig distance;
    ObservationMode obs_mode = ObservationMode::Pair;
    std::size_t n_states = 3;
    FitConfig fit;
    MissingStatePolicy missing_states = MissingStatePolicy::Error;
};

struct HmmTrainingResult {
    ChmmModel initial;  // supervised estimate before EM
    FitResult fit;
    std::size_t n_labeled = 0;
    std::size_t n_sequences = 0;
};

/// Distance observations for every trajectory, in dataset order.
std::vector<ObservationSequence> distance_observations(const Dataset& d, const RelevanceScorer& scorer,
                                                       const DistanceConfig& distance, ObservationMode mode,
                                                       unsigned jobs = 1);

/// Annotate-then-train: supervised initialization from trajectories that have
/// a state path in `paths`, then Baum-Welch over every trajectory.
HmmTrainingResult train_situational_hmm(const Dataset& d, const StatePaths& paths, const RelevanceScorer& scorer,
                                        const HmmTrainingConfig& cfg);

}  // namespace saup
