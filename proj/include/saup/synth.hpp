#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "saup/chmm.hpp"
#include "saup/trajectory.hpp"

namespace saup {

inline constexpr std::size_t kSynthStates = 3;

struct SynthStateParams {
    double mean_da = 0.0, sd_da = 0.05;
    double mean_do = 0.0, sd_do = 0.05;
    /// Step uncertainty ~ N(mean_u, sd_u) truncated to [0, inf).
    double mean_u = 0.3, sd_u = 0.1;
};

/// Synthetic benchmark with three planted deviation states
/// (0 = on track, 1 = moderately deviated, 2 = highly deviated).
struct SynthConfig {
    std::size_t n_trajectories = 2000;
    std::size_t min_steps = 3;
    std::size_t max_steps = 10;
    std::array<double, kSynthStates> pi{0.6, 0.3, 0.1};
    std::array<std::array<double, kSynthStates>, kSynthStates> trans{{
        {0.80, 0.15, 0.05},
        {0.25, 0.55, 0.20},
        {0.10, 0.25, 0.65},
    }};
    std::array<SynthStateParams, kSynthStates> states{{
        {0.15, 0.07, 0.15, 0.07, 0.40, 0.15},
        {0.50, 0.07, 0.50, 0.07, 0.55, 0.15},
        {0.85, 0.07, 0.85, 0.07, 0.70, 0.15},
    }};
    /// P(incorrect) = logistic(link_a * mean planted state + link_b).
    double link_a = 3.0;
    double link_b = -2.5;
    /// Thought and action each carry this many token log-probs.
    std::size_t logprob_tokens = 4;
    std::size_t samples_per_step = 5;
    std::uint64_t seed = 42;
};

/// Throws InvalidConfig when the config breaks an invariant.
void validate_synth_config(const SynthConfig& cfg);

struct PlantedTrajectory {
    std::vector<int> states;
    std::vector<double> u;
    std::vector<double> d_a;
    std::vector<double> d_o;
};

struct LabeledDataset {
    Dataset dataset;
    std::vector<PlantedTrajectory> truth;  // parallel to dataset.trajectories
};

/// Deterministic given `cfg.seed`. Step text is built from per-state token
/// pools so the stub scorer reproduces the planted distances (to within the
/// token-count quantization) under the current-step context window.
LabeledDataset generate(const SynthConfig& cfg);

/// Sidecar document: {"version":1,"seed":...,"trajectories":{id:{"states","u","d_a","d_o"}}}.
nlohmann::json truth_to_json(const LabeledDataset& ld, std::uint64_t seed);

using StatePaths = std::map<std::string, std::vector<int>>;
StatePaths state_paths_from_json(const nlohmann::json& doc);
StatePaths load_state_paths(const std::string& path);

/// Draws `n_sequences` state paths and observations of `length` from a model.
std::vector<LabeledSequence> sample_chmm(const ChmmModel& m, std::size_t n_sequences, std::size_t length,
                                         std::uint64_t seed);

}  // namespace saup
