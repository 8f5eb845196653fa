#include "saup/training.hpp"

#include "saup/parallel.hpp"

namespace saup {

std::vector<ObservationSequence> distance_observations(const Dataset& d, const RelevanceScorer& scorer,
                                                       const DistanceConfig& distance, ObservationMode mode,
                                                       unsigned jobs) {
    std::vector<ObservationSequence> out(d.trajectories.size());
    parallel_for(d.trajectories.size(), jobs, [&](std::size_t i) {
        const auto dist = compute_distances(d.trajectories[i], scorer, distance);
        std::vector<StepFeatures> features(dist.size());
        for (std::size_t s = 0; s < dist.size(); ++s) features[s] = {{}, dist[s].d_a, dist[s].d_o};
        out[i] = observations_from_features(features, mode);
    });
    return out;
}

HmmTrainingResult train_situational_hmm(const Dataset& d, const StatePaths& paths, const RelevanceScorer& scorer,
                                        const HmmTrainingConfig& cfg) {
    if (d.trajectories.empty()) throw Error(Errc::EmptyTrainingSet, "training corpus is empty");
    HmmTrainingResult out;
    const auto seqs = distance_observations(d, scorer, cfg.distance, cfg.obs_mode, cfg.fit.jobs);
    std::vector<LabeledSequence> labeled;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        auto it = paths.find(d.trajectories[i].id);
        if (it == paths.end()) continue;
        if (it->second.size() != seqs[i].size())
            throw Error(Errc::LengthMismatch, "state path for '" + it->first + "' has " +
                                                  std::to_string(it->second.size()) + " labels for " +
                                                  std::to_string(seqs[i].size()) + " steps");
        labeled.push_back({seqs[i], it->second});
    }
    if (labeled.empty()) throw Error(Errc::EmptyTrainingSet, "no trajectory in the corpus has a state path");
    out.n_labeled = labeled.size();
    out.n_sequences = seqs.size();
    out.initial = supervised_init(labeled, cfg.n_states, cfg.fit.n_components, cfg.fit.seed, cfg.missing_states,
                                  cfg.fit.cov_floor);
    out.fit = baum_welch_fit(out.initial, seqs, cfg.fit);
    return out;
}

}  // namespace saup
