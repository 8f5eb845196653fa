#include "saup/weights.hpp"

#include <algorithm>
#include <cmath>

namespace saup {

ObservationSequence observations_from_features(std::span<const StepFeatures> features, ObservationMode mode) {
    ObservationSequence seq(mode == ObservationMode::Pair ? 2 : 1);
    for (const StepFeatures& f : features) {
        if (mode == ObservationMode::Pair) {
            const double x[2] = {f.d_a, f.d_o};
            seq.push_back(x);
        } else {
            const double x[1] = {f.d_a + f.d_o};
            seq.push_back(x);
        }
    }
    return seq;
}

WeightVector weights_position(std::size_t n_steps, double beta) {
    if (n_steps < 1) throw Error(Errc::EmptyInput, "position weights need at least one step");
    if (!(beta > 0.0)) throw Error(Errc::InvalidConfig, "position exponent must be positive");
    WeightVector out;
    out.w.reserve(n_steps);
    const double n = static_cast<double>(n_steps);
    for (std::size_t i = 1; i <= n_steps; ++i) out.w.push_back(std::pow(static_cast<double>(i) / n, beta));
    return out;
}

WeightVector weights_plain(std::span<const StepFeatures> features) {
    if (features.empty()) throw Error(Errc::EmptyInput, "plain weights need at least one step");
    WeightVector out;
    out.w.reserve(features.size());
    for (const StepFeatures& f : features) {
        if (!(f.d_a >= 0.0) || !(f.d_o >= 0.0) || !std::isfinite(f.d_a + f.d_o))
            throw Error(Errc::OutOfRange, "distances must be finite and nonnegative");
        out.w.push_back(f.d_a + f.d_o + kPlainWeightFloor);
    }
    return out;
}

WeightVector weights_hybrid(std::span<const StepFeatures> features, double alpha, double beta) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::InvalidConfig, "hybrid alpha must lie in [0, 1]");
    const WeightVector pos = weights_position(features.size(), beta);
    const WeightVector plain = weights_plain(features);
    const double hi = *std::max_element(plain.w.begin(), plain.w.end());
    // All-zero distances: the normalized term would be 1 everywhere; use the floor instead.
    const bool degenerate = hi <= kPlainWeightFloor;
    WeightVector out;
    out.w.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        const double dist = degenerate ? kPlainWeightFloor : plain.w[i] / hi;
        out.w.push_back(alpha * pos.w[i] + (1.0 - alpha) * dist);
    }
    return out;
}

WeightVector weights_from_posterior(const PosteriorMatrix& posterior, const StateWeightMap& map) {
    if (map.weights.size() != posterior.n_states)
        throw Error(Errc::DimensionMismatch, "state weight map has " + std::to_string(map.weights.size()) +
                                                 " entries for a " + std::to_string(posterior.n_states) +
                                                 "-state model");
    for (double v : map.weights)
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::InvalidConfig, "state weights must be positive");
    const double lo = *std::min_element(map.weights.begin(), map.weights.end());
    const double hi = *std::max_element(map.weights.begin(), map.weights.end());
    WeightVector out;
    out.w.reserve(posterior.size());
    for (std::size_t t = 0; t < posterior.size(); ++t) {
        double w = 0.0;
        const auto row = posterior.row(t);
        for (std::size_t k = 0; k < row.size(); ++k) w += row[k] * map.weights[k];
        out.w.push_back(std::clamp(w, lo, hi));
    }
    return out;
}

WeightVector weights_hmm(const ChmmModel& model, const ObservationSequence& seq, const StateWeightMap& map) {
    return weights_from_posterior(forward_backward(model, seq).posterior, map);
}

}  // namespace saup
