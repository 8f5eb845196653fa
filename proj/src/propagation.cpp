#include "saup/propagation.hpp"

#include <cmath>

namespace saup {

namespace {

void check_uncertainties(std::span<const double> u) {
    if (u.empty()) throw Error(Errc::EmptyInput, "no step uncertainties");
    for (double v : u) {
        if (std::isnan(v) || v < 0.0) throw Error(Errc::NegativeUncertainty, "step uncertainty " + std::to_string(v));
        if (!std::isfinite(v)) throw Error(Errc::OutOfRange, "step uncertainty is not finite");
    }
}

}  // namespace

AgentScore aggregate_simple(std::span<const double> u, SimpleMode mode) {
    check_uncertainties(u);
    const double n = static_cast<double>(u.size());
    switch (mode) {
        case SimpleMode::Arithmetic: {
            double s = 0.0;
            for (double v : u) s += v;
            return {s / n, "arithmetic"};
        }
        case SimpleMode::Geometric: {
            // Mean of logs rather than a running product, which under/overflows on long runs.
            double s = 0.0;
            for (double v : u) s += std::log(std::max(v, kGeometricFloor));
            return {std::exp(s / n), "geometric"};
        }
        case SimpleMode::Rms: {
            double s = 0.0;
            for (double v : u) s += v * v;
            return {std::sqrt(s / n), "rms"};
        }
    }
    throw Error(Errc::InvalidConfig, "unknown aggregation mode");
}

AgentScore aggregate_weighted(std::span<const double> u, const WeightVector& w, Stabilizer stabilizer) {
    if (u.size() != w.w.size())
        throw Error(Errc::LengthMismatch, std::to_string(u.size()) + " uncertainties but " +
                                              std::to_string(w.w.size()) + " weights");
    check_uncertainties(u);
    for (double v : w.w)
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::OutOfRange, "weights must be finite and positive");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double term = w.w[i] * u[i];
        if (stabilizer == Stabilizer::Log1p) term = std::log1p(term);
        s += term * term;
    }
    return {std::sqrt(s / static_cast<double>(u.size())),
            stabilizer == Stabilizer::Log1p ? "weighted_rms_log1p" : "weighted_rms"};
}

AgentScore last_step(std::span<const double> u) {
    check_uncertainties(u);
    return {u.back(), "last_step"};
}

}  // namespace saup
