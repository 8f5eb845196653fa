#pragma once

#include <span>
#include <string>

#include "saup/weights.hpp"

namespace saup {

/// Trajectory-level uncertainty.
struct AgentScore {
    double value = 0.0;
    std::string method;
};

enum class SimpleMode { Arithmetic, Geometric, Rms };

/// Optional log-domain damping applied to each weighted term before the RMS.
enum class Stabilizer { None, Log1p };

/// Floor applied to geometric-mean factors.
inline constexpr double kGeometricFloor = 1e-12;

/// Unweighted mean of the step uncertainties. Throws EmptyInput / NegativeUncertainty.
AgentScore aggregate_simple(std::span<const double> u, SimpleMode mode);

/// Weighted RMS propagation: sqrt(mean((w_i * u_i)^2)), or with Log1p,
/// sqrt(mean(ln(1 + w_i * u_i)^2)).
AgentScore aggregate_weighted(std::span<const double> u, const WeightVector& w,
                              Stabilizer stabilizer = Stabilizer::None);

/// Uncertainty of the final step only.
AgentScore last_step(std::span<const double> u);

}  // namespace saup
