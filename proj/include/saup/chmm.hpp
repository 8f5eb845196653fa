#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "saup/error.hpp"

namespace saup {

inline constexpr double kCovarianceFloor = 1e-6;

/// Diagonal-covariance Gaussian mixture over `dim`-dimensional observations.
struct GaussianMixture {
    std::vector<double> weights;                 // one per component, sums to 1
    std::vector<std::vector<double>> means;      // [component][dim]
    std::vector<std::vector<double>> diag_covs;  // [component][dim]

    std::size_t n_components() const { return weights.size(); }
    double log_density(std::span<const double> x) const;

    bool operator==(const GaussianMixture&) const = default;
};

/// Continuous-emission HMM. States are indexed 0..n_states-1; `trans[i][j]`
/// is P(next = j | current = i).
struct ChmmModel {
    std::size_t n_states = 3;
    std::size_t obs_dim = 2;
    std::vector<double> pi;
    std::vector<std::vector<double>> trans;
    std::vector<GaussianMixture> emissions;

    bool operator==(const ChmmModel&) const = default;
};

/// Every invariant the model breaks (simplex sums, covariance floor, shapes);
/// empty when the model is valid.
std::vector<std::string> check_model(const ChmmModel& m, double tol = 1e-9, double cov_floor = kCovarianceFloor);

/// Throws InvalidModel listing the broken invariants.
void validate_model(const ChmmModel& m);

/// Observations of uniform dimension, stored row-major.
class ObservationSequence {
public:
    ObservationSequence() = default;
    explicit ObservationSequence(std::size_t dim) : dim_(dim) {}
    ObservationSequence(std::size_t dim, std::vector<double> data);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    bool empty() const { return size() == 0; }

    std::span<const double> operator[](std::size_t t) const { return {data_.data() + t * dim_, dim_}; }
    void push_back(std::span<const double> x);

    const std::vector<double>& data() const { return data_; }

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

struct PosteriorMatrix {
    std::size_t n_states = 0;
    std::vector<double> gamma;  // [t * n_states + state]
    double loglik = 0.0;

    std::size_t size() const { return n_states == 0 ? 0 : gamma.size() / n_states; }
    std::span<const double> row(std::size_t t) const { return {gamma.data() + t * n_states, n_states}; }
};

struct ForwardBackwardResult {
    PosteriorMatrix posterior;
    std::vector<double> xi_sum;  // [i * n_states + j], summed over t
};

/// Smoothing posteriors and exact log-likelihood, computed in the log domain.
/// Throws EmptyInput, DimensionMismatch or NonFiniteObservation.
ForwardBackwardResult forward_backward(const ChmmModel& m, const ObservationSequence& seq);

double log_likelihood(const ChmmModel& m, const ObservationSequence& seq);
double log_likelihood(const ChmmModel& m, std::span<const ObservationSequence> seqs);

/// Most likely state path; ties resolve toward the lower state index.
std::vector<int> viterbi(const ChmmModel& m, const ObservationSequence& seq);

struct FitConfig {
    int max_iters = 200;
    double rel_tol = 1e-6;
    double cov_floor = kCovarianceFloor;
    std::uint64_t seed = 0;
    std::size_t n_components = 1;
    unsigned jobs = 1;  // 0 = all hardware threads; results do not depend on it
};

struct DegenerateEvent {
    int iteration = 0;
    std::size_t state = 0;
    /// Component index, or -1 when the whole state was re-seeded.
    int component = -1;
};

struct FitReport {
    /// trace[0] is the initial model; trace[i] follows the i-th EM update.
    std::vector<double> loglik_trace;
    int iterations = 0;
    bool converged = false;
    std::vector<DegenerateEvent> degenerate;
};

struct FitResult {
    ChmmModel model;
    FitReport report;
};

/// Baum-Welch EM. E-step statistics are reduced in a fixed order, so the
/// result is bitwise identical for any `cfg.jobs`.
FitResult baum_welch_fit(const ChmmModel& init, std::span<const ObservationSequence> seqs, const FitConfig& cfg);

struct LabeledSequence {
    ObservationSequence obs;
    std::vector<int> states;
};

enum class MissingStatePolicy {
    Error,          // throw MissingState
    GlobalMoments,  // fall back to the pooled moments of all observations
};

/// Model estimated from annotated sequences: pi from first-step label
/// frequencies, transitions from add-one-smoothed bigram counts, emissions
/// from per-state moments (split into `n_components` seeded components).
ChmmModel supervised_init(std::span<const LabeledSequence> labeled, std::size_t n_states, std::size_t n_components = 1,
                          std::uint64_t seed = 0, MissingStatePolicy policy = MissingStatePolicy::Error,
                          double cov_floor = kCovarianceFloor);

/// Unsupervised starting point from seeded random responsibilities.
ChmmModel random_init(std::span<const ObservationSequence> seqs, std::size_t n_states, std::size_t n_components,
                      std::uint64_t seed, double cov_floor = kCovarianceFloor);

nlohmann::json model_to_json(const ChmmModel& m);
/// Parses and validates a version-1 model document.
ChmmModel model_from_json(const nlohmann::json& doc);
void save_model(const ChmmModel& m, const std::string& path);
ChmmModel load_model(const std::string& path);

}  // namespace saup
