#pragma once

#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "saup/step_uncertainty.hpp"
#include "saup/trajectory.hpp"

namespace saup {

struct ScorePair {
    std::string context;
    std::string query;
};

/// Relevance of `query` to `context`, in [0, 1]. Implementations must be safe
/// to call concurrently.
class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;

    virtual double score(std::string_view context, std::string_view query) const = 0;

    /// Order-preserving batch form. The default scores pairs one at a time.
    virtual std::vector<double> score_batch(std::span<const ScorePair> pairs) const;

    /// Distinguishes scorers in cache keys and run manifests.
    virtual std::string identity() const = 0;
};

/// Jaccard similarity of the ASCII-lowercased, whitespace-separated token sets.
/// Two empty token sets score 1.
double stub_score(std::string_view context, std::string_view query);

class StubScorer final : public RelevanceScorer {
public:
    double score(std::string_view context, std::string_view query) const override {
        return stub_score(context, query);
    }
    std::string identity() const override { return "stub"; }
};

/// Memoizes another scorer's results. Concurrent lookups share a read lock;
/// inserts take it exclusively.
class CachingScorer final : public RelevanceScorer {
public:
    explicit CachingScorer(std::shared_ptr<const RelevanceScorer> inner) : inner_(std::move(inner)) {}

    double score(std::string_view context, std::string_view query) const override;
    std::vector<double> score_batch(std::span<const ScorePair> pairs) const override;
    std::string identity() const override { return inner_->identity(); }

    std::size_t size() const;

private:
    struct Key {
        std::string context;
        std::string query;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept;
    };

    std::shared_ptr<const RelevanceScorer> inner_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<Key, double, KeyHash> cache_;
};

enum class DistanceMode { OneMinus, Reciprocal };
enum class ContextWindow { Cumulative, CurrentStep };

struct DistanceConfig {
    DistanceMode mode = DistanceMode::OneMinus;
    double epsilon = 1e-6;
    ContextWindow window = ContextWindow::Cumulative;
    /// Prepend the thought text to the action when scoring against the observation.
    bool query_includes_thought = false;
};

/// Per-step input to the situational surrogates.
struct StepFeatures {
    StepUncertainty u;
    double d_a = 0.0;
    double d_o = 0.0;
};

/// Converts a relevance score into a distance; both modes map s = 1 to 0.
double distance_from_score(double s, const DistanceConfig& cfg);

struct StepDistances {
    double d_a = 0.0;
    double d_o = 0.0;
};

/// Scorer inputs for step `n` (1-based): element 0 is the question-drift pair,
/// element 1 the action/observation pair.
std::pair<ScorePair, ScorePair> step_score_pairs(const Trajectory& t, std::size_t n, const DistanceConfig& cfg);

StepDistances compute_step_distances(const Trajectory& t, std::size_t n, const RelevanceScorer& scorer,
                                     const DistanceConfig& cfg);

/// Distances for every step, scored in a single batch.
std::vector<StepDistances> compute_distances(const Trajectory& t, const RelevanceScorer& scorer,
                                             const DistanceConfig& cfg);

/// Step uncertainty plus both distances for every step of `t`.
std::vector<StepFeatures> compute_features(const Trajectory& t, Estimator estimator, const RelevanceScorer& scorer,
                                           const DistanceConfig& cfg, const SemanticEntropyOptions& se_opts = {});

}  // namespace saup
