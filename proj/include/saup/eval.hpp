#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "saup/distance.hpp"
#include "saup/propagation.hpp"
#include "saup/trajectory.hpp"
#include "saup/weights.hpp"

namespace saup {

enum class Aggregation { Arithmetic, Geometric, Rms, LastStep };

/// Source of the situational weights. `None` means unweighted aggregation.
enum class Surrogate { None, Position, Plain, Hybrid, Hmm };

/// One scoring pipeline: step estimator -> (optional) surrogate weights -> aggregation.
/// With a surrogate the weighted-RMS propagation is used and `aggregation` must be Rms.
struct MethodConfig {
    std::string name;
    Estimator estimator = Estimator::NormalizedEntropy;
    Aggregation aggregation = Aggregation::Rms;
    Surrogate surrogate = Surrogate::None;
    double alpha = 0.5;  // hybrid mix
    double beta = 1.0;   // position exponent
    Stabilizer stabilizer = Stabilizer::None;
    StateWeightMap state_weights;
    ObservationMode obs_mode = ObservationMode::Pair;
    std::shared_ptr<const ChmmModel> model;
    std::string model_path;  // informational; the CLI resolves it into `model`
    DistanceConfig distance;
    SemanticEntropyOptions semantic;
};

/// Built-in pipelines: saup-hmmd, saup-d, saup-p, saup-pd, rms, arithmetic,
/// geometric, last-step, and the single-step baselines normalized-entropy,
/// likelihood, predictive-entropy, p-true, semantic-entropy.
std::optional<MethodConfig> method_preset(const std::string& name);
std::vector<std::string> method_preset_names();

/// Builds a method from a preset name (string) or an object with optional
/// "preset" base plus field overrides.
MethodConfig method_from_json(const nlohmann::json& j);
nlohmann::json method_to_json(const MethodConfig& m);

/// Throws InvalidConfig when the method is internally inconsistent.
void validate_method(const MethodConfig& m);

/// Throws FieldUnavailable naming the first trajectory/step lacking data the method needs.
void check_method_requirements(const Dataset& d, const MethodConfig& m);

AgentScore score_trajectory(const Trajectory& t, const MethodConfig& m, const RelevanceScorer& scorer);

/// Tie-corrected AUROC (Mann-Whitney with average ranks). Label 1 marks an
/// incorrect answer, which is expected to score higher.
double auroc(std::span<const double> scores, std::span<const int> labels);

struct TrajectoryRecord {
    std::string id;
    double score = 0.0;
    std::optional<bool> correct;
    std::size_t n_steps = 0;
};

struct MethodResult {
    std::string name;
    double auroc = 0.5;
    std::size_t n_labeled = 0;
    std::vector<TrajectoryRecord> records;  // dataset order
};

struct DatasetSummary {
    std::size_t n_trajectories = 0;
    std::size_t n_labeled = 0;
    std::size_t n_correct = 0;
    std::size_t n_incorrect = 0;
};

struct EvalReport {
    DatasetSummary summary;
    std::vector<MethodResult> methods;

    const MethodResult& method(const std::string& name) const;
};

DatasetSummary summarize(const Dataset& d);

/// Scores every trajectory under every method and computes AUROC over the
/// labeled ones. Output does not depend on `jobs`.
EvalReport evaluate(const Dataset& d, std::span<const MethodConfig> methods, const RelevanceScorer& scorer,
                    unsigned jobs = 1);

enum class ScatterNormalization { MinMax, None };

struct ScatterRow {
    std::string id;
    std::size_t n_steps = 0;
    double normalized_score = 0.0;
    std::optional<bool> correct;
};

/// Rows sorted by id; MinMax maps the score range to [0, 1] (a constant set maps to 0).
std::vector<ScatterRow> export_scatter(const MethodResult& result, ScatterNormalization norm);

/// Rounds to 9 significant digits, the precision of every serialized float.
double round_sig9(double v);
std::string format_sig9(double v);

nlohmann::json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);
std::string report_table_csv(const EvalReport& r);
std::string scatter_csv(std::span<const ScatterRow> rows);

}  // namespace saup
