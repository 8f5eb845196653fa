#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "saup/error.hpp"

namespace saup {

/// Log-probabilities above zero but within this slack are serializer noise
/// and are clamped to 0; anything larger is rejected.
inline constexpr double kLogprobTolerance = 1e-9;

/// Reserved meta key holding the 1-based corpus line a trajectory came from.
inline constexpr const char* kLineMetaKey = "_line";

/// Generated text plus the natural-log probability of each generated token.
/// `token_logprobs` is empty for API-only models that expose no logits.
struct TokenSequence {
    std::string text;
    std::vector<double> token_logprobs;

    bool operator==(const TokenSequence&) const = default;
};

/// One sampled alternative generation for a step, with its meaning cluster.
struct Sample {
    double total_logprob = 0.0;
    std::int64_t cluster_id = 0;
    /// Token count of the sample; only needed for length-normalized semantic entropy.
    std::optional<std::int64_t> n_tokens;

    bool operator==(const Sample&) const = default;
};

struct Step {
    int index = 1;  // 1-based
    TokenSequence thought;
    TokenSequence action;
    std::string observation;
    std::optional<std::vector<Sample>> samples;
    std::optional<double> p_true;

    bool operator==(const Step&) const = default;
};

struct Trajectory {
    std::string id;
    std::string question;
    std::vector<Step> steps;
    std::string final_answer;
    std::optional<bool> correct;
    std::map<std::string, std::string> meta;

    bool operator==(const Trajectory&) const = default;
};

struct Dataset {
    std::vector<Trajectory> trajectories;
    std::string source;
};

enum class ViolationKind {
    EmptySteps,
    NonContiguousIndex,
    InvalidLogprob,
    NegativeClusterId,
    OutOfRange,
    NonFinite,
};

/// One failed invariant. `step` is the 1-based step position, or 0 for
/// trajectory-level violations.
struct Violation {
    ViolationKind kind;
    int step = 0;
    std::string field;

    bool operator==(const Violation&) const = default;
};

std::string describe(const Violation& v);

/// Checks every data-model invariant; an empty result means the trajectory is well formed.
std::vector<Violation> validate_trajectory(const Trajectory& t);

struct ParseIssue {
    std::size_t line_no = 0;
    Errc code = Errc::MalformedLine;
    std::string message;
};

/// Result of a lenient parse: every nonblank input line is accounted for either
/// as a trajectory or as an issue.
struct ParseReport {
    Dataset dataset;
    std::vector<ParseIssue> issues;
};

ParseReport parse_dataset_lenient(std::istream& in, std::string source = {});

/// Strict parse of a line-delimited JSON corpus. Throws `Error` describing the
/// first bad line (MalformedLine, MissingField, InvalidLogprob, DuplicateId, ...).
Dataset parse_dataset(std::istream& in, std::string source = {});

Dataset load_dataset(const std::string& path);

/// Parses one corpus line; `line_no` is used for diagnostics and stored in meta.
Trajectory parse_trajectory_line(const std::string& line, std::size_t line_no);

std::string serialize_trajectory(const Trajectory& t);
void serialize_dataset(const Dataset& d, std::ostream& out);

}  // namespace saup
