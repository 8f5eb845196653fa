#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace saup {

enum class Errc {
    MalformedLine,
    MissingField,
    InvalidLogprob,
    DuplicateId,
    InvalidTrajectory,
    NoLogits,
    NoSamples,
    OutOfRange,
    DegenerateMass,
    ScorerUnavailable,
    DimensionMismatch,
    NonFiniteObservation,
    EmptyTrainingSet,
    MissingState,
    InvalidModel,
    EmptyInput,
    NegativeUncertainty,
    LengthMismatch,
    SingleClass,
    FieldUnavailable,
    InvalidConfig,
    Io,
};

std::string_view errc_name(Errc code) noexcept;

/// Library-wide exception. `code()` identifies the failure class; `what()`
/// carries the human-readable detail (line numbers, field names, ...).
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace saup
