#include "saup/error.hpp"

namespace saup {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::MalformedLine: return "MalformedLine";
        case Errc::MissingField: return "MissingField";
        case Errc::InvalidLogprob: return "InvalidLogprob";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::InvalidTrajectory: return "InvalidTrajectory";
        case Errc::NoLogits: return "NoLogits";
        case Errc::NoSamples: return "NoSamples";
        case Errc::OutOfRange: return "OutOfRange";
        case Errc::DegenerateMass: return "DegenerateMass";
        case Errc::ScorerUnavailable: return "ScorerUnavailable";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::NonFiniteObservation: return "NonFiniteObservation";
        case Errc::EmptyTrainingSet: return "EmptyTrainingSet";
        case Errc::MissingState: return "MissingState";
        case Errc::InvalidModel: return "InvalidModel";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::NegativeUncertainty: return "NegativeUncertainty";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::SingleClass: return "SingleClass";
        case Errc::FieldUnavailable: return "FieldUnavailable";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace saup
