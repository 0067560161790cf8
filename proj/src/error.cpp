#include "crowd/error.hpp"

namespace crowd {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::MalformedRow: return "MalformedRow";
        case Errc::NonMonotonicFrames: return "NonMonotonicFrames";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::MalformedGrid: return "MalformedGrid";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::NoClustersFound: return "NoClustersFound";
        case Errc::UnusableSpawn: return "UnusableSpawn";
        case Errc::OccupiedSampleExhausted: return "OccupiedSampleExhausted";
        case Errc::NonFiniteLoss: return "NonFiniteLoss";
        case Errc::InvalidOverlap: return "InvalidOverlap";
        case Errc::NoTrainingData: return "NoTrainingData";
        case Errc::NoDemonstrations: return "NoDemonstrations";
        case Errc::EmptySample: return "EmptySample";
        case Errc::ModelLoadFailure: return "ModelLoadFailure";
        case Errc::ConfigInvalid: return "ConfigInvalid";
        case Errc::InvariantViolation: return "InvariantViolation";
    }
    return "Unknown";
}

Error::Error(Errc code, std::string_view module, const std::string& message)
    : std::runtime_error(std::string(module) + ": " + std::string(to_string(code)) + ": " + message),
      code_(code),
      module_(module) {}

}  // namespace crowd
