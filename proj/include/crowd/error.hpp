#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crowd {

enum class Errc {
    InvalidArgument,
    MalformedRow,
    NonMonotonicFrames,
    EmptyDataset,
    MalformedGrid,
    DimensionMismatch,
    NoClustersFound,
    UnusableSpawn,
    OccupiedSampleExhausted,
    NonFiniteLoss,
    InvalidOverlap,
    NoTrainingData,
    NoDemonstrations,
    EmptySample,
    ModelLoadFailure,
    ConfigInvalid,
    InvariantViolation,
};

std::string_view to_string(Errc code) noexcept;

/// Exception carrying an error code and the module that raised it.
/// what() is "<module>: <Code>: <message>".
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string_view module, const std::string& message);

    Errc code() const noexcept { return code_; }
    const std::string& module() const noexcept { return module_; }

private:
    Errc code_;
    std::string module_;
};

}  // namespace crowd
