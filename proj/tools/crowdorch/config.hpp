#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "crowd/data/trajectory.hpp"
#include "crowd/eval/ablation.hpp"
#include "crowd/policy/policy.hpp"
#include "crowd/sim/orchestrator.hpp"
#include "crowd/spatial/spatial_model.hpp"
#include "crowd/synth/scene.hpp"
#include "crowd/temporal/ntpp.hpp"
#include "json.hpp"

namespace crowdorch {

namespace fs = std::filesystem;

/// Values given on the command line; unset fields fall through to the
/// environment, then the config file, then defaults.
struct Overrides {
    std::optional<fs::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<fs::path> output;
    std::optional<fs::path> dataset;
    std::optional<std::string> baseline;
};

struct PolicyConfig {
    crowd::policy::PolicyKind kind = crowd::policy::PolicyKind::Scripted;
    /// Metres per second; divided by frame_rate to get metres per frame.
    double v_max = 1.5;
    double frame_rate = 1.0;
    crowd::policy::RaycastConfig rays;
    int epochs = 1000;
    double lr = 1e-4;
    std::size_t batch_size = 32;
    double validation_fraction = 0.1;
};

struct RunConfig {
    std::uint64_t seed = 0;
    int jobs = 1;
    fs::path output = "out";
    std::optional<fs::path> dataset;
    std::string preset = "gc";
    crowd::data::AffineTransform transform;
    std::optional<fs::path> map;
    crowd::spatial::ClusterParams spawn_clusters;
    crowd::spatial::ClusterParams goal_clusters;
    crowd::temporal::NtppTrainOptions ntpp;
    double length = 10000.0;
    int n_rollouts = 1;
    PolicyConfig policy;
    crowd::sim::SimConfig sim;
    crowd::eval::AblationOptions ablation;
    crowd::synth::SceneSpec synth;
    bool poisson_baseline = false;
};

/// Prefix of the environment overrides: CROWDORCH_SEED, CROWDORCH_JOBS,
/// CROWDORCH_OUTPUT, CROWDORCH_DATASET, CROWDORCH_BASELINE.
inline constexpr const char* kEnvPrefix = "CROWDORCH_";

/// Throws crowd::Error(ConfigInvalid) on unknown keys, wrong types or
/// out-of-range values.
RunConfig resolve_config(const Overrides& flags);

/// Resolved configuration, recorded in every manifest.
nlohmann::json to_json(const RunConfig& config);

}  // namespace crowdorch
