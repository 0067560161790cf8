#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "crowd/data/occupancy.hpp"
#include "crowd/data/trajectory.hpp"
#include "crowd/nn/layers.hpp"
#include "crowd/nn/param_store.hpp"
#include "json.hpp"

namespace crowd::policy {

using data::Point;
using Action = Eigen::Vector2d;

/// Raycasts shorter than this push the scripted agent away.
inline constexpr double kRepulsionRange = 0.5;

struct RaycastConfig {
    int count = 0;  // 0 disables raycasts
    double max_range = 5.0;
};

/// World-frame observation. Ray i points along angle 2*pi*i/count.
struct Observation {
    Eigen::Vector2d goal_offset = Eigen::Vector2d::Zero();
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
    Eigen::VectorXd raycasts;

    Eigen::Index feature_dim() const { return 4 + raycasts.size(); }
    Eigen::VectorXd features() const;
};

Observation observe(const Point& position, const Eigen::Vector2d& velocity, const Point& goal,
                    const RaycastConfig& rays = {}, const data::OccupancyMap* map = nullptr);

/// Scale `a` down so that |a| <= v_max.
Action clip(const Action& a, double v_max);

/// Unit vector toward the goal times min(v_max, distance), plus repulsion from
/// rays shorter than kRepulsionRange, clipped to v_max.
Action scripted_step(const Observation& obs, double v_max);

enum class PolicyKind { Scripted, Cloned };

/// MLP over standardized observation features; output is the displacement
/// divided by v_max.
struct ClonedNetwork {
    nn::ParamStore params;
    nn::MlpSpec mlp;
    Eigen::VectorXd input_mean;
    Eigen::VectorXd input_scale;
};

struct PolicySpec {
    PolicyKind kind = PolicyKind::Scripted;
    double v_max = 1.0;
    RaycastConfig rays;
    std::optional<ClonedNetwork> network;
};

PolicySpec scripted_policy(double v_max, const RaycastConfig& rays = {});

/// Untrained cloned policy: two tanh hidden layers, identity output.
PolicySpec make_cloned_policy(Eigen::Index feature_dim, double v_max, std::uint64_t seed,
                              const std::vector<Eigen::Index>& hidden = {32, 32}, const RaycastConfig& rays = {});

Action policy_step(const PolicySpec& spec, const Observation& obs);

struct Demonstration {
    Observation obs;
    Action action = Action::Zero();
};

/// One pair per consecutive position pair; the goal is the trajectory's last
/// position and the velocity is the previous displacement (zero at the start).
std::vector<Demonstration> build_demonstrations(const data::TrajectoryDataset& dataset, const RaycastConfig& rays = {},
                                                const data::OccupancyMap* map = nullptr);

struct BcOptions {
    int epochs = 1000;
    double lr = 1e-4;
    std::uint64_t seed = 0;
    std::size_t batch_size = 32;
    double validation_fraction = 0.1;
    double v_max = 1.0;
    std::vector<Eigen::Index> hidden = {32, 32};
    RaycastConfig rays;
};

struct BcReport {
    std::vector<double> train_loss;
    /// Mean squared displacement error per component, m^2.
    std::vector<double> validation_mse;
    int best_epoch = -1;
    double best_validation_mse = 0.0;
};

/// Behavior cloning by displacement regression (MSE) with Adam. Returns the
/// checkpoint with the lowest validation error on a seeded 90/10 split.
PolicySpec train_bc(const std::vector<Demonstration>& demos, const BcOptions& options, BcReport* report = nullptr);

/// Mean squared error per component (m^2) of a policy over demonstrations.
double demonstration_mse(const PolicySpec& spec, const std::vector<Demonstration>& demos);

nlohmann::json to_json(const PolicySpec& spec);
PolicySpec policy_from_json(const nlohmann::json& doc);

}  // namespace crowd::policy
