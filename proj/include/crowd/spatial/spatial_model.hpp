#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "crowd/data/occupancy.hpp"
#include "crowd/data/trajectory.hpp"
#include "crowd/random.hpp"
#include "json.hpp"

namespace crowd::spatial {

using data::Point;

inline constexpr double kSigmaFloor = 0.05;
inline constexpr int kNoise = -1;
/// Extra draws allowed when a sample lands on an obstacle.
inline constexpr int kMaxOccupiedResamples = 16;

struct ClusterParams {
    double eps = 0.2;
    std::size_t min_samples = 20;
};

/// Axis-aligned Gaussian area estimated from one cluster of endpoints.
struct AreaModel {
    int area_id = 0;
    Point mu = Point::Zero();
    Eigen::Vector2d sigma = Eigen::Vector2d::Constant(kSigmaFloor);
    std::size_t member_count = 0;
};

struct Clustering {
    std::vector<AreaModel> areas;
    /// Per input point: area_id, or kNoise.
    std::vector<int> labels;
};

/// Plain DBSCAN (Euclidean, neighborhood radius inclusive, a point counts
/// itself). Labels are cluster indices in discovery order, kNoise for noise.
std::vector<int> dbscan(std::span<const Point> points, double eps, std::size_t min_samples);

/// DBSCAN followed by per-cluster Gaussian fitting. Area ids are assigned in
/// (mu.x, mu.y) order so they are stable across runs. Throws NoClustersFound.
Clustering cluster_areas(std::span<const Point> points, double eps, std::size_t min_samples);

struct SpatialModel {
    std::vector<AreaModel> spawn_areas;
    std::vector<AreaModel> goal_areas;
    /// freq(s, e): trajectories starting in spawn s and ending in goal e.
    Eigen::MatrixXi cooccurrence;
    /// Row s holds the mixture weights pi^s over goal areas (all zero when unusable).
    Eigen::MatrixXd mixtures;
    /// Per trajectory of the source dataset; kNoise where unassigned.
    std::vector<int> spawn_labels;
    std::vector<int> goal_labels;
    ClusterParams spawn_params;
    ClusterParams goal_params;

    bool usable(int spawn_id) const;
    std::vector<int> usable_spawns() const;
    /// Goal ids with freq(spawn_id, goal) > 0.
    std::vector<int> support(int spawn_id) const;
};

/// Count endpoint co-occurrences and normalize each row into mixture weights.
/// Trajectories with a noise label on either end are not counted.
SpatialModel build_cooccurrence(std::span<const int> spawn_labels, std::span<const int> goal_labels,
                                std::vector<AreaModel> spawn_areas, std::vector<AreaModel> goal_areas);

/// Cluster starts and ends separately and build the spawn-conditional mixture.
SpatialModel fit_spatial_model(const data::TrajectoryDataset& dataset, const ClusterParams& spawn_params,
                               const ClusterParams& goal_params);

struct SpawnGoalSample {
    Point spawn;
    Point goal;
    int goal_id = 0;
};

/// Draw a spawn position from the spawn Gaussian and a goal from the
/// spawn-conditional mixture. With a map, both points must be free; up to
/// kMaxOccupiedResamples redraws are attempted.
SpawnGoalSample sample_spawn_goal(const SpatialModel& model, int spawn_id, Rng& rng,
                                  const data::OccupancyMap* map = nullptr);

/// Marginal goal-position density given a spawn area.
double goal_density(const SpatialModel& model, int spawn_id, const Point& x);

nlohmann::json to_json(const SpatialModel& model);
SpatialModel spatial_model_from_json(const nlohmann::json& doc);

}  // namespace crowd::spatial
