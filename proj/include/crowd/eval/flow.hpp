#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "crowd/data/trajectory.hpp"
#include "crowd/sim/orchestrator.hpp"

namespace crowd::eval {

using data::Point;
using Polyline = std::vector<Point>;

/// Retired agents' paths grouped by (spawn_id, goal_id).
struct FlowBundle {
    int spawn_id = 0;
    int goal_id = 0;
    std::vector<const sim::AgentRecord*> agents;
};

std::vector<FlowBundle> group_flows(const sim::SimulationLog& log);

/// Writes flow_s<spawn>_g<goal>.csv frame tables plus index.json into `dir`.
void flow_export(const sim::SimulationLog& log, const std::filesystem::path& dir);

/// `count` points equally spaced by arc length; count >= 2.
Polyline resample(std::span<const Point> path, std::size_t count);

/// Pointwise mean of the paths after resampling each to `count` points.
Polyline mean_path(const FlowBundle& bundle, std::size_t count = 50);

/// Symmetric Hausdorff distance between two point sets.
double hausdorff(std::span<const Point> a, std::span<const Point> b);

}  // namespace crowd::eval
