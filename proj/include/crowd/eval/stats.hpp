#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "crowd/data/trajectory.hpp"
#include "crowd/sim/orchestrator.hpp"
#include "json.hpp"

namespace crowd::eval {

using data::Frame;

inline constexpr Frame kDefaultBin = 10;

/// An agent present on frames [spawn, exit).
struct Presence {
    int spawn_id = -1;
    Frame spawn = 0;
    Frame exit = 0;
};

struct CrowdStats {
    Frame length = 0;
    Frame bin = kDefaultBin;
    std::vector<std::int64_t> agents_per_frame;  // size length
    /// Differences of all spawn frames, pooled over spawns.
    std::vector<double> inter_spawn_times;
    /// Same, within each spawn area (agents with spawn_id >= 0 only).
    std::map<int, std::vector<double>> inter_spawn_by_spawn;
    std::vector<std::int64_t> spawns_per_window;  // ceil(length / bin) bins
    std::vector<double> time_in_scene;
};

/// Throws EmptySample when `agents` is empty, InvalidArgument for length or bin < 1.
CrowdStats compute_stats(std::span<const Presence> agents, Frame length, Frame bin = kDefaultBin);
CrowdStats compute_stats(const sim::SimulationLog& log, Frame bin = kDefaultBin);
CrowdStats compute_stats(const data::TrajectoryDataset& dataset, const std::vector<int>& spawn_ids = {},
                         Frame bin = kDefaultBin);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|. Throws EmptySample.
double ks_distance(std::span<const double> a, std::span<const double> b);
double ks_distance(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

/// One-sample statistic sup |F_n - cdf|.
double ks_to_cdf(std::span<const double> sample, const std::function<double(double)>& cdf);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // population
};
Summary summarize(std::span<const double> values);

nlohmann::json to_json(const CrowdStats& stats);

/// Columns `frame,agents` for the per-frame series.
std::string agents_per_frame_table(const CrowdStats& stats);

}  // namespace crowd::eval
