#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace crowd::data {

using Point = Eigen::Vector2d;
using Frame = std::int64_t;

struct Bounds {
    Point min = Point::Zero();
    Point max = Point::Zero();

    bool contains(const Point& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
};

/// One agent's track: a position per consecutive frame, starting at start_frame.
struct Trajectory {
    std::int64_t agent_id = 0;
    Frame start_frame = 0;
    std::vector<Point> positions;

    Frame end_frame() const { return start_frame + static_cast<Frame>(positions.size()) - 1; }
    const Point& start() const { return positions.front(); }
    const Point& end() const { return positions.back(); }
};

struct TrajectoryDataset {
    std::vector<Trajectory> trajectories;
    /// One past the last frame index observed (frames are counted from 0).
    Frame frame_count = 0;
    Bounds bounds;

    std::size_t agent_count() const { return trajectories.size(); }
};

/// x' = linear * x + offset; applied to every position at load time.
struct AffineTransform {
    Eigen::Matrix2d linear = Eigen::Matrix2d::Identity();
    Eigen::Vector2d offset = Eigen::Vector2d::Zero();

    Point apply(const Point& p) const { return linear * p + offset; }
    bool is_identity() const { return linear.isIdentity(0.0) && offset.isZero(0.0); }
};

struct LoadReport {
    std::size_t rows = 0;
    std::size_t interpolated_frames = 0;
    /// Agents with a single row carry no motion and are dropped.
    std::size_t dropped_single_row_agents = 0;
};

/// Validate trajectories and compute frame_count and bounds.
/// Throws EmptyDataset when `trajectories` is empty, InvalidArgument when a
/// trajectory is shorter than 2 positions or holds a non-finite coordinate.
TrajectoryDataset make_dataset(std::vector<Trajectory> trajectories);

/// Parse a frame-table (`frame,agent_id,x,y`). Rows are grouped by agent and
/// sorted by frame; gaps inside one agent's track are linearly interpolated.
TrajectoryDataset parse_trajectories(std::istream& in, const AffineTransform& transform = {},
                                     LoadReport* report = nullptr);

TrajectoryDataset load_trajectories(const std::filesystem::path& path,
                                    const AffineTransform& transform = {},
                                    LoadReport* report = nullptr);

/// Canonical frame-table output, rows ordered by (frame, agent_id). Coordinates
/// use shortest round-trip formatting, so reloading is bit-exact.
void write_trajectories(std::ostream& out, const TrajectoryDataset& dataset);
void save_trajectories(const std::filesystem::path& path, const TrajectoryDataset& dataset);

struct Endpoints {
    std::vector<Point> starts;
    std::vector<Point> ends;
};

Endpoints split_endpoints(const TrajectoryDataset& dataset);

}  // namespace crowd::data
