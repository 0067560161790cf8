#pragma once

#include <filesystem>
#include <iosfwd>

#include <Eigen/Core>

#include "crowd/data/trajectory.hpp"

namespace crowd::data {

using Grid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Boolean obstacle grid. grid(row, col) covers
/// [origin.x + col*res, origin.x + (col+1)*res) x [origin.y + row*res, origin.y + (row+1)*res).
/// Row 0 is the first grid line of the file.
class OccupancyMap {
public:
    OccupancyMap(double resolution, Point origin, Grid grid);

    double resolution() const { return resolution_; }
    const Point& origin() const { return origin_; }
    const Grid& grid() const { return grid_; }
    Eigen::Index width() const { return grid_.cols(); }
    Eigen::Index height() const { return grid_.rows(); }

    /// World-space size of the grid in meters.
    Eigen::Vector2d extent() const;
    Eigen::Index obstacle_count() const { return grid_.count(); }

    /// Points outside the grid are free.
    bool occupied(const Point& p) const;

    /// Distance to the first occupied cell along `angle` (radians), capped at max_range.
    double raycast(const Point& from, double angle, double max_range) const;

private:
    double resolution_;
    Point origin_;
    Grid grid_;
};

/// Grid text format: header `width height resolution origin_x origin_y`, then
/// `height` lines of `width` characters ('#' obstacle, '.' free).
OccupancyMap parse_occupancy(std::istream& in);
OccupancyMap load_occupancy(const std::filesystem::path& path);

}  // namespace crowd::data
