#include "crowd/data/occupancy.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "crowd/error.hpp"
#include "crowd/text.hpp"

namespace crowd::data {

namespace {
constexpr std::string_view kModule = "data-ingest";
}

OccupancyMap::OccupancyMap(double resolution, Point origin, Grid grid)
    : resolution_(resolution), origin_(std::move(origin)), grid_(std::move(grid)) {
    if (!(resolution_ > 0.0) || !std::isfinite(resolution_)) {
        throw Error(Errc::MalformedGrid, kModule, "resolution must be positive");
    }
    if (grid_.size() == 0) throw Error(Errc::MalformedGrid, kModule, "grid is empty");
}

Eigen::Vector2d OccupancyMap::extent() const {
    return {static_cast<double>(width()) * resolution_, static_cast<double>(height()) * resolution_};
}

bool OccupancyMap::occupied(const Point& p) const {
    const Eigen::Vector2d cell = ((p - origin_) / resolution_).array().floor();
    if (cell.x() < 0 || cell.y() < 0 || cell.x() >= static_cast<double>(width()) ||
        cell.y() >= static_cast<double>(height())) {
        return false;
    }
    return grid_(static_cast<Eigen::Index>(cell.y()), static_cast<Eigen::Index>(cell.x()));
}

double OccupancyMap::raycast(const Point& from, double angle, double max_range) const {
    // Cell-by-cell traversal: d is the exact distance at which the ray enters each cell.
    const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
    const Eigen::Vector2d g = (from - origin_) / resolution_;
    Eigen::Index cx = static_cast<Eigen::Index>(std::floor(g.x()));
    Eigen::Index cy = static_cast<Eigen::Index>(std::floor(g.y()));
    const int sx = dir.x() > 0 ? 1 : -1, sy = dir.y() > 0 ? 1 : -1;
    const double inf = std::numeric_limits<double>::infinity();
    const double dx = std::abs(dir.x()) > 1e-15 ? resolution_ / std::abs(dir.x()) : inf;
    const double dy = std::abs(dir.y()) > 1e-15 ? resolution_ / std::abs(dir.y()) : inf;
    double next_x = dx == inf ? inf : ((sx > 0 ? std::floor(g.x()) + 1 - g.x() : g.x() - std::floor(g.x())) * dx);
    double next_y = dy == inf ? inf : ((sy > 0 ? std::floor(g.y()) + 1 - g.y() : g.y() - std::floor(g.y())) * dy);
    double d = 0.0;
    while (d < max_range) {
        if (cx >= 0 && cy >= 0 && cx < width() && cy < height() && grid_(cy, cx)) return d;
        if ((sx > 0 && cx >= width()) || (sx < 0 && cx < 0) || (sy > 0 && cy >= height()) || (sy < 0 && cy < 0)) break;
        if (next_x < next_y) {
            d = next_x;
            next_x += dx;
            cx += sx;
        } else {
            d = next_y;
            next_y += dy;
            cy += sy;
        }
    }
    return max_range;
}

OccupancyMap parse_occupancy(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::MalformedGrid, kModule, "missing header");
    std::istringstream header(line);
    long long width = 0, height = 0;
    double resolution = 0, ox = 0, oy = 0;
    if (!(header >> width >> height >> resolution >> ox >> oy) || width <= 0 || height <= 0) {
        throw Error(Errc::MalformedGrid, kModule, "header must be 'width height resolution origin_x origin_y'");
    }
    Grid grid(height, width);
    long long row = 0;
    while (std::getline(in, line)) {
        const auto content = text::trim(line);
        if (content.empty()) continue;
        if (row >= height) throw Error(Errc::DimensionMismatch, kModule, "more grid lines than height");
        if (static_cast<long long>(content.size()) != width) {
            throw Error(Errc::DimensionMismatch, kModule,
                        "grid line " + std::to_string(row) + " has " + std::to_string(content.size()) +
                            " cells, expected " + std::to_string(width));
        }
        for (long long col = 0; col < width; ++col) {
            const char c = content[static_cast<std::size_t>(col)];
            if (c != '#' && c != '.') {
                throw Error(Errc::MalformedGrid, kModule, std::string("unexpected grid character '") + c + "'");
            }
            grid(row, col) = (c == '#');
        }
        ++row;
    }
    if (row != height) {
        throw Error(Errc::DimensionMismatch, kModule,
                    "expected " + std::to_string(height) + " grid lines, got " + std::to_string(row));
    }
    return OccupancyMap(resolution, Point(ox, oy), std::move(grid));
}

OccupancyMap load_occupancy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::MalformedGrid, kModule, "cannot open " + path.string());
    return parse_occupancy(in);
}

}  // namespace crowd::data
