#include "crowd/spatial/spatial_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <numbers>
#include <tuple>
#include <unordered_map>

#include "crowd/error.hpp"

namespace crowd::spatial {

namespace {

constexpr std::string_view kModule = "spatial-model";

/// Uniform grid with cell size eps; a radius-eps query touches the 3x3 block.
class NeighborGrid {
public:
    NeighborGrid(std::span<const Point> points, double eps) : points_(points), eps_(eps) {
        for (std::size_t i = 0; i < points.size(); ++i) cells_[key(cell_of(points[i]))].push_back(i);
    }

    void query(std::size_t i, std::vector<std::size_t>& out) const {
        out.clear();
        const auto c = cell_of(points_[i]);
        const double eps2 = eps_ * eps_;
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                const auto it = cells_.find(key({c.first + dx, c.second + dy}));
                if (it == cells_.end()) continue;
                for (auto j : it->second) {
                    if ((points_[j] - points_[i]).squaredNorm() <= eps2) out.push_back(j);
                }
            }
        }
    }

private:
    using Cell = std::pair<std::int64_t, std::int64_t>;

    Cell cell_of(const Point& p) const {
        return {static_cast<std::int64_t>(std::floor(p.x() / eps_)), static_cast<std::int64_t>(std::floor(p.y() / eps_))};
    }
    static std::uint64_t key(const Cell& c) {
        return (static_cast<std::uint64_t>(c.first) * 0x9e3779b97f4a7c15ULL) ^ static_cast<std::uint64_t>(c.second);
    }

    std::span<const Point> points_;
    double eps_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

AreaModel fit_area(std::span<const Point> points, const std::vector<std::size_t>& members) {
    AreaModel a;
    a.member_count = members.size();
    Point sum = Point::Zero();
    for (auto i : members) sum += points[i];
    a.mu = sum / static_cast<double>(members.size());
    Eigen::Vector2d var = Eigen::Vector2d::Zero();
    for (auto i : members) var += (points[i] - a.mu).cwiseAbs2();
    var /= static_cast<double>(members.size());
    a.sigma = var.cwiseSqrt().cwiseMax(kSigmaFloor);
    return a;
}

double normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

Point sample_area(const AreaModel& area, Rng& rng) {
    const double x = area.mu.x() + area.sigma.x() * standard_normal(rng);
    const double y = area.mu.y() + area.sigma.y() * standard_normal(rng);
    return {x, y};
}

nlohmann::json area_to_json(const AreaModel& a) {
    return {{"area_id", a.area_id},
            {"mu", {a.mu.x(), a.mu.y()}},
            {"sigma", {a.sigma.x(), a.sigma.y()}},
            {"member_count", a.member_count}};
}

AreaModel area_from_json(const nlohmann::json& j) {
    AreaModel a;
    a.area_id = j.at("area_id").get<int>();
    a.mu = {j.at("mu").at(0).get<double>(), j.at("mu").at(1).get<double>()};
    a.sigma = {j.at("sigma").at(0).get<double>(), j.at("sigma").at(1).get<double>()};
    a.member_count = j.at("member_count").get<std::size_t>();
    return a;
}

}  // namespace

std::vector<int> dbscan(std::span<const Point> points, double eps, std::size_t min_samples) {
    if (!(eps > 0.0)) throw Error(Errc::InvalidArgument, kModule, "eps must be positive");
    if (min_samples < 1) throw Error(Errc::InvalidArgument, kModule, "min_samples must be >= 1");

    constexpr int kUnvisited = -2;
    std::vector<int> labels(points.size(), kUnvisited);
    NeighborGrid grid(points, eps);
    std::vector<std::size_t> neighbors;
    std::deque<std::size_t> frontier;
    int cluster = 0;

    for (std::size_t i = 0; i < points.size(); ++i) {
        if (labels[i] != kUnvisited) continue;
        grid.query(i, neighbors);
        if (neighbors.size() < min_samples) {
            labels[i] = kNoise;
            continue;
        }
        labels[i] = cluster;
        frontier.assign(neighbors.begin(), neighbors.end());
        while (!frontier.empty()) {
            const auto j = frontier.front();
            frontier.pop_front();
            if (labels[j] == kNoise) labels[j] = cluster;  // border point
            if (labels[j] != kUnvisited) continue;
            labels[j] = cluster;
            grid.query(j, neighbors);
            if (neighbors.size() >= min_samples) frontier.insert(frontier.end(), neighbors.begin(), neighbors.end());
        }
        ++cluster;
    }
    return labels;
}

Clustering cluster_areas(std::span<const Point> points, double eps, std::size_t min_samples) {
    if (points.empty()) throw Error(Errc::InvalidArgument, kModule, "no points to cluster");
    const auto raw = dbscan(points, eps, min_samples);
    const int n_raw = raw.empty() ? 0 : *std::max_element(raw.begin(), raw.end()) + 1;

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(std::max(n_raw, 0)));
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] >= 0) members[static_cast<std::size_t>(raw[i])].push_back(i);
    }

    struct Candidate {
        int raw_id;
        AreaModel area;
    };
    std::vector<Candidate> candidates;
    for (int c = 0; c < n_raw; ++c) {
        // A cluster whose border points were all claimed earlier can fall below min_samples.
        if (members[static_cast<std::size_t>(c)].size() < min_samples) continue;
        candidates.push_back({c, fit_area(points, members[static_cast<std::size_t>(c)])});
    }
    if (candidates.empty()) {
        throw Error(Errc::NoClustersFound, kModule, "all " + std::to_string(points.size()) + " points are noise");
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::make_tuple(a.area.mu.x(), a.area.mu.y()) < std::make_tuple(b.area.mu.x(), b.area.mu.y());
    });

    std::vector<int> remap(static_cast<std::size_t>(std::max(n_raw, 0)), kNoise);
    Clustering out;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        candidates[k].area.area_id = static_cast<int>(k);
        remap[static_cast<std::size_t>(candidates[k].raw_id)] = static_cast<int>(k);
        out.areas.push_back(candidates[k].area);
    }
    out.labels.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out.labels[i] = raw[i] >= 0 ? remap[static_cast<std::size_t>(raw[i])] : kNoise;
    return out;
}

bool SpatialModel::usable(int spawn_id) const {
    if (spawn_id < 0 || spawn_id >= static_cast<int>(spawn_areas.size())) return false;
    return cooccurrence.row(spawn_id).sum() > 0;
}

std::vector<int> SpatialModel::usable_spawns() const {
    std::vector<int> out;
    for (int s = 0; s < static_cast<int>(spawn_areas.size()); ++s) {
        if (usable(s)) out.push_back(s);
    }
    return out;
}

std::vector<int> SpatialModel::support(int spawn_id) const {
    std::vector<int> out;
    if (spawn_id < 0 || spawn_id >= cooccurrence.rows()) return out;
    for (int e = 0; e < cooccurrence.cols(); ++e) {
        if (cooccurrence(spawn_id, e) > 0) out.push_back(e);
    }
    return out;
}

SpatialModel build_cooccurrence(std::span<const int> spawn_labels, std::span<const int> goal_labels,
                                std::vector<AreaModel> spawn_areas, std::vector<AreaModel> goal_areas) {
    if (spawn_labels.size() != goal_labels.size()) {
        throw Error(Errc::DimensionMismatch, kModule, "spawn and goal label counts differ");
    }
    SpatialModel m;
    const auto n_s = static_cast<Eigen::Index>(spawn_areas.size());
    const auto n_e = static_cast<Eigen::Index>(goal_areas.size());
    m.cooccurrence = Eigen::MatrixXi::Zero(n_s, n_e);
    for (std::size_t i = 0; i < spawn_labels.size(); ++i) {
        const int s = spawn_labels[i];
        const int e = goal_labels[i];
        if (s >= n_s || e >= n_e) throw Error(Errc::DimensionMismatch, kModule, "label exceeds area count");
        if (s < 0 || e < 0) continue;
        ++m.cooccurrence(s, e);
    }
    m.mixtures = Eigen::MatrixXd::Zero(n_s, n_e);
    for (Eigen::Index s = 0; s < n_s; ++s) {
        const int total = m.cooccurrence.row(s).sum();
        if (total > 0) m.mixtures.row(s) = m.cooccurrence.row(s).cast<double>() / static_cast<double>(total);
    }
    m.spawn_areas = std::move(spawn_areas);
    m.goal_areas = std::move(goal_areas);
    m.spawn_labels.assign(spawn_labels.begin(), spawn_labels.end());
    m.goal_labels.assign(goal_labels.begin(), goal_labels.end());
    return m;
}

SpatialModel fit_spatial_model(const data::TrajectoryDataset& dataset, const ClusterParams& spawn_params,
                               const ClusterParams& goal_params) {
    const auto endpoints = data::split_endpoints(dataset);
    auto spawns = cluster_areas(endpoints.starts, spawn_params.eps, spawn_params.min_samples);
    auto goals = cluster_areas(endpoints.ends, goal_params.eps, goal_params.min_samples);
    auto model = build_cooccurrence(spawns.labels, goals.labels, std::move(spawns.areas), std::move(goals.areas));
    model.spawn_params = spawn_params;
    model.goal_params = goal_params;
    return model;
}

SpawnGoalSample sample_spawn_goal(const SpatialModel& model, int spawn_id, Rng& rng, const data::OccupancyMap* map) {
    if (!model.usable(spawn_id)) {
        throw Error(Errc::UnusableSpawn, kModule, "spawn " + std::to_string(spawn_id) + " has no goal support");
    }
    const auto& weights = model.mixtures.row(spawn_id);
    for (int attempt = 0; attempt <= kMaxOccupiedResamples; ++attempt) {
        SpawnGoalSample out;
        out.spawn = sample_area(model.spawn_areas[static_cast<std::size_t>(spawn_id)], rng);

        const double u = uniform01(rng);
        double cumulative = 0.0;
        int chosen = -1;
        for (Eigen::Index k = 0; k < weights.size(); ++k) {
            if (weights[k] <= 0.0) continue;
            chosen = static_cast<int>(k);
            cumulative += weights[k];
            if (u < cumulative) break;
        }
        out.goal_id = chosen;
        out.goal = sample_area(model.goal_areas[static_cast<std::size_t>(chosen)], rng);

        if (!map || (!map->occupied(out.spawn) && !map->occupied(out.goal))) return out;
    }
    throw Error(Errc::OccupiedSampleExhausted, kModule,
                "spawn " + std::to_string(spawn_id) + ": no free sample after " +
                    std::to_string(kMaxOccupiedResamples) + " redraws");
}

double goal_density(const SpatialModel& model, int spawn_id, const Point& x) {
    double p = 0.0;
    for (int k : model.support(spawn_id)) {
        const auto& g = model.goal_areas[static_cast<std::size_t>(k)];
        p += model.mixtures(spawn_id, k) * normal_pdf(x.x(), g.mu.x(), g.sigma.x()) * normal_pdf(x.y(), g.mu.y(), g.sigma.y());
    }
    return p;
}

nlohmann::json to_json(const SpatialModel& model) {
    nlohmann::json doc;
    doc["format"] = "crowd-spatial/1";
    doc["clustering"] = {{"spawn", {{"eps", model.spawn_params.eps}, {"min_samples", model.spawn_params.min_samples}}},
                         {"goal", {{"eps", model.goal_params.eps}, {"min_samples", model.goal_params.min_samples}}}};
    doc["spawn_areas"] = nlohmann::json::array();
    for (const auto& a : model.spawn_areas) doc["spawn_areas"].push_back(area_to_json(a));
    doc["goal_areas"] = nlohmann::json::array();
    for (const auto& a : model.goal_areas) doc["goal_areas"].push_back(area_to_json(a));
    doc["cooccurrence"] = nlohmann::json::array();
    doc["mixtures"] = nlohmann::json::array();
    doc["usable"] = nlohmann::json::array();
    for (Eigen::Index s = 0; s < model.cooccurrence.rows(); ++s) {
        auto counts = nlohmann::json::array();
        auto weights = nlohmann::json::array();
        for (Eigen::Index e = 0; e < model.cooccurrence.cols(); ++e) {
            counts.push_back(model.cooccurrence(s, e));
            weights.push_back(model.mixtures(s, e));
        }
        doc["cooccurrence"].push_back(counts);
        doc["mixtures"].push_back(weights);
        doc["usable"].push_back(model.usable(static_cast<int>(s)));
    }
    doc["spawn_labels"] = model.spawn_labels;
    doc["goal_labels"] = model.goal_labels;
    return doc;
}

SpatialModel spatial_model_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "crowd-spatial/1") throw Error(Errc::ModelLoadFailure, kModule, "unknown format");
        std::vector<AreaModel> spawns, goals;
        for (const auto& a : doc.at("spawn_areas")) spawns.push_back(area_from_json(a));
        for (const auto& a : doc.at("goal_areas")) goals.push_back(area_from_json(a));
        SpatialModel m;
        const auto n_s = static_cast<Eigen::Index>(spawns.size());
        const auto n_e = static_cast<Eigen::Index>(goals.size());
        m.cooccurrence = Eigen::MatrixXi::Zero(n_s, n_e);
        m.mixtures = Eigen::MatrixXd::Zero(n_s, n_e);
        const auto& counts = doc.at("cooccurrence");
        const auto& weights = doc.at("mixtures");
        if (static_cast<Eigen::Index>(counts.size()) != n_s || static_cast<Eigen::Index>(weights.size()) != n_s) {
            throw Error(Errc::ModelLoadFailure, kModule, "co-occurrence rows do not match spawn areas");
        }
        for (Eigen::Index s = 0; s < n_s; ++s) {
            if (static_cast<Eigen::Index>(counts[static_cast<std::size_t>(s)].size()) != n_e) {
                throw Error(Errc::ModelLoadFailure, kModule, "co-occurrence columns do not match goal areas");
            }
            for (Eigen::Index e = 0; e < n_e; ++e) {
                m.cooccurrence(s, e) = counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)].get<int>();
                m.mixtures(s, e) = weights[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)].get<double>();
            }
        }
        m.spawn_areas = std::move(spawns);
        m.goal_areas = std::move(goals);
        m.spawn_labels = doc.value("spawn_labels", std::vector<int>{});
        m.goal_labels = doc.value("goal_labels", std::vector<int>{});
        const auto& c = doc.at("clustering");
        m.spawn_params = {c.at("spawn").at("eps").get<double>(), c.at("spawn").at("min_samples").get<std::size_t>()};
        m.goal_params = {c.at("goal").at("eps").get<double>(), c.at("goal").at("min_samples").get<std::size_t>()};
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ModelLoadFailure, kModule, e.what());
    }
}

}  // namespace crowd::spatial
