#pragma once

#include <cstdint>
#include <vector>

#include "crowd/data/trajectory.hpp"
#include "crowd/random.hpp"
#include "json.hpp"

namespace crowd::synth {

using data::Point;

enum class Process { Poisson, BurstyWeibull, AlternatingRate };

struct ProcessSpec {
    Process kind = Process::Poisson;
    double rate = 0.05;            // Poisson
    double weibull_shape = 0.5;    // bursty renewal
    double weibull_scale = 10.0;
    double rate_high = 0.1;        // alternating: rate_high on even periods
    double rate_low = 0.02;
    double period = 1000.0;
};

struct Route {
    Point goal = Point(30.0, 0.0);
    double weight = 1.0;
};

struct SceneSpec {
    ProcessSpec process;
    double horizon = 20000.0;
    Point spawn = Point::Zero();
    double spawn_sigma = 0.3;
    std::vector<Route> routes = {Route{}};
    double goal_sigma = 0.3;
    /// Distance covered per frame along the straight line, m.
    double speed = 1.0;
    std::uint64_t seed = 0;
};

/// Two routes to (30, +6) and (30, -6) with weights 0.6 / 0.4.
SceneSpec two_route_scene(ProcessSpec process = {}, std::uint64_t seed = 0);

/// Event times on [0, horizon), strictly increasing.
std::vector<double> sample_process(const ProcessSpec& spec, double horizon, Rng& rng);

struct Scene {
    SceneSpec spec;
    std::vector<double> event_times;
    std::vector<int> route_of;  // per trajectory
    data::TrajectoryDataset dataset;
};

/// One agent per event: start frame floor(t), endpoints drawn from isotropic
/// Gaussians, straight-line motion at `speed` ending exactly at the goal.
Scene generate(const SceneSpec& spec);

/// Planted parameters, used as the sidecar document.
nlohmann::json to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const nlohmann::json& doc);

}  // namespace crowd::synth
