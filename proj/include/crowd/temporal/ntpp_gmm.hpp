#pragma once

#include <cstdint>
#include <vector>

#include "crowd/data/occupancy.hpp"
#include "crowd/spatial/spatial_model.hpp"
#include "crowd/temporal/ntpp.hpp"

namespace crowd::temporal {

/// One generated agent: when it enters, where, and where it is headed.
struct SpawnEvent {
    double time = 0.0;
    int spawn_id = 0;
    data::Point spawn = data::Point::Zero();
    data::Point goal = data::Point::Zero();
    int goal_id = 0;
};

/// Spawn times from the temporal model, then an independent (spawn, goal)
/// pair per time from the spawn-conditional mixture. Times and positions use
/// separate streams derived from `seed`. Output is sorted by time.
std::vector<SpawnEvent> sample_ntpp_gmm(const TemporalModel& temporal, const spatial::SpatialModel& spatial,
                                        double length, int n_rollouts, std::uint64_t seed,
                                        const data::OccupancyMap* map = nullptr);

}  // namespace crowd::temporal
