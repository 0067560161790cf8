#include "crowd/temporal/ntpp_gmm.hpp"

#include "crowd/random.hpp"

namespace crowd::temporal {

std::vector<SpawnEvent> sample_ntpp_gmm(const TemporalModel& temporal, const spatial::SpatialModel& spatial,
                                        double length, int n_rollouts, std::uint64_t seed,
                                        const data::OccupancyMap* map) {
    const int spawn_id = spawn_id_of(temporal);
    const auto times = sample_times(temporal, length, n_rollouts, derive_seed(seed, Stream::Temporal));
    Rng rng(derive_seed(seed, Stream::Spatial));
    std::vector<SpawnEvent> out;
    out.reserve(times.times.size());
    for (double t : times.times) {
        const auto s = spatial::sample_spawn_goal(spatial, spawn_id, rng, map);
        out.push_back({t, spawn_id, s.spawn, s.goal, s.goal_id});
    }
    return out;
}

}  // namespace crowd::temporal
