#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <vector>

#include "crowd/data/occupancy.hpp"
#include "crowd/data/trajectory.hpp"
#include "crowd/policy/policy.hpp"
#include "crowd/random.hpp"
#include "crowd/spatial/spatial_model.hpp"
#include "crowd/temporal/ntpp.hpp"
#include "json.hpp"

namespace crowd::sim {

using data::Frame;
using data::Point;

enum class AgentState { Pending, Active, Exited, TimedOut };

const char* to_string(AgentState s) noexcept;

/// path[i] is the position at frame activation + i. exit_time is set once the
/// agent leaves, and path.back() is then its final position.
struct AgentRecord {
    std::int64_t agent_id = 0;
    int spawn_id = 0;
    int goal_id = 0;
    Frame spawn_time = 0;
    Point spawn_pos = Point::Zero();
    Point goal_pos = Point::Zero();
    AgentState state = AgentState::Pending;
    std::optional<Frame> exit_time;
    std::vector<Point> path;
};

struct SimConfig {
    Frame length = 1000;
    double goal_radius = 0.5;
    Frame max_lifetime = 5000;
    /// Std of Gaussian noise added to each action before clipping, m/frame.
    double policy_noise = 0.0;
    std::uint64_t policy_seed = 0;
};

/// Counters after the step that produced `frame`.
struct FrameCounts {
    Frame frame = 0;
    std::size_t spawned = 0;
    std::size_t active = 0;
    std::size_t exited = 0;
    std::size_t timed_out = 0;
};

struct SimulationState {
    Frame clock = -1;
    std::deque<AgentRecord> pending;  // sorted by (spawn_time, agent_id)
    std::vector<AgentRecord> active;  // ascending agent_id
    std::vector<AgentRecord> completed;
    std::size_t spawned_total = 0;
    std::size_t exited_total = 0;
    std::size_t timed_out_total = 0;
    SimConfig config;
    Rng policy_rng;
    std::vector<FrameCounts> counts;
};

/// Samples every temporal model (one per usable spawn) with a per-spawn seed
/// derived from `seed`, merges the events by time and assigns agent ids in
/// that order. A continuous time t becomes spawn frame floor(t).
std::deque<AgentRecord> schedule(const spatial::SpatialModel& spatial, const std::vector<temporal::TemporalModel>& models,
                                 double length, int n_rollouts, std::uint64_t seed,
                                 const data::OccupancyMap* map = nullptr);

/// Seed for spawn `spawn_id` inside schedule().
std::uint64_t spawn_seed(std::uint64_t seed, int spawn_id) noexcept;

SimulationState make_state(std::deque<AgentRecord> pending, const SimConfig& config);

/// Advance the clock by one frame: activate due agents at their spawn
/// position, move every previously active agent once (ascending id), then
/// retire agents within goal_radius or older than max_lifetime.
void step(SimulationState& state, const policy::PolicySpec& policy, const data::OccupancyMap* map = nullptr);

struct SimulationLog {
    Frame length = 0;
    SimConfig config;
    std::vector<AgentRecord> agents;  // ascending agent_id, all retired
    std::vector<FrameCounts> counts;
};

/// Steps until the clock reaches length - 1 and no agent is pending or active,
/// capped at length + max_lifetime frames; agents still active then time out.
SimulationLog simulate(std::deque<AgentRecord> pending, const policy::PolicySpec& policy, const SimConfig& config,
                       const data::OccupancyMap* map = nullptr);

/// Throws InvariantViolation unless every frame conserves agents, no agent
/// moved before its spawn time and every agent is retired exactly once.
void check_log(const SimulationLog& log);

/// A dataset as a log: spawn at start_frame, exit at end_frame.
/// `spawn_ids`/`goal_ids` are per trajectory; empty means -1.
SimulationLog replay(const data::TrajectoryDataset& dataset, const std::vector<int>& spawn_ids = {},
                     const std::vector<int>& goal_ids = {});

/// `frame,agent_id,x,y,state`, ordered by (frame, agent_id).
void write_log_table(std::ostream& out, const SimulationLog& log);
nlohmann::json log_summary(const SimulationLog& log);
void save_log(const std::filesystem::path& table, const std::filesystem::path& summary, const SimulationLog& log);

}  // namespace crowd::sim
