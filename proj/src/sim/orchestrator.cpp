#include "crowd/sim/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crowd/error.hpp"
#include "crowd/io.hpp"
#include "crowd/temporal/ntpp_gmm.hpp"
#include "crowd/text.hpp"

namespace crowd::sim {

namespace {

constexpr std::string_view kModule = "orchestrator";

void validate(const SimConfig& c) {
    if (c.length < 1) throw Error(Errc::ConfigInvalid, kModule, "length must be >= 1");
    if (!(c.goal_radius > 0.0)) throw Error(Errc::ConfigInvalid, kModule, "goal_radius must be positive");
    if (c.max_lifetime < 1) throw Error(Errc::ConfigInvalid, kModule, "max_lifetime must be >= 1");
    if (!(c.policy_noise >= 0.0)) throw Error(Errc::ConfigInvalid, kModule, "policy_noise must be >= 0");
}

void retire(SimulationState& s, AgentRecord&& agent, AgentState state) {
    agent.state = state;
    agent.exit_time = s.clock;
    (state == AgentState::Exited ? s.exited_total : s.timed_out_total) += 1;
    s.completed.push_back(std::move(agent));
}

nlohmann::json point_json(const Point& p) { return {p.x(), p.y()}; }

}  // namespace

const char* to_string(AgentState s) noexcept {
    switch (s) {
        case AgentState::Pending: return "pending";
        case AgentState::Active: return "active";
        case AgentState::Exited: return "exited";
        case AgentState::TimedOut: return "timed_out";
    }
    return "unknown";
}

std::uint64_t spawn_seed(std::uint64_t seed, int spawn_id) noexcept {
    return derive_seed(seed, 0x100 + static_cast<std::uint64_t>(static_cast<std::uint32_t>(spawn_id)));
}

std::deque<AgentRecord> schedule(const spatial::SpatialModel& spatial, const std::vector<temporal::TemporalModel>& models,
                                 double length, int n_rollouts, std::uint64_t seed, const data::OccupancyMap* map) {
    std::vector<temporal::SpawnEvent> events;
    for (const auto& m : models) {
        const int spawn_id = temporal::spawn_id_of(m);
        auto part = temporal::sample_ntpp_gmm(m, spatial, length, n_rollouts, spawn_seed(seed, spawn_id), map);
        events.insert(events.end(), part.begin(), part.end());
    }
    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    std::deque<AgentRecord> queue;
    for (const auto& e : events) {
        AgentRecord r;
        r.agent_id = static_cast<std::int64_t>(queue.size());
        r.spawn_id = e.spawn_id;
        r.goal_id = e.goal_id;
        r.spawn_time = static_cast<Frame>(std::floor(e.time));
        r.spawn_pos = e.spawn;
        r.goal_pos = e.goal;
        queue.push_back(std::move(r));
    }
    return queue;
}

SimulationState make_state(std::deque<AgentRecord> pending, const SimConfig& config) {
    validate(config);
    std::stable_sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) {
        return a.spawn_time != b.spawn_time ? a.spawn_time < b.spawn_time : a.agent_id < b.agent_id;
    });
    SimulationState s;
    s.pending = std::move(pending);
    s.config = config;
    s.policy_rng.seed(config.policy_seed);
    return s;
}

void step(SimulationState& s, const policy::PolicySpec& policy, const data::OccupancyMap* map) {
    s.clock += 1;
    const auto moving = static_cast<std::ptrdiff_t>(s.active.size());

    while (!s.pending.empty() && s.pending.front().spawn_time <= s.clock) {
        AgentRecord a = std::move(s.pending.front());
        s.pending.pop_front();
        a.state = AgentState::Active;
        a.path.assign(1, a.spawn_pos);
        s.spawned_total += 1;
        s.active.push_back(std::move(a));
    }
    // Newly activated agents sit at the end of `active`; keep id order for the movers.
    std::stable_sort(s.active.begin() + moving, s.active.end(),
                     [](const auto& a, const auto& b) { return a.agent_id < b.agent_id; });

    std::vector<AgentRecord*> movers;
    for (std::ptrdiff_t i = 0; i < moving; ++i) movers.push_back(&s.active[static_cast<std::size_t>(i)]);
    std::sort(movers.begin(), movers.end(), [](auto* a, auto* b) { return a->agent_id < b->agent_id; });

    std::vector<policy::Action> actions;
    actions.reserve(movers.size());
    for (auto* a : movers) {
        const auto& path = a->path;
        const Eigen::Vector2d velocity =
            path.size() >= 2 ? Eigen::Vector2d(path.back() - path[path.size() - 2]) : Eigen::Vector2d::Zero();
        auto act = policy::policy_step(policy, policy::observe(path.back(), velocity, a->goal_pos, policy.rays, map));
        if (s.config.policy_noise > 0.0) {
            act += s.config.policy_noise * Eigen::Vector2d(standard_normal(s.policy_rng), standard_normal(s.policy_rng));
            act = policy::clip(act, policy.v_max);
        }
        actions.push_back(act);
    }
    for (std::size_t i = 0; i < movers.size(); ++i) movers[i]->path.push_back(movers[i]->path.back() + actions[i]);

    std::vector<AgentRecord> survivors;
    for (std::size_t i = 0; i < s.active.size(); ++i) {
        AgentRecord& a = s.active[i];
        const bool moved = static_cast<std::ptrdiff_t>(i) < moving;
        const Frame age = s.clock - a.spawn_time;
        if (moved && (a.path.back() - a.goal_pos).norm() <= s.config.goal_radius) {
            retire(s, std::move(a), AgentState::Exited);
        } else if (age > s.config.max_lifetime) {
            retire(s, std::move(a), AgentState::TimedOut);
        } else {
            survivors.push_back(std::move(a));
        }
    }
    std::sort(survivors.begin(), survivors.end(), [](const auto& a, const auto& b) { return a.agent_id < b.agent_id; });
    s.active = std::move(survivors);
    s.counts.push_back({s.clock, s.spawned_total, s.active.size(), s.exited_total, s.timed_out_total});
}

SimulationLog simulate(std::deque<AgentRecord> pending, const policy::PolicySpec& policy, const SimConfig& config,
                       const data::OccupancyMap* map) {
    auto s = make_state(std::move(pending), config);
    const Frame cap = config.length + config.max_lifetime;
    while ((s.clock + 1 < config.length || !s.pending.empty() || !s.active.empty()) && s.clock + 1 < cap) {
        step(s, policy, map);
    }
    if (!s.active.empty()) {
        for (auto& a : s.active) retire(s, std::move(a), AgentState::TimedOut);
        s.active.clear();
        s.counts.back().active = 0;
        s.counts.back().timed_out = s.timed_out_total;
    }
    // Unreachable for schedules built by schedule(): spawn frames lie below length.
    for (auto& a : s.pending) {
        a.state = AgentState::TimedOut;
        a.exit_time = a.spawn_time;
        s.completed.push_back(std::move(a));
    }
    SimulationLog log;
    log.length = config.length;
    log.config = config;
    log.agents = std::move(s.completed);
    std::sort(log.agents.begin(), log.agents.end(), [](const auto& a, const auto& b) { return a.agent_id < b.agent_id; });
    log.counts = std::move(s.counts);
    return log;
}

void check_log(const SimulationLog& log) {
    const auto fail = [](const std::string& msg) { throw Error(Errc::InvariantViolation, kModule, msg); };
    Frame last = log.counts.empty() ? 0 : log.counts.back().frame + 1;
    std::vector<long> delta(static_cast<std::size_t>(last) + 1, 0);
    for (std::size_t i = 0; i < log.agents.size(); ++i) {
        const auto& a = log.agents[i];
        if (i > 0 && a.agent_id <= log.agents[i - 1].agent_id) fail("agent ids are not unique");
        if (a.state != AgentState::Exited && a.state != AgentState::TimedOut) fail("agent not retired");
        if (!a.exit_time || *a.exit_time < a.spawn_time) fail("exit precedes spawn");
        if (a.path.empty() || static_cast<Frame>(a.path.size()) != *a.exit_time - a.spawn_time + 1)
            fail("path does not span spawn to exit");
        if (a.state == AgentState::Exited && (a.path.back() - a.goal_pos).norm() > log.config.goal_radius)
            fail("exited agent outside goal radius");
        if (a.spawn_time < 0 || *a.exit_time > last) fail("agent outside simulated frames");
        delta[static_cast<std::size_t>(a.spawn_time)] += 1;
        delta[static_cast<std::size_t>(*a.exit_time)] -= 1;
    }
    long present = 0;
    for (std::size_t f = 0; f < log.counts.size(); ++f) {
        const auto& c = log.counts[f];
        if (c.frame != static_cast<Frame>(f)) fail("frame counts are not contiguous");
        if (c.spawned != c.active + c.exited + c.timed_out)
            fail("conservation broken at frame " + std::to_string(c.frame));
        present += delta[f];
        if (static_cast<long>(c.active) != present) fail("active count disagrees with agent records at frame " + std::to_string(c.frame));
    }
    if (!log.counts.empty() && log.counts.back().spawned != log.agents.size()) fail("log is incomplete");
}

SimulationLog replay(const data::TrajectoryDataset& dataset, const std::vector<int>& spawn_ids,
                     const std::vector<int>& goal_ids) {
    const auto n = dataset.trajectories.size();
    if ((!spawn_ids.empty() && spawn_ids.size() != n) || (!goal_ids.empty() && goal_ids.size() != n))
        throw Error(Errc::DimensionMismatch, kModule, "label count differs from trajectory count");
    SimulationLog log;
    log.length = dataset.frame_count;
    log.config.length = dataset.frame_count;
    std::vector<std::size_t> spawned(static_cast<std::size_t>(dataset.frame_count), 0);
    std::vector<std::size_t> exited(static_cast<std::size_t>(dataset.frame_count), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& tr = dataset.trajectories[i];
        AgentRecord a;
        a.agent_id = tr.agent_id;
        a.spawn_id = spawn_ids.empty() ? -1 : spawn_ids[i];
        a.goal_id = goal_ids.empty() ? -1 : goal_ids[i];
        a.spawn_time = tr.start_frame;
        a.spawn_pos = tr.start();
        a.goal_pos = tr.end();
        a.state = AgentState::Exited;
        a.exit_time = tr.end_frame();
        a.path = tr.positions;
        spawned[static_cast<std::size_t>(tr.start_frame)] += 1;
        exited[static_cast<std::size_t>(tr.end_frame())] += 1;
        log.agents.push_back(std::move(a));
    }
    std::sort(log.agents.begin(), log.agents.end(), [](const auto& a, const auto& b) { return a.agent_id < b.agent_id; });
    std::size_t s = 0, e = 0;
    for (Frame f = 0; f < dataset.frame_count; ++f) {
        s += spawned[static_cast<std::size_t>(f)];
        e += exited[static_cast<std::size_t>(f)];
        log.counts.push_back({f, s, s - e, e, 0});
    }
    return log;
}

void write_log_table(std::ostream& out, const SimulationLog& log) {
    struct Row {
        Frame frame;
        std::int64_t id;
        const Point* p;
        AgentState state;
    };
    std::vector<Row> rows;
    for (const auto& a : log.agents) {
        for (std::size_t i = 0; i < a.path.size(); ++i) {
            const bool last = i + 1 == a.path.size();
            rows.push_back({a.spawn_time + static_cast<Frame>(i), a.agent_id, &a.path[i], last ? a.state : AgentState::Active});
        }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
    out << "frame,agent_id,x,y,state\n";
    for (const auto& r : rows) {
        out << r.frame << ',' << r.id << ',' << text::format_double(r.p->x()) << ',' << text::format_double(r.p->y())
            << ',' << to_string(r.state) << '\n';
    }
}

nlohmann::json log_summary(const SimulationLog& log) {
    nlohmann::json agents = nlohmann::json::array();
    std::size_t exited = 0, timed_out = 0;
    for (const auto& a : log.agents) {
        (a.state == AgentState::Exited ? exited : timed_out) += 1;
        agents.push_back({{"agent_id", a.agent_id},
                          {"spawn_id", a.spawn_id},
                          {"goal_id", a.goal_id},
                          {"spawn_time", a.spawn_time},
                          {"spawn_pos", point_json(a.spawn_pos)},
                          {"goal_pos", point_json(a.goal_pos)},
                          {"state", to_string(a.state)},
                          {"exit_time", a.exit_time ? nlohmann::json(*a.exit_time) : nlohmann::json(nullptr)}});
    }
    nlohmann::json counts{{"frame", nlohmann::json::array()},
                          {"spawned", nlohmann::json::array()},
                          {"active", nlohmann::json::array()},
                          {"exited", nlohmann::json::array()},
                          {"timed_out", nlohmann::json::array()}};
    for (const auto& c : log.counts) {
        counts["frame"].push_back(c.frame);
        counts["spawned"].push_back(c.spawned);
        counts["active"].push_back(c.active);
        counts["exited"].push_back(c.exited);
        counts["timed_out"].push_back(c.timed_out);
    }
    return {{"format", "crowd-simlog/1"},
            {"length", log.length},
            {"config",
             {{"length", log.config.length},
              {"goal_radius", log.config.goal_radius},
              {"max_lifetime", log.config.max_lifetime},
              {"policy_noise", log.config.policy_noise},
              {"policy_seed", log.config.policy_seed}}},
            {"totals", {{"spawned", log.agents.size()}, {"exited", exited}, {"timed_out", timed_out}}},
            {"agents", std::move(agents)},
            {"counts", std::move(counts)}};
}

void save_log(const std::filesystem::path& table, const std::filesystem::path& summary, const SimulationLog& log) {
    std::ostringstream out;
    write_log_table(out, log);
    io::write_text_atomic(table, out.str());
    io::write_json(summary, log_summary(log));
}

}  // namespace crowd::sim
