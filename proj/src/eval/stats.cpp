#include "crowd/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crowd/error.hpp"

namespace crowd::eval {

namespace {

constexpr std::string_view kModule = "eval-metrics";

std::vector<double> diffs_of_sorted(std::vector<Frame> frames) {
    std::sort(frames.begin(), frames.end());
    std::vector<double> out;
    for (std::size_t i = 1; i < frames.size(); ++i) out.push_back(static_cast<double>(frames[i] - frames[i - 1]));
    return out;
}

std::vector<double> sorted_copy(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

CrowdStats compute_stats(std::span<const Presence> agents, Frame length, Frame bin) {
    if (agents.empty()) throw Error(Errc::EmptySample, kModule, "no agents to summarize");
    if (length < 1 || bin < 1) throw Error(Errc::InvalidArgument, kModule, "length and bin must be >= 1");
    CrowdStats s;
    s.length = length;
    s.bin = bin;
    std::vector<std::int64_t> delta(static_cast<std::size_t>(length) + 1, 0);
    s.spawns_per_window.assign(static_cast<std::size_t>((length + bin - 1) / bin), 0);
    std::vector<Frame> all;
    std::map<int, std::vector<Frame>> by_spawn;
    for (const auto& a : agents) {
        if (a.exit < a.spawn) throw Error(Errc::InvalidArgument, kModule, "exit precedes spawn");
        const Frame lo = std::clamp<Frame>(a.spawn, 0, length);
        const Frame hi = std::clamp<Frame>(a.exit, 0, length);
        delta[static_cast<std::size_t>(lo)] += 1;
        delta[static_cast<std::size_t>(hi)] -= 1;
        if (a.spawn >= 0 && a.spawn < length) s.spawns_per_window[static_cast<std::size_t>(a.spawn / bin)] += 1;
        s.time_in_scene.push_back(static_cast<double>(a.exit - a.spawn));
        all.push_back(a.spawn);
        if (a.spawn_id >= 0) by_spawn[a.spawn_id].push_back(a.spawn);
    }
    std::int64_t present = 0;
    s.agents_per_frame.reserve(static_cast<std::size_t>(length));
    for (Frame f = 0; f < length; ++f) {
        present += delta[static_cast<std::size_t>(f)];
        s.agents_per_frame.push_back(present);
    }
    s.inter_spawn_times = diffs_of_sorted(std::move(all));
    for (auto& [id, frames] : by_spawn) s.inter_spawn_by_spawn[id] = diffs_of_sorted(std::move(frames));
    return s;
}

CrowdStats compute_stats(const sim::SimulationLog& log, Frame bin) {
    std::vector<Presence> p;
    p.reserve(log.agents.size());
    for (const auto& a : log.agents) {
        p.push_back({a.spawn_id, a.spawn_time, a.exit_time.value_or(a.spawn_time)});
    }
    return compute_stats(p, log.length, bin);
}

CrowdStats compute_stats(const data::TrajectoryDataset& dataset, const std::vector<int>& spawn_ids, Frame bin) {
    if (!spawn_ids.empty() && spawn_ids.size() != dataset.trajectories.size())
        throw Error(Errc::DimensionMismatch, kModule, "label count differs from trajectory count");
    std::vector<Presence> p;
    p.reserve(dataset.trajectories.size());
    for (std::size_t i = 0; i < dataset.trajectories.size(); ++i) {
        const auto& tr = dataset.trajectories[i];
        p.push_back({spawn_ids.empty() ? -1 : spawn_ids[i], tr.start_frame, tr.end_frame()});
    }
    return compute_stats(p, dataset.frame_count, bin);
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error(Errc::EmptySample, kModule, "KS distance needs two nonempty samples");
    const auto x = sorted_copy(a);
    const auto y = sorted_copy(b);
    const double na = static_cast<double>(x.size());
    const double nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_distance(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
    const std::vector<double> x(a.begin(), a.end());
    const std::vector<double> y(b.begin(), b.end());
    return ks_distance(std::span<const double>(x), std::span<const double>(y));
}

double ks_to_cdf(std::span<const double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw Error(Errc::EmptySample, kModule, "KS distance needs a nonempty sample");
    const auto x = sorted_copy(sample);
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size();) {
        std::size_t k = i;
        while (k < x.size() && x[k] == x[i]) ++k;
        const double f = cdf(x[i]);
        d = std::max({d, std::abs(static_cast<double>(k) / n - f), std::abs(f - static_cast<double>(i) / n)});
        i = k;
    }
    return d;
}

Summary summarize(std::span<const double> values) {
    if (values.empty()) return {};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

nlohmann::json to_json(const CrowdStats& s) {
    nlohmann::json per_spawn = nlohmann::json::object();
    for (const auto& [id, v] : s.inter_spawn_by_spawn) per_spawn[std::to_string(id)] = v;
    return {{"length", s.length},
            {"bin", s.bin},
            {"agents_per_frame", s.agents_per_frame},
            {"inter_spawn_times", s.inter_spawn_times},
            {"inter_spawn_times_by_spawn", per_spawn},
            {"spawns_per_window", s.spawns_per_window},
            {"time_in_scene", s.time_in_scene}};
}

std::string agents_per_frame_table(const CrowdStats& s) {
    std::ostringstream out;
    out << "frame,agents\n";
    for (std::size_t f = 0; f < s.agents_per_frame.size(); ++f) out << f << ',' << s.agents_per_frame[f] << '\n';
    return out.str();
}

}  // namespace crowd::eval
