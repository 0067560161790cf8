#include "crowd/eval/flow.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "crowd/error.hpp"
#include "crowd/io.hpp"
#include "crowd/text.hpp"

namespace crowd::eval {

namespace {

constexpr std::string_view kModule = "eval-metrics";

double directed(std::span<const Point> a, std::span<const Point> b) {
    double worst = 0.0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b) best = std::min(best, (p - q).squaredNorm());
        worst = std::max(worst, best);
    }
    return std::sqrt(worst);
}

}  // namespace

std::vector<FlowBundle> group_flows(const sim::SimulationLog& log) {
    std::map<std::pair<int, int>, FlowBundle> groups;
    for (const auto& a : log.agents) {
        auto& g = groups[{a.spawn_id, a.goal_id}];
        g.spawn_id = a.spawn_id;
        g.goal_id = a.goal_id;
        g.agents.push_back(&a);
    }
    std::vector<FlowBundle> out;
    for (auto& [key, g] : groups) out.push_back(std::move(g));
    return out;
}

void flow_export(const sim::SimulationLog& log, const std::filesystem::path& dir) {
    nlohmann::json index = nlohmann::json::array();
    for (const auto& g : group_flows(log)) {
        const std::string name = "flow_s" + std::to_string(g.spawn_id) + "_g" + std::to_string(g.goal_id) + ".csv";
        std::vector<std::tuple<data::Frame, std::int64_t, Point>> rows;
        for (const auto* a : g.agents) {
            for (std::size_t i = 0; i < a->path.size(); ++i)
                rows.emplace_back(a->spawn_time + static_cast<data::Frame>(i), a->agent_id, a->path[i]);
        }
        std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
            return std::tie(std::get<0>(x), std::get<1>(x)) < std::tie(std::get<0>(y), std::get<1>(y));
        });
        std::ostringstream out;
        out << "frame,agent_id,x,y\n";
        for (const auto& [f, id, p] : rows)
            out << f << ',' << id << ',' << text::format_double(p.x()) << ',' << text::format_double(p.y()) << '\n';
        io::write_text_atomic(dir / name, out.str());
        index.push_back({{"spawn_id", g.spawn_id}, {"goal_id", g.goal_id}, {"agents", g.agents.size()}, {"file", name}});
    }
    io::write_json(dir / "index.json", {{"format", "crowd-flows/1"}, {"bundles", index}});
}

Polyline resample(std::span<const Point> path, std::size_t count) {
    if (path.empty() || count < 2) throw Error(Errc::InvalidArgument, kModule, "resample needs a path and count >= 2");
    std::vector<double> cum(path.size(), 0.0);
    for (std::size_t i = 1; i < path.size(); ++i) cum[i] = cum[i - 1] + (path[i] - path[i - 1]).norm();
    const double total = cum.back();
    Polyline out;
    out.reserve(count);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double s = total * static_cast<double>(k) / static_cast<double>(count - 1);
        while (seg + 2 < path.size() && cum[seg + 1] < s) ++seg;
        if (path.size() == 1 || total == 0.0) {
            out.push_back(path.front());
            continue;
        }
        const double len = cum[seg + 1] - cum[seg];
        const double u = len > 0.0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
        out.push_back(path[seg] + u * (path[seg + 1] - path[seg]));
    }
    return out;
}

Polyline mean_path(const FlowBundle& bundle, std::size_t count) {
    Polyline mean(count, Point::Zero());
    if (bundle.agents.empty()) return mean;
    for (const auto* a : bundle.agents) {
        const auto r = resample(a->path, count);
        for (std::size_t k = 0; k < count; ++k) mean[k] += r[k];
    }
    for (auto& p : mean) p /= static_cast<double>(bundle.agents.size());
    return mean;
}

double hausdorff(std::span<const Point> a, std::span<const Point> b) {
    if (a.empty() || b.empty()) throw Error(Errc::EmptySample, kModule, "Hausdorff distance needs two nonempty sets");
    return std::max(directed(a, b), directed(b, a));
}

}  // namespace crowd::eval
