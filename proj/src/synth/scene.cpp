#include "crowd/synth/scene.hpp"

#include <algorithm>
#include <cmath>

#include "crowd/error.hpp"
#include "crowd/temporal/weibull.hpp"

namespace crowd::synth {

namespace {

constexpr std::string_view kModule = "synth";

const char* process_name(Process p) {
    switch (p) {
        case Process::Poisson: return "poisson";
        case Process::BurstyWeibull: return "bursty_weibull";
        case Process::AlternatingRate: return "alternating_rate";
    }
    return "unknown";
}

Process process_from_name(const std::string& s) {
    if (s == "poisson") return Process::Poisson;
    if (s == "bursty_weibull") return Process::BurstyWeibull;
    if (s == "alternating_rate") return Process::AlternatingRate;
    throw Error(Errc::ConfigInvalid, kModule, "unknown process " + s);
}

void validate(const SceneSpec& s) {
    const auto& p = s.process;
    const bool ok = s.horizon > 0.0 && s.speed > 0.0 && s.spawn_sigma >= 0.0 && s.goal_sigma >= 0.0 && !s.routes.empty() &&
                    p.rate > 0.0 && p.weibull_shape > 0.0 && p.weibull_scale > 0.0 && p.rate_high >= 0.0 &&
                    p.rate_low >= 0.0 && std::max(p.rate_high, p.rate_low) > 0.0 && p.period > 0.0 &&
                    std::all_of(s.routes.begin(), s.routes.end(), [](const Route& r) { return r.weight > 0.0; });
    if (!ok) throw Error(Errc::ConfigInvalid, kModule, "scene parameters out of range");
}

Point gaussian_point(Rng& rng, const Point& mu, double sigma) {
    const double x = standard_normal(rng);
    const double y = standard_normal(rng);
    return mu + sigma * Point(x, y);
}

}  // namespace

SceneSpec two_route_scene(ProcessSpec process, std::uint64_t seed) {
    SceneSpec s;
    s.process = process;
    s.routes = {Route{Point(30.0, 6.0), 0.6}, Route{Point(30.0, -6.0), 0.4}};
    s.seed = seed;
    return s;
}

std::vector<double> sample_process(const ProcessSpec& spec, double horizon, Rng& rng) {
    std::vector<double> times;
    const auto push = [&](double t) {
        if (!times.empty() && t <= times.back()) t = std::nextafter(times.back(), horizon);
        if (t < horizon) times.push_back(t);
        return t < horizon;
    };
    switch (spec.kind) {
        case Process::Poisson: {
            for (double t = exponential(rng, spec.rate); push(t); t += exponential(rng, spec.rate)) {}
            break;
        }
        case Process::BurstyWeibull: {
            const temporal::Weibull w{spec.weibull_shape, spec.weibull_scale};
            double t = 0.0;
            while (true) {
                t += temporal::inverse_survival(w, uniform_open0(rng));
                if (!push(t)) break;
                t = times.back();
            }
            break;
        }
        case Process::AlternatingRate: {
            const double top = std::max(spec.rate_high, spec.rate_low);
            for (double t = exponential(rng, top); t < horizon; t += exponential(rng, top)) {
                const bool high = static_cast<long long>(std::floor(t / spec.period)) % 2 == 0;
                if (uniform01(rng) * top < (high ? spec.rate_high : spec.rate_low)) push(t);
            }
            break;
        }
    }
    return times;
}

Scene generate(const SceneSpec& spec) {
    validate(spec);
    Scene scene;
    scene.spec = spec;
    Rng time_rng(derive_seed(spec.seed, Stream::Temporal));
    Rng space_rng(derive_seed(spec.seed, Stream::Spatial));
    scene.event_times = sample_process(spec.process, spec.horizon, time_rng);
    if (scene.event_times.empty()) throw Error(Errc::EmptyDataset, kModule, "planted process produced no events");

    double total_weight = 0.0;
    for (const auto& r : spec.routes) total_weight += r.weight;

    std::vector<data::Trajectory> trajectories;
    for (std::size_t i = 0; i < scene.event_times.size(); ++i) {
        double u = uniform01(space_rng) * total_weight;
        int route = 0;
        while (route + 1 < static_cast<int>(spec.routes.size()) && u >= spec.routes[static_cast<std::size_t>(route)].weight) {
            u -= spec.routes[static_cast<std::size_t>(route)].weight;
            ++route;
        }
        const Point start = gaussian_point(space_rng, spec.spawn, spec.spawn_sigma);
        const Point goal = gaussian_point(space_rng, spec.routes[static_cast<std::size_t>(route)].goal, spec.goal_sigma);
        const double dist = (goal - start).norm();
        const auto steps = std::max<long long>(1, static_cast<long long>(std::ceil(dist / spec.speed)));
        data::Trajectory tr;
        tr.agent_id = static_cast<std::int64_t>(i);
        tr.start_frame = static_cast<data::Frame>(std::floor(scene.event_times[i]));
        const Point dir = dist > 0.0 ? Point((goal - start) / dist) : Point::Zero();
        for (long long k = 0; k < steps; ++k) tr.positions.push_back(start + dir * (spec.speed * static_cast<double>(k)));
        tr.positions.push_back(goal);
        trajectories.push_back(std::move(tr));
        scene.route_of.push_back(route);
    }
    scene.dataset = data::make_dataset(std::move(trajectories));
    return scene;
}

nlohmann::json to_json(const SceneSpec& s) {
    nlohmann::json routes = nlohmann::json::array();
    for (const auto& r : s.routes) routes.push_back({{"goal", {r.goal.x(), r.goal.y()}}, {"weight", r.weight}});
    const auto& p = s.process;
    return {{"format", "crowd-synth/1"},
            {"process",
             {{"kind", process_name(p.kind)},
              {"rate", p.rate},
              {"weibull_shape", p.weibull_shape},
              {"weibull_scale", p.weibull_scale},
              {"rate_high", p.rate_high},
              {"rate_low", p.rate_low},
              {"period", p.period}}},
            {"horizon", s.horizon},
            {"spawn", {s.spawn.x(), s.spawn.y()}},
            {"spawn_sigma", s.spawn_sigma},
            {"routes", routes},
            {"goal_sigma", s.goal_sigma},
            {"speed", s.speed},
            {"seed", s.seed}};
}

SceneSpec scene_spec_from_json(const nlohmann::json& doc) {
    try {
        SceneSpec s;
        if (doc.contains("process")) {
            const auto& p = doc.at("process");
            s.process.kind = process_from_name(p.value("kind", std::string("poisson")));
            s.process.rate = p.value("rate", s.process.rate);
            s.process.weibull_shape = p.value("weibull_shape", s.process.weibull_shape);
            s.process.weibull_scale = p.value("weibull_scale", s.process.weibull_scale);
            s.process.rate_high = p.value("rate_high", s.process.rate_high);
            s.process.rate_low = p.value("rate_low", s.process.rate_low);
            s.process.period = p.value("period", s.process.period);
        }
        s.horizon = doc.value("horizon", s.horizon);
        if (doc.contains("spawn")) s.spawn = Point(doc["spawn"].at(0).get<double>(), doc["spawn"].at(1).get<double>());
        s.spawn_sigma = doc.value("spawn_sigma", s.spawn_sigma);
        if (doc.contains("routes")) {
            s.routes.clear();
            for (const auto& r : doc.at("routes")) {
                s.routes.push_back({Point(r.at("goal").at(0).get<double>(), r.at("goal").at(1).get<double>()),
                                    r.at("weight").get<double>()});
            }
        }
        s.goal_sigma = doc.value("goal_sigma", s.goal_sigma);
        s.speed = doc.value("speed", s.speed);
        s.seed = doc.value("seed", s.seed);
        validate(s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ConfigInvalid, kModule, e.what());
    }
}

}  // namespace crowd::synth
