#include <cmath>
#include <sstream>

#include "crowd/data/trajectory.hpp"
#include "crowd/random.hpp"
#include "crowd/synth/scene.hpp"
#include "doctest.h"

using namespace crowd;
using namespace crowd::synth;

TEST_CASE("scene generation is seed-determined") {
    const auto spec = two_route_scene({}, 5);
    std::ostringstream a, b;
    data::write_trajectories(a, generate(spec).dataset);
    data::write_trajectories(b, generate(spec).dataset);
    CHECK(a.str() == b.str());
    std::ostringstream c;
    data::write_trajectories(c, generate(two_route_scene({}, 6)).dataset);
    CHECK(c.str() != a.str());
}

TEST_CASE("trajectories walk straight to the goal at the planted speed") {
    const auto scene = generate(two_route_scene({}, 1));
    REQUIRE(scene.dataset.agent_count() == scene.event_times.size());
    for (std::size_t i = 0; i < scene.dataset.trajectories.size(); ++i) {
        const auto& tr = scene.dataset.trajectories[i];
        CHECK(tr.start_frame == static_cast<data::Frame>(std::floor(scene.event_times[i])));
        for (std::size_t k = 1; k + 1 < tr.positions.size(); ++k) CHECK((tr.positions[k] - tr.positions[k - 1]).norm() == doctest::Approx(1.0));
        CHECK((tr.positions.back() - tr.positions[tr.positions.size() - 2]).norm() <= 1.0 + 1e-9);
        const auto& goal = scene.spec.routes[static_cast<std::size_t>(scene.route_of[i])].goal;
        CHECK((tr.positions.back() - goal).norm() < 2.0);
    }
}

TEST_CASE("planted processes reproduce their rates and burstiness") {
    Rng rng(2);
    const auto poisson = sample_process({Process::Poisson}, 200000, rng);
    CHECK(static_cast<double>(poisson.size()) / 200000 == doctest::Approx(0.05).epsilon(0.03));

    ProcessSpec bursty{Process::BurstyWeibull};
    const auto b = sample_process(bursty, 200000, rng);
    // Weibull(0.5, 10) has mean 10 * Gamma(3) = 20.
    CHECK(200000.0 / static_cast<double>(b.size()) == doctest::Approx(20.0).epsilon(0.05));

    const auto alt = sample_process({Process::AlternatingRate}, 200000, rng);
    std::size_t high = 0, low = 0;
    for (double t : alt) (static_cast<long>(t / 1000) % 2 == 0 ? high : low) += 1;
    CHECK(static_cast<double>(high) / 100000 == doctest::Approx(0.1).epsilon(0.05));
    CHECK(static_cast<double>(low) / 100000 == doctest::Approx(0.02).epsilon(0.08));
    for (std::size_t i = 1; i < alt.size(); ++i) CHECK(alt[i] > alt[i - 1]);
}

TEST_CASE("sidecar carries the planted parameters and round-trips") {
    ProcessSpec p{Process::BurstyWeibull};
    p.weibull_scale = 12.5;
    const auto spec = two_route_scene(p, 9);
    const auto doc = to_json(spec);
    CHECK(doc.at("format") == "crowd-synth/1");
    const auto back = scene_spec_from_json(doc);
    CHECK(back.process.kind == Process::BurstyWeibull);
    CHECK(back.process.weibull_scale == 12.5);
    REQUIRE(back.routes.size() == 2);
    CHECK(back.routes[0].weight == 0.6);
    CHECK(back.routes[1].goal == Point(30, -6));
    CHECK(to_json(back) == doc);

    const auto scene = generate(spec);
    const double share = static_cast<double>(std::count(scene.route_of.begin(), scene.route_of.end(), 0)) / static_cast<double>(scene.route_of.size());
    CHECK(std::abs(share - 0.6) < 0.05);
}
