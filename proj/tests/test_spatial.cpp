#include <cmath>
#include <set>

#include "crowd/data/occupancy.hpp"
#include "crowd/error.hpp"
#include "crowd/eval/stats.hpp"
#include "crowd/random.hpp"
#include "crowd/spatial/spatial_model.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace crowd;
using data::Point;
using spatial::AreaModel;

namespace {

std::vector<Point> blob(Rng& rng, Point c, double spread, int n) {
    std::vector<Point> out;
    for (int i = 0; i < n; ++i) out.push_back(c + spread * Point(standard_normal(rng), standard_normal(rng)));
    return out;
}

AreaModel area(int id, Point mu, double sigma = spatial::kSigmaFloor) {
    AreaModel a;
    a.area_id = id;
    a.mu = mu;
    a.sigma = Eigen::Vector2d::Constant(sigma);
    a.member_count = 1;
    return a;
}

spatial::SpatialModel two_goal_model(int n1, int n2) {
    std::vector<int> s, g;
    for (int i = 0; i < n1; ++i) s.push_back(0), g.push_back(0);
    for (int i = 0; i < n2; ++i) s.push_back(0), g.push_back(1);
    return spatial::build_cooccurrence(s, g, {area(0, Point(0, 0))}, {area(0, Point(10, 0)), area(1, Point(10, 5))});
}

}  // namespace

TEST_CASE("degenerate cluster gets the sigma floor") {
    const std::vector<Point> pts(25, Point(1, 1));
    const auto c = spatial::cluster_areas(pts, 0.2, 20);
    REQUIRE(c.areas.size() == 1);
    CHECK(c.areas[0].mu == Point(1, 1));
    CHECK(c.areas[0].sigma == Eigen::Vector2d(0.05, 0.05));
    CHECK(c.areas[0].member_count == 25);
}

TEST_CASE("two separated blobs give two areas and match the brute-force clustering") {
    Rng rng(3);
    auto pts = blob(rng, Point(0, 0), 0.1, 30);
    const auto b = blob(rng, Point(10, 0), 0.1, 30);
    pts.insert(pts.end(), b.begin(), b.end());
    pts.push_back(Point(5, 5));
    const auto c = spatial::cluster_areas(pts, 0.5, 5);
    CHECK(c.areas.size() == 2);
    CHECK(oracle::same_partition(oracle::dbscan(pts, 0.5, 5), c.labels));
    CHECK(c.labels.back() == spatial::kNoise);
    CHECK(c.areas[0].mu.x() < c.areas[1].mu.x());
}

TEST_CASE("dbscan agrees with the brute-force oracle on random scenes") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        std::vector<Point> pts;
        for (int k = 0; k < 4; ++k) {
            const auto b = blob(rng, Point(uniform(rng, -20, 20), uniform(rng, -20, 20)), uniform(rng, 0.05, 0.4), 15 + k * 5);
            pts.insert(pts.end(), b.begin(), b.end());
        }
        for (int k = 0; k < 10; ++k) pts.emplace_back(uniform(rng, -25, 25), uniform(rng, -25, 25));
        const auto ours = spatial::dbscan(pts, 0.3, 4);
        const auto ref = oracle::dbscan(pts, 0.3, 4);
        CHECK(oracle::same_partition(ref, ours));
    }
}

TEST_CASE("clustering is deterministic and throws when everything is noise") {
    Rng rng(8);
    const auto pts = blob(rng, Point(2, 2), 0.1, 40);
    CHECK(spatial::cluster_areas(pts, 0.2, 5).labels == spatial::cluster_areas(pts, 0.2, 5).labels);
    const std::vector<Point> sparse = {Point(0, 0), Point(10, 0), Point(20, 0)};
    CHECK_THROWS_AS(spatial::cluster_areas(sparse, 0.5, 2), Error);
}

TEST_CASE("co-occurrence weights follow relative frequencies") {
    const auto m = two_goal_model(3, 1);
    CHECK(m.cooccurrence(0, 0) == 3);
    CHECK(m.cooccurrence(0, 1) == 1);
    CHECK(m.mixtures(0, 0) == doctest::Approx(0.75));
    CHECK(m.mixtures(0, 1) == doctest::Approx(0.25));

    const std::vector<int> s{0}, g{0};
    const auto single = spatial::build_cooccurrence(s, g, {area(0, Point(0, 0))}, {area(0, Point(1, 1))});
    CHECK(single.mixtures(0, 0) == 1.0);
}

TEST_CASE("spawns whose trajectories all end in noise are kept but unusable") {
    const std::vector<int> s{0, 1, 1}, g{0, spatial::kNoise, spatial::kNoise};
    const auto m = spatial::build_cooccurrence(s, g, {area(0, Point(0, 0)), area(1, Point(5, 0))}, {area(0, Point(9, 9))});
    CHECK(m.spawn_areas.size() == 2);
    CHECK(m.usable(0));
    CHECK_FALSE(m.usable(1));
    CHECK(m.usable_spawns() == std::vector<int>{0});
    Rng rng(1);
    CHECK_THROWS_AS(spatial::sample_spawn_goal(m, 1, rng), Error);
    CHECK_THROWS_AS(spatial::sample_spawn_goal(m, 7, rng), Error);
}

TEST_CASE("mixture rows are distributions and match the support set") {
    Rng rng(2);
    std::vector<int> s, g;
    for (int i = 0; i < 200; ++i) {
        s.push_back(static_cast<int>(uniform(rng, 0, 3)));
        g.push_back(uniform01(rng) < 0.1 ? spatial::kNoise : static_cast<int>(uniform(rng, 0, 4)));
    }
    std::vector<AreaModel> spawns{area(0, Point(0, 0)), area(1, Point(1, 0)), area(2, Point(2, 0))};
    std::vector<AreaModel> goals{area(0, Point(0, 9)), area(1, Point(1, 9)), area(2, Point(2, 9)), area(3, Point(3, 9))};
    const auto m = spatial::build_cooccurrence(s, g, spawns, goals);
    for (int sp : m.usable_spawns()) {
        CHECK(m.mixtures.row(sp).sum() == doctest::Approx(1.0).epsilon(1e-9));
        for (int e = 0; e < 4; ++e) CHECK((m.mixtures(sp, e) > 0) == (m.cooccurrence(sp, e) > 0));
    }
}

TEST_CASE("spawn samples at the sigma floor concentrate at the mean") {
    const auto m = two_goal_model(1, 0);
    Rng rng(17);
    Point mean = Point::Zero();
    for (int i = 0; i < 1000; ++i) mean += spatial::sample_spawn_goal(m, 0, rng).spawn;
    mean /= 1000.0;
    CHECK((mean - m.spawn_areas[0].mu).norm() < 0.01);
}

TEST_CASE("single-component mixture always yields that goal") {
    const auto m = two_goal_model(0, 4);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) CHECK(spatial::sample_spawn_goal(m, 0, rng).goal_id == 1);
}

TEST_CASE("component frequencies follow the mixture weights") {
    const auto m = two_goal_model(3, 1);
    Rng rng(5);
    int first = 0;
    for (int i = 0; i < 10000; ++i) first += spatial::sample_spawn_goal(m, 0, rng).goal_id == 0;
    CHECK(std::abs(first / 10000.0 - 0.75) < 0.02);
}

TEST_CASE("marginal goal positions match the analytic mixture (KS at 0.01)") {
    std::vector<int> s, g;
    for (int i = 0; i < 3; ++i) s.push_back(0), g.push_back(0);
    s.push_back(0), g.push_back(1);
    const auto m = spatial::build_cooccurrence(s, g, {area(0, Point(0, 0))}, {area(0, Point(10, 0), 0.8), area(1, Point(12, 5), 0.5)});
    Rng rng(6);
    std::vector<double> xs;
    const int n = 5000;
    for (int i = 0; i < n; ++i) xs.push_back(spatial::sample_spawn_goal(m, 0, rng).goal.x());
    const auto cdf = [&](double x) {
        double f = 0.0;
        for (int k = 0; k < 2; ++k) {
            const auto& a = m.goal_areas[static_cast<std::size_t>(k)];
            f += m.mixtures(0, k) * 0.5 * std::erfc(-(x - a.mu.x()) / (a.sigma.x() * std::sqrt(2.0)));
        }
        return f;
    };
    CHECK(eval::ks_to_cdf(xs, cdf) < 1.628 / std::sqrt(static_cast<double>(n)));
    // The density integrates to one over a wide box.
    double mass = 0.0;
    const double h = 0.05;
    for (double x = 5; x < 17; x += h)
        for (double y = -5; y < 10; y += h) mass += spatial::goal_density(m, 0, Point(x + h / 2, y + h / 2)) * h * h;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("sampled goal ids stay inside the support set") {
    std::vector<int> s{0, 0, 1, 1, 1}, g{0, 2, 1, 1, 2};
    const auto m = spatial::build_cooccurrence(s, g, {area(0, Point(0, 0)), area(1, Point(1, 0))},
                                               {area(0, Point(0, 9)), area(1, Point(1, 9)), area(2, Point(2, 9))});
    Rng rng(9);
    for (int sp : {0, 1}) {
        const auto support = m.support(sp);
        const std::set<int> allowed(support.begin(), support.end());
        for (int i = 0; i < 500; ++i) CHECK(allowed.contains(spatial::sample_spawn_goal(m, sp, rng).goal_id));
    }
}

TEST_CASE("occupied samples are redrawn, then rejected") {
    const auto m = two_goal_model(1, 0);
    std::istringstream blocked("40 40 1 -20 -20\n" + [] {
        std::string rows;
        for (int r = 0; r < 40; ++r) rows += std::string(40, '#') + "\n";
        return rows;
    }());
    const auto full = data::parse_occupancy(blocked);
    Rng rng(1);
    try {
        spatial::sample_spawn_goal(m, 0, rng, &full);
        FAIL("expected OccupiedSampleExhausted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::OccupiedSampleExhausted);
    }

    // Obstacle covering x < 0: roughly half the spawn draws land on it.
    std::string rows;
    for (int r = 0; r < 40; ++r) rows += std::string(20, '#') + std::string(20, '.') + "\n";
    std::istringstream half("40 40 1 -20 -20\n" + rows);
    const auto map = data::parse_occupancy(half);
    for (int i = 0; i < 200; ++i) {
        const auto sample = spatial::sample_spawn_goal(m, 0, rng, &map);
        CHECK_FALSE(map.occupied(sample.spawn));
        CHECK_FALSE(map.occupied(sample.goal));
    }
}

TEST_CASE("spatial model JSON round trip is exact") {
    Rng rng(12);
    std::vector<data::Trajectory> trs;
    for (int i = 0; i < 120; ++i) {
        data::Trajectory tr;
        tr.agent_id = i;
        tr.start_frame = i;
        const Point goal = i % 3 ? Point(10, 0) : Point(10, 6);
        tr.positions = {0.1 * Point(standard_normal(rng), standard_normal(rng)), goal + 0.1 * Point(standard_normal(rng), standard_normal(rng))};
        trs.push_back(tr);
    }
    const auto m = spatial::fit_spatial_model(data::make_dataset(trs), {0.5, 5}, {0.5, 5});
    CHECK(m.goal_areas.size() == 2);
    const auto back = spatial::spatial_model_from_json(spatial::to_json(m));
    CHECK(back.cooccurrence == m.cooccurrence);
    CHECK(back.mixtures == m.mixtures);
    CHECK(back.spawn_labels == m.spawn_labels);
    CHECK(back.goal_areas[1].mu == m.goal_areas[1].mu);
    CHECK(back.goal_areas[1].sigma == m.goal_areas[1].sigma);
    CHECK(spatial::to_json(back) == spatial::to_json(m));
}
