#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "crowd/error.hpp"
#include "crowd/eval/ablation.hpp"
#include "crowd/eval/flow.hpp"
#include "crowd/eval/stats.hpp"
#include "crowd/random.hpp"
#include "crowd/sim/orchestrator.hpp"
#include "crowd/synth/scene.hpp"
#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

using namespace crowd;
using namespace crowd::eval;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("crowd_eval_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("presence statistics on a hand-built scene") {
    const std::vector<Presence> ps{{0, 0, 3}, {0, 2, 5}, {1, 4, 6}};
    const auto st = compute_stats(ps, 10, 5);
    CHECK(st.agents_per_frame == std::vector<std::int64_t>{1, 1, 2, 1, 2, 1, 0, 0, 0, 0});
    CHECK(st.inter_spawn_times == std::vector<double>{2, 2});
    CHECK(st.inter_spawn_by_spawn.at(0) == std::vector<double>{2});
    CHECK(st.inter_spawn_by_spawn.at(1).empty());
    CHECK(st.spawns_per_window == std::vector<std::int64_t>{3, 0});
    CHECK(st.time_in_scene == std::vector<double>{3, 3, 2});
    CHECK(compute_stats(ps, 11, 5).spawns_per_window.size() == 3);
    CHECK_THROWS_AS(compute_stats(std::span<const Presence>{}, 10), Error);
}

TEST_CASE("statistics satisfy the counting identities on random scenes") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        std::vector<Presence> ps;
        const Frame length = 200;
        for (int i = 0; i < 50; ++i) {
            const auto s = static_cast<Frame>(uniform(rng, 0, 200));
            ps.push_back({static_cast<int>(uniform(rng, 0, 3)), s, s + 1 + static_cast<Frame>(uniform(rng, 0, 30))});
        }
        const auto st = compute_stats(ps, length);
        // Sum over frames of presence equals the clipped total time in scene.
        std::int64_t clipped = 0;
        for (const auto& p : ps) clipped += std::min(p.exit, length) - p.spawn;
        CHECK(std::accumulate(st.agents_per_frame.begin(), st.agents_per_frame.end(), std::int64_t{0}) == clipped);
        CHECK(std::accumulate(st.spawns_per_window.begin(), st.spawns_per_window.end(), std::int64_t{0}) == 50);
        CHECK(st.inter_spawn_times.size() == 49);
        std::size_t per_spawn = 0;
        for (const auto& [id, v] : st.inter_spawn_by_spawn) per_spawn += v.size() + 1;
        CHECK(per_spawn == 50);
        for (double t : st.time_in_scene) CHECK(t >= 1);
    }
}

TEST_CASE("statistics of a log and of its replayed dataset agree") {
    std::vector<data::Trajectory> trs(3);
    for (int i = 0; i < 3; ++i) {
        trs[static_cast<std::size_t>(i)].agent_id = i;
        trs[static_cast<std::size_t>(i)].start_frame = 2 * i;
        trs[static_cast<std::size_t>(i)].positions.assign(static_cast<std::size_t>(2 + i), data::Point(i, 0));
    }
    const auto ds = data::make_dataset(trs);
    const auto a = compute_stats(ds);
    const auto b = compute_stats(sim::replay(ds));
    CHECK(a.agents_per_frame == b.agents_per_frame);
    CHECK(a.time_in_scene == b.time_in_scene);
    CHECK(a.time_in_scene == std::vector<double>{1, 2, 3});
}

TEST_CASE("KS distance examples") {
    const std::vector<double> a{1, 2, 3}, b{1, 2, 3}, c{10, 11};
    CHECK(ks_distance(a, b) == 0.0);
    CHECK(ks_distance(a, c) == 1.0);
    const std::vector<double> d{1, 2, 3, 4}, e{3, 4, 5, 6};
    CHECK(ks_distance(d, e) == doctest::Approx(0.5));
    const std::vector<std::int64_t> i1{0, 0, 1}, i2{0, 1, 1};
    CHECK(ks_distance(i1, i2) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(ks_distance(std::span<const double>{}, a), Error);
}

TEST_CASE("KS distance matches the brute-force oracle, including ties") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        std::vector<double> a, b;
        const int na = 1 + static_cast<int>(uniform(rng, 0, 40)), nb = 1 + static_cast<int>(uniform(rng, 0, 40));
        for (int i = 0; i < na; ++i) a.push_back(std::floor(uniform(rng, 0, 8)));
        for (int i = 0; i < nb; ++i) b.push_back(std::floor(uniform(rng, 0, 10)));
        CHECK(ks_distance(a, b) == doctest::Approx(oracle::ks(a, b)).epsilon(1e-12));
        CHECK(ks_distance(a, b) == ks_distance(b, a));
    }
}

TEST_CASE("two large samples from one exponential are close in KS") {
    Rng rng(1);
    std::vector<double> a, b;
    for (int i = 0; i < 10000; ++i) a.push_back(exponential(rng, 0.2)), b.push_back(exponential(rng, 0.2));
    CHECK(ks_distance(a, b) < 0.03);
    CHECK(ks_to_cdf(a, [](double x) { return x <= 0 ? 0.0 : 1 - std::exp(-0.2 * x); }) < 0.02);
}

TEST_CASE("summary uses the population standard deviation") {
    const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    const auto s = summarize(v);
    CHECK(s.mean == 5.0);
    CHECK(s.std == 2.0);
}

TEST_CASE("flows group by spawn and goal, export and resample") {
    const auto dir = temp_dir("flows");
    std::vector<data::Trajectory> trs;
    std::vector<int> spawns, goals;
    for (int i = 0; i < 6; ++i) {
        data::Trajectory tr;
        tr.agent_id = i;
        tr.start_frame = i;
        const double y = i % 2 ? 5.0 : -5.0;
        for (int k = 0; k <= 10; ++k) tr.positions.emplace_back(k, y * k / 10.0);
        trs.push_back(tr);
        spawns.push_back(0);
        goals.push_back(i % 2);
    }
    const auto log = sim::replay(data::make_dataset(trs), spawns, goals);
    const auto bundles = group_flows(log);
    REQUIRE(bundles.size() == 2);
    CHECK(bundles[0].agents.size() + bundles[1].agents.size() == log.agents.size());

    flow_export(log, dir);
    CHECK(std::filesystem::exists(dir / "flow_s0_g0.csv"));
    CHECK(std::filesystem::exists(dir / "flow_s0_g1.csv"));
    std::ifstream idx(dir / "index.json");
    const auto index = nlohmann::json::parse(idx);
    CHECK(index.at("format") == "crowd-flows/1");

    const auto line = resample(std::vector<data::Point>{{0, 0}, {1, 0}, {1, 3}}, 5);
    REQUIRE(line.size() == 5);
    CHECK(line[2].isApprox(data::Point(1, 1)));
    CHECK(line.back() == data::Point(1, 3));

    const auto m0 = mean_path(bundles[0]), m1 = mean_path(bundles[1]);
    CHECK(hausdorff(m0, m1) == doctest::Approx(std::sqrt(80.0)).epsilon(1e-2));
    CHECK(hausdorff(m0, m0) == 0.0);
}

TEST_CASE("two-route scene: simulated flows toward the two goals are separated") {
    const auto scene = synth::generate(synth::two_route_scene({}, 3));
    const auto model = spatial::fit_spatial_model(scene.dataset, {0.5, 10}, {0.5, 10});
    REQUIRE(model.goal_areas.size() == 2);
    std::vector<temporal::TemporalModel> temporal;
    for (int s : model.usable_spawns()) temporal.push_back(temporal::PoissonModel{s, 0.05});
    sim::SimConfig cfg;
    cfg.length = 2000;
    const auto log = sim::simulate(sim::schedule(model, temporal, 2000, 1, 9), policy::scripted_policy(1.0), cfg);
    const auto bundles = group_flows(log);
    REQUIRE(bundles.size() == 2);
    CHECK(hausdorff(mean_path(bundles[0]), mean_path(bundles[1])) > 1.0);
}

TEST_CASE("rollout segments and grid size") {
    CHECK(effective_segments(1, 10000, 10000) == 1);
    CHECK(effective_segments(10, 10000, 10000) == 10);
    CHECK(effective_segments(1, 1000, 10000) == 10);
    CHECK(effective_segments(10, 1000, 10000) == 10);
    CHECK(effective_segments(3, 10000, 10000) == 3);
    CHECK_THROWS_AS(effective_segments(0, 1000, 10000), Error);
    CHECK(AblationGrid{}.size() == 24);
}

TEST_CASE("ablation on a small grid: shapes, JSON round trip and cache reuse") {
    synth::SceneSpec spec;
    spec.horizon = 1500;
    spec.seed = 4;
    const auto scene = synth::generate(spec);
    const auto model = spatial::fit_spatial_model(scene.dataset, {0.5, 10}, {0.5, 10});
    AblationOptions opt;
    opt.grid = {{300.0}, {30.0}, {1, 3}, {500.0}};
    opt.samples = 2;
    opt.total_length = 1000;
    opt.train.epochs = 2;
    opt.train.arch = {4, 4};
    opt.sim.length = 1000;
    opt.seed = 6;
    opt.jobs = 2;
    opt.work_dir = temp_dir("ablation");
    const auto report = run_ablation(scene.dataset, model, policy::scripted_policy(1.0), opt);
    REQUIRE(report.cells.size() == 2);
    for (const auto& c : report.cells) {
        CHECK(c.agents_per_frame.size() == 2);
        CHECK(c.agents_per_frame[0].size() == 1000);
        CHECK((c.ks_gt >= 0 && c.ks_gt <= 1));
        CHECK((c.ks_poisson >= 0 && c.ks_poisson <= 1));
        const auto back = ablation_cell_from_json(to_json(c));
        CHECK(back.agents_per_frame == c.agents_per_frame);
        CHECK(back.ks_gt == c.ks_gt);
    }
    CHECK(report.cells[0].segments == 2);
    CHECK(report.cells[1].segments == 3);
    CHECK(report.mean_ks_poisson(300.0) == doctest::Approx((report.cells[0].ks_poisson + report.cells[1].ks_poisson) / 2));

    opt.jobs = 1;
    const auto again = run_ablation(scene.dataset, model, policy::scripted_policy(1.0), opt);
    CHECK(to_json(again) == to_json(report));
    CHECK(ablation_table(report).rfind("w,o,nRo,lRo,segments,mean,two_std,ks_gt,ks_poisson", 0) == 0);
}
