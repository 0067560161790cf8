#include <sstream>

#include "crowd/data/occupancy.hpp"
#include "crowd/data/trajectory.hpp"
#include "crowd/error.hpp"
#include "crowd/random.hpp"
#include "doctest.h"

using namespace crowd;
using data::Point;

namespace {

data::TrajectoryDataset parse(const std::string& text, data::LoadReport* report = nullptr) {
    std::istringstream in(text);
    return data::parse_trajectories(in, {}, report);
}

Errc parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::InvariantViolation;
}

}  // namespace

TEST_CASE("two rows for one agent form one trajectory of length 2") {
    const auto ds = parse("frame,agent_id,x,y\n0,7,1.5,2\n1,7,2.5,2\n");
    REQUIRE(ds.agent_count() == 1);
    CHECK(ds.trajectories[0].agent_id == 7);
    CHECK(ds.trajectories[0].positions.size() == 2);
    CHECK(ds.frame_count == 2);
}

TEST_CASE("gaps are linearly interpolated and endpoints kept exactly") {
    data::LoadReport report;
    const auto ds = parse("frame,agent_id,x,y\n2,3,2,0\n0,3,0,0\n", &report);
    const auto& tr = ds.trajectories.at(0);
    REQUIRE(tr.positions.size() == 3);
    CHECK(tr.start_frame == 0);
    CHECK(tr.positions[1] == Point(1.0, 0.0));
    CHECK(tr.positions.front() == Point(0.0, 0.0));
    CHECK(tr.positions.back() == Point(2.0, 0.0));
    CHECK(report.interpolated_frames == 1);
}

TEST_CASE("malformed input is rejected with the matching error") {
    CHECK(parse_error("frame,agent_id,x,y\n0,1,abc,0\n1,1,0,0\n") == Errc::MalformedRow);
    CHECK(parse_error("frame,agent_id,x,y\n-1,1,0,0\n1,1,0,0\n") == Errc::MalformedRow);
    CHECK(parse_error("frame,agent_id,x,y\n0,1,0\n") == Errc::MalformedRow);
    CHECK(parse_error("x,y\n0,1,0,0\n") == Errc::MalformedRow);
    CHECK(parse_error("frame,agent_id,x,y\n0,1,0,0\n0,1,1,0\n") == Errc::NonMonotonicFrames);
    CHECK(parse_error("") == Errc::EmptyDataset);
    CHECK(parse_error("frame,agent_id,x,y\n") == Errc::EmptyDataset);
}

TEST_CASE("single-row agents are dropped") {
    data::LoadReport report;
    const auto ds = parse("frame,agent_id,x,y\n0,1,0,0\n1,1,1,0\n5,2,3,3\n", &report);
    CHECK(ds.agent_count() == 1);
    CHECK(report.dropped_single_row_agents == 1);
}

TEST_CASE("affine transform is applied at load time") {
    data::AffineTransform t;
    t.linear << 2, 0, 0, 3;
    t.offset = Point(1, 1);
    std::istringstream in("frame,agent_id,x,y\n0,1,1,1\n1,1,2,2\n");
    const auto ds = data::parse_trajectories(in, t);
    CHECK(ds.trajectories[0].positions[0] == Point(3, 4));
    CHECK(ds.trajectories[0].positions[1] == Point(5, 7));
}

TEST_CASE("dataset invariants: bounds contain every position, frame_count covers every frame") {
    Rng rng(5);
    std::vector<data::Trajectory> trs;
    for (int a = 0; a < 20; ++a) {
        data::Trajectory tr;
        tr.agent_id = a;
        tr.start_frame = static_cast<data::Frame>(uniform(rng, 0, 50));
        for (int k = 0; k < 2 + a % 5; ++k) tr.positions.emplace_back(uniform(rng, -10, 10), uniform(rng, -10, 10));
        trs.push_back(tr);
    }
    const auto ds = data::make_dataset(trs);
    for (const auto& tr : ds.trajectories) {
        CHECK(tr.end_frame() < ds.frame_count);
        for (const auto& p : tr.positions) CHECK(ds.bounds.contains(p));
    }
}

TEST_CASE("frame table round trip is bitwise exact") {
    Rng rng(11);
    std::vector<data::Trajectory> trs;
    for (int a = 0; a < 30; ++a) {
        data::Trajectory tr;
        tr.agent_id = 100 - a;
        tr.start_frame = a * 3;
        for (int k = 0; k < 4; ++k) tr.positions.emplace_back(uniform(rng, -1e3, 1e3) / 7.0, standard_normal(rng) * 1e-7);
        trs.push_back(tr);
    }
    const auto ds = data::make_dataset(trs);
    std::ostringstream out;
    data::write_trajectories(out, ds);
    const auto back = parse(out.str());
    REQUIRE(back.agent_count() == ds.agent_count());
    for (const auto& tr : ds.trajectories) {
        const auto it = std::find_if(back.trajectories.begin(), back.trajectories.end(),
                                     [&](const auto& b) { return b.agent_id == tr.agent_id; });
        REQUIRE(it != back.trajectories.end());
        CHECK(it->start_frame == tr.start_frame);
        for (std::size_t k = 0; k < tr.positions.size(); ++k) {
            CHECK(it->positions[k].x() == tr.positions[k].x());
            CHECK(it->positions[k].y() == tr.positions[k].y());
        }
    }
    std::ostringstream again;
    data::write_trajectories(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("split_endpoints projects first and last positions and commutes with permutation") {
    std::vector<data::Trajectory> trs(3);
    for (int i = 0; i < 3; ++i) {
        trs[static_cast<std::size_t>(i)].agent_id = i;
        trs[static_cast<std::size_t>(i)].positions = {Point(i, 0), Point(i, 1), Point(5 + i, 5)};
    }
    const auto ep = data::split_endpoints(data::make_dataset(trs));
    REQUIRE(ep.starts.size() == 3);
    CHECK(ep.ends.size() == 3);
    CHECK(ep.starts[2] == Point(2, 0));
    CHECK(ep.ends[2] == Point(7, 5));

    std::swap(trs[0], trs[2]);
    const auto perm = data::split_endpoints(data::make_dataset(trs));
    CHECK(perm.starts[0] == ep.starts[2]);
    CHECK(perm.ends[2] == ep.ends[0]);
}

TEST_CASE("split_endpoints of one trajectory (0,0)->(5,5)") {
    data::Trajectory tr;
    tr.positions = {Point(0, 0), Point(2, 2), Point(5, 5)};
    const auto ep = data::split_endpoints(data::make_dataset({tr}));
    CHECK(ep.starts == std::vector<Point>{Point(0, 0)});
    CHECK(ep.ends == std::vector<Point>{Point(5, 5)});
}

TEST_CASE("occupancy grids parse, count obstacles and report extent") {
    std::istringstream free_grid("2 2 1 0 0\n..\n..\n");
    CHECK(data::parse_occupancy(free_grid).obstacle_count() == 0);

    std::istringstream full("2 2 1 0 0\n##\n##\n");
    const auto m = data::parse_occupancy(full);
    for (double x : {0.1, 0.9, 1.5, 1.99})
        for (double y : {0.1, 1.0, 1.9}) CHECK(m.occupied(Point(x, y)));
    CHECK_FALSE(m.occupied(Point(-0.5, 0.5)));

    std::ostringstream ten;
    ten << "10 10 0.5 0 0\n";
    for (int r = 0; r < 10; ++r) ten << "..........\n";
    std::istringstream tin(ten.str());
    const auto big = data::parse_occupancy(tin);
    CHECK(big.extent().x() == doctest::Approx(5.0));
    CHECK(big.extent().y() == doctest::Approx(5.0));
}

TEST_CASE("occupancy grid errors") {
    const auto code = [](const std::string& text) {
        std::istringstream in(text);
        try {
            data::parse_occupancy(in);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::InvariantViolation;
    };
    CHECK(code("2 2\n..\n..\n") == Errc::MalformedGrid);
    CHECK(code("2 2 0 0 0\n..\n..\n") == Errc::MalformedGrid);
    CHECK(code("2 2 1 0 0\n.x\n..\n") == Errc::MalformedGrid);
    CHECK(code("2 2 1 0 0\n..\n") == Errc::DimensionMismatch);
    CHECK(code("2 2 1 0 0\n...\n..\n") == Errc::DimensionMismatch);
}

TEST_CASE("raycast stops at the first obstacle and caps at max range") {
    std::istringstream in("5 1 1 0 0\n...#.\n");
    const auto m = data::parse_occupancy(in);
    CHECK(m.raycast(Point(0.5, 0.5), 0.0, 10.0) == doctest::Approx(2.5));
    CHECK(m.raycast(Point(0.5, 0.5), 0.0, 2.0) == doctest::Approx(2.0));
    CHECK(m.raycast(Point(3.5, 0.5), 0.0, 10.0) == 0.0);
    CHECK(m.raycast(Point(0.5, 0.5), 3.14159265358979, 4.0) == doctest::Approx(4.0));
}

TEST_CASE("raycast agrees with fine marching on random grids") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        std::string text = "12 9 0.5 -2 -1\n";
        for (int r = 0; r < 9; ++r) {
            for (int c = 0; c < 12; ++c) text += uniform01(rng) < 0.15 ? '#' : '.';
            text += '\n';
        }
        std::istringstream in(text);
        const auto m = data::parse_occupancy(in);
        for (int k = 0; k < 20; ++k) {
            const Point from(uniform(rng, -3, 5), uniform(rng, -2, 4));
            const double angle = uniform(rng, 0, 6.283185307179586);
            const Point dir(std::cos(angle), std::sin(angle));
            double marched = 4.0;
            for (double d = 0; d < 4.0; d += 1e-4)
                if (m.occupied(from + d * dir)) {
                    marched = d;
                    break;
                }
            CHECK(m.raycast(from, angle, 4.0) == doctest::Approx(marched).epsilon(5e-4));
        }
    }
}
