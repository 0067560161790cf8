#include "crowd/data/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

#include "crowd/error.hpp"
#include "crowd/io.hpp"
#include "crowd/text.hpp"

namespace crowd::data {

namespace {

constexpr std::string_view kModule = "data-ingest";

struct Row {
    Frame frame;
    Point position;
};

[[noreturn]] void fail(Errc code, const std::string& msg) { throw Error(code, kModule, msg); }

}  // namespace

TrajectoryDataset make_dataset(std::vector<Trajectory> trajectories) {
    if (trajectories.empty()) fail(Errc::EmptyDataset, "dataset contains no trajectories");

    TrajectoryDataset ds;
    ds.bounds.min = Point::Constant(std::numeric_limits<double>::infinity());
    ds.bounds.max = Point::Constant(-std::numeric_limits<double>::infinity());
    for (const auto& tr : trajectories) {
        if (tr.positions.size() < 2) {
            fail(Errc::InvalidArgument,
                 "trajectory of agent " + std::to_string(tr.agent_id) + " has fewer than 2 positions");
        }
        if (tr.start_frame < 0) {
            fail(Errc::InvalidArgument, "trajectory of agent " + std::to_string(tr.agent_id) + " starts before frame 0");
        }
        for (const auto& p : tr.positions) {
            if (!p.allFinite()) {
                fail(Errc::InvalidArgument, "non-finite position for agent " + std::to_string(tr.agent_id));
            }
            ds.bounds.min = ds.bounds.min.cwiseMin(p);
            ds.bounds.max = ds.bounds.max.cwiseMax(p);
        }
        ds.frame_count = std::max(ds.frame_count, tr.end_frame() + 1);
    }
    ds.trajectories = std::move(trajectories);
    return ds;
}

TrajectoryDataset parse_trajectories(std::istream& in, const AffineTransform& transform, LoadReport* report) {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::map<std::int64_t, std::vector<Row>> rows_by_agent;
    LoadReport local;

    while (std::getline(in, line)) {
        ++line_no;
        const auto content = text::trim(line);
        if (content.empty()) continue;
        const auto fields = text::split(content, ',');
        if (!header_seen) {
            header_seen = true;
            if (fields.size() == 4 && fields[0] == "frame" && fields[1] == "agent_id" && fields[2] == "x" &&
                fields[3] == "y") {
                continue;
            }
            fail(Errc::MalformedRow, "line " + std::to_string(line_no) + ": expected header 'frame,agent_id,x,y'");
        }
        if (fields.size() != 4) {
            fail(Errc::MalformedRow, "line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                         std::to_string(fields.size()));
        }
        const auto frame = text::parse_number<std::int64_t>(fields[0]);
        const auto agent = text::parse_number<std::int64_t>(fields[1]);
        const auto x = text::parse_number<double>(fields[2]);
        const auto y = text::parse_number<double>(fields[3]);
        if (!frame || !agent || !x || !y || *frame < 0 || *agent < 0 || !std::isfinite(*x) || !std::isfinite(*y)) {
            fail(Errc::MalformedRow, "line " + std::to_string(line_no) + ": non-numeric or out-of-range field");
        }
        rows_by_agent[*agent].push_back({*frame, transform.apply(Point(*x, *y))});
        ++local.rows;
    }

    std::vector<Trajectory> trajectories;
    trajectories.reserve(rows_by_agent.size());
    for (auto& [agent, rows] : rows_by_agent) {
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.frame < b.frame; });
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].frame == rows[i - 1].frame) {
                fail(Errc::NonMonotonicFrames,
                     "agent " + std::to_string(agent) + " has duplicate frame " + std::to_string(rows[i].frame));
            }
        }
        if (rows.size() < 2) {
            ++local.dropped_single_row_agents;
            continue;
        }
        Trajectory tr;
        tr.agent_id = agent;
        tr.start_frame = rows.front().frame;
        tr.positions.reserve(static_cast<std::size_t>(rows.back().frame - rows.front().frame + 1));
        tr.positions.push_back(rows.front().position);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto gap = rows[i].frame - rows[i - 1].frame;
            for (Frame k = 1; k < gap; ++k) {
                const double a = static_cast<double>(k) / static_cast<double>(gap);
                tr.positions.push_back((1.0 - a) * rows[i - 1].position + a * rows[i].position);
                ++local.interpolated_frames;
            }
            tr.positions.push_back(rows[i].position);
        }
        trajectories.push_back(std::move(tr));
    }

    if (trajectories.empty()) fail(Errc::EmptyDataset, "no trajectories with at least two rows");
    if (report) *report = local;
    return make_dataset(std::move(trajectories));
}

TrajectoryDataset load_trajectories(const std::filesystem::path& path, const AffineTransform& transform,
                                    LoadReport* report) {
    std::ifstream in(path);
    if (!in) fail(Errc::InvalidArgument, "cannot open " + path.string());
    return parse_trajectories(in, transform, report);
}

void write_trajectories(std::ostream& out, const TrajectoryDataset& dataset) {
    struct Item {
        Frame frame;
        std::int64_t agent;
        const Point* p;
    };
    std::vector<Item> items;
    for (const auto& tr : dataset.trajectories) {
        for (std::size_t i = 0; i < tr.positions.size(); ++i) {
            items.push_back({tr.start_frame + static_cast<Frame>(i), tr.agent_id, &tr.positions[i]});
        }
    }
    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return std::tie(a.frame, a.agent) < std::tie(b.frame, b.agent); });
    out << "frame,agent_id,x,y\n";
    for (const auto& it : items) {
        out << it.frame << ',' << it.agent << ',' << text::format_double((*it.p)[0]) << ','
            << text::format_double((*it.p)[1]) << '\n';
    }
}

void save_trajectories(const std::filesystem::path& path, const TrajectoryDataset& dataset) {
    std::ostringstream out;
    write_trajectories(out, dataset);
    io::write_text_atomic(path, out.str());
}

Endpoints split_endpoints(const TrajectoryDataset& dataset) {
    Endpoints ep;
    ep.starts.reserve(dataset.trajectories.size());
    ep.ends.reserve(dataset.trajectories.size());
    for (const auto& tr : dataset.trajectories) {
        ep.starts.push_back(tr.start());
        ep.ends.push_back(tr.end());
    }
    return ep;
}

}  // namespace crowd::data
