#include "crowd/temporal/sequence.hpp"

#include <algorithm>

#include "crowd/error.hpp"

namespace crowd::temporal {

namespace {
constexpr std::string_view kModule = "temporal-model";
}

std::vector<double> SpawnSequence::inter_event_times() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < times.size(); ++i) out.push_back(times[i] - times[i - 1]);
    return out;
}

SpawnSequence make_sequence(int spawn_id, std::vector<double> raw_times, double horizon) {
    std::sort(raw_times.begin(), raw_times.end());
    for (std::size_t i = 1; i < raw_times.size(); ++i) {
        if (raw_times[i] <= raw_times[i - 1]) raw_times[i] = raw_times[i - 1] + kDuplicateJitter;
    }
    SpawnSequence seq;
    seq.spawn_id = spawn_id;
    seq.horizon = raw_times.empty() ? horizon : std::max(horizon, raw_times.back());
    seq.times = std::move(raw_times);
    return seq;
}

std::vector<SpawnSequence> extract_spawn_sequences(const data::TrajectoryDataset& dataset,
                                                   const spatial::SpatialModel& spatial) {
    if (spatial.spawn_labels.size() != dataset.trajectories.size()) {
        throw Error(Errc::DimensionMismatch, kModule, "spatial model was built from a different dataset");
    }
    std::vector<std::vector<double>> raw(spatial.spawn_areas.size());
    for (std::size_t i = 0; i < dataset.trajectories.size(); ++i) {
        const int s = spatial.spawn_labels[i];
        if (s >= 0) raw[static_cast<std::size_t>(s)].push_back(static_cast<double>(dataset.trajectories[i].start_frame));
    }
    std::vector<SpawnSequence> out;
    for (int s : spatial.usable_spawns()) {
        out.push_back(make_sequence(s, std::move(raw[static_cast<std::size_t>(s)]), static_cast<double>(dataset.frame_count)));
    }
    return out;
}

TrainingWindow make_window(double start, double length, std::vector<double> relative_times) {
    TrainingWindow w;
    w.start = start;
    w.length = length;
    double prev = 0.0;
    for (double t : relative_times) {
        w.gaps.push_back(w.gaps.empty() && t <= 0.0 ? kMinLeadingGap : t - prev);
        prev = t;
    }
    w.tail_gap = length - prev;
    w.times = std::move(relative_times);
    return w;
}

std::vector<TrainingWindow> make_windows(const SpawnSequence& seq, double window, double overlap) {
    if (overlap >= window) throw Error(Errc::InvalidOverlap, kModule, "overlap must be smaller than the window");
    if (overlap < 0.0 || window <= 0.0) throw Error(Errc::InvalidArgument, kModule, "window and overlap must be non-negative");
    if (window > seq.horizon) throw Error(Errc::InvalidArgument, kModule, "window longer than the sequence horizon");

    const double stride = window - overlap;
    std::vector<TrainingWindow> out;
    for (double start = 0.0; start + window <= seq.horizon; start += stride) {
        const auto first = std::lower_bound(seq.times.begin(), seq.times.end(), start);
        const auto last = std::lower_bound(first, seq.times.end(), start + window);
        std::vector<double> rel;
        rel.reserve(static_cast<std::size_t>(last - first));
        for (auto it = first; it != last; ++it) rel.push_back(*it - start);
        out.push_back(make_window(start, window, std::move(rel)));
    }
    return out;
}

}  // namespace crowd::temporal
