#pragma once

#include <vector>

#include "crowd/data/trajectory.hpp"
#include "crowd/spatial/spatial_model.hpp"

namespace crowd::temporal {

/// Jitter added to a spawn time that collides with its predecessor.
inline constexpr double kDuplicateJitter = 0.5;
/// Gap used for an event sitting exactly on the window start.
inline constexpr double kMinLeadingGap = 0.5;

/// Strictly increasing spawn times (frames) of one spawn area over [0, horizon].
struct SpawnSequence {
    int spawn_id = 0;
    std::vector<double> times;
    double horizon = 0.0;

    bool empty() const { return times.empty(); }
    std::vector<double> inter_event_times() const;
};

/// Sort raw times and push each collision kDuplicateJitter past its predecessor.
SpawnSequence make_sequence(int spawn_id, std::vector<double> raw_times, double horizon);

/// One sequence per usable spawn area, built from the start frames of the
/// trajectories assigned to it. The horizon is the dataset frame count.
std::vector<SpawnSequence> extract_spawn_sequences(const data::TrajectoryDataset& dataset,
                                                   const spatial::SpatialModel& spatial);

/// Window [start, start + length) with event times relative to start.
struct TrainingWindow {
    double start = 0.0;
    double length = 0.0;
    std::vector<double> times;
    /// gaps[0] is measured from the window start (kMinLeadingGap if the event is on it).
    std::vector<double> gaps;
    /// length - last event (or length for an empty window).
    double tail_gap = 0.0;
};

TrainingWindow make_window(double start, double length, std::vector<double> relative_times);

/// Windows at 0, w-o, 2(w-o), ... while start + w <= horizon. Empty windows
/// are kept. Throws InvalidOverlap when o >= w, InvalidArgument when w > horizon.
std::vector<TrainingWindow> make_windows(const SpawnSequence& seq, double window, double overlap);

}  // namespace crowd::temporal
