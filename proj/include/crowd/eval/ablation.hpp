#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "crowd/data/occupancy.hpp"
#include "crowd/data/trajectory.hpp"
#include "crowd/eval/stats.hpp"
#include "crowd/policy/policy.hpp"
#include "crowd/sim/orchestrator.hpp"
#include "crowd/spatial/spatial_model.hpp"
#include "crowd/temporal/ntpp.hpp"
#include "json.hpp"

namespace crowd::eval {

struct AblationGrid {
    std::vector<double> windows = {100.0, 500.0, 1000.0};
    std::vector<double> overlaps = {5.0, 50.0};
    std::vector<int> n_rollouts = {1, 10};
    std::vector<double> rollout_lengths = {1000.0, 10000.0};

    std::size_t size() const { return windows.size() * overlaps.size() * n_rollouts.size() * rollout_lengths.size(); }
};

struct AblationOptions {
    AblationGrid grid;
    int samples = 5;
    double total_length = 10000.0;
    /// window/overlap are taken from the grid; the rest applies to every pair.
    temporal::NtppTrainOptions train;
    sim::SimConfig sim;
    std::uint64_t seed = 0;
    int jobs = 1;
    /// Trained models and finished cells are cached here and reused on rerun.
    std::optional<std::filesystem::path> work_dir;
};

/// Rollouts of length min(lRo, total/nRo), concatenated up to the total.
int effective_segments(int n_rollouts, double rollout_length, double total_length);

struct AblationCell {
    double window = 0.0;
    double overlap = 0.0;
    int n_rollouts = 0;
    double rollout_length = 0.0;
    int segments = 0;  // independent rollouts concatenated per sample
    std::vector<std::vector<std::int64_t>> agents_per_frame;  // one per sample
    Summary pooled;     // agents-per-frame over all samples
    double ks_gt = 0.0;       // pooled vs ground truth
    double ks_poisson = 0.0;  // pooled vs Poisson baseline
};

struct AblationReport {
    std::uint64_t seed = 0;
    double total_length = 0.0;
    int samples = 0;
    Summary ground_truth;
    Summary poisson;
    std::vector<AblationCell> cells;  // grid order: w, o, nRo, lRo

    /// Mean KS distance to the Poisson baseline over cells with this window.
    double mean_ks_poisson(double window) const;
};

/// Trains one temporal model per (w, o) and usable spawn, then simulates
/// `samples` scenes per cell with `policy` and compares agents-per-frame
/// distributions to the dataset and to the Poisson baseline.
AblationReport run_ablation(const data::TrajectoryDataset& dataset, const spatial::SpatialModel& spatial,
                            const policy::PolicySpec& policy, const AblationOptions& options,
                            const data::OccupancyMap* map = nullptr);

nlohmann::json to_json(const AblationReport& report);
nlohmann::json to_json(const AblationCell& cell);
AblationCell ablation_cell_from_json(const nlohmann::json& doc);

/// `w,o,nRo,lRo,segments,mean,two_std,ks_gt,ks_poisson`.
std::string ablation_table(const AblationReport& report);

}  // namespace crowd::eval
