#include "crowd/eval/ablation.hpp"

#include <cmath>
#include <sstream>

#include "crowd/error.hpp"
#include "crowd/io.hpp"
#include "crowd/parallel.hpp"
#include "crowd/random.hpp"
#include "crowd/temporal/sequence.hpp"
#include "crowd/text.hpp"

namespace crowd::eval {

namespace {

constexpr std::string_view kModule = "eval-metrics";

using Series = std::vector<std::int64_t>;

std::vector<double> as_doubles(const std::vector<Series>& all) {
    std::vector<double> out;
    for (const auto& s : all) out.insert(out.end(), s.begin(), s.end());
    return out;
}

Series simulate_sample(const spatial::SpatialModel& spatial, const std::vector<temporal::TemporalModel>& models,
                       const policy::PolicySpec& policy, const AblationOptions& options, int segments,
                       std::uint64_t seed, const data::OccupancyMap* map) {
    auto pending = sim::schedule(spatial, models, options.total_length, segments, seed, map);
    sim::SimConfig config = options.sim;
    config.length = static_cast<data::Frame>(std::ceil(options.total_length));
    config.policy_seed = derive_seed(seed, Stream::Policy);
    const auto log = sim::simulate(std::move(pending), policy, config, map);
    if (log.agents.empty()) return Series(static_cast<std::size_t>(config.length), 0);
    return compute_stats(log).agents_per_frame;
}

std::string model_file(double w, double o, int spawn_id, std::uint64_t seed) {
    return "model_w" + text::format_double(w) + "_o" + text::format_double(o) + "_s" + std::to_string(spawn_id) + "_seed" +
           std::to_string(seed) + ".json";
}

nlohmann::json summary_json(const Summary& s) { return {{"mean", s.mean}, {"two_std", 2.0 * s.std}}; }

}  // namespace

int effective_segments(int n_rollouts, double rollout_length, double total_length) {
    if (n_rollouts < 1 || !(rollout_length > 0.0) || !(total_length > 0.0))
        throw Error(Errc::InvalidArgument, kModule, "rollout counts and lengths must be positive");
    const double segment = std::min(rollout_length, total_length / static_cast<double>(n_rollouts));
    return static_cast<int>(std::ceil(total_length / segment - 1e-9));
}

double AblationReport::mean_ks_poisson(double window) const {
    double total = 0.0;
    int n = 0;
    for (const auto& c : cells) {
        if (c.window == window) {
            total += c.ks_poisson;
            ++n;
        }
    }
    return n ? total / n : 0.0;
}

AblationReport run_ablation(const data::TrajectoryDataset& dataset, const spatial::SpatialModel& spatial,
                            const policy::PolicySpec& policy, const AblationOptions& options,
                            const data::OccupancyMap* map) {
    if (options.samples < 1) throw Error(Errc::ConfigInvalid, kModule, "samples must be >= 1");
    if (options.grid.size() == 0) throw Error(Errc::ConfigInvalid, kModule, "ablation grid is empty");
    const auto sequences = temporal::extract_spawn_sequences(dataset, spatial);
    if (sequences.empty()) throw Error(Errc::UnusableSpawn, kModule, "dataset has no usable spawn");
    const auto& g = options.grid;
    if (options.work_dir) {
        std::filesystem::create_directories(*options.work_dir / "models");
        std::filesystem::create_directories(*options.work_dir / "cells");
    }

    // One model set per (w, o), trained once and shared by the rollout cells.
    struct Pair {
        double w, o;
    };
    std::vector<Pair> pairs;
    for (double w : g.windows)
        for (double o : g.overlaps) pairs.push_back({w, o});
    const std::size_t n_spawns = sequences.size();
    std::vector<std::optional<temporal::NtppModel>> trained(pairs.size() * n_spawns);
    parallel_for(trained.size(), options.jobs, [&](std::size_t k) {
        const auto& pair = pairs[k / n_spawns];
        const auto& seq = sequences[k % n_spawns];
        std::optional<std::filesystem::path> cache;
        if (options.work_dir) cache = *options.work_dir / "models" / model_file(pair.w, pair.o, seq.spawn_id, options.seed);
        if (cache && std::filesystem::exists(*cache)) {
            trained[k] = temporal::ntpp_from_json(io::read_json(*cache));
            return;
        }
        auto train = options.train;
        train.window = pair.w;
        train.overlap = pair.o;
        train.seed = derive_seed(derive_seed(options.seed, Stream::Training), k);
        trained[k] = temporal::train_ntpp(seq, train);
        if (cache) io::write_json(*cache, temporal::to_json(*trained[k]));
    });

    AblationReport report;
    report.seed = options.seed;
    report.total_length = options.total_length;
    report.samples = options.samples;

    const auto gt = compute_stats(dataset).agents_per_frame;
    const std::vector<double> gt_values(gt.begin(), gt.end());
    report.ground_truth = summarize(gt_values);

    std::vector<temporal::TemporalModel> poisson_models;
    for (const auto& seq : sequences) poisson_models.emplace_back(temporal::fit_poisson(seq));
    std::vector<Series> poisson_samples(static_cast<std::size_t>(options.samples));
    parallel_for(poisson_samples.size(), options.jobs, [&](std::size_t s) {
        poisson_samples[s] = simulate_sample(spatial, poisson_models, policy, options, 1,
                                             derive_seed(derive_seed(options.seed, Stream::Split), s), map);
    });
    const auto poisson_values = as_doubles(poisson_samples);
    report.poisson = summarize(poisson_values);

    struct Key {
        std::size_t pair;
        int nro;
        double lro;
    };
    std::vector<Key> keys;
    for (std::size_t p = 0; p < pairs.size(); ++p)
        for (int nro : g.n_rollouts)
            for (double lro : g.rollout_lengths) keys.push_back({p, nro, lro});

    report.cells.resize(keys.size());
    parallel_for(keys.size(), options.jobs, [&](std::size_t c) {
        const auto& key = keys[c];
        const auto cell_seed = derive_seed(derive_seed(options.seed, Stream::Temporal), c);
        std::optional<std::filesystem::path> cache;
        if (options.work_dir) cache = *options.work_dir / "cells" / ("cell_" + std::to_string(c) + ".json");
        if (cache && std::filesystem::exists(*cache)) {
            const auto doc = io::read_json(*cache);
            auto cell = ablation_cell_from_json(doc);
            if (doc.value("seed", std::uint64_t{0}) == cell_seed && cell.window == pairs[key.pair].w &&
                cell.overlap == pairs[key.pair].o && cell.n_rollouts == key.nro && cell.rollout_length == key.lro &&
                static_cast<int>(cell.agents_per_frame.size()) == options.samples) {
                report.cells[c] = std::move(cell);
                return;
            }
        }
        AblationCell cell;
        cell.window = pairs[key.pair].w;
        cell.overlap = pairs[key.pair].o;
        cell.n_rollouts = key.nro;
        cell.rollout_length = key.lro;
        cell.segments = effective_segments(key.nro, key.lro, options.total_length);
        std::vector<temporal::TemporalModel> models;
        for (std::size_t s = 0; s < n_spawns; ++s) models.emplace_back(*trained[key.pair * n_spawns + s]);
        for (int k = 0; k < options.samples; ++k) {
            cell.agents_per_frame.push_back(simulate_sample(spatial, models, policy, options, cell.segments,
                                                            derive_seed(cell_seed, static_cast<std::uint64_t>(k)), map));
        }
        const auto values = as_doubles(cell.agents_per_frame);
        cell.pooled = summarize(values);
        cell.ks_gt = ks_distance(std::span<const double>(values), std::span<const double>(gt_values));
        cell.ks_poisson = ks_distance(std::span<const double>(values), std::span<const double>(poisson_values));
        if (cache) {
            auto doc = to_json(cell);
            doc["seed"] = cell_seed;
            io::write_json(*cache, doc);
        }
        report.cells[c] = std::move(cell);
    });
    return report;
}

nlohmann::json to_json(const AblationCell& c) {
    return {{"w", c.window},
            {"o", c.overlap},
            {"nRo", c.n_rollouts},
            {"lRo", c.rollout_length},
            {"segments", c.segments},
            {"agents_per_frame", c.agents_per_frame},
            {"mean", c.pooled.mean},
            {"std", c.pooled.std},
            {"ks_gt", c.ks_gt},
            {"ks_poisson", c.ks_poisson}};
}

AblationCell ablation_cell_from_json(const nlohmann::json& doc) {
    try {
        AblationCell c;
        c.window = doc.at("w").get<double>();
        c.overlap = doc.at("o").get<double>();
        c.n_rollouts = doc.at("nRo").get<int>();
        c.rollout_length = doc.at("lRo").get<double>();
        c.segments = doc.at("segments").get<int>();
        c.agents_per_frame = doc.at("agents_per_frame").get<std::vector<Series>>();
        c.pooled = {doc.at("mean").get<double>(), doc.at("std").get<double>()};
        c.ks_gt = doc.at("ks_gt").get<double>();
        c.ks_poisson = doc.at("ks_poisson").get<double>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ModelLoadFailure, kModule, e.what());
    }
}

nlohmann::json to_json(const AblationReport& r) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        auto doc = to_json(c);
        doc.erase("agents_per_frame");
        nlohmann::json samples = nlohmann::json::array();
        for (const auto& s : c.agents_per_frame) {
            const std::vector<double> v(s.begin(), s.end());
            samples.push_back(summary_json(summarize(v)));
        }
        doc["samples"] = samples;
        doc["two_std"] = 2.0 * c.pooled.std;
        cells.push_back(doc);
    }
    nlohmann::json windows = nlohmann::json::object();
    std::vector<double> seen;
    for (const auto& c : r.cells) {
        if (std::find(seen.begin(), seen.end(), c.window) != seen.end()) continue;
        seen.push_back(c.window);
        windows[text::format_double(c.window)] = r.mean_ks_poisson(c.window);
    }
    return {{"format", "crowd-ablation/1"},
            {"seed", r.seed},
            {"total_length", r.total_length},
            {"samples", r.samples},
            {"grid_size", r.cells.size()},
            {"ground_truth", summary_json(r.ground_truth)},
            {"poisson_gmm", summary_json(r.poisson)},
            {"mean_ks_poisson_by_window", windows},
            {"cells", cells}};
}

std::string ablation_table(const AblationReport& r) {
    std::ostringstream out;
    out << "w,o,nRo,lRo,segments,mean,two_std,ks_gt,ks_poisson\n";
    for (const auto& c : r.cells) {
        out << text::format_double(c.window) << ',' << text::format_double(c.overlap) << ',' << c.n_rollouts << ','
            << text::format_double(c.rollout_length) << ',' << c.segments << ',' << text::format_double(c.pooled.mean)
            << ',' << text::format_double(2.0 * c.pooled.std) << ',' << text::format_double(c.ks_gt) << ','
            << text::format_double(c.ks_poisson) << '\n';
    }
    return out.str();
}

}  // namespace crowd::eval
