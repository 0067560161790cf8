#include "commands.hpp"

#include <iostream>
#include <sstream>

#include "crowd/data/occupancy.hpp"
#include "crowd/error.hpp"
#include "crowd/eval/ablation.hpp"
#include "crowd/eval/flow.hpp"
#include "crowd/eval/stats.hpp"
#include "crowd/io.hpp"
#include "crowd/random.hpp"
#include "crowd/temporal/sequence.hpp"
#include "crowd/text.hpp"

namespace crowdorch {

namespace {

using crowd::Errc;
using crowd::Error;
using nlohmann::json;
namespace data = crowd::data;
namespace spatial = crowd::spatial;
namespace temporal = crowd::temporal;
namespace policy = crowd::policy;
namespace sim = crowd::sim;
namespace eval = crowd::eval;

constexpr std::string_view kModule = "cli";

fs::path dataset_file(const RunConfig& c) { return c.output / "dataset.csv"; }
fs::path models_dir(const RunConfig& c) { return c.output / "models"; }
fs::path fit_manifest_file(const RunConfig& c) { return c.output / "fit_manifest.json"; }

json manifest(const std::string& command, const RunConfig& c, json outputs) {
    return {{"command", command}, {"seed", c.seed}, {"config", to_json(c)}, {"outputs", std::move(outputs)}};
}

void require_file(const fs::path& p, const std::string& hint) {
    if (!fs::exists(p)) throw Error(Errc::ModelLoadFailure, kModule, p.generic_string() + " not found; " + hint);
}

std::optional<data::OccupancyMap> load_map(const RunConfig& c) {
    if (!c.map) return std::nullopt;
    return data::load_occupancy(*c.map);
}

data::TrajectoryDataset load_canonical(const RunConfig& c) {
    require_file(dataset_file(c), "run ingest first");
    return data::load_trajectories(dataset_file(c));
}

/// Everything `fit` writes, loaded back.
struct Fitted {
    spatial::SpatialModel spatial;
    std::vector<temporal::TemporalModel> ntpp;
    std::vector<temporal::TemporalModel> poisson;
    policy::PolicySpec policy;
};

Fitted load_fitted(const RunConfig& c) {
    require_file(fit_manifest_file(c), "run fit first");
    Fitted f;
    try {
        const auto doc = crowd::io::read_json(fit_manifest_file(c));
        const auto& out = doc.at("outputs");
        f.spatial = spatial::spatial_model_from_json(crowd::io::read_json(c.output / out.at("spatial").get<std::string>()));
        for (const auto& t : out.at("temporal")) {
            f.ntpp.emplace_back(temporal::ntpp_from_json(crowd::io::read_json(c.output / t.at("ntpp").get<std::string>())));
            f.poisson.emplace_back(
                temporal::poisson_from_json(crowd::io::read_json(c.output / t.at("poisson").get<std::string>())));
        }
        f.policy = policy::policy_from_json(crowd::io::read_json(c.output / out.at("policy").get<std::string>()));
    } catch (const json::exception& e) {
        throw Error(Errc::ModelLoadFailure, kModule, std::string("fit manifest: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::ModelLoadFailure) throw;
        throw Error(Errc::ModelLoadFailure, kModule, e.what());
    }
    return f;
}

sim::SimConfig sim_config(const RunConfig& c) {
    auto s = c.sim;
    s.length = static_cast<data::Frame>(std::ceil(c.length));
    s.policy_seed = crowd::derive_seed(c.seed, crowd::Stream::Policy);
    return s;
}

sim::SimulationLog run_simulation(const RunConfig& c, const Fitted& f, bool poisson, const data::OccupancyMap* map) {
    const auto& models = poisson ? f.poisson : f.ntpp;
    auto pending = sim::schedule(f.spatial, models, c.length, c.n_rollouts,
                                 crowd::derive_seed(c.seed, crowd::Stream::Temporal), map);
    auto log = sim::simulate(std::move(pending), f.policy, sim_config(c), map);
    sim::check_log(log);
    return log;
}

std::string join_csv(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    return out + "\n";
}

std::string values_table(const std::vector<std::pair<std::string, const std::vector<double>*>>& columns) {
    std::ostringstream out;
    out << "source,value\n";
    for (const auto& [name, values] : columns) {
        for (double v : *values) out << name << ',' << crowd::text::format_double(v) << '\n';
    }
    return out.str();
}

template <typename T>
std::string aligned_table(const std::string& index, const std::vector<std::pair<std::string, const std::vector<T>*>>& cols) {
    std::size_t rows = 0;
    std::vector<std::string> header{index};
    for (const auto& [name, v] : cols) {
        rows = std::max(rows, v->size());
        header.push_back(name);
    }
    std::string out = join_csv(header);
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<std::string> line{std::to_string(r)};
        for (const auto& [name, v] : cols) line.push_back(r < v->size() ? std::to_string((*v)[r]) : "");
        out += join_csv(line);
    }
    return out;
}

double ks(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return std::numeric_limits<double>::quiet_NaN();
    return eval::ks_distance(std::span<const double>(a), std::span<const double>(b));
}

double ks(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
    return eval::ks_distance(std::span<const std::int64_t>(a), std::span<const std::int64_t>(b));
}

json nan_to_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

int run_ingest(const RunConfig& c) {
    if (!c.dataset) throw Error(Errc::ConfigInvalid, kModule, "dataset.path is required for ingest");
    if (!fs::exists(*c.dataset)) throw Error(Errc::ConfigInvalid, kModule, "dataset not found: " + c.dataset->generic_string());
    data::LoadReport report;
    const auto ds = data::load_trajectories(*c.dataset, c.transform, &report);
    const json summary{{"frames", ds.frame_count},
                       {"agents", ds.agent_count()},
                       {"rows", report.rows},
                       {"interpolated_frames", report.interpolated_frames},
                       {"dropped_single_row_agents", report.dropped_single_row_agents},
                       {"bounds", {{"min", {ds.bounds.min.x(), ds.bounds.min.y()}}, {"max", {ds.bounds.max.x(), ds.bounds.max.y()}}}}};
    data::save_trajectories(dataset_file(c), ds);
    crowd::io::write_json(c.output / "ingest.json", summary);
    crowd::io::write_json(c.output / "ingest_manifest.json", manifest("ingest", c, {{"dataset", "dataset.csv"}, {"summary", "ingest.json"}}));
    std::cout << "frames " << ds.frame_count << " agents " << ds.agent_count() << "\n";
    return 0;
}

int run_fit(const RunConfig& c) {
    const auto ds = load_canonical(c);
    const auto map = load_map(c);
    const auto sp = spatial::fit_spatial_model(ds, c.spawn_clusters, c.goal_clusters);
    const auto sequences = temporal::extract_spawn_sequences(ds, sp);

    struct Trained {
        int spawn_id;
        temporal::NtppModel ntpp;
        temporal::PoissonModel poisson;
        temporal::NtppTrainReport report;
    };
    std::vector<Trained> trained;
    for (const auto& seq : sequences) {
        auto opts = c.ntpp;
        opts.seed = crowd::derive_seed(crowd::derive_seed(c.seed, crowd::Stream::Training),
                                       static_cast<std::uint64_t>(seq.spawn_id));
        temporal::NtppTrainReport report;
        auto model = temporal::train_ntpp(seq, opts, &report);
        trained.push_back({seq.spawn_id, std::move(model), temporal::fit_poisson(seq), std::move(report)});
        std::cout << "spawn " << seq.spawn_id << ": " << seq.times.size() << " events, best epoch " << trained.back().report.best_epoch
                  << ", loss " << trained.back().report.best_loss << "\n";
    }

    policy::PolicySpec pol;
    json policy_report = nullptr;
    if (c.policy.kind == policy::PolicyKind::Cloned) {
        policy::BcOptions bc;
        bc.epochs = c.policy.epochs;
        bc.lr = c.policy.lr;
        bc.seed = crowd::derive_seed(c.seed, crowd::Stream::Policy);
        bc.batch_size = c.policy.batch_size;
        bc.validation_fraction = c.policy.validation_fraction;
        bc.v_max = c.policy.v_max / c.policy.frame_rate;
        bc.rays = c.policy.rays;
        policy::BcReport report;
        pol = policy::train_bc(policy::build_demonstrations(ds, c.policy.rays, map ? &*map : nullptr), bc, &report);
        policy_report = {{"best_epoch", report.best_epoch}, {"best_validation_mse", report.best_validation_mse}};
        std::cout << "policy: validation mse " << report.best_validation_mse << "\n";
    } else {
        pol = policy::scripted_policy(c.policy.v_max / c.policy.frame_rate, c.policy.rays);
    }

    // Everything is computed before the first write.
    crowd::io::write_json(models_dir(c) / "spatial.json", spatial::to_json(sp));
    json temporal_entries = json::array();
    for (const auto& t : trained) {
        const std::string ntpp_name = "models/ntpp_s" + std::to_string(t.spawn_id) + ".json";
        const std::string poisson_name = "models/poisson_s" + std::to_string(t.spawn_id) + ".json";
        crowd::io::write_json(c.output / ntpp_name, temporal::to_json(t.ntpp));
        crowd::io::write_json(c.output / poisson_name, temporal::to_json(t.poisson));
        temporal_entries.push_back({{"spawn_id", t.spawn_id},
                                    {"ntpp", ntpp_name},
                                    {"poisson", poisson_name},
                                    {"window", c.ntpp.window},
                                    {"overlap", c.ntpp.overlap},
                                    {"best_epoch", t.report.best_epoch},
                                    {"best_loss", t.report.best_loss},
                                    {"epochs_run", t.report.epoch_loss.size()},
                                    {"early_stopped", t.report.early_stopped}});
    }
    crowd::io::write_json(models_dir(c) / "policy.json", policy::to_json(pol));
    crowd::io::write_json(fit_manifest_file(c), manifest("fit", c,
                                                         {{"spatial", "models/spatial.json"},
                                                          {"temporal", temporal_entries},
                                                          {"policy", "models/policy.json"},
                                                          {"policy_training", policy_report}}));
    std::cout << "spawn areas " << sp.spawn_areas.size() << " (usable " << sp.usable_spawns().size() << "), goal areas "
              << sp.goal_areas.size() << "\n";
    return 0;
}

int run_simulate(const RunConfig& c) {
    const auto fitted = load_fitted(c);
    const auto map = load_map(c);
    const bool poisson = c.poisson_baseline;
    const auto log = run_simulation(c, fitted, poisson, map ? &*map : nullptr);
    const auto& last = log.counts.back();
    std::cout << "conservation ok: spawned " << last.spawned << " = active " << last.active << " + exited " << last.exited
              << " + timed_out " << last.timed_out << "\n";

    const fs::path dir = c.output / (poisson ? "simulate_poisson" : "simulate_ntpp");
    sim::save_log(dir / "log.csv", dir / "summary.json", log);
    if (!log.agents.empty()) {
        const auto stats = eval::compute_stats(log);
        crowd::io::write_json(dir / "stats.json", eval::to_json(stats));
        crowd::io::write_text_atomic(dir / "agents_per_frame.csv", eval::agents_per_frame_table(stats));
        eval::flow_export(log, dir / "flows");
    }
    crowd::io::write_json(dir / "manifest.json",
                          manifest("simulate", c, {{"log", "log.csv"}, {"summary", "summary.json"}, {"stats", "stats.json"}, {"flows", "flows/index.json"}}));
    return 0;
}

int run_evaluate(const RunConfig& c) {
    const auto ds = load_canonical(c);
    const auto fitted = load_fitted(c);
    const auto map = load_map(c);
    const auto* m = map ? &*map : nullptr;

    const auto& labels = fitted.spatial.spawn_labels;
    std::vector<int> spawn_ids(labels.begin(), labels.end());
    if (spawn_ids.size() != ds.trajectories.size()) throw Error(Errc::DimensionMismatch, kModule, "spatial model does not match dataset");
    const auto gt = eval::compute_stats(ds, spawn_ids);
    const auto replayed = eval::compute_stats(sim::replay(ds, spawn_ids));
    if (eval::to_json(gt) != eval::to_json(replayed))
        throw Error(Errc::InvariantViolation, kModule, "dataset and replayed log disagree on crowd statistics");

    const auto ntpp_log = run_simulation(c, fitted, false, m);
    const auto poisson_log = run_simulation(c, fitted, true, m);
    if (ntpp_log.agents.empty() || poisson_log.agents.empty())
        throw Error(Errc::EmptySample, kModule, "a simulation spawned no agents");
    const auto ntpp = eval::compute_stats(ntpp_log);
    const auto pois = eval::compute_stats(poisson_log);

    json ks_table = json::array();
    std::string ks_csv = "statistic,gt_vs_ntpp,gt_vs_poisson,ntpp_vs_poisson\n";
    const auto add = [&](const std::string& name, double a, double b, double d) {
        ks_table.push_back({{"statistic", name}, {"gt_vs_ntpp", nan_to_null(a)}, {"gt_vs_poisson", nan_to_null(b)}, {"ntpp_vs_poisson", nan_to_null(d)}});
        const auto f = [](double v) { return std::isnan(v) ? std::string() : crowd::text::format_double(v); };
        ks_csv += join_csv({name, f(a), f(b), f(d)});
    };
    add("agents_per_frame", ks(gt.agents_per_frame, ntpp.agents_per_frame), ks(gt.agents_per_frame, pois.agents_per_frame),
        ks(ntpp.agents_per_frame, pois.agents_per_frame));
    add("inter_spawn_times", ks(gt.inter_spawn_times, ntpp.inter_spawn_times), ks(gt.inter_spawn_times, pois.inter_spawn_times),
        ks(ntpp.inter_spawn_times, pois.inter_spawn_times));
    add("spawns_per_window", ks(gt.spawns_per_window, ntpp.spawns_per_window),
        ks(gt.spawns_per_window, pois.spawns_per_window), ks(ntpp.spawns_per_window, pois.spawns_per_window));
    add("time_in_scene", ks(gt.time_in_scene, ntpp.time_in_scene), ks(gt.time_in_scene, pois.time_in_scene),
        ks(ntpp.time_in_scene, pois.time_in_scene));

    const auto summary = [](const auto& values) {
        const std::vector<double> v(values.begin(), values.end());
        const auto s = eval::summarize(v);
        return json{{"count", v.size()}, {"mean", s.mean}, {"std", s.std}};
    };
    json sources = json::object();
    for (const auto& [name, s] : {std::pair{"gt", &gt}, std::pair{"ntpp", &ntpp}, std::pair{"poisson", &pois}}) {
        sources[name] = {{"agents_per_frame", summary(s->agents_per_frame)},
                         {"inter_spawn_times", summary(s->inter_spawn_times)},
                         {"spawns_per_window", summary(s->spawns_per_window)},
                         {"time_in_scene", summary(s->time_in_scene)}};
    }
    const auto timed_out = [](const sim::SimulationLog& log) { return log.counts.back().timed_out; };

    const fs::path dir = c.output / "evaluate";
    crowd::io::write_text_atomic(dir / "agents_per_frame.csv",
                                 aligned_table<std::int64_t>("frame", {{"gt", &gt.agents_per_frame}, {"ntpp", &ntpp.agents_per_frame}, {"poisson", &pois.agents_per_frame}}));
    crowd::io::write_text_atomic(dir / "spawns_per_window.csv",
                                 aligned_table<std::int64_t>("bin", {{"gt", &gt.spawns_per_window}, {"ntpp", &ntpp.spawns_per_window}, {"poisson", &pois.spawns_per_window}}));
    crowd::io::write_text_atomic(dir / "inter_spawn_times.csv",
                                 values_table({{"gt", &gt.inter_spawn_times}, {"ntpp", &ntpp.inter_spawn_times}, {"poisson", &pois.inter_spawn_times}}));
    crowd::io::write_text_atomic(dir / "time_in_scene.csv",
                                 values_table({{"gt", &gt.time_in_scene}, {"ntpp", &ntpp.time_in_scene}, {"poisson", &pois.time_in_scene}}));
    crowd::io::write_text_atomic(dir / "ks.csv", ks_csv);
    eval::flow_export(ntpp_log, dir / "flows_ntpp");
    crowd::io::write_json(dir / "report.json", {{"ks", ks_table},
                                                {"summary", sources},
                                                {"timed_out", {{"ntpp", timed_out(ntpp_log)}, {"poisson", timed_out(poisson_log)}}},
                                                {"invariants", {{"conservation", true}, {"replay_identity", true}}},
                                                {"warm_up_note", "simulations start empty; ground truth may hold agents at frame 0"}});
    crowd::io::write_json(dir / "manifest.json", manifest("evaluate", c, {{"report", "report.json"}, {"ks", "ks.csv"}}));
    std::cout << ks_csv;
    return 0;
}

int run_ablate(const RunConfig& c) {
    const auto ds = load_canonical(c);
    const auto fitted = load_fitted(c);
    const auto map = load_map(c);
    auto opts = c.ablation;
    const fs::path dir = c.output / "ablation";
    opts.work_dir = dir / "work";
    const auto report = eval::run_ablation(ds, fitted.spatial, fitted.policy, opts, map ? &*map : nullptr);
    if (report.cells.size() != opts.grid.size())
        throw Error(Errc::InvariantViolation, kModule, "ablation grid is incomplete");
    for (const auto& cell : report.cells) {
        if (static_cast<int>(cell.agents_per_frame.size()) != opts.samples)
            throw Error(Errc::InvariantViolation, kModule, "ablation cell has the wrong sample count");
    }
    auto doc = eval::to_json(report);
    if (std::find(opts.grid.windows.begin(), opts.grid.windows.end(), 100.0) != opts.grid.windows.end() &&
        std::find(opts.grid.windows.begin(), opts.grid.windows.end(), 1000.0) != opts.grid.windows.end()) {
        const double short_w = report.mean_ks_poisson(100.0);
        const double long_w = report.mean_ks_poisson(1000.0);
        doc["short_window_closer_to_poisson"] = short_w < long_w;
        std::cout << "mean KS to Poisson-GMM: w=100 " << short_w << ", w=1000 " << long_w << "\n";
    }
    crowd::io::write_json(dir / "report.json", doc);
    crowd::io::write_text_atomic(dir / "table.csv", eval::ablation_table(report));
    crowd::io::write_json(dir / "manifest.json", manifest("ablate", c, {{"report", "report.json"}, {"table", "table.csv"}}));
    std::cout << "cells " << report.cells.size() << ", samples per cell " << report.samples << "\n";
    return 0;
}

int run_synth(const RunConfig& c) {
    const auto scene = crowd::synth::generate(c.synth);
    const fs::path dir = c.output / "synth";
    data::save_trajectories(dir / "dataset.csv", scene.dataset);
    auto sidecar = crowd::synth::to_json(scene.spec);
    sidecar["events"] = scene.event_times.size();
    sidecar["event_times"] = scene.event_times;
    sidecar["route_of"] = scene.route_of;
    crowd::io::write_json(dir / "scene.json", sidecar);
    crowd::io::write_json(dir / "manifest.json", manifest("synth", c, {{"dataset", "dataset.csv"}, {"sidecar", "scene.json"}}));
    std::cout << "agents " << scene.dataset.agent_count() << " frames " << scene.dataset.frame_count << "\n";
    return 0;
}

}  // namespace crowdorch
