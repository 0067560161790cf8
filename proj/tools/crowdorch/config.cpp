#include "config.hpp"

#include <cstdlib>
#include <set>

#include "crowd/error.hpp"
#include "crowd/io.hpp"
#include "crowd/text.hpp"

namespace crowdorch {

namespace {

using crowd::Errc;
using crowd::Error;
using nlohmann::json;

constexpr std::string_view kModule = "cli";

[[noreturn]] void invalid(const std::string& msg) { throw Error(Errc::ConfigInvalid, kModule, msg); }

/// Reads fields of one config object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& doc, std::string name) : name_(std::move(name)) {
        if (doc.is_null()) return;
        if (!doc.is_object()) invalid(name_ + " must be an object");
        doc_ = &doc;
    }
    ~Section() noexcept(false) {
        if (!doc_ || std::uncaught_exceptions() > 0) return;
        for (const auto& [key, value] : doc_->items()) {
            if (!used_.contains(key)) invalid("unknown key " + name_ + "." + key);
        }
    }

    const json* get(const std::string& key) {
        used_.insert(key);
        if (!doc_ || !doc_->contains(key)) return nullptr;
        return &doc_->at(key);
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        if (const auto* v = get(key)) {
            try {
                out = v->get<T>();
            } catch (const json::exception&) {
                invalid(name_ + "." + key + " has the wrong type");
            }
        }
    }

    const json& child(const std::string& key) {
        static const json null_value;
        const auto* v = get(key);
        return v ? *v : null_value;
    }

    std::string path(const std::string& key) const { return name_ + "." + key; }

private:
    const json* doc_ = nullptr;
    std::string name_;
    std::set<std::string> used_;
};

void require(bool ok, const std::string& what) {
    if (!ok) invalid(what);
}

crowd::data::Point read_point(const json& v, const std::string& what) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) invalid(what + " must be [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

void apply_preset(RunConfig& c) {
    if (c.preset == "gc") {
        c.spawn_clusters = c.goal_clusters = {0.2, 20};
    } else if (c.preset == "forum") {
        c.spawn_clusters = c.goal_clusters = {2.0, 5};
    } else if (c.preset == "eth") {
        c.spawn_clusters = c.goal_clusters = {0.8, 3};
    } else {
        invalid("unknown dataset preset " + c.preset + " (gc, forum, eth)");
    }
}

void read_clusters(Section& s, const std::string& key, crowd::spatial::ClusterParams& out) {
    Section c(s.child(key), s.path(key));
    c.read("eps", out.eps);
    c.read("min_samples", out.min_samples);
}

void read_file(RunConfig& c, const json& doc) {
    if (!doc.is_object()) invalid("config root must be an object");
    Section root(doc, "config");
    root.read("seed", c.seed);
    root.read("jobs", c.jobs);
    if (const auto* v = root.get("output")) c.output = v->get<std::string>();

    {
        Section d(root.child("dataset"), "dataset");
        if (const auto* v = d.get("path")) c.dataset = v->get<std::string>();
        d.read("preset", c.preset);
        apply_preset(c);
        if (const auto* v = d.get("map")) c.map = v->get<std::string>();
        Section t(d.child("transform"), "dataset.transform");
        if (const auto* v = t.get("linear")) {
            if (!v->is_array() || v->size() != 2) invalid("dataset.transform.linear must be 2x2");
            const auto r0 = read_point(v->at(0), "dataset.transform.linear row");
            const auto r1 = read_point(v->at(1), "dataset.transform.linear row");
            c.transform.linear << r0.x(), r0.y(), r1.x(), r1.y();
        }
        if (const auto* v = t.get("offset")) c.transform.offset = read_point(*v, "dataset.transform.offset");
    }
    {
        Section s(root.child("clustering"), "clustering");
        read_clusters(s, "spawn", c.spawn_clusters);
        read_clusters(s, "goal", c.goal_clusters);
    }
    {
        Section n(root.child("ntpp"), "ntpp");
        n.read("window", c.ntpp.window);
        n.read("overlap", c.ntpp.overlap);
        n.read("epochs", c.ntpp.epochs);
        n.read("lr", c.ntpp.lr);
        n.read("patience", c.ntpp.patience);
        n.read("min_delta", c.ntpp.min_delta);
        n.read("batch_windows", c.ntpp.batch_windows);
        n.read("hidden_dim", c.ntpp.arch.hidden_dim);
        n.read("head_units", c.ntpp.arch.head_units);
    }
    {
        Section s(root.child("sampling"), "sampling");
        s.read("length", c.length);
        s.read("n_rollouts", c.n_rollouts);
    }
    {
        Section p(root.child("policy"), "policy");
        std::string kind = "scripted";
        p.read("kind", kind);
        if (kind == "scripted") c.policy.kind = crowd::policy::PolicyKind::Scripted;
        else if (kind == "cloned") c.policy.kind = crowd::policy::PolicyKind::Cloned;
        else invalid("policy.kind must be scripted or cloned");
        p.read("v_max", c.policy.v_max);
        p.read("frame_rate", c.policy.frame_rate);
        p.read("raycasts", c.policy.rays.count);
        p.read("max_range", c.policy.rays.max_range);
        p.read("epochs", c.policy.epochs);
        p.read("lr", c.policy.lr);
        p.read("batch_size", c.policy.batch_size);
        p.read("validation_fraction", c.policy.validation_fraction);
    }
    {
        Section s(root.child("simulation"), "simulation");
        s.read("goal_radius", c.sim.goal_radius);
        s.read("max_lifetime", c.sim.max_lifetime);
        s.read("policy_noise", c.sim.policy_noise);
    }
    {
        Section a(root.child("ablation"), "ablation");
        a.read("samples", c.ablation.samples);
        a.read("total_length", c.ablation.total_length);
        a.read("windows", c.ablation.grid.windows);
        a.read("overlaps", c.ablation.grid.overlaps);
        a.read("n_rollouts", c.ablation.grid.n_rollouts);
        a.read("rollout_lengths", c.ablation.grid.rollout_lengths);
        int epochs = 0;
        a.read("epochs", epochs);
        if (epochs != 0) c.ablation.train.epochs = epochs;
    }
    if (const auto* v = root.get("synth")) {
        try {
            c.synth = crowd::synth::scene_spec_from_json(*v);
        } catch (const Error& e) {
            invalid(std::string("synth: ") + e.what());
        }
    }
    std::string baseline;
    root.read("baseline", baseline);
    if (!baseline.empty()) {
        if (baseline != "poisson") invalid("baseline must be poisson");
        c.poisson_baseline = true;
    }
}

std::optional<std::string> env(const std::string& name) {
    const std::string key = std::string(kEnvPrefix) + name;
    if (const char* v = std::getenv(key.c_str()); v && *v) return std::string(v);
    return std::nullopt;
}

template <typename T>
T parse_env(const std::string& name, const std::string& value) {
    const auto v = crowd::text::parse_number<T>(value);
    if (!v) invalid(std::string(kEnvPrefix) + name + " is not a valid number");
    return *v;
}

void validate(const RunConfig& c) {
    require(c.jobs >= 1, "jobs must be >= 1");
    require(c.spawn_clusters.eps > 0.0 && c.goal_clusters.eps > 0.0, "clustering eps must be positive");
    require(c.spawn_clusters.min_samples >= 1 && c.goal_clusters.min_samples >= 1, "clustering min_samples must be >= 1");
    require(c.transform.linear.allFinite() && c.transform.offset.allFinite(), "dataset.transform must be finite");
    require(c.ntpp.window > 0.0, "ntpp.window must be positive");
    require(c.ntpp.overlap >= 0.0 && c.ntpp.overlap < c.ntpp.window, "ntpp.overlap must lie in [0, window)");
    require(c.ntpp.epochs >= 1, "ntpp.epochs must be >= 1");
    require(c.ntpp.lr > 0.0, "ntpp.lr must be positive");
    require(c.ntpp.patience >= 1, "ntpp.patience must be >= 1");
    require(c.ntpp.min_delta >= 0.0, "ntpp.min_delta must be >= 0");
    require(c.ntpp.batch_windows >= 1, "ntpp.batch_windows must be >= 1");
    require(c.ntpp.arch.hidden_dim >= 1 && c.ntpp.arch.head_units >= 1, "ntpp layer sizes must be >= 1");
    require(c.length >= 1.0, "sampling.length must be >= 1");
    require(c.n_rollouts >= 1, "sampling.n_rollouts must be >= 1");
    require(c.policy.v_max > 0.0, "policy.v_max must be positive");
    require(c.policy.frame_rate > 0.0, "policy.frame_rate must be positive");
    require(c.policy.rays.count >= 0 && c.policy.rays.max_range > 0.0, "policy raycasts out of range");
    require(c.policy.epochs >= 1 && c.policy.lr > 0.0 && c.policy.batch_size >= 1, "policy training settings out of range");
    require(c.policy.validation_fraction >= 0.0 && c.policy.validation_fraction < 1.0,
            "policy.validation_fraction must lie in [0, 1)");
    require(c.sim.goal_radius > 0.0, "simulation.goal_radius must be positive");
    require(c.sim.max_lifetime >= 1, "simulation.max_lifetime must be >= 1");
    require(c.sim.policy_noise >= 0.0, "simulation.policy_noise must be >= 0");
    const auto& a = c.ablation;
    require(a.samples >= 1 && a.total_length >= 1.0, "ablation samples and total_length must be positive");
    require(a.train.epochs >= 1, "ablation.epochs must be >= 1");
    require(a.grid.size() > 0, "ablation grid must not be empty");
    for (double w : a.grid.windows) {
        for (double o : a.grid.overlaps) require(w > 0.0 && o >= 0.0 && o < w, "ablation overlaps must lie in [0, window)");
    }
    for (int n : a.grid.n_rollouts) require(n >= 1, "ablation n_rollouts must be >= 1");
    for (double l : a.grid.rollout_lengths) require(l > 0.0, "ablation rollout_lengths must be positive");
    if (c.map) require(fs::exists(*c.map), "map file not found: " + c.map->string());
}

}  // namespace

RunConfig resolve_config(const Overrides& flags) {
    RunConfig c;
    apply_preset(c);
    c.ablation.train.epochs = c.ntpp.epochs;

    auto config_path = flags.config;
    if (!config_path) {
        if (auto v = env("CONFIG")) config_path = *v;
    }
    if (config_path) {
        if (!fs::exists(*config_path)) invalid("config file not found: " + config_path->string());
        json doc;
        try {
            doc = json::parse(crowd::io::read_text(*config_path));
        } catch (const json::exception& e) {
            invalid(std::string("config is not valid JSON: ") + e.what());
        }
        const int ablation_epochs_before = c.ablation.train.epochs;
        try {
            read_file(c, doc);
        } catch (const json::exception& e) {
            invalid(std::string("config field has the wrong type: ") + e.what());
        }
        // Ablation trains with the nTPP settings unless it names its own epoch count.
        const int ablation_epochs = c.ablation.train.epochs;
        c.ablation.train = c.ntpp;
        if (ablation_epochs != ablation_epochs_before) c.ablation.train.epochs = ablation_epochs;
    } else {
        c.ablation.train = c.ntpp;
    }

    if (auto v = env("SEED")) c.seed = parse_env<std::uint64_t>("SEED", *v);
    if (auto v = env("JOBS")) c.jobs = parse_env<int>("JOBS", *v);
    if (auto v = env("OUTPUT")) c.output = *v;
    if (auto v = env("DATASET")) c.dataset = *v;
    if (auto v = env("BASELINE")) {
        if (*v != "poisson") invalid("CROWDORCH_BASELINE must be poisson");
        c.poisson_baseline = true;
    }

    if (flags.seed) c.seed = *flags.seed;
    if (flags.jobs) c.jobs = *flags.jobs;
    if (flags.output) c.output = *flags.output;
    if (flags.dataset) c.dataset = *flags.dataset;
    if (flags.baseline) {
        if (*flags.baseline != "poisson") invalid("--baseline must be poisson");
        c.poisson_baseline = true;
    }

    c.ablation.seed = c.seed;
    c.ablation.jobs = c.jobs;
    c.ablation.sim = c.sim;
    c.synth.seed = c.seed;
    validate(c);
    return c;
}

nlohmann::json to_json(const RunConfig& c) {
    const auto& l = c.transform.linear;
    return {{"seed", c.seed},
            {"output", c.output.generic_string()},
            {"dataset",
             {{"path", c.dataset ? json(c.dataset->generic_string()) : json(nullptr)},
              {"preset", c.preset},
              {"map", c.map ? json(c.map->generic_string()) : json(nullptr)},
              {"transform",
               {{"linear", {{l(0, 0), l(0, 1)}, {l(1, 0), l(1, 1)}}}, {"offset", {c.transform.offset.x(), c.transform.offset.y()}}}}}},
            {"clustering",
             {{"spawn", {{"eps", c.spawn_clusters.eps}, {"min_samples", c.spawn_clusters.min_samples}}},
              {"goal", {{"eps", c.goal_clusters.eps}, {"min_samples", c.goal_clusters.min_samples}}}}},
            {"ntpp",
             {{"window", c.ntpp.window},
              {"overlap", c.ntpp.overlap},
              {"epochs", c.ntpp.epochs},
              {"lr", c.ntpp.lr},
              {"patience", c.ntpp.patience},
              {"min_delta", c.ntpp.min_delta},
              {"batch_windows", c.ntpp.batch_windows},
              {"hidden_dim", c.ntpp.arch.hidden_dim},
              {"head_units", c.ntpp.arch.head_units}}},
            {"sampling", {{"length", c.length}, {"n_rollouts", c.n_rollouts}}},
            {"policy",
             {{"kind", c.policy.kind == crowd::policy::PolicyKind::Scripted ? "scripted" : "cloned"},
              {"v_max", c.policy.v_max},
              {"frame_rate", c.policy.frame_rate},
              {"raycasts", c.policy.rays.count},
              {"max_range", c.policy.rays.max_range},
              {"epochs", c.policy.epochs},
              {"lr", c.policy.lr},
              {"batch_size", c.policy.batch_size},
              {"validation_fraction", c.policy.validation_fraction}}},
            {"simulation",
             {{"goal_radius", c.sim.goal_radius}, {"max_lifetime", c.sim.max_lifetime}, {"policy_noise", c.sim.policy_noise}}},
            {"ablation",
             {{"samples", c.ablation.samples},
              {"total_length", c.ablation.total_length},
              {"windows", c.ablation.grid.windows},
              {"overlaps", c.ablation.grid.overlaps},
              {"n_rollouts", c.ablation.grid.n_rollouts},
              {"rollout_lengths", c.ablation.grid.rollout_lengths},
              {"epochs", c.ablation.train.epochs}}},
            {"synth", crowd::synth::to_json(c.synth)},
            {"baseline", c.poisson_baseline ? json("poisson") : json(nullptr)}};
}

}  // namespace crowdorch
