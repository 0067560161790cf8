#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "crowd/error.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInvariant = 4;

int exit_code(crowd::Errc code) {
    switch (code) {
        case crowd::Errc::ConfigInvalid:
        case crowd::Errc::InvalidArgument:
        case crowd::Errc::InvalidOverlap: return kExitConfig;
        case crowd::Errc::InvariantViolation: return kExitInvariant;
        default: return kExitData;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crowdorch: spawn-model fitting, crowd simulation and evaluation"};
    app.require_subcommand(1);
    crowdorch::Overrides flags;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "JSON run config");
        sub->add_option("--seed", flags.seed, "master seed");
        sub->add_option("--jobs", flags.jobs, "parallel workers")->check(CLI::PositiveNumber);
        sub->add_option("-o,--output", flags.output, "output directory");
        sub->add_option("--dataset", flags.dataset, "input frame table (ingest)");
        sub->add_option("--baseline", flags.baseline, "use the homogeneous Poisson baseline")->check(CLI::IsMember({"poisson"}));
    };

    using Runner = std::function<int(const crowdorch::RunConfig&)>;
    Runner selected;
    const std::pair<const char*, std::pair<const char*, Runner>> commands[] = {
        {"ingest", {"load a frame table into the canonical dataset", crowdorch::run_ingest}},
        {"fit", {"fit spatial, temporal and policy models", crowdorch::run_fit}},
        {"simulate", {"run the crowd simulation", crowdorch::run_simulate}},
        {"evaluate", {"compare ground truth, nTPP-GMM and Poisson-GMM", crowdorch::run_evaluate}},
        {"ablate", {"window/overlap/rollout ablation grid", crowdorch::run_ablate}},
        {"synth", {"generate a planted synthetic scene", crowdorch::run_synth}},
    };
    for (const auto& [name, entry] : commands) {
        auto* sub = app.add_subcommand(name, entry.first);
        add_common(sub);
        sub->callback([&selected, run = entry.second] { selected = run; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        const auto config = crowdorch::resolve_config(flags);
        return selected(config);
    } catch (const crowd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
