#pragma once

#include "config.hpp"

namespace crowdorch {

// Each returns the process exit code; errors surface as crowd::Error.
int run_ingest(const RunConfig& config);
int run_fit(const RunConfig& config);
int run_simulate(const RunConfig& config);
int run_evaluate(const RunConfig& config);
int run_ablate(const RunConfig& config);
int run_synth(const RunConfig& config);

}  // namespace crowdorch
