#pragma once

#include <string>

#include "snrwall/bounds.hpp"
#include "snrwall/mc.hpp"

namespace snrwall {

// A scenario read from disk (or built from a preset): the Monte Carlo
// configuration plus the directory results should land in.
struct ScenarioFile {
  ScenarioConfig config;
  std::string out_dir = ".";
};

// Parses the key = value scenario format. Unknown keys, missing required
// keys, and malformed values all throw std::invalid_argument with the
// offending key named.
ScenarioFile parse_scenario_text(const std::string& text);
ScenarioFile parse_scenario_file(const std::string& path);

// Built-in scenarios. "reproduce-fig2" is the receiver-correlated sweep
// (p = 2, flat fusion, rho = 0.05, -10..-15 dB); "reproduce-fig3" is the
// smoothed single-antenna sweep (Q = 4, AR(1) a = 0.1, -6..-10 dB).
// long_mode switches from the desk-scale grid (N up to 99999, 500 instances)
// to the full grid (N up to 999999, 2000 instances).
ScenarioFile preset_scenario(const std::string& name, bool long_mode);

struct BoundArgs {
  int receivers = 1;
  int smoothing = 0;
  int oversampling = 4;
  double rho_max = 0.0;
  std::string model_file;  // optional JSON correlation model
  std::string out_dir = ".";
};

// `bound`: closed-form wall report, printed and written to bound.json.
// Undefined bounds are reported with their reason and still exit 0; only
// invalid input fails.
int cmd_bound(const BoundArgs& args);

// `simulate`: full scenario run; writes samples.csv, per-cell histogram
// files, summary.json, and (for AR(1) noise-only models) the sampled power
// spectrum.
int cmd_simulate(const ScenarioFile& scenario);

// `wall-search`: runs the scenario's SNR grid as a descending sweep at the
// largest block length and reports the first median crossing.
int cmd_wall_search(const ScenarioFile& scenario);

}  // namespace snrwall
