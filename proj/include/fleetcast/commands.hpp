#pragma once

#include <string>

#include "fleetcast/backtest.hpp"
#include "fleetcast/synth.hpp"

namespace fleetcast {

// Subcommand bodies shared by the CLI binary and the tests.  Exit-code
// contract: 0 success, 1 validation failure (bad arguments, config, input
// data, or replay digest mismatch), 2 runtime failure after validation.

struct ValidateArgs {
    BundlePaths paths;
    std::string region;  // optional restriction
};
int cmd_validate(const ValidateArgs& args);

struct SynthArgs {
    SynthSpec spec;
    std::string out_dir;
};
int cmd_synth(const SynthArgs& args);

struct BacktestArgs {
    std::string config_path;  // TOML; may be empty when replaying
    std::string replay_path;  // manifest.json to replay; optional
    BundlePaths paths;
    std::string out_dir;
    std::string region_override;  // optional --region flag
};
int cmd_backtest(const BacktestArgs& args);

struct MetricsArgs {
    std::string intervals_path;
    double alpha = 0.1;
    std::string method_label = "EXTERNAL";
    double capacity = 0.0;  // > 0: divide rows by this capacity first
    std::string out_dir;
};
int cmd_metrics(const MetricsArgs& args);

}  // namespace fleetcast
