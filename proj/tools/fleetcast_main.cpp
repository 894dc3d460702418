#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "fleetcast/commands.hpp"
#include "fleetcast/log.hpp"
#include "fleetcast/manifest.hpp"

namespace {

void add_data_flags(CLI::App* cmd, fleetcast::BundlePaths* paths,
                    bool required) {
    auto* obs = cmd->add_option("--obs", paths->observations,
                                "Site observations CSV");
    auto* sf = cmd->add_option("--site-forecasts", paths->site_forecasts,
                               "Site quantile forecasts CSV");
    cmd->add_option("--system-forecasts", paths->system_forecasts,
                    "System-level quantile forecasts CSV (optional)");
    auto* st = cmd->add_option("--sites", paths->sites,
                               "Site metadata CSV");
    if (required) {
        obs->required();
        sf->required();
        st->required();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(fleetcast::tool_version()) +
                 " - fleet-level solar forecast aggregation and "
                 "conformal calibration"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    bool quiet = false;
    app.add_flag("--quiet", quiet, "Suppress warnings and progress logs");

    // --- validate ---
    fleetcast::ValidateArgs vargs;
    CLI::App* validate = app.add_subcommand(
        "validate", "Load and cross-check a dataset, print coverage");
    add_data_flags(validate, &vargs.paths, true);
    validate->add_option("--region", vargs.region,
                         "Restrict the report to one region");

    // --- synth ---
    fleetcast::SynthArgs sargs;
    CLI::App* synth = app.add_subcommand(
        "synth", "Generate a synthetic dataset with known ground truth");
    synth->add_option("--sites", sargs.spec.n_sites, "Number of sites")
        ->capture_default_str();
    synth->add_option("--days", sargs.spec.days, "Days of hourly data")
        ->capture_default_str();
    std::string start_text;
    synth->add_option("--start", start_text,
                      "First hour (YYYY-MM-DDTHH:MM:SSZ)");
    synth->add_option("--seed", sargs.spec.seed, "Generator seed")
        ->capture_default_str();
    const std::map<std::string, fleetcast::MarginalFamily> families{
        {"uniform", fleetcast::MarginalFamily::kUniform},
        {"trunc_normal", fleetcast::MarginalFamily::kTruncNormal},
        {"diurnal", fleetcast::MarginalFamily::kDiurnal}};
    synth
        ->add_option("--family", sargs.spec.family,
                     "Marginal family: uniform, trunc_normal, diurnal")
        ->transform(CLI::CheckedTransformer(families, CLI::ignore_case));
    synth->add_option("--rho", sargs.spec.rho, "True equicorrelation")
        ->capture_default_str();
    const std::map<std::string, fleetcast::Miscalibration> miscals{
        {"identity", fleetcast::Miscalibration::kIdentity},
        {"widen", fleetcast::Miscalibration::kWiden},
        {"shift", fleetcast::Miscalibration::kShift},
        {"regime", fleetcast::Miscalibration::kRegime}};
    synth
        ->add_option("--miscal", sargs.spec.miscal,
                     "Forecast miscalibration: identity, widen, shift, "
                     "regime")
        ->transform(CLI::CheckedTransformer(miscals, CLI::ignore_case));
    synth->add_option("--widen-factor", sargs.spec.widen_factor,
                      "Width multiplier for --miscal widen")
        ->capture_default_str();
    synth->add_option("--shift-fraction", sargs.spec.shift_fraction,
                      "Location shift (capacity share) for --miscal shift")
        ->capture_default_str();
    synth->add_option("--regime-am", sargs.spec.regime_factor_am,
                      "Width factor for hours 0-11 under --miscal regime")
        ->capture_default_str();
    synth->add_option("--regime-pm", sargs.spec.regime_factor_pm,
                      "Width factor for hours 12-23 under --miscal regime")
        ->capture_default_str();
    synth->add_option("--knots", sargs.spec.knots,
                      "Quantile levels per curve")
        ->capture_default_str();
    synth->add_option("--system-samples", sargs.spec.system_samples,
                      "Monte Carlo size behind the system curves")
        ->capture_default_str();
    synth->add_option("--region", sargs.spec.region, "Region label")
        ->capture_default_str();
    synth->add_option("--out", sargs.out_dir, "Output directory")
        ->required();

    // --- backtest ---
    fleetcast::BacktestArgs bargs;
    CLI::App* backtest = app.add_subcommand(
        "backtest", "Run the rolling evaluation protocol");
    backtest->add_option("--config", bargs.config_path,
                         "Run configuration (TOML key = value)");
    backtest->add_option("--replay", bargs.replay_path,
                         "Replay the configuration from a manifest.json");
    add_data_flags(backtest, &bargs.paths, true);
    backtest->add_option("--region", bargs.region_override,
                         "Region to evaluate (overrides the config)");
    backtest->add_option("--out", bargs.out_dir, "Output directory")
        ->required();

    // --- metrics ---
    fleetcast::MetricsArgs margs;
    CLI::App* metrics = app.add_subcommand(
        "metrics", "Score an interval series CSV");
    metrics->add_option("--intervals", margs.intervals_path,
                        "CSV with timestamp,lower,upper,realized")
        ->required();
    metrics->add_option("--alpha", margs.alpha,
                        "Nominal miscoverage of the intervals")
        ->capture_default_str();
    metrics->add_option("--method", margs.method_label,
                        "Method label for the output rows")
        ->capture_default_str();
    metrics->add_option("--capacity", margs.capacity,
                        "Normalize rows by this capacity first")
        ->capture_default_str();
    metrics->add_option("--out", margs.out_dir, "Output directory")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    fleetcast::log::quiet() = quiet;

    try {
        if (validate->parsed()) {
            return fleetcast::cmd_validate(vargs);
        }
        if (synth->parsed()) {
            if (!start_text.empty()) {
                sargs.spec.start = fleetcast::parse_timestamp(start_text);
            }
            return fleetcast::cmd_synth(sargs);
        }
        if (backtest->parsed()) {
            return fleetcast::cmd_backtest(bargs);
        }
        if (metrics->parsed()) {
            return fleetcast::cmd_metrics(margs);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
