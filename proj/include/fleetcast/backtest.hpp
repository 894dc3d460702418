#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fleetcast/conformal.hpp"
#include "fleetcast/dataio.hpp"
#include "fleetcast/metrics.hpp"
#include "fleetcast/toml.hpp"

namespace fleetcast {

enum class MethodId {
    kSystemRaw,
    kSystemCqr,
    kSystemCacp,
    kCopula,
    kCopulaCqr,
    kCopulaCacp,
};

std::string method_name(MethodId m);          // e.g. "COPULA_CACP"
MethodId parse_method(const std::string& s);  // accepts either case

struct ProtocolConfig {
    int warmup_months = 6;
    // When > 0, overrides warmup_months with an exact day count (synthetic
    // runs are usually much shorter than six months).
    int warmup_days = 0;
    int validation_days = 7;
    std::vector<double> alphas = {0.1, 0.2, 0.3, 0.4};
    std::size_t samples = 2000;  // Monte Carlo fleet samples per hour
    int context_lags = 3;
    std::vector<double> gamma_grid = {0.01, 0.05, 0.1, 0.5, 1.0, 5.0};
    std::uint64_t seed = 42;
    std::vector<MethodId> methods = {
        MethodId::kSystemRaw,  MethodId::kSystemCqr, MethodId::kSystemCacp,
        MethodId::kCopula,     MethodId::kCopulaCqr, MethodId::kCopulaCacp,
    };
    // Score quantile rule for the CQR methods; kPlain keeps the exact
    // uniform-weight equivalence with the CACP methods.
    ConformalMode conformal_mode = ConformalMode::kPlain;
    // When true, the final daily calibration pool includes the validation
    // week (it is always excluded from the gamma-selection scoring pool).
    bool merge_validation = false;
    // 0 = correlation refits use all history; > 0 = trailing window in
    // months.
    int correlation_window_months = 0;
    // Restrict reported metrics to daylight hours (per the final sun
    // table); all hours are still forecast and calibrated.
    bool daylight_only = false;
    std::string region;  // empty: dataset must contain exactly one region
    bool parallel = true;
    bool dump_fleet_samples = false;
    bool dump_correlation = false;

    void validate() const;  // throws std::invalid_argument
};

// Applies one config-file entry onto the defaults; throws on unknown keys
// or type mismatches.  Shared by the TOML loader and manifest replay.
void apply_config_entry(ProtocolConfig* config, const std::string& key,
                        const TomlValue& value);
ProtocolConfig config_from_toml(const TomlTable& table);
// Inverse of the above: the full key/value snapshot (defaults included).
TomlTable config_to_toml(const ProtocolConfig& config);

struct GammaChoice {
    Timestamp day = 0;
    MethodId method = MethodId::kCopulaCacp;
    double alpha = 0.1;
    double gamma = 0.0;
};

struct MethodSlice {
    MethodId method = MethodId::kCopula;
    double alpha = 0.1;
    IntervalSeries series;  // capacity-normalized, metric-eligible rows
    MetricReport report;
};

struct BacktestResult {
    std::string region;
    double fleet_capacity = 0.0;
    Timestamp first_test_day = 0;
    Timestamp last_test_day = 0;
    std::vector<MethodSlice> slices;          // method-major, alpha-minor
    std::vector<GammaChoice> gamma_choices;   // chronological
    std::vector<Timestamp> correlation_refits;
    std::size_t skipped_days = 0;
    std::size_t skipped_hours = 0;
    std::size_t method_failures = 0;
    std::size_t records_appended = 0;
    // Per (timestamp, sample index) fleet draws, only when
    // dump_fleet_samples is set.
    std::vector<std::pair<Timestamp, std::vector<double>>> fleet_dumps;
    // Final fitted correlation model (for optional dumping).
    std::optional<CorrelationModel> final_model;
};

// Runs the rolling evaluation protocol on a loaded bundle.  The bundle
// must already be restricted to one region (run_backtest applies
// config.region if set, otherwise requires a single-region bundle).
BacktestResult run_backtest(const DatasetBundle& bundle,
                            const ProtocolConfig& config);

// Writes results.csv, hourly_coverage.csv, interval series per slice, and
// optional dumps into `out_dir` (which must exist).  Returns the file
// names written, in a fixed order.
std::vector<std::string> emit_results(const BacktestResult& result,
                                      const std::string& out_dir);

}  // namespace fleetcast
