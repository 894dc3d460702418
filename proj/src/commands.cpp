#include "fleetcast/commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>

#include "fleetcast/csv.hpp"
#include "fleetcast/log.hpp"
#include "fleetcast/manifest.hpp"

namespace fleetcast {

namespace {

namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) {
    if (dir.empty()) {
        throw std::invalid_argument("output directory must be given");
    }
    fs::create_directories(dir);
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void add_input(RunManifest* m, const std::string& role,
               const std::string& path) {
    if (path.empty()) return;
    m->inputs.push_back(ManifestFile{role, path, sha256_file(path)});
}

std::string family_name(MarginalFamily f) {
    switch (f) {
        case MarginalFamily::kUniform: return "uniform";
        case MarginalFamily::kTruncNormal: return "trunc_normal";
        case MarginalFamily::kDiurnal: return "diurnal";
    }
    return "?";
}

std::string miscal_name(Miscalibration m) {
    switch (m) {
        case Miscalibration::kIdentity: return "identity";
        case Miscalibration::kWiden: return "widen";
        case Miscalibration::kShift: return "shift";
        case Miscalibration::kRegime: return "regime";
    }
    return "?";
}

TomlTable synth_spec_to_toml(const SynthSpec& s) {
    TomlTable t;
    t.emplace("n_sites", TomlValue{static_cast<std::int64_t>(s.n_sites)});
    t.emplace("days", TomlValue{static_cast<std::int64_t>(s.days)});
    t.emplace("start", TomlValue{format_timestamp(s.start)});
    t.emplace("seed", TomlValue{static_cast<std::int64_t>(s.seed)});
    t.emplace("family", TomlValue{family_name(s.family)});
    t.emplace("rho", TomlValue{s.rho});
    t.emplace("miscal", TomlValue{miscal_name(s.miscal)});
    t.emplace("widen_factor", TomlValue{s.widen_factor});
    t.emplace("shift_fraction", TomlValue{s.shift_fraction});
    t.emplace("regime_factor_am", TomlValue{s.regime_factor_am});
    t.emplace("regime_factor_pm", TomlValue{s.regime_factor_pm});
    t.emplace("knots", TomlValue{static_cast<std::int64_t>(s.knots)});
    t.emplace("system_samples",
              TomlValue{static_cast<std::int64_t>(s.system_samples)});
    if (!s.capacities.empty()) {
        t.emplace("capacities", TomlValue{s.capacities});
    }
    t.emplace("region", TomlValue{s.region});
    return t;
}

}  // namespace

int cmd_validate(const ValidateArgs& args) {
    try {
        DatasetBundle bundle = load_bundle(args.paths);
        if (!args.region.empty()) {
            bundle = select_region(bundle, args.region);
        }
        std::cout << describe_coverage(bundle);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "validation failed: " << e.what() << '\n';
        return 1;
    }
}

int cmd_synth(const SynthArgs& args) {
    DatasetBundle bundle;
    try {
        args.spec.validate();
        ensure_dir(args.out_dir);
        bundle = synth_generate(args.spec);
    } catch (const std::exception& e) {
        std::cerr << "synth failed: " << e.what() << '\n';
        return 1;
    }
    try {
        BundlePaths paths;
        paths.observations = join(args.out_dir, "observations.csv");
        paths.site_forecasts = join(args.out_dir, "site_forecasts.csv");
        paths.system_forecasts = join(args.out_dir, "system_forecasts.csv");
        paths.sites = join(args.out_dir, "sites.csv");
        save_bundle(bundle, paths);

        RunManifest m;
        m.version = tool_version();
        m.command = "synth";
        m.config = synth_spec_to_toml(args.spec);
        digest_outputs(&m, args.out_dir,
                       {"observations.csv", "site_forecasts.csv",
                        "system_forecasts.csv", "sites.csv"});
        save_manifest(m, join(args.out_dir, "manifest.json"));
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "synth failed: " << e.what() << '\n';
        return 2;
    }
}

int cmd_backtest(const BacktestArgs& args) {
    ProtocolConfig config;
    DatasetBundle bundle;
    RunManifest manifest;
    // Phase 1: validation (arguments, config, input data, replay digests).
    try {
        if (args.out_dir.empty()) {
            throw std::invalid_argument("output directory must be given");
        }
        if (!args.replay_path.empty()) {
            const RunManifest recorded = load_manifest(args.replay_path);
            config = manifest_config(recorded);
            const auto problems = verify_input_digests(recorded, args.paths);
            if (!problems.empty()) {
                std::string msg = "replay input digests do not match:";
                for (const std::string& p : problems) msg += "\n  " + p;
                throw std::invalid_argument(msg);
            }
        } else if (!args.config_path.empty()) {
            config = config_from_toml(parse_toml_file(args.config_path));
        } else {
            throw std::invalid_argument(
                "either --config or --replay is required");
        }
        if (!args.region_override.empty()) {
            config.region = args.region_override;
        }
        config.validate();
        bundle = load_bundle(args.paths);

        manifest.version = tool_version();
        manifest.command = "backtest";
        manifest.config = config_to_toml(config);
        add_input(&manifest, "observations", args.paths.observations);
        add_input(&manifest, "site_forecasts", args.paths.site_forecasts);
        add_input(&manifest, "system_forecasts",
                  args.paths.system_forecasts);
        add_input(&manifest, "sites", args.paths.sites);
    } catch (const std::exception& e) {
        std::cerr << "backtest validation failed: " << e.what() << '\n';
        return 1;
    }
    // Phase 2: the run itself.
    try {
        ensure_dir(args.out_dir);
        const BacktestResult result = run_backtest(bundle, config);
        const std::vector<std::string> written =
            emit_results(result, args.out_dir);
        fill_backtest_summary(&manifest, bundle, result);
        digest_outputs(&manifest, args.out_dir, written);
        save_manifest(manifest, join(args.out_dir, "manifest.json"));
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "backtest failed: " << e.what() << '\n';
        return 2;
    }
}

int cmd_metrics(const MetricsArgs& args) {
    IntervalSeries series;
    try {
        if (!(args.alpha > 0.0 && args.alpha < 1.0)) {
            throw std::invalid_argument("alpha must be in (0, 1)");
        }
        if (args.capacity < 0.0 || !std::isfinite(args.capacity)) {
            throw std::invalid_argument("capacity must be finite and >= 0");
        }
        series = load_interval_series(args.intervals_path, args.alpha);
        if (args.capacity > 0.0) {
            series = normalize_by_capacity(series, args.capacity);
        }
        series.validate();
    } catch (const std::exception& e) {
        std::cerr << "metrics validation failed: " << e.what() << '\n';
        return 1;
    }
    try {
        ensure_dir(args.out_dir);
        const MetricReport report = compute_metrics(series);
        const std::string level = format_double(
            std::round((1.0 - args.alpha) * 1e6) / 1e6);

        {
            CsvWriter w(join(args.out_dir, "metrics.csv"));
            w.row("metric", "level", "method", "value");
            w.row("picp", level, args.method_label, report.picp);
            w.row("aiw", level, args.method_label, report.aiw);
            w.row("ws", level, args.method_label, report.winkler);
            w.row("count", level, args.method_label,
                  static_cast<std::int64_t>(report.count));
        }
        {
            CsvWriter w(join(args.out_dir, "hourly_coverage.csv"));
            w.row("method", "level", "hour", "coverage", "count");
            for (int h = 0; h < kHoursPerDay; ++h) {
                w.field(args.method_label);
                w.field(level);
                w.field(static_cast<std::int64_t>(h));
                const std::size_t c =
                    report.hourly.counts[static_cast<std::size_t>(h)];
                if (c == 0) {
                    w.field("");
                } else {
                    w.field(
                        report.hourly.coverage[static_cast<std::size_t>(h)]);
                }
                w.field(c);
                w.end_row();
            }
        }
        {
            std::ofstream out(join(args.out_dir, "metrics.json"),
                              std::ios::binary);
            out << "{\n"
                << "  \"method\": \"" << args.method_label << "\",\n"
                << "  \"level\": " << level << ",\n"
                << "  \"picp\": " << format_double(report.picp) << ",\n"
                << "  \"aiw\": " << format_double(report.aiw) << ",\n"
                << "  \"ws\": " << format_double(report.winkler) << ",\n"
                << "  \"count\": " << report.count << "\n"
                << "}\n";
            if (!out) {
                throw std::runtime_error("cannot write metrics.json");
            }
        }
        RunManifest m;
        m.version = tool_version();
        m.command = "metrics";
        m.config.emplace("alpha", TomlValue{args.alpha});
        m.config.emplace("method", TomlValue{args.method_label});
        m.config.emplace("capacity", TomlValue{args.capacity});
        add_input(&m, "intervals", args.intervals_path);
        digest_outputs(&m, args.out_dir,
                       {"metrics.csv", "hourly_coverage.csv",
                        "metrics.json"});
        save_manifest(m, join(args.out_dir, "manifest.json"));
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "metrics failed: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace fleetcast
