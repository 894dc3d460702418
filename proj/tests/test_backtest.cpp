#include "fleetcast/backtest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "fleetcast/copula.hpp"
#include "fleetcast/log.hpp"
#include "fleetcast/synth.hpp"

using namespace fleetcast;
namespace fs = std::filesystem;

namespace {

DatasetBundle make_bundle(std::uint64_t seed, int days, double rho,
                          MarginalFamily family = MarginalFamily::kTruncNormal,
                          std::size_t system_samples = 64) {
    SynthSpec spec;
    spec.n_sites = 3;
    spec.days = days;
    spec.seed = seed;
    spec.rho = rho;
    spec.family = family;
    spec.system_samples = system_samples;
    return synth_generate(spec);
}

ProtocolConfig small_config() {
    ProtocolConfig config;
    config.warmup_days = 10;
    config.validation_days = 7;
    config.alphas = {0.2};
    config.samples = 200;
    config.gamma_grid = {0.0, 1.0};
    config.methods = {MethodId::kCopulaCqr};
    config.seed = 42;
    return config;
}

const MethodSlice& find_slice(const BacktestResult& r, MethodId m,
                              double alpha) {
    for (const MethodSlice& s : r.slices) {
        if (s.method == m && s.alpha == alpha) return s;
    }
    throw std::logic_error("slice not found");
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

}  // namespace

TEST_CASE("copula CQR holds near-nominal coverage across seeds") {
    ProtocolConfig config;
    config.warmup_days = 30;
    config.alphas = {0.1};
    config.samples = 400;
    config.methods = {MethodId::kCopulaCqr};
    config.seed = 42;

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const DatasetBundle bundle = make_bundle(seed, 90, 0.7);
        const BacktestResult result = run_backtest(bundle, config);
        const MethodSlice& s = find_slice(result, MethodId::kCopulaCqr, 0.1);
        INFO("seed ", seed, " picp ", s.report.picp);
        CHECK(s.report.picp >= 0.86);
        CHECK(s.report.picp <= 0.94);
    }
}

TEST_CASE("identity correlation under-covers on strongly dependent data") {
    const DatasetBundle bundle = make_bundle(3, 40, 0.95);
    CorrelationModel identity;
    identity.site_ids = bundle.site_ids();
    identity.sigma = Eigen::MatrixXd::Identity(3, 3);
    identity.chol = Eigen::MatrixXd::Identity(3, 3);

    std::size_t hits = 0, total = 0;
    for (std::size_t h = 0; h < bundle.grid.count; ++h) {
        std::vector<const QuantileCurve*> curves;
        for (std::size_t s = 0; s < 3; ++s) {
            curves.push_back(&bundle.site_curves[s][h]);
        }
        const RngStream stream(9, h);
        const FleetDistribution dist =
            aggregate_fleet(identity, curves, 400, stream);
        const Interval iv = fleet_interval(dist, 0.1);
        double realized = 0.0;
        for (std::size_t s = 0; s < 3; ++s) realized += bundle.obs[s][h];
        ++total;
        if (iv.covers(realized)) ++hits;
    }
    const double picp = static_cast<double>(hits) /
                        static_cast<double>(total);
    // Ignoring the dependence makes the fleet distribution far too narrow.
    CHECK(picp < 0.87);
    CHECK(picp > 0.3);  // sanity: the marginals themselves are calibrated
}

TEST_CASE("zero gamma grid reduces the weighted method to plain CQR") {
    const DatasetBundle bundle = make_bundle(11, 24, 0.7);
    ProtocolConfig config = small_config();
    config.warmup_days = 10;
    config.gamma_grid = {0.0};
    config.methods = {MethodId::kCopulaCqr, MethodId::kCopulaCacp};

    const BacktestResult result = run_backtest(bundle, config);
    const MethodSlice& cqr = find_slice(result, MethodId::kCopulaCqr, 0.2);
    const MethodSlice& cacp = find_slice(result, MethodId::kCopulaCacp, 0.2);
    REQUIRE(cqr.series.rows.size() == cacp.series.rows.size());
    REQUIRE(!cqr.series.rows.empty());
    for (std::size_t i = 0; i < cqr.series.rows.size(); ++i) {
        CHECK(cqr.series.rows[i].time == cacp.series.rows[i].time);
        CHECK(cqr.series.rows[i].lower == cacp.series.rows[i].lower);
        CHECK(cqr.series.rows[i].upper == cacp.series.rows[i].upper);
        CHECK(cqr.series.rows[i].realized == cacp.series.rows[i].realized);
    }
    for (const GammaChoice& g : result.gamma_choices) {
        CHECK(g.gamma == 0.0);
    }
    CHECK(!result.gamma_choices.empty());
}

TEST_CASE("same inputs give bitwise identical results") {
    const DatasetBundle bundle = make_bundle(21, 20, 0.7);
    ProtocolConfig config = small_config();
    config.methods = {MethodId::kCopulaCacp};

    const BacktestResult a = run_backtest(bundle, config);
    const BacktestResult b = run_backtest(bundle, config);
    REQUIRE(a.slices.size() == b.slices.size());
    for (std::size_t si = 0; si < a.slices.size(); ++si) {
        const auto& ra = a.slices[si].series.rows;
        const auto& rb = b.slices[si].series.rows;
        REQUIRE(ra.size() == rb.size());
        for (std::size_t i = 0; i < ra.size(); ++i) {
            CHECK(ra[i].time == rb[i].time);
            CHECK(ra[i].lower == rb[i].lower);
            CHECK(ra[i].upper == rb[i].upper);
            CHECK(ra[i].realized == rb[i].realized);
        }
    }
    CHECK(a.correlation_refits == b.correlation_refits);
    REQUIRE(a.gamma_choices.size() == b.gamma_choices.size());
    for (std::size_t i = 0; i < a.gamma_choices.size(); ++i) {
        CHECK(a.gamma_choices[i].day == b.gamma_choices[i].day);
        CHECK(a.gamma_choices[i].gamma == b.gamma_choices[i].gamma);
    }
}

TEST_CASE("serial and parallel runs agree bitwise") {
    const DatasetBundle bundle = make_bundle(22, 18, 0.7);
    ProtocolConfig config = small_config();
    config.methods = {MethodId::kCopulaCacp};
    config.parallel = true;
    const BacktestResult a = run_backtest(bundle, config);
    config.parallel = false;
    const BacktestResult b = run_backtest(bundle, config);
    REQUIRE(a.slices.size() == b.slices.size());
    const auto& ra = a.slices[0].series.rows;
    const auto& rb = b.slices[0].series.rows;
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
        CHECK(ra[i].lower == rb[i].lower);
        CHECK(ra[i].upper == rb[i].upper);
    }
}

TEST_CASE("merging the validation week changes the calibration pool") {
    const DatasetBundle bundle = make_bundle(31, 20, 0.7);
    ProtocolConfig config = small_config();

    config.merge_validation = false;
    const BacktestResult a = run_backtest(bundle, config);
    config.merge_validation = true;
    const BacktestResult b = run_backtest(bundle, config);

    const auto& ra = find_slice(a, MethodId::kCopulaCqr, 0.2).series.rows;
    const auto& rb = find_slice(b, MethodId::kCopulaCqr, 0.2).series.rows;
    REQUIRE(ra.size() == rb.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        if (ra[i].lower != rb[i].lower || ra[i].upper != rb[i].upper) {
            any_diff = true;
            break;
        }
    }
    CHECK(any_diff);
}

TEST_CASE("daylight filter keeps a subset of scored hours") {
    const DatasetBundle bundle =
        make_bundle(41, 24, 0.7, MarginalFamily::kDiurnal);
    ProtocolConfig config = small_config();
    config.alphas = {0.1};

    config.daylight_only = false;
    const BacktestResult all = run_backtest(bundle, config);
    config.daylight_only = true;
    const BacktestResult day = run_backtest(bundle, config);

    const auto& rows_all =
        find_slice(all, MethodId::kCopulaCqr, 0.1).series.rows;
    const auto& rows_day =
        find_slice(day, MethodId::kCopulaCqr, 0.1).series.rows;
    REQUIRE(!rows_day.empty());
    CHECK(rows_day.size() < rows_all.size());
    // The diurnal envelope is positive on hours 7..17 of every day.
    CHECK(rows_day.size() == 14u * 11u);
    for (const IntervalRow& r : rows_day) {
        const int h = hour_of_day(r.time);
        CHECK(h >= 7);
        CHECK(h <= 17);
        // Filtered rows are the same intervals, just restricted.
        const auto match = std::find_if(
            rows_all.begin(), rows_all.end(),
            [&](const IntervalRow& q) { return q.time == r.time; });
        REQUIRE(match != rows_all.end());
        CHECK(match->lower == r.lower);
        CHECK(match->upper == r.upper);
    }
}

TEST_CASE("slice grid, metadata, and emitted files") {
    const DatasetBundle bundle = make_bundle(51, 20, 0.7);
    ProtocolConfig config = small_config();
    config.alphas = {0.1, 0.2};
    config.methods = {MethodId::kSystemRaw, MethodId::kCopula};

    const BacktestResult result = run_backtest(bundle, config);
    REQUIRE(result.slices.size() == 4);
    // Method-major, alpha-minor, in config order.
    CHECK(result.slices[0].method == MethodId::kSystemRaw);
    CHECK(result.slices[0].alpha == 0.1);
    CHECK(result.slices[1].method == MethodId::kSystemRaw);
    CHECK(result.slices[1].alpha == 0.2);
    CHECK(result.slices[2].method == MethodId::kCopula);
    CHECK(result.slices[3].alpha == 0.2);

    CHECK(result.region == "SYNTH");
    CHECK(result.fleet_capacity == 180.0);
    CHECK(result.first_test_day ==
          bundle.grid.start + 10 * kSecondsPerDay);
    CHECK(result.last_test_day ==
          bundle.grid.start + 19 * kSecondsPerDay);
    CHECK(result.correlation_refits.size() >= 1);
    CHECK(result.correlation_refits.front() == result.first_test_day);
    CHECK(result.skipped_days == 0);
    for (const MethodSlice& s : result.slices) {
        CHECK(s.report.count == 10 * 24);
        // Normalized series live on the unit capacity scale.
        for (const IntervalRow& r : s.series.rows) {
            CHECK(r.lower >= 0.0);
            CHECK(r.upper <= 1.0 + 1e-12);
        }
    }

    const fs::path dir =
        fs::temp_directory_path() / "fleetcast_test_backtest" / "emit";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::vector<std::string> written =
        emit_results(result, dir.string());
    CHECK(std::count(written.begin(), written.end(), "results.csv") == 1);
    CHECK(std::count(written.begin(), written.end(),
                     "hourly_coverage.csv") == 1);
    CHECK(std::count(written.begin(), written.end(),
                     "intervals_system_raw_0.9.csv") == 1);
    CHECK(std::count(written.begin(), written.end(),
                     "intervals_copula_0.8.csv") == 1);
    for (const std::string& name : written) {
        CHECK(fs::exists(dir / name));
    }
    // One row per (method, level) plus the header.
    CHECK(count_lines(dir / "results.csv") == 1 + 4);
    CHECK(count_lines(dir / "hourly_coverage.csv") == 1 + 4 * 24);
    CHECK(count_lines(dir / "intervals_copula_0.8.csv") == 1 + 240);
    CHECK_THROWS_AS(emit_results(result, (dir / "missing").string()),
                    std::runtime_error);
}

TEST_CASE("system methods require system forecasts") {
    DatasetBundle bundle = make_bundle(61, 16, 0.7);
    bundle.system_curves.clear();
    ProtocolConfig config = small_config();
    config.methods = {MethodId::kSystemRaw};
    CHECK_THROWS_WITH_AS(run_backtest(bundle, config),
                         doctest::Contains("no system forecasts"),
                         std::runtime_error);
}

TEST_CASE("region handling") {
    DatasetBundle bundle = make_bundle(62, 16, 0.7);
    ProtocolConfig config = small_config();

    // Explicit region must exist.
    config.region = "NOPE";
    CHECK_THROWS_WITH_AS(run_backtest(bundle, config),
                         doctest::Contains("not in metadata"),
                         std::runtime_error);

    // Ambiguous multi-region bundles need an explicit choice.
    config.region.clear();
    bundle.sites[0].region = "OTHER";
    CHECK_THROWS_WITH_AS(run_backtest(bundle, config),
                         doctest::Contains("multiple regions"),
                         std::runtime_error);
}

TEST_CASE("too little data for the warmup fails cleanly") {
    const DatasetBundle bundle = make_bundle(63, 8, 0.7);
    ProtocolConfig config = small_config();
    config.warmup_days = 10;
    CHECK_THROWS_WITH_AS(run_backtest(bundle, config),
                         doctest::Contains("no test days"),
                         std::runtime_error);
}

TEST_CASE("optional dumps are populated on request") {
    const DatasetBundle bundle = make_bundle(64, 14, 0.7);
    ProtocolConfig config = small_config();
    config.warmup_days = 10;
    config.dump_fleet_samples = true;
    config.dump_correlation = true;
    const BacktestResult result = run_backtest(bundle, config);
    CHECK(!result.fleet_dumps.empty());
    CHECK(result.fleet_dumps[0].second.size() == config.samples);
    REQUIRE(result.final_model.has_value());
    CHECK(result.final_model->size() == 3);
    CHECK(result.final_model->sigma.rows() == 3);
}
