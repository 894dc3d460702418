#include "fleetcast/backtest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <stdexcept>

#include "fleetcast/context.hpp"
#include "fleetcast/copula.hpp"
#include "fleetcast/correlation.hpp"
#include "fleetcast/csv.hpp"
#include "fleetcast/log.hpp"

namespace fleetcast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Source { kSystem, kCopula };

Source source_of(MethodId m) {
    switch (m) {
        case MethodId::kSystemRaw:
        case MethodId::kSystemCqr:
        case MethodId::kSystemCacp:
            return Source::kSystem;
        default:
            return Source::kCopula;
    }
}

bool is_cacp(MethodId m) {
    return m == MethodId::kSystemCacp || m == MethodId::kCopulaCacp;
}

bool is_cqr(MethodId m) {
    return m == MethodId::kSystemCqr || m == MethodId::kCopulaCqr;
}

bool is_calibrated(MethodId m) { return is_cacp(m) || is_cqr(m); }

// Calibration state of one (source, alpha) pool, frozen for one test day.
struct DayPool {
    std::span<const CalibrationRecord> records;  // final calibration pool
    Standardizer standardizer;
    ScoredContexts calib;   // standardized snapshot of `records`
    double cqr_s_hat = 0.0; // plain/finite-sample score quantile
};

Standardizer standardizer_or_identity(
    std::vector<std::vector<double>>&& contexts, std::size_t dim) {
    if (contexts.size() >= 2) {
        return fit_standardizer(contexts);
    }
    log::warn(
        "calibration pool has fewer than two records; using identity "
        "standardization");
    Standardizer s;
    s.mean.assign(dim, 0.0);
    s.sd.assign(dim, 1.0);
    return s;
}

ScoredContexts standardize_records(std::span<const CalibrationRecord> recs,
                                   const Standardizer& std_params) {
    ScoredContexts out;
    out.dim = std_params.dim();
    out.scores.reserve(recs.size());
    out.contexts.resize(recs.size() * out.dim);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        out.scores.push_back(recs[i].score);
        std_params.transform_into(recs[i].context,
                                  out.contexts.data() + i * out.dim);
    }
    return out;
}

double winkler_point(const Interval& iv, double realized, double alpha) {
    double w = iv.width();
    if (realized > iv.hi) {
        w += (2.0 / alpha) * (realized - iv.hi);
    } else if (realized < iv.lo) {
        w += (2.0 / alpha) * (iv.lo - realized);
    }
    return w;
}

std::string fmt_level(double alpha) {
    return format_double(std::round((1.0 - alpha) * 1e6) / 1e6);
}

}  // namespace

std::string method_name(MethodId m) {
    switch (m) {
        case MethodId::kSystemRaw: return "SYSTEM_RAW";
        case MethodId::kSystemCqr: return "SYSTEM_CQR";
        case MethodId::kSystemCacp: return "SYSTEM_CACP";
        case MethodId::kCopula: return "COPULA";
        case MethodId::kCopulaCqr: return "COPULA_CQR";
        case MethodId::kCopulaCacp: return "COPULA_CACP";
    }
    throw std::logic_error("method_name: unknown method");
}

MethodId parse_method(const std::string& s) {
    std::string up;
    up.reserve(s.size());
    for (char c : s) up.push_back(static_cast<char>(std::toupper(c)));
    if (up == "SYSTEM_RAW") return MethodId::kSystemRaw;
    if (up == "SYSTEM_CQR") return MethodId::kSystemCqr;
    if (up == "SYSTEM_CACP") return MethodId::kSystemCacp;
    if (up == "COPULA") return MethodId::kCopula;
    if (up == "COPULA_CQR") return MethodId::kCopulaCqr;
    if (up == "COPULA_CACP") return MethodId::kCopulaCacp;
    throw std::invalid_argument("unknown method '" + s + "'");
}

void ProtocolConfig::validate() const {
    if (warmup_months < 1 && warmup_days <= 0) {
        throw std::invalid_argument("config: warmup must be positive");
    }
    if (warmup_days < 0) {
        throw std::invalid_argument("config: warmup_days must be >= 0");
    }
    if (validation_days < 1) {
        throw std::invalid_argument("config: validation_days must be >= 1");
    }
    if (alphas.empty()) {
        throw std::invalid_argument("config: alphas must be nonempty");
    }
    std::set<double> seen;
    for (double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) {
            throw std::invalid_argument("config: alpha outside (0, 1)");
        }
        if (!seen.insert(a).second) {
            throw std::invalid_argument("config: duplicate alpha");
        }
    }
    if (samples < 1) {
        throw std::invalid_argument("config: samples must be >= 1");
    }
    if (context_lags < 0) {
        throw std::invalid_argument("config: context_lags must be >= 0");
    }
    if (gamma_grid.empty()) {
        throw std::invalid_argument("config: gamma_grid must be nonempty");
    }
    for (double g : gamma_grid) {
        if (!(g >= 0.0) || !std::isfinite(g)) {
            throw std::invalid_argument(
                "config: gamma values must be finite and >= 0");
        }
    }
    if (methods.empty()) {
        throw std::invalid_argument("config: methods must be nonempty");
    }
    std::set<MethodId> mseen;
    for (MethodId m : methods) {
        if (!mseen.insert(m).second) {
            throw std::invalid_argument("config: duplicate method");
        }
    }
    if (correlation_window_months < 0) {
        throw std::invalid_argument(
            "config: correlation_window_months must be >= 0");
    }
}

void apply_config_entry(ProtocolConfig* c, const std::string& key,
                        const TomlValue& value) {
    auto as_count = [&](const char* name) {
        const std::int64_t v = value.as_int(name);
        if (v < 0 || v > 1'000'000'000) {
            throw std::runtime_error(std::string("config key '") + name +
                                     "' out of range");
        }
        return static_cast<int>(v);
    };
    if (key == "warmup_months") {
        c->warmup_months = as_count("warmup_months");
    } else if (key == "warmup_days") {
        c->warmup_days = as_count("warmup_days");
    } else if (key == "validation_days") {
        c->validation_days = as_count("validation_days");
    } else if (key == "alphas") {
        c->alphas = value.as_double_array("alphas");
    } else if (key == "samples") {
        c->samples = static_cast<std::size_t>(as_count("samples"));
    } else if (key == "context_lags") {
        c->context_lags = as_count("context_lags");
    } else if (key == "gamma_grid") {
        c->gamma_grid = value.as_double_array("gamma_grid");
    } else if (key == "seed") {
        const std::int64_t v = value.as_int("seed");
        if (v < 0) throw std::runtime_error("config: seed must be >= 0");
        c->seed = static_cast<std::uint64_t>(v);
    } else if (key == "methods") {
        c->methods.clear();
        for (const std::string& m : value.as_string_array("methods")) {
            c->methods.push_back(parse_method(m));
        }
    } else if (key == "conformal_mode") {
        const std::string m = value.as_string("conformal_mode");
        if (m == "plain") {
            c->conformal_mode = ConformalMode::kPlain;
        } else if (m == "finite_sample") {
            c->conformal_mode = ConformalMode::kFiniteSample;
        } else {
            throw std::runtime_error(
                "config: conformal_mode must be 'plain' or 'finite_sample'");
        }
    } else if (key == "merge_validation") {
        c->merge_validation = value.as_bool("merge_validation");
    } else if (key == "correlation_window_months") {
        c->correlation_window_months = as_count("correlation_window_months");
    } else if (key == "daylight_only") {
        c->daylight_only = value.as_bool("daylight_only");
    } else if (key == "region") {
        c->region = value.as_string("region");
    } else if (key == "parallel") {
        c->parallel = value.as_bool("parallel");
    } else if (key == "dump_fleet_samples") {
        c->dump_fleet_samples = value.as_bool("dump_fleet_samples");
    } else if (key == "dump_correlation") {
        c->dump_correlation = value.as_bool("dump_correlation");
    } else {
        throw std::runtime_error("config: unknown key '" + key + "'");
    }
}

ProtocolConfig config_from_toml(const TomlTable& table) {
    ProtocolConfig config;
    for (const auto& [key, value] : table) {
        apply_config_entry(&config, key, value);
    }
    config.validate();
    return config;
}

TomlTable config_to_toml(const ProtocolConfig& c) {
    TomlTable t;
    t.emplace("warmup_months",
              TomlValue{static_cast<std::int64_t>(c.warmup_months)});
    t.emplace("warmup_days",
              TomlValue{static_cast<std::int64_t>(c.warmup_days)});
    t.emplace("validation_days",
              TomlValue{static_cast<std::int64_t>(c.validation_days)});
    t.emplace("alphas", TomlValue{c.alphas});
    t.emplace("samples", TomlValue{static_cast<std::int64_t>(c.samples)});
    t.emplace("context_lags",
              TomlValue{static_cast<std::int64_t>(c.context_lags)});
    t.emplace("gamma_grid", TomlValue{c.gamma_grid});
    t.emplace("seed", TomlValue{static_cast<std::int64_t>(c.seed)});
    std::vector<std::string> methods;
    for (MethodId m : c.methods) methods.push_back(method_name(m));
    t.emplace("methods", TomlValue{methods});
    t.emplace("conformal_mode",
              TomlValue{std::string(c.conformal_mode == ConformalMode::kPlain
                                        ? "plain"
                                        : "finite_sample")});
    t.emplace("merge_validation", TomlValue{c.merge_validation});
    t.emplace("correlation_window_months",
              TomlValue{static_cast<std::int64_t>(
                  c.correlation_window_months)});
    t.emplace("daylight_only", TomlValue{c.daylight_only});
    t.emplace("region", TomlValue{c.region});
    t.emplace("parallel", TomlValue{c.parallel});
    t.emplace("dump_fleet_samples", TomlValue{c.dump_fleet_samples});
    t.emplace("dump_correlation", TomlValue{c.dump_correlation});
    return t;
}

namespace {

// Everything run_backtest needs to share across days.
struct Engine {
    const DatasetBundle* data = nullptr;
    const std::vector<QuantileCurve>* system = nullptr;  // may be null
    ProtocolConfig config;
    double capacity = 0.0;
    std::size_t n_sites = 0;

    // Realized fleet totals on hours where every site reported.
    std::vector<Timestamp> fleet_times;
    std::vector<double> fleet_values;
    // Per grid hour: fleet total or NaN.
    std::vector<double> fleet_by_hour;

    std::map<std::pair<int, std::size_t>, CalibrationStore> stores;
    // (source as int, alpha index) -> store

    CalibrationStore& store(Source s, std::size_t ai) {
        return stores[{static_cast<int>(s), ai}];
    }

    bool uses_source(Source s) const {
        for (MethodId m : config.methods) {
            if (source_of(m) == s) return true;
        }
        return false;
    }
    bool uses_cacp() const {
        for (MethodId m : config.methods) {
            if (is_cacp(m)) return true;
        }
        return false;
    }

    // Number of fleet-history entries strictly before cutoff.
    std::size_t history_before(Timestamp cutoff) const {
        auto it = std::lower_bound(fleet_times.begin(), fleet_times.end(),
                                   cutoff);
        return static_cast<std::size_t>(it - fleet_times.begin());
    }

    std::span<const Timestamp> history_times(Timestamp cutoff) const {
        return {fleet_times.data(), history_before(cutoff)};
    }
    std::span<const double> history_values(Timestamp cutoff) const {
        return {fleet_values.data(), history_before(cutoff)};
    }

    // All site curves at grid hour h, or nullopt when any is missing.
    std::optional<std::vector<const QuantileCurve*>> copula_curves(
        std::size_t h) const {
        std::vector<const QuantileCurve*> out(n_sites);
        for (std::size_t s = 0; s < n_sites; ++s) {
            const QuantileCurve& c = data->site_curves[s][h];
            if (c.empty()) return std::nullopt;
            out[s] = &c;
        }
        return out;
    }

    const QuantileCurve* system_curve(std::size_t h) const {
        if (!system) return nullptr;
        const QuantileCurve& c = (*system)[h];
        return c.empty() ? nullptr : &c;
    }

    // Normal-score matrix over complete hours in [from, to); returns the
    // last hour used through `fitted_through`.
    Eigen::MatrixXd score_matrix(Timestamp from, Timestamp to,
                                 Timestamp* fitted_through) const {
        std::vector<std::size_t> cols;
        for (std::size_t h = 0; h < data->grid.count; ++h) {
            const Timestamp t = data->grid.time(h);
            if (t < from || t >= to) continue;
            if (std::isnan(fleet_by_hour[h])) continue;
            bool complete = true;
            for (std::size_t s = 0; s < n_sites; ++s) {
                if (data->site_curves[s][h].empty()) {
                    complete = false;
                    break;
                }
            }
            if (complete) cols.push_back(h);
        }
        if (cols.size() < 2) {
            throw std::runtime_error(
                "correlation fit: fewer than 2 complete hours in window");
        }
        Eigen::MatrixXd pit(static_cast<Eigen::Index>(n_sites),
                            static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const std::size_t h = cols[j];
            for (std::size_t s = 0; s < n_sites; ++s) {
                pit(static_cast<Eigen::Index>(s),
                    static_cast<Eigen::Index>(j)) =
                    pit_value(data->site_curves[s][h], data->obs[s][h]);
            }
        }
        *fitted_through = data->grid.time(cols.back());
        return normal_scores(pit);
    }
};

}  // namespace

BacktestResult run_backtest(const DatasetBundle& bundle,
                            const ProtocolConfig& config) {
    config.validate();

    Engine eng;
    eng.config = config;

    DatasetBundle regional;
    if (!config.region.empty()) {
        regional = select_region(bundle, config.region);
        eng.data = &regional;
    } else {
        const auto regions = bundle.regions();
        if (regions.size() != 1) {
            std::string list;
            for (const auto& r : regions) {
                if (!list.empty()) list += ", ";
                list += r;
            }
            throw std::runtime_error(
                "dataset spans multiple regions {" + list +
                "}; set region in the config");
        }
        eng.data = &bundle;
    }
    const DatasetBundle& data = *eng.data;
    const std::string region = data.sites.front().region;

    BacktestResult result;
    result.region = region;
    eng.capacity = data.fleet_capacity();
    result.fleet_capacity = eng.capacity;
    eng.n_sites = data.sites.size();

    if (eng.uses_source(Source::kSystem)) {
        auto it = data.system_curves.find(region);
        if (it == data.system_curves.end()) {
            throw std::runtime_error(
                "system-level methods requested but no system forecasts for "
                "region '" + region + "'");
        }
        eng.system = &it->second;
    }

    // Realized fleet totals.
    const std::size_t n_hours = data.grid.count;
    eng.fleet_by_hour.assign(n_hours, kNaN);
    for (std::size_t h = 0; h < n_hours; ++h) {
        double total = 0.0;
        bool complete = true;
        for (std::size_t s = 0; s < eng.n_sites; ++s) {
            const double v = data.obs[s][h];
            if (std::isnan(v)) {
                complete = false;
                break;
            }
            total += v;
        }
        if (complete) {
            eng.fleet_by_hour[h] = total;
            eng.fleet_times.push_back(data.grid.time(h));
            eng.fleet_values.push_back(total);
        }
    }

    // Day boundaries.
    Timestamp base_day = day_start(data.grid.start);
    if (base_day != data.grid.start) base_day += kSecondsPerDay;
    const Timestamp first_test =
        config.warmup_days > 0
            ? base_day + static_cast<Timestamp>(config.warmup_days) *
                             kSecondsPerDay
            : add_months(base_day, config.warmup_months);
    const Timestamp last_day = day_start(data.grid.time(n_hours - 1));
    if (first_test > last_day) {
        throw std::runtime_error(
            "warmup window leaves no test days (dataset too short)");
    }
    result.first_test_day = first_test;
    result.last_test_day = last_day;

    const Timestamp validation_span =
        static_cast<Timestamp>(config.validation_days) * kSecondsPerDay;
    const int n_alpha = static_cast<int>(config.alphas.size());

    // --- initial correlation fit on the warmup window ---
    auto fit_window_start = [&](Timestamp d) -> Timestamp {
        if (config.correlation_window_months <= 0) {
            return std::numeric_limits<Timestamp>::min();
        }
        return add_months(d, -config.correlation_window_months);
    };

    CorrelationModel model;
    bool have_model = false;
    if (eng.uses_source(Source::kCopula)) {
        Timestamp fitted_through = 0;
        const Eigen::MatrixXd scores = eng.score_matrix(
            fit_window_start(first_test), first_test, &fitted_through);
        model = fit_correlation_model(scores, data.site_ids(), fitted_through);
        have_model = true;
        result.correlation_refits.push_back(first_test);
    }

    // --- warmup calibration records (in-sample) ---
    const SunTable warmup_sun =
        build_sun_table(eng.fleet_times, eng.fleet_values, first_test);
    const auto warmup_hist_t = eng.history_times(first_test);
    const auto warmup_hist_v = eng.history_values(first_test);

    for (std::size_t h = 0; h < n_hours; ++h) {
        const Timestamp t = data.grid.time(h);
        if (t >= first_test) break;
        const double realized = eng.fleet_by_hour[h];
        if (std::isnan(realized)) continue;
        std::vector<double> ctx;
        try {
            ctx = build_context(warmup_hist_t, warmup_hist_v, t,
                                config.context_lags, eng.capacity,
                                warmup_sun);
        } catch (const std::invalid_argument&) {
            continue;  // not enough lag history at the window edge
        }

        if (eng.uses_source(Source::kCopula) && have_model) {
            const auto curves = eng.copula_curves(h);
            if (curves) {
                const RngStream stream(
                    config.seed,
                    derive_stream_id(stream_tag::kCopulaSampling, t));
                const FleetDistribution dist =
                    aggregate_fleet(model, *curves, config.samples, stream,
                                    config.parallel);
                for (int ai = 0; ai < n_alpha; ++ai) {
                    const Interval raw =
                        fleet_interval(dist, config.alphas[
                                                 static_cast<std::size_t>(ai)]);
                    CalibrationRecord rec;
                    rec.time = t;
                    rec.score = conformity_score(raw, realized);
                    rec.context = ctx;
                    rec.interval = raw;
                    rec.realized = realized;
                    eng.store(Source::kCopula, static_cast<std::size_t>(ai))
                        .append(std::move(rec));
                    ++result.records_appended;
                }
            }
        }
        if (eng.uses_source(Source::kSystem)) {
            const QuantileCurve* sc = eng.system_curve(h);
            if (sc) {
                for (int ai = 0; ai < n_alpha; ++ai) {
                    const double a =
                        config.alphas[static_cast<std::size_t>(ai)];
                    const Interval raw{sc->inv_cdf(a / 2.0),
                                       sc->inv_cdf(1.0 - a / 2.0)};
                    CalibrationRecord rec;
                    rec.time = t;
                    rec.score = conformity_score(raw, realized);
                    rec.context = ctx;
                    rec.interval = raw;
                    rec.realized = realized;
                    eng.store(Source::kSystem, static_cast<std::size_t>(ai))
                        .append(std::move(rec));
                    ++result.records_appended;
                }
            }
        }
    }

    // --- rolling test loop ---
    std::map<std::pair<std::size_t, int>, std::vector<IntervalRow>> produced;
    // (method index in config order, alpha index) -> scored rows

    Timestamp current_month = month_start(first_test);
    for (Timestamp d = first_test; d <= last_day; d += kSecondsPerDay) {
        // (a) monthly correlation refit
        if (eng.uses_source(Source::kCopula) && d != first_test &&
            month_start(d) != current_month) {
            try {
                Timestamp fitted_through = 0;
                const Eigen::MatrixXd scores = eng.score_matrix(
                    fit_window_start(d), d, &fitted_through);
                model = fit_correlation_model(scores, data.site_ids(),
                                              fitted_through);
                have_model = true;
                result.correlation_refits.push_back(d);
            } catch (const std::exception& e) {
                log::warn("correlation refit failed for " + format_date(d) +
                          " (" + e.what() + "); keeping previous model");
                ++result.method_failures;
            }
        }
        current_month = month_start(d);

        // Usable-hour precheck.
        std::vector<std::size_t> day_hours;
        for (int hh = 0; hh < kHoursPerDay; ++hh) {
            const auto idx = data.grid.index(d + hh * kSecondsPerHour);
            if (idx) day_hours.push_back(*idx);
        }
        bool any_usable = false;
        for (std::size_t h : day_hours) {
            if (eng.uses_source(Source::kCopula) && have_model &&
                eng.copula_curves(h)) {
                any_usable = true;
                break;
            }
            if (eng.uses_source(Source::kSystem) && eng.system_curve(h)) {
                any_usable = true;
                break;
            }
        }
        if (day_hours.empty() || !any_usable) {
            ++result.skipped_days;
            log::warn("skipping " + format_date(d) + ": no usable hours");
            continue;
        }

        // (b) freeze per-(source, alpha) calibration pools
        const Timestamp gamma_cutoff = d - validation_span;
        const Timestamp final_cutoff = config.merge_validation ? d
                                                               : gamma_cutoff;
        std::map<std::pair<int, std::size_t>, DayPool> pools;
        for (const auto& [key, st] : eng.stores) {
            DayPool pool;
            const auto& recs = st.records();
            const std::size_t n_final = st.count_before(final_cutoff);
            pool.records = {recs.data(), n_final};
            std::vector<std::vector<double>> ctxs;
            ctxs.reserve(n_final);
            for (std::size_t i = 0; i < n_final; ++i) {
                ctxs.push_back(recs[i].context);
            }
            pool.standardizer = standardizer_or_identity(
                std::move(ctxs),
                static_cast<std::size_t>(
                    context_dimension(config.context_lags)));
            pool.calib = standardize_records(pool.records, pool.standardizer);
            std::span<const double> score_span{pool.calib.scores};
            pool.cqr_s_hat = conformal_quantile(
                score_span, config.alphas[key.second], config.conformal_mode);
            pools.emplace(key, std::move(pool));
        }

        // (c) gamma selection for CACP methods
        std::map<std::pair<int, std::size_t>, double> gamma_sel;
        if (eng.uses_cacp()) {
            for (const auto& [key, st] : eng.stores) {
                const Source src = static_cast<Source>(key.first);
                bool wanted = false;
                for (MethodId m : config.methods) {
                    if (is_cacp(m) && source_of(m) == src) wanted = true;
                }
                if (!wanted) continue;
                const double alpha = config.alphas[key.second];
                const auto& recs = st.records();
                const std::size_t n_snap = st.count_before(gamma_cutoff);
                const std::size_t n_val_end = st.count_before(d);
                double best_gamma = config.gamma_grid.front();
                if (n_snap > 0 && n_val_end > n_snap) {
                    // Score pool and its standardization for selection.
                    std::span<const CalibrationRecord> snap{recs.data(),
                                                            n_snap};
                    std::vector<std::vector<double>> ctxs;
                    ctxs.reserve(n_snap);
                    for (std::size_t i = 0; i < n_snap; ++i) {
                        ctxs.push_back(recs[i].context);
                    }
                    const Standardizer sel_std = standardizer_or_identity(
                        std::move(ctxs),
                        static_cast<std::size_t>(
                            context_dimension(config.context_lags)));
                    const ScoredContexts sel_calib =
                        standardize_records(snap, sel_std);
                    double best_score =
                        std::numeric_limits<double>::infinity();
                    for (double gamma : config.gamma_grid) {
                        double total = 0.0;
                        std::size_t n_used = 0;
                        for (std::size_t v = n_snap; v < n_val_end; ++v) {
                            const CalibrationRecord& rec = recs[v];
                            if (std::isnan(rec.realized) ||
                                std::isnan(rec.interval.lo)) {
                                continue;
                            }
                            const std::vector<double> q =
                                sel_std.transform(rec.context);
                            const Interval iv = cacp_calibrate(
                                rec.interval, q, sel_calib, gamma, alpha, 0.0,
                                eng.capacity, nullptr, config.parallel);
                            total += winkler_point(iv, rec.realized, alpha);
                            ++n_used;
                        }
                        if (n_used == 0) break;
                        const double mean = total / static_cast<double>(n_used);
                        if (mean < best_score) {
                            best_score = mean;
                            best_gamma = gamma;
                        }
                    }
                } else {
                    log::warn("gamma selection for " + format_date(d) +
                              ": empty snapshot or validation window; using "
                              "first grid value");
                }
                gamma_sel[key] = best_gamma;
                for (MethodId m : config.methods) {
                    if (is_cacp(m) && source_of(m) == src) {
                        result.gamma_choices.push_back(GammaChoice{
                            d, m, alpha, best_gamma});
                    }
                }
            }
        }

        // (d) interval production for every hour of day d
        const SunTable day_sun =
            build_sun_table(eng.fleet_times, eng.fleet_values, d);
        const auto hist_t = eng.history_times(d);
        const auto hist_v = eng.history_values(d);

        struct HourOutput {
            std::size_t grid_index;
            Timestamp time;
            // per (method index, alpha index)
            std::map<std::pair<std::size_t, int>, Interval> intervals;
            std::map<int, Interval> copula_raw;  // per alpha index
            std::map<int, Interval> system_raw;
            bool has_context = false;
            std::vector<double> context;
        };
        std::vector<HourOutput> day_out;

        for (std::size_t h : day_hours) {
            HourOutput out;
            out.grid_index = h;
            out.time = data.grid.time(h);
            const Timestamp t = out.time;

            // Shared context for CACP and for record appending.
            try {
                out.context =
                    build_context(hist_t, hist_v, t, config.context_lags,
                                  eng.capacity, day_sun);
                out.has_context = true;
            } catch (const std::invalid_argument& e) {
                log::warn(std::string("context unavailable at ") +
                          format_timestamp(t) + ": " + e.what());
            }

            // Raw interval sources.
            std::optional<FleetDistribution> dist;
            if (eng.uses_source(Source::kCopula) && have_model) {
                const auto curves = eng.copula_curves(h);
                if (curves) {
                    const RngStream stream(
                        config.seed,
                        derive_stream_id(stream_tag::kCopulaSampling, t));
                    dist = aggregate_fleet(model, *curves, config.samples,
                                           stream, config.parallel);
                    if (config.dump_fleet_samples) {
                        result.fleet_dumps.emplace_back(t,
                                                        dist->sorted_totals);
                    }
                    for (int ai = 0; ai < n_alpha; ++ai) {
                        out.copula_raw[ai] = fleet_interval(
                            *dist,
                            config.alphas[static_cast<std::size_t>(ai)]);
                    }
                }
            }
            if (eng.uses_source(Source::kSystem)) {
                const QuantileCurve* sc = eng.system_curve(h);
                if (sc) {
                    for (int ai = 0; ai < n_alpha; ++ai) {
                        const double a =
                            config.alphas[static_cast<std::size_t>(ai)];
                        out.system_raw[ai] =
                            Interval{sc->inv_cdf(a / 2.0),
                                     sc->inv_cdf(1.0 - a / 2.0)};
                    }
                }
            }

            for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
                const MethodId m = config.methods[mi];
                const Source src = source_of(m);
                const auto& raws = (src == Source::kCopula) ? out.copula_raw
                                                            : out.system_raw;
                if (raws.empty()) {
                    ++result.skipped_hours;
                    continue;
                }
                for (int ai = 0; ai < n_alpha; ++ai) {
                    const double alpha =
                        config.alphas[static_cast<std::size_t>(ai)];
                    const Interval raw = raws.at(ai);
                    try {
                        Interval iv = raw;
                        if (is_calibrated(m)) {
                            const auto pool_key = std::make_pair(
                                static_cast<int>(src),
                                static_cast<std::size_t>(ai));
                            const DayPool& pool = pools.at(pool_key);
                            if (is_cqr(m)) {
                                iv = calibrate_interval(raw, pool.cqr_s_hat,
                                                        0.0, eng.capacity);
                            } else {
                                if (!out.has_context) {
                                    throw std::invalid_argument(
                                        "no context for CACP");
                                }
                                const std::vector<double> q =
                                    pool.standardizer.transform(out.context);
                                iv = cacp_calibrate(
                                    raw, q, pool.calib,
                                    gamma_sel.at(pool_key), alpha, 0.0,
                                    eng.capacity, nullptr, config.parallel);
                            }
                        }
                        out.intervals[{mi, ai}] = iv;
                    } catch (const std::exception& e) {
                        ++result.method_failures;
                        log::warn(method_name(m) + " failed at " +
                                  format_timestamp(t) + ": " + e.what());
                    }
                }
            }
            day_out.push_back(std::move(out));
        }

        // (e) scoring: attach realized values, emit rows, extend stores.
        bool any_scored = false;
        for (const HourOutput& out : day_out) {
            const double realized = eng.fleet_by_hour[out.grid_index];
            if (std::isnan(realized)) {
                ++result.skipped_hours;
                continue;
            }
            for (const auto& [key, iv] : out.intervals) {
                produced[key].push_back(
                    IntervalRow{out.time, iv.lo, iv.hi, realized});
            }
            any_scored = true;
            if (!out.has_context) continue;
            for (int ai = 0; ai < n_alpha; ++ai) {
                auto append_record = [&](Source src,
                                         const std::map<int, Interval>& raws) {
                    auto it = raws.find(ai);
                    if (it == raws.end()) return;
                    CalibrationRecord rec;
                    rec.time = out.time;
                    rec.score = conformity_score(it->second, realized);
                    rec.context = out.context;
                    rec.interval = it->second;
                    rec.realized = realized;
                    eng.store(src, static_cast<std::size_t>(ai))
                        .append(std::move(rec));
                    ++result.records_appended;
                };
                if (eng.uses_source(Source::kCopula)) {
                    append_record(Source::kCopula, out.copula_raw);
                }
                if (eng.uses_source(Source::kSystem)) {
                    append_record(Source::kSystem, out.system_raw);
                }
            }
        }
        if (!any_scored) {
            ++result.skipped_days;
            log::warn("no scorable hours on " + format_date(d));
        }
    }

    // --- metric assembly ---
    const SunTable full_sun = build_sun_table(
        eng.fleet_times, eng.fleet_values,
        std::numeric_limits<Timestamp>::max());
    auto is_daylight = [&](Timestamp t) {
        const Timestamp day = day_start(t);
        auto it = std::upper_bound(full_sun.days.begin(),
                                   full_sun.days.end(), day);
        if (it == full_sun.days.begin()) return false;
        const std::size_t idx =
            static_cast<std::size_t>(it - full_sun.days.begin()) - 1;
        const double hour = static_cast<double>(hour_of_day(t));
        return hour >= std::floor(full_sun.sunrise[idx]) &&
               hour <= std::ceil(full_sun.sunset[idx]);
    };

    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        for (int ai = 0; ai < n_alpha; ++ai) {
            MethodSlice slice;
            slice.method = config.methods[mi];
            slice.alpha = config.alphas[static_cast<std::size_t>(ai)];
            IntervalSeries raw_series;
            raw_series.alpha = slice.alpha;
            auto it = produced.find({mi, ai});
            if (it != produced.end()) {
                for (const IntervalRow& r : it->second) {
                    if (config.daylight_only && !is_daylight(r.time)) {
                        continue;
                    }
                    raw_series.rows.push_back(r);
                }
            }
            if (raw_series.rows.empty()) {
                log::warn("no scored hours for " +
                          method_name(slice.method) + " at level " +
                          fmt_level(slice.alpha));
                continue;
            }
            slice.series = normalize_by_capacity(raw_series, eng.capacity);
            slice.series.validate();
            slice.report = compute_metrics(slice.series);
            result.slices.push_back(std::move(slice));
        }
    }

    if (config.dump_correlation && have_model) {
        result.final_model = std::move(model);
    }
    return result;
}

std::vector<std::string> emit_results(const BacktestResult& result,
                                      const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    if (!fs::exists(dir)) {
        throw std::runtime_error("output directory does not exist: " +
                                 out_dir);
    }
    std::vector<std::string> written;

    {
        CsvWriter w((dir / "results.csv").string());
        w.row("region", "method", "level", "picp", "aiw", "ws");
        for (const MethodSlice& s : result.slices) {
            w.field(result.region);
            w.field(method_name(s.method));
            w.field(fmt_level(s.alpha));
            w.field(s.report.picp);
            w.field(s.report.aiw);
            w.field(s.report.winkler);
            w.end_row();
        }
        written.push_back("results.csv");
    }
    {
        CsvWriter w((dir / "hourly_coverage.csv").string());
        w.row("region", "method", "level", "hour", "coverage", "count");
        for (const MethodSlice& s : result.slices) {
            for (int h = 0; h < kHoursPerDay; ++h) {
                w.field(result.region);
                w.field(method_name(s.method));
                w.field(fmt_level(s.alpha));
                w.field(static_cast<std::int64_t>(h));
                const std::size_t c =
                    s.report.hourly.counts[static_cast<std::size_t>(h)];
                if (c == 0) {
                    w.field("");  // missing, not zero
                } else {
                    w.field(s.report.hourly
                                .coverage[static_cast<std::size_t>(h)]);
                }
                w.field(c);
                w.end_row();
            }
        }
        written.push_back("hourly_coverage.csv");
    }
    for (const MethodSlice& s : result.slices) {
        std::string name = "intervals_" + method_name(s.method) + "_" +
                           fmt_level(s.alpha) + ".csv";
        for (char& c : name) c = static_cast<char>(std::tolower(c));
        save_interval_series(s.series, (dir / name).string());
        written.push_back(name);
    }
    {
        CsvWriter w((dir / "gamma_selections.csv").string());
        w.row("day", "method", "level", "gamma");
        for (const GammaChoice& g : result.gamma_choices) {
            w.row(format_date(g.day), method_name(g.method),
                  fmt_level(g.alpha), g.gamma);
        }
        written.push_back("gamma_selections.csv");
    }
    if (!result.fleet_dumps.empty()) {
        CsvWriter w((dir / "fleet_samples.csv").string());
        w.row("timestamp", "sample_index", "value");
        for (const auto& [t, samples] : result.fleet_dumps) {
            const std::string ts = format_timestamp(t);
            for (std::size_t i = 0; i < samples.size(); ++i) {
                w.row(ts, i, samples[i]);
            }
        }
        written.push_back("fleet_samples.csv");
    }
    if (result.final_model) {
        save_correlation_model(*result.final_model,
                               (dir / "correlation_model.csv").string());
        written.push_back("correlation_model.csv");
    }
    return written;
}

}  // namespace fleetcast
