#include "fleetcast/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fleetcast/csv.hpp"
#include "fleetcast/log.hpp"

namespace fleetcast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMaxGapExamples = 20;

// Collects malformed-row diagnostics so a load reports every problem at
// once instead of dying on the first.
class ErrorCollector {
  public:
    void add(const std::string& file, std::size_t line,
             const std::string& msg) {
        std::ostringstream os;
        os << file << ":" << line << ": " << msg;
        errors_.push_back(os.str());
    }

    void fail_if_any() const {
        if (errors_.empty()) return;
        for (const std::string& e : errors_) log::warn(e);
        throw std::runtime_error("load failed with " +
                                 std::to_string(errors_.size()) +
                                 " malformed row(s); see diagnostics above");
    }

    bool any() const { return !errors_.empty(); }

  private:
    std::vector<std::string> errors_;
};

struct ObsRow {
    std::size_t site = 0;
    Timestamp time = 0;
    double value = 0.0;
    std::size_t line = 0;
};

struct KnotRow {
    double level = 0.0;
    double value = 0.0;
    std::size_t line = 0;
};

// Shares identical level grids between curves; a year of NREL-style data
// holds millions of curves over a single 99-level grid.
class LevelPool {
  public:
    QuantileCurve::LevelGrid intern(const std::vector<double>& levels) {
        auto it = pool_.find(levels);
        if (it != pool_.end()) return it->second;
        auto grid = std::make_shared<const std::vector<double>>(levels);
        pool_.emplace(levels, grid);
        return grid;
    }

  private:
    std::map<std::vector<double>, QuantileCurve::LevelGrid> pool_;
};

std::optional<Timestamp> parse_time_field(const std::string& s,
                                          ErrorCollector* errors,
                                          const std::string& file,
                                          std::size_t line) {
    try {
        return parse_timestamp(s);
    } catch (const std::invalid_argument& e) {
        errors->add(file, line, e.what());
        return std::nullopt;
    }
}

std::optional<double> parse_num_field(const std::string& s,
                                      ErrorCollector* errors,
                                      const std::string& file,
                                      std::size_t line) {
    try {
        return parse_double(s, file);
    } catch (const std::runtime_error& e) {
        errors->add(file, line, e.what());
        return std::nullopt;
    }
}

void expect_header(CsvReader* reader, const std::vector<std::string>& want) {
    std::vector<std::string> row;
    if (!reader->next_row(&row) || row != want) {
        std::string expected;
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (i) expected += ',';
            expected += want[i];
        }
        throw std::runtime_error(reader->path() + ": expected header '" +
                                 expected + "'");
    }
}

}  // namespace

std::optional<std::size_t> HourGrid::index(Timestamp t) const {
    if (t < start) return std::nullopt;
    const Timestamp delta = t - start;
    if (delta % kSecondsPerHour != 0) return std::nullopt;
    const std::size_t i = static_cast<std::size_t>(delta / kSecondsPerHour);
    if (i >= count) return std::nullopt;
    return i;
}

double DatasetBundle::fleet_capacity() const {
    double total = 0.0;
    for (const SiteMeta& s : sites) total += s.capacity_mw;
    return total;
}

std::vector<std::string> DatasetBundle::site_ids() const {
    std::vector<std::string> ids;
    ids.reserve(sites.size());
    for (const SiteMeta& s : sites) ids.push_back(s.site_id);
    return ids;
}

std::vector<std::string> DatasetBundle::regions() const {
    std::set<std::string> rs;
    for (const SiteMeta& s : sites) rs.insert(s.region);
    return std::vector<std::string>(rs.begin(), rs.end());
}

std::vector<SiteMeta> load_sites(const std::string& path) {
    CsvReader reader(path);
    expect_header(&reader,
                  {"site_id", "capacity_mw", "latitude", "longitude",
                   "region"});
    ErrorCollector errors;
    std::vector<SiteMeta> sites;
    std::vector<std::string> row;
    while (reader.next_row(&row)) {
        const std::size_t line = reader.line_number();
        if (row.size() != 5) {
            errors.add(path, line, "expected 5 fields");
            continue;
        }
        SiteMeta meta;
        meta.site_id = row[0];
        if (meta.site_id.empty()) {
            errors.add(path, line, "empty site_id");
            continue;
        }
        auto cap = parse_num_field(row[1], &errors, path, line);
        auto lat = parse_num_field(row[2], &errors, path, line);
        auto lon = parse_num_field(row[3], &errors, path, line);
        if (!cap || !lat || !lon) continue;
        meta.capacity_mw = *cap;
        meta.latitude = *lat;
        meta.longitude = *lon;
        meta.region = row[4];
        if (!(meta.capacity_mw > 0.0)) {
            errors.add(path, line, "capacity must be > 0");
            continue;
        }
        if (std::abs(meta.latitude) > 90.0 || std::abs(meta.longitude) > 180.0) {
            errors.add(path, line, "latitude/longitude out of range");
            continue;
        }
        if (meta.region.empty()) {
            errors.add(path, line, "empty region");
            continue;
        }
        sites.push_back(std::move(meta));
    }
    errors.fail_if_any();
    if (sites.empty()) {
        throw std::runtime_error(path + ": no sites");
    }
    std::sort(sites.begin(), sites.end(),
              [](const SiteMeta& a, const SiteMeta& b) {
                  return a.site_id < b.site_id;
              });
    for (std::size_t i = 1; i < sites.size(); ++i) {
        if (sites[i].site_id == sites[i - 1].site_id) {
            throw std::runtime_error(path + ": duplicate site_id '" +
                                     sites[i].site_id + "'");
        }
    }
    return sites;
}

DatasetBundle load_bundle(const BundlePaths& paths) {
    DatasetBundle bundle;
    bundle.sites = load_sites(paths.sites);

    std::map<std::string, std::size_t> site_index;
    for (std::size_t i = 0; i < bundle.sites.size(); ++i) {
        site_index[bundle.sites[i].site_id] = i;
    }
    std::map<std::string, double> region_capacity;
    for (const SiteMeta& s : bundle.sites) {
        region_capacity[s.region] += s.capacity_mw;
    }

    ErrorCollector errors;
    Timestamp min_t = std::numeric_limits<Timestamp>::max();
    Timestamp max_t = std::numeric_limits<Timestamp>::min();
    auto touch = [&](Timestamp t) {
        min_t = std::min(min_t, t);
        max_t = std::max(max_t, t);
    };

    // --- observations ---
    std::vector<ObsRow> obs_rows;
    {
        CsvReader reader(paths.observations);
        expect_header(&reader, {"timestamp", "site_id", "value"});
        std::vector<std::string> row;
        while (reader.next_row(&row)) {
            const std::size_t line = reader.line_number();
            if (row.size() != 3) {
                errors.add(paths.observations, line, "expected 3 fields");
                continue;
            }
            auto t = parse_time_field(row[0], &errors, paths.observations,
                                      line);
            if (!t) continue;
            auto it = site_index.find(row[1]);
            if (it == site_index.end()) {
                throw std::runtime_error(paths.observations + ":" +
                                         std::to_string(line) +
                                         ": unknown site_id '" + row[1] + "'");
            }
            auto v = parse_num_field(row[2], &errors, paths.observations,
                                     line);
            if (!v) continue;
            const double cap = bundle.sites[it->second].capacity_mw;
            if (std::isnan(*v) || *v < 0.0 || *v > cap) {
                errors.add(paths.observations, line,
                           "value outside [0, capacity]");
                continue;
            }
            obs_rows.push_back(ObsRow{it->second, *t, *v, line});
            touch(*t);
            ++bundle.coverage.obs_rows;
        }
    }

    // --- forecast files (shared long-form reader) ---
    struct GroupKey {
        std::size_t entity;
        Timestamp time;
        bool operator<(const GroupKey& o) const {
            return entity != o.entity ? entity < o.entity : time < o.time;
        }
    };
    using KnotGroups = std::map<GroupKey, std::vector<KnotRow>>;

    auto read_forecasts = [&](const std::string& path, bool system,
                              std::vector<std::string>* system_ids,
                              std::size_t* row_count) {
        KnotGroups groups;
        CsvReader reader(path);
        expect_header(&reader, {"timestamp", "site_id", "level", "value"});
        std::vector<std::string> row;
        while (reader.next_row(&row)) {
            const std::size_t line = reader.line_number();
            if (row.size() != 4) {
                errors.add(path, line, "expected 4 fields");
                continue;
            }
            auto t = parse_time_field(row[0], &errors, path, line);
            if (!t) continue;
            std::size_t entity;
            if (system) {
                if (!region_capacity.count(row[1])) {
                    throw std::runtime_error(
                        path + ":" + std::to_string(line) +
                        ": unknown system/region id '" + row[1] + "'");
                }
                auto pos = std::find(system_ids->begin(), system_ids->end(),
                                     row[1]);
                if (pos == system_ids->end()) {
                    system_ids->push_back(row[1]);
                    entity = system_ids->size() - 1;
                } else {
                    entity = static_cast<std::size_t>(pos -
                                                      system_ids->begin());
                }
            } else {
                auto it = site_index.find(row[1]);
                if (it == site_index.end()) {
                    throw std::runtime_error(path + ":" +
                                             std::to_string(line) +
                                             ": unknown site_id '" + row[1] +
                                             "'");
                }
                entity = it->second;
            }
            auto level = parse_num_field(row[2], &errors, path, line);
            auto value = parse_num_field(row[3], &errors, path, line);
            if (!level || !value) continue;
            groups[GroupKey{entity, *t}].push_back(
                KnotRow{*level, *value, line});
            touch(*t);
            ++*row_count;
        }
        return groups;
    };

    std::vector<std::string> system_ids;
    KnotGroups site_groups = read_forecasts(
        paths.site_forecasts, false, nullptr, &bundle.coverage.site_forecast_rows);
    KnotGroups system_groups;
    if (!paths.system_forecasts.empty()) {
        system_groups =
            read_forecasts(paths.system_forecasts, true, &system_ids,
                           &bundle.coverage.system_forecast_rows);
    }

    errors.fail_if_any();
    if (min_t > max_t) {
        throw std::runtime_error("no data rows in any input file");
    }
    bundle.grid.start = min_t;
    bundle.grid.count =
        static_cast<std::size_t>((max_t - min_t) / kSecondsPerHour) + 1;

    // --- observations onto the grid ---
    const std::size_t n_sites = bundle.sites.size();
    const std::size_t n_hours = bundle.grid.count;
    bundle.obs.assign(n_sites, std::vector<double>(n_hours, kNaN));
    std::sort(obs_rows.begin(), obs_rows.end(),
              [](const ObsRow& a, const ObsRow& b) {
                  return a.site != b.site ? a.site < b.site : a.time < b.time;
              });
    for (std::size_t i = 0; i < obs_rows.size(); ++i) {
        const ObsRow& r = obs_rows[i];
        if (i > 0 && obs_rows[i - 1].site == r.site &&
            obs_rows[i - 1].time == r.time) {
            errors.add(paths.observations, r.line,
                       "duplicate observation for site/timestamp");
            continue;
        }
        const auto idx = bundle.grid.index(r.time);
        bundle.obs[r.site][*idx] = r.value;
    }
    errors.fail_if_any();

    // --- curves onto the grid ---
    LevelPool pool;
    auto build_curve = [&](const std::string& path,
                           const std::vector<KnotRow>& knots, double cap)
        -> std::optional<QuantileCurve> {
        std::vector<double> levels, values;
        levels.reserve(knots.size());
        values.reserve(knots.size());
        for (const KnotRow& k : knots) {
            levels.push_back(k.level);
            values.push_back(k.value);
        }
        try {
            CurveRepairReport rep;
            QuantileCurve curve =
                validate_and_repair(std::move(levels), std::move(values), 0.0,
                                    cap, &rep);
            if (rep.repaired) {
                ++bundle.coverage.repaired_curves;
                bundle.coverage.knot_adjustments +=
                    static_cast<std::size_t>(rep.value_adjustments);
            }
            return QuantileCurve(pool.intern(curve.levels()),
                                 std::vector<double>(curve.values()), 0.0,
                                 cap);
        } catch (const std::invalid_argument& e) {
            errors.add(path, knots.front().line, e.what());
            return std::nullopt;
        }
    };

    bundle.site_curves.assign(n_sites, std::vector<QuantileCurve>(n_hours));
    for (const auto& [key, knots] : site_groups) {
        const auto idx = bundle.grid.index(key.time);
        auto curve = build_curve(paths.site_forecasts, knots,
                                 bundle.sites[key.entity].capacity_mw);
        if (curve) bundle.site_curves[key.entity][*idx] = std::move(*curve);
    }
    for (const auto& [key, knots] : system_groups) {
        const std::string& id = system_ids[key.entity];
        auto& curves = bundle.system_curves[id];
        if (curves.empty()) curves.resize(n_hours);
        const auto idx = bundle.grid.index(key.time);
        auto curve =
            build_curve(paths.system_forecasts, knots, region_capacity[id]);
        if (curve) curves[*idx] = std::move(*curve);
    }
    errors.fail_if_any();

    // --- coverage accounting ---
    for (std::size_t s = 0; s < n_sites; ++s) {
        for (std::size_t h = 0; h < n_hours; ++h) {
            const bool obs_here = !std::isnan(bundle.obs[s][h]);
            const bool curve_here = !bundle.site_curves[s][h].empty();
            obs_here ? ++bundle.coverage.present_obs_cells
                     : ++bundle.coverage.missing_obs_cells;
            curve_here ? ++bundle.coverage.present_curve_cells
                       : ++bundle.coverage.missing_curve_cells;
            if ((!obs_here || !curve_here) &&
                bundle.coverage.gap_examples.size() < kMaxGapExamples) {
                bundle.coverage.gap_examples.push_back(
                    bundle.sites[s].site_id + " @ " +
                    format_timestamp(bundle.grid.time(h)) +
                    (!obs_here && !curve_here
                         ? " (obs+forecast)"
                         : (!obs_here ? " (obs)" : " (forecast)")));
            }
        }
    }
    return bundle;
}

void save_bundle(const DatasetBundle& bundle, const BundlePaths& paths) {
    {
        CsvWriter w(paths.sites);
        w.row("site_id", "capacity_mw", "latitude", "longitude", "region");
        for (const SiteMeta& s : bundle.sites) {
            w.row(s.site_id, s.capacity_mw, s.latitude, s.longitude, s.region);
        }
    }
    {
        CsvWriter w(paths.observations);
        w.row("timestamp", "site_id", "value");
        for (std::size_t h = 0; h < bundle.grid.count; ++h) {
            const std::string ts = format_timestamp(bundle.grid.time(h));
            for (std::size_t s = 0; s < bundle.sites.size(); ++s) {
                if (std::isnan(bundle.obs[s][h])) continue;
                w.row(ts, bundle.sites[s].site_id, bundle.obs[s][h]);
            }
        }
    }
    {
        CsvWriter w(paths.site_forecasts);
        w.row("timestamp", "site_id", "level", "value");
        for (std::size_t h = 0; h < bundle.grid.count; ++h) {
            const std::string ts = format_timestamp(bundle.grid.time(h));
            for (std::size_t s = 0; s < bundle.sites.size(); ++s) {
                const QuantileCurve& c = bundle.site_curves[s][h];
                if (c.empty()) continue;
                for (std::size_t k = 0; k < c.size(); ++k) {
                    w.row(ts, bundle.sites[s].site_id, c.levels()[k],
                          c.values()[k]);
                }
            }
        }
    }
    if (!paths.system_forecasts.empty()) {
        CsvWriter w(paths.system_forecasts);
        w.row("timestamp", "site_id", "level", "value");
        for (const auto& [id, curves] : bundle.system_curves) {
            for (std::size_t h = 0; h < curves.size(); ++h) {
                const QuantileCurve& c = curves[h];
                if (c.empty()) continue;
                const std::string ts = format_timestamp(bundle.grid.time(h));
                for (std::size_t k = 0; k < c.size(); ++k) {
                    w.row(ts, id, c.levels()[k], c.values()[k]);
                }
            }
        }
    }
}

DatasetBundle select_region(const DatasetBundle& bundle,
                            const std::string& region) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < bundle.sites.size(); ++i) {
        if (bundle.sites[i].region == region) keep.push_back(i);
    }
    if (keep.empty()) {
        std::string available;
        for (const std::string& r : bundle.regions()) {
            if (!available.empty()) available += ", ";
            available += r;
        }
        throw std::runtime_error("region '" + region +
                                 "' not in metadata; available: {" +
                                 available + "}");
    }
    DatasetBundle out;
    out.grid = bundle.grid;
    for (std::size_t i : keep) {
        out.sites.push_back(bundle.sites[i]);
        out.obs.push_back(bundle.obs[i]);
        out.site_curves.push_back(bundle.site_curves[i]);
    }
    auto it = bundle.system_curves.find(region);
    if (it != bundle.system_curves.end()) {
        out.system_curves.emplace(it->first, it->second);
    }
    // Recount coverage for the slice.
    out.coverage.obs_rows = bundle.coverage.obs_rows;
    out.coverage.site_forecast_rows = bundle.coverage.site_forecast_rows;
    out.coverage.system_forecast_rows = bundle.coverage.system_forecast_rows;
    out.coverage.repaired_curves = bundle.coverage.repaired_curves;
    out.coverage.knot_adjustments = bundle.coverage.knot_adjustments;
    for (std::size_t s = 0; s < out.sites.size(); ++s) {
        for (std::size_t h = 0; h < out.grid.count; ++h) {
            std::isnan(out.obs[s][h]) ? ++out.coverage.missing_obs_cells
                                      : ++out.coverage.present_obs_cells;
            out.site_curves[s][h].empty()
                ? ++out.coverage.missing_curve_cells
                : ++out.coverage.present_curve_cells;
        }
    }
    log::info("select_region: " + std::to_string(out.sites.size()) + " of " +
              std::to_string(bundle.sites.size()) + " sites in region '" +
              region + "'");
    return out;
}

IntervalSeries load_interval_series(const std::string& path, double alpha) {
    CsvReader reader(path);
    expect_header(&reader, {"timestamp", "lower", "upper", "realized"});
    IntervalSeries series;
    series.alpha = alpha;
    std::vector<std::string> row;
    while (reader.next_row(&row)) {
        if (row.size() != 4) {
            throw std::runtime_error(path + ":" +
                                     std::to_string(reader.line_number()) +
                                     ": expected 4 fields");
        }
        IntervalRow r;
        r.time = parse_timestamp(row[0]);
        r.lower = parse_double(row[1], path);
        r.upper = parse_double(row[2], path);
        r.realized = parse_double(row[3], path);
        series.rows.push_back(r);
    }
    series.validate();
    return series;
}

void save_interval_series(const IntervalSeries& series,
                          const std::string& path) {
    CsvWriter w(path);
    w.row("timestamp", "lower", "upper", "realized");
    for (const IntervalRow& r : series.rows) {
        w.row(format_timestamp(r.time), r.lower, r.upper, r.realized);
    }
}

std::string describe_coverage(const DatasetBundle& bundle) {
    const CoverageReport& c = bundle.coverage;
    std::ostringstream os;
    os << "sites: " << bundle.sites.size() << "\n";
    os << "regions:";
    for (const std::string& r : bundle.regions()) os << ' ' << r;
    os << "\n";
    os << "grid: " << format_timestamp(bundle.grid.start) << " .. "
       << format_timestamp(bundle.grid.time(bundle.grid.count - 1)) << " ("
       << bundle.grid.count << " hours)\n";
    os << "rows: obs=" << c.obs_rows << " site_forecast="
       << c.site_forecast_rows << " system_forecast="
       << c.system_forecast_rows << "\n";
    os << "observation cells: present=" << c.present_obs_cells
       << " missing=" << c.missing_obs_cells << "\n";
    os << "forecast cells: present=" << c.present_curve_cells
       << " missing=" << c.missing_curve_cells << "\n";
    os << "repaired curves: " << c.repaired_curves
       << " (knot adjustments: " << c.knot_adjustments << ")\n";
    if (!c.gap_examples.empty()) {
        os << "first gaps:\n";
        for (const std::string& g : c.gap_examples) os << "  " << g << "\n";
    }
    return os.str();
}

}  // namespace fleetcast
