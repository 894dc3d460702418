#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fleetcast/metrics.hpp"
#include "fleetcast/quantile_curve.hpp"
#include "fleetcast/time.hpp"

namespace fleetcast {

struct SiteMeta {
    std::string site_id;
    double capacity_mw = 0.0;
    double latitude = 0.0;
    double longitude = 0.0;
    std::string region;
};

// Dense hourly grid covering the dataset span.
struct HourGrid {
    Timestamp start = 0;
    std::size_t count = 0;

    Timestamp time(std::size_t i) const {
        return start + static_cast<Timestamp>(i) * kSecondsPerHour;
    }
    // Index of t in the grid, or nullopt when t is off-grid.
    std::optional<std::size_t> index(Timestamp t) const;
};

struct CoverageReport {
    std::size_t obs_rows = 0;
    std::size_t site_forecast_rows = 0;
    std::size_t system_forecast_rows = 0;
    std::size_t present_obs_cells = 0;
    std::size_t missing_obs_cells = 0;
    std::size_t present_curve_cells = 0;
    std::size_t missing_curve_cells = 0;
    std::size_t repaired_curves = 0;
    std::size_t knot_adjustments = 0;
    // First few (site, hour) gaps for human inspection.
    std::vector<std::string> gap_examples;
};

// Immutable, validated dataset: observations and forecast curves on a
// shared hourly grid, sites in lexicographic id order.
struct DatasetBundle {
    std::vector<SiteMeta> sites;
    HourGrid grid;
    // obs[site][hour]; NaN marks a missing cell.
    std::vector<std::vector<double>> obs;
    // site_curves[site][hour]; a default-constructed (empty) curve marks a
    // missing cell.
    std::vector<std::vector<QuantileCurve>> site_curves;
    // System-level curves per forecast id (one id per region).
    std::map<std::string, std::vector<QuantileCurve>> system_curves;
    CoverageReport coverage;

    double fleet_capacity() const;
    std::vector<std::string> site_ids() const;
    std::vector<std::string> regions() const;  // distinct, sorted
};

struct BundlePaths {
    std::string observations;
    std::string site_forecasts;
    std::string system_forecasts;  // optional; empty = absent
    std::string sites;
};

// Loads and cross-validates all files.  Malformed rows are collected and
// reported together before the load fails; references to unknown site ids
// fail immediately.
DatasetBundle load_bundle(const BundlePaths& paths);

// Writes the bundle back out in the exact ingest formats.
void save_bundle(const DatasetBundle& bundle, const BundlePaths& paths);

// Restricts the bundle to one region's sites (and its system forecast).
// Unknown region fails listing the available ones.
DatasetBundle select_region(const DatasetBundle& bundle,
                            const std::string& region);

std::vector<SiteMeta> load_sites(const std::string& path);

// Interval series file (standalone scoring input):
// header `timestamp,lower,upper,realized`.
IntervalSeries load_interval_series(const std::string& path, double alpha);
void save_interval_series(const IntervalSeries& series,
                          const std::string& path);

// Human-readable coverage summary (for the validate subcommand).
std::string describe_coverage(const DatasetBundle& bundle);

}  // namespace fleetcast
