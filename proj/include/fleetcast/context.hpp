#pragma once

#include <span>
#include <vector>

#include "fleetcast/time.hpp"

namespace fleetcast {

// Data-derived solar day table: for each historical day with productive
// hours, the (smoothed) first and last hour of positive fleet output.
struct SunTable {
    std::vector<Timestamp> days;  // day_start timestamps, ascending
    std::vector<double> sunrise;  // fractional hour of day
    std::vector<double> sunset;

    bool empty() const { return days.empty(); }
};

// Builds the table from realized fleet history strictly before `cutoff`
// (look-ahead safe).  Per day the raw sunrise/sunset are the first/last
// hour with fleet output above zero; each day's entry is the median over
// the most recent (up to) 7 productive days through that day.  Days with
// no productive hour contribute no entry.
SunTable build_sun_table(std::span<const Timestamp> times,
                         std::span<const double> fleet_totals,
                         Timestamp cutoff);

// Position of t within its solar day, linear from 0 at sunrise to 1 at
// sunset, clipped.  Uses the latest table entry at or before t's day (so
// future days reuse the most recent estimate); with no usable entry the
// position is 0 and a warning is emitted.
double solar_position(const SunTable& table, Timestamp t);

// Feature vector for context-aware calibration.  Layout:
//   [0, k)    k most recent fleet totals at times <= t - 24h, newest
//             first, divided by fleet capacity
//   [k, k+2)  sin/cos of 2*pi*hour/24
//   [k+2,k+4) sin/cos of 2*pi*day_of_year/365.25
//   [k+4,k+6) sin/cos of 2*pi*month/12
//   [k+6]     solar position
// The 24 h offset keeps the features available at day-ahead issue time.
// Throws std::invalid_argument when fewer than k history points exist at
// or before t - 24h.
std::vector<double> build_context(std::span<const Timestamp> history_times,
                                  std::span<const double> history_fleet,
                                  Timestamp t, int k, double fleet_capacity,
                                  const SunTable& sun);

inline int context_dimension(int k) { return k + 7; }

// Per-dimension affine normalization fitted on the calibration contexts of
// one test day and frozen for all of that day's queries.
struct Standardizer {
    std::vector<double> mean;
    // Degenerate (constant-in-pool) dimensions hold +infinity, so
    // transform maps any finite value to 0 there: a constant feature
    // carries no distance information, even for off-pool queries.
    std::vector<double> sd;

    std::vector<double> transform(std::span<const double> raw) const;
    void transform_into(std::span<const double> raw, double* out) const;
    std::size_t dim() const { return mean.size(); }
};

// Requires at least two context rows of equal dimension.
Standardizer fit_standardizer(std::span<const std::vector<double>> contexts);

}  // namespace fleetcast
