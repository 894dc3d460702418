#pragma once

#include <vector>

#include "fleetcast/correlation.hpp"
#include "fleetcast/quantile_curve.hpp"
#include "fleetcast/rng.hpp"

namespace fleetcast {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool covers(double y) const { return y >= lo && y <= hi; }
};

// Monte Carlo sample of the fleet total for one delivery hour.
struct FleetDistribution {
    std::vector<double> sorted_totals;  // ascending

    double mean() const;
};

// Samples the fleet total under the fitted dependence model.  `curves`
// must align one-to-one with model.site_ids.  Draws come from `stream`
// by random access, so results are independent of threading; `parallel`
// selects the OpenMP kernel.
FleetDistribution aggregate_fleet(const CorrelationModel& model,
                                  const std::vector<const QuantileCurve*>& curves,
                                  std::size_t n_samples,
                                  const RngStream& stream,
                                  bool parallel = true);

// Central interval at miscoverage alpha: empirical quantiles of the fleet
// sample at levels alpha/2 and 1 - alpha/2.
Interval fleet_interval(const FleetDistribution& dist, double alpha);

}  // namespace fleetcast
