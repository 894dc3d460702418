#include "fleetcast/copula.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fleetcast/kernels.hpp"
#include "fleetcast/quantiles.hpp"

namespace fleetcast {

double FleetDistribution::mean() const {
    if (sorted_totals.empty()) return 0.0;
    return std::accumulate(sorted_totals.begin(), sorted_totals.end(), 0.0) /
           static_cast<double>(sorted_totals.size());
}

FleetDistribution aggregate_fleet(
    const CorrelationModel& model,
    const std::vector<const QuantileCurve*>& curves, std::size_t n_samples,
    const RngStream& stream, bool parallel) {
    if (curves.size() != model.size()) {
        throw std::invalid_argument(
            "aggregate_fleet: curve count != model site count");
    }
    FleetDistribution dist;
    dist.sorted_totals.resize(n_samples);
    if (parallel) {
        kernels::fleet_samples_parallel(model.chol, curves, stream, n_samples,
                                        dist.sorted_totals.data());
    } else {
        kernels::fleet_samples_serial(model.chol, curves, stream, n_samples,
                                      dist.sorted_totals.data());
    }
    std::sort(dist.sorted_totals.begin(), dist.sorted_totals.end());
    return dist;
}

Interval fleet_interval(const FleetDistribution& dist, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("fleet_interval: alpha outside (0, 1)");
    }
    if (dist.sorted_totals.empty()) {
        throw std::invalid_argument("fleet_interval: empty distribution");
    }
    return Interval{quantile_sorted(dist.sorted_totals, alpha / 2.0),
                    quantile_sorted(dist.sorted_totals, 1.0 - alpha / 2.0)};
}

}  // namespace fleetcast
