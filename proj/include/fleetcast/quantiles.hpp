#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace fleetcast {

// Empirical quantile with linear interpolation between order statistics
// (R type-7): h = (n - 1) u, result = x[floor(h)] + frac(h) * (x[floor(h)+1]
// - x[floor(h)]).  Input must already be sorted ascending.
inline double quantile_sorted(std::span<const double> sorted, double u) {
    if (sorted.empty()) {
        throw std::invalid_argument("quantile_sorted: empty sample");
    }
    if (!(u >= 0.0 && u <= 1.0)) {
        throw std::invalid_argument("quantile_sorted: u outside [0, 1]");
    }
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = static_cast<double>(n - 1) * u;
    const double fl = std::floor(h);
    std::size_t lo = static_cast<std::size_t>(fl);
    if (lo >= n - 1) return sorted[n - 1];
    const double frac = h - fl;
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace fleetcast
