#pragma once

#include <memory>
#include <vector>

namespace fleetcast {

// A forecast distribution given as quantile knots (level, value) plus a
// known support, interpreted as a piecewise-linear CDF through the nodes
//   (support_lo, 0), (value_1, level_1), ..., (value_K, level_K),
//   (support_hi, 1).
//
// Knot levels are strictly increasing in (0, 1); knot values are
// non-decreasing and lie inside the support.  The level grid is shared
// (shared_ptr) because a dataset holds one curve per site-hour and the grid
// is almost always identical across all of them.
class QuantileCurve {
  public:
    using LevelGrid = std::shared_ptr<const std::vector<double>>;

    QuantileCurve() = default;

    // Validates all invariants; throws std::invalid_argument on violation.
    QuantileCurve(LevelGrid levels, std::vector<double> values,
                  double support_lo, double support_hi);

    // Convenience constructor that owns a fresh level grid.
    QuantileCurve(std::vector<double> levels, std::vector<double> values,
                  double support_lo, double support_hi);

    // P(X <= x) under the piecewise-linear CDF.  Returns 0 below the
    // support and 1 above it.  Where the CDF is vertical (several nodes
    // share the value x), returns the midpoint of the level range at x.
    double eval_cdf(double x) const;

    // Inverse CDF; u must be in [0, 1].  inv_cdf(0) = support_lo,
    // inv_cdf(1) = support_hi.
    double inv_cdf(double u) const;

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    const std::vector<double>& levels() const { return *levels_; }
    const LevelGrid& level_grid() const { return levels_; }
    const std::vector<double>& values() const { return values_; }
    double support_lo() const { return support_lo_; }
    double support_hi() const { return support_hi_; }

  private:
    LevelGrid levels_;
    std::vector<double> values_;
    double support_lo_ = 0.0;
    double support_hi_ = 1.0;
};

struct CurveRepairReport {
    bool repaired = false;      // any value adjusted
    int reordered = 0;          // knots re-sorted by level
    int value_adjustments = 0;  // isotonic fixes plus support clamps
};

// Lenient construction from raw (level, value) pairs as they come off a
// file: sorts by level, rejects structurally invalid input (empty set,
// duplicate levels, levels outside (0, 1), inverted support), restores
// monotone values by running maximum, and clamps values to the support.
// Structural problems throw std::invalid_argument; value problems are
// repaired and reported.
QuantileCurve validate_and_repair(std::vector<double> levels,
                                  std::vector<double> values,
                                  double support_lo, double support_hi,
                                  CurveRepairReport* report = nullptr);

}  // namespace fleetcast
