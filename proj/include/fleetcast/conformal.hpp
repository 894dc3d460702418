#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fleetcast/copula.hpp"
#include "fleetcast/time.hpp"

namespace fleetcast {

// Conformity score of a realized value against a two-sided interval:
// positive when y falls outside, negative (distance to the nearer edge)
// when inside.
double conformity_score(const Interval& interval, double realized);

enum class ConformalMode {
    // inf{s : #(scores <= s) / n >= 1 - alpha}; identical to the weighted
    // rule under uniform weights.
    kPlain,
    // Finite-sample corrected rank ceil((n+1)(1-alpha)); +infinity when the
    // rank exceeds n.
    kFiniteSample,
};

// Score quantile used to widen a raw interval.  Returns +infinity when the
// sample cannot support the requested level (empty input, or the corrected
// rank exceeding n).
double conformal_quantile(std::span<const double> scores, double alpha,
                          ConformalMode mode = ConformalMode::kFiniteSample);

// Weighted analogue: inf{s : sum of normalized weights of records with
// score <= s reaches 1 - alpha}.  Weights must be >= 0; an all-zero weight
// vector falls back to uniform weights with a warning.
double weighted_conformal_quantile(std::span<const double> scores,
                                   std::span<const double> weights,
                                   double alpha);

// Applies the score quantile to a raw interval: (lo - s_hat, hi + s_hat),
// collapsing to the raw midpoint when s_hat would invert the interval, and
// clipping to the support.  s_hat = +infinity yields the full support.
Interval calibrate_interval(const Interval& raw, double s_hat,
                            double support_lo, double support_hi);

// One held-out hour available for calibration.  The interval and realized
// value are kept so validation-week scoring can recompute candidate
// calibrations; only (time, score, context) are serialized.
struct CalibrationRecord {
    Timestamp time = 0;
    double score = 0.0;
    std::vector<double> context;  // raw (unstandardized) features
    Interval interval{std::numeric_limits<double>::quiet_NaN(),
                      std::numeric_limits<double>::quiet_NaN()};
    double realized = std::numeric_limits<double>::quiet_NaN();
};

// Append-only history of calibration records in strict time order.
class CalibrationStore {
  public:
    void append(CalibrationRecord record);
    const std::vector<CalibrationRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    // Number of leading records with time strictly before the cutoff.
    std::size_t count_before(Timestamp cutoff) const;

    void save(const std::string& path) const;
    static CalibrationStore load(const std::string& path);

  private:
    std::vector<CalibrationRecord> records_;
};

// Calibration slice prepared for weighted lookups: scores plus their
// standardized context rows (row-major n x dim).
struct ScoredContexts {
    std::vector<double> scores;
    std::vector<double> contexts;
    std::size_t dim = 0;

    std::size_t size() const { return scores.size(); }
};

// Context-aware calibration of one interval: RBF weights of the query
// against every calibration context, weighted score quantile, interval
// adjustment.  `query` must be standardized consistently with `calib`.
Interval cacp_calibrate(const Interval& raw, std::span<const double> query,
                        const ScoredContexts& calib, double gamma,
                        double alpha, double support_lo, double support_hi,
                        double* s_hat_out = nullptr, bool parallel = true);

}  // namespace fleetcast
