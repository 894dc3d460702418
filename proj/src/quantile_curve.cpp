#include "fleetcast/quantile_curve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fleetcast {

namespace {

void check_grid(const std::vector<double>& levels,
                const std::vector<double>& values, double lo, double hi) {
    if (levels.empty()) {
        throw std::invalid_argument("quantile curve: no knots");
    }
    if (levels.size() != values.size()) {
        throw std::invalid_argument("quantile curve: level/value size mismatch");
    }
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("quantile curve: invalid support");
    }
    double prev = 0.0;
    for (double l : levels) {
        if (!(l > 0.0 && l < 1.0)) {
            throw std::invalid_argument(
                "quantile curve: knot level outside (0, 1)");
        }
        if (l <= prev) {
            throw std::invalid_argument(
                "quantile curve: knot levels not strictly increasing");
        }
        prev = l;
    }
    double pv = lo;
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("quantile curve: non-finite value");
        }
        if (v < pv || v > hi) {
            throw std::invalid_argument(
                "quantile curve: values not monotone within support");
        }
        pv = v;
    }
}

}  // namespace

QuantileCurve::QuantileCurve(LevelGrid levels, std::vector<double> values,
                             double support_lo, double support_hi)
    : levels_(std::move(levels)),
      values_(std::move(values)),
      support_lo_(support_lo),
      support_hi_(support_hi) {
    if (!levels_) {
        throw std::invalid_argument("quantile curve: null level grid");
    }
    check_grid(*levels_, values_, support_lo_, support_hi_);
}

QuantileCurve::QuantileCurve(std::vector<double> levels,
                             std::vector<double> values, double support_lo,
                             double support_hi)
    : QuantileCurve(
          std::make_shared<const std::vector<double>>(std::move(levels)),
          std::move(values), support_lo, support_hi) {}

double QuantileCurve::eval_cdf(double x) const {
    if (empty()) throw std::logic_error("eval_cdf on empty curve");
    if (x < support_lo_) return 0.0;
    if (x > support_hi_) return 1.0;

    const std::vector<double>& lv = *levels_;
    const std::size_t k = values_.size();
    // Node arrays are conceptual: index 0 is (support_lo, 0), indices
    // 1..k are the knots, index k+1 is (support_hi, 1).
    auto node_value = [&](std::size_t i) -> double {
        if (i == 0) return support_lo_;
        if (i == k + 1) return support_hi_;
        return values_[i - 1];
    };
    auto node_level = [&](std::size_t i) -> double {
        if (i == 0) return 0.0;
        if (i == k + 1) return 1.0;
        return lv[i - 1];
    };

    // First node with value >= x.
    std::size_t first = 0;
    {
        auto it = std::lower_bound(values_.begin(), values_.end(), x);
        first = static_cast<std::size_t>(it - values_.begin()) + 1;
        if (x <= support_lo_) first = 0;
        // first now indexes the smallest node (in knot range) with
        // value >= x; support_hi node always satisfies it.
    }
    if (node_value(first) == x) {
        // Vertical segment: the CDF takes a whole level interval at x.
        std::size_t last = first;
        while (last + 1 <= k + 1 && node_value(last + 1) == x) ++last;
        return 0.5 * (node_level(first) + node_level(last));
    }
    // Strictly between node first-1 and node first.
    const double v0 = node_value(first - 1);
    const double v1 = node_value(first);
    const double l0 = node_level(first - 1);
    const double l1 = node_level(first);
    return l0 + (x - v0) / (v1 - v0) * (l1 - l0);
}

double QuantileCurve::inv_cdf(double u) const {
    if (empty()) throw std::logic_error("inv_cdf on empty curve");
    if (!(u >= 0.0 && u <= 1.0)) {
        throw std::invalid_argument("inv_cdf: u outside [0, 1]");
    }
    if (u == 0.0) return support_lo_;
    if (u == 1.0) return support_hi_;

    const std::vector<double>& lv = *levels_;
    const std::size_t k = values_.size();
    // Node levels 0, lv..., 1 are strictly increasing, so the bracketing
    // segment is unique.
    auto it = std::lower_bound(lv.begin(), lv.end(), u);
    const std::size_t j = static_cast<std::size_t>(it - lv.begin());
    if (j < k && lv[j] == u) return values_[j];
    const double l0 = (j == 0) ? 0.0 : lv[j - 1];
    const double v0 = (j == 0) ? support_lo_ : values_[j - 1];
    const double l1 = (j == k) ? 1.0 : lv[j];
    const double v1 = (j == k) ? support_hi_ : values_[j];
    return v0 + (u - l0) / (l1 - l0) * (v1 - v0);
}

QuantileCurve validate_and_repair(std::vector<double> levels,
                                  std::vector<double> values,
                                  double support_lo, double support_hi,
                                  CurveRepairReport* report) {
    if (levels.empty() || levels.size() != values.size()) {
        throw std::invalid_argument(
            "quantile curve: empty or mismatched knot set");
    }
    if (!(support_lo <= support_hi) || !std::isfinite(support_lo) ||
        !std::isfinite(support_hi)) {
        throw std::invalid_argument("quantile curve: invalid support");
    }

    CurveRepairReport local;
    const std::size_t n = levels.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                     std::size_t b) {
        return levels[a] < levels[b];
    });
    if (!std::is_sorted(order.begin(), order.end())) {
        local.reordered = 1;
    }
    std::vector<double> slv(n), sval(n);
    for (std::size_t i = 0; i < n; ++i) {
        slv[i] = levels[order[i]];
        sval[i] = values[order[i]];
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(slv[i] > 0.0 && slv[i] < 1.0)) {
            throw std::invalid_argument(
                "quantile curve: knot level outside (0, 1)");
        }
        if (i > 0 && slv[i] == slv[i - 1]) {
            throw std::invalid_argument("quantile curve: duplicate knot level");
        }
        if (!std::isfinite(sval[i])) {
            throw std::invalid_argument("quantile curve: non-finite value");
        }
    }
    double running = support_lo;
    for (std::size_t i = 0; i < n; ++i) {
        double v = sval[i];
        if (v < running) v = running;  // isotonic running maximum
        if (v > support_hi) v = support_hi;
        if (v != sval[i]) ++local.value_adjustments;
        sval[i] = v;
        running = v;
    }
    // Reordering is benign input normalization, not a value repair.
    local.repaired = local.value_adjustments > 0;
    if (report) *report = local;
    return QuantileCurve(std::move(slv), std::move(sval), support_lo,
                         support_hi);
}

}  // namespace fleetcast
