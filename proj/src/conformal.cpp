#include "fleetcast/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fleetcast/csv.hpp"
#include "fleetcast/kernels.hpp"
#include "fleetcast/log.hpp"

namespace fleetcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Slack for comparisons against 1 - alpha: cumulative weight sums carry
// rounding of order 1e-16, and rank products like 100 * 0.9 land a hair
// above the integer they represent.
constexpr double kLevelSlack = 1e-9;

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha outside (0, 1)");
    }
}

}  // namespace

double conformity_score(const Interval& interval, double realized) {
    if (!(interval.lo <= interval.hi)) {
        throw std::invalid_argument("conformity_score: inverted interval");
    }
    return std::max(interval.lo - realized, realized - interval.hi);
}

double weighted_conformal_quantile(std::span<const double> scores,
                                   std::span<const double> weights,
                                   double alpha) {
    check_alpha(alpha);
    if (scores.size() != weights.size()) {
        throw std::invalid_argument(
            "weighted_conformal_quantile: size mismatch");
    }
    const std::size_t n = scores.size();
    if (n == 0) return kInf;

    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument(
                "weighted_conformal_quantile: weights must be finite and "
                ">= 0");
        }
        total += w;
    }
    for (double s : scores) {
        if (std::isnan(s)) {
            throw std::invalid_argument(
                "weighted_conformal_quantile: NaN score");
        }
    }

    const bool uniform_fallback = (total == 0.0);
    if (uniform_fallback) {
        log::warn(
            "weighted_conformal_quantile: all weights are zero; falling "
            "back to uniform weights");
        total = static_cast<double>(n);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });

    const double target = 1.0 - alpha;
    double cum = 0.0;
    for (std::size_t idx : order) {
        cum += (uniform_fallback ? 1.0 : weights[idx]) / total;
        if (cum >= target - kLevelSlack) return scores[idx];
    }
    return kInf;  // unreachable when weights sum to 1, kept for safety
}

double conformal_quantile(std::span<const double> scores, double alpha,
                          ConformalMode mode) {
    check_alpha(alpha);
    const std::size_t n = scores.size();
    if (n == 0) {
        log::warn("conformal_quantile: empty score list; returning +inf");
        return kInf;
    }

    if (mode == ConformalMode::kPlain) {
        const std::vector<double> unit(n, 1.0);
        return weighted_conformal_quantile(scores, unit, alpha);
    }

    const double raw_rank =
        static_cast<double>(n + 1) * (1.0 - alpha) - kLevelSlack;
    const std::size_t rank =
        static_cast<std::size_t>(std::max(1.0, std::ceil(raw_rank)));
    if (rank > n) {
        log::warn(
            "conformal_quantile: corrected rank exceeds sample size; "
            "returning +inf");
        return kInf;
    }
    std::vector<double> sorted(scores.begin(), scores.end());
    for (double s : sorted) {
        if (std::isnan(s)) {
            throw std::invalid_argument("conformal_quantile: NaN score");
        }
    }
    std::nth_element(sorted.begin(),
                     sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                     sorted.end());
    return sorted[rank - 1];
}

Interval calibrate_interval(const Interval& raw, double s_hat,
                            double support_lo, double support_hi) {
    if (!(raw.lo <= raw.hi)) {
        throw std::invalid_argument("calibrate_interval: inverted interval");
    }
    if (!(support_lo <= support_hi)) {
        throw std::invalid_argument("calibrate_interval: inverted support");
    }
    if (std::isnan(s_hat)) {
        throw std::invalid_argument("calibrate_interval: NaN adjustment");
    }
    Interval out;
    if (s_hat == kInf) {
        return Interval{support_lo, support_hi};
    }
    if (s_hat < -0.5 * raw.width()) {
        // Shrinking past the midpoint would invert the interval.
        const double mid = 0.5 * (raw.lo + raw.hi);
        out.lo = out.hi = mid;
    } else {
        out.lo = raw.lo - s_hat;
        out.hi = raw.hi + s_hat;
    }
    out.lo = std::clamp(out.lo, support_lo, support_hi);
    out.hi = std::clamp(out.hi, support_lo, support_hi);
    return out;
}

void CalibrationStore::append(CalibrationRecord record) {
    if (!records_.empty()) {
        if (record.time <= records_.back().time) {
            throw std::invalid_argument(
                "CalibrationStore: timestamps must be strictly increasing");
        }
        if (record.context.size() != records_.back().context.size()) {
            throw std::invalid_argument(
                "CalibrationStore: context dimension changed");
        }
    }
    records_.push_back(std::move(record));
}

std::size_t CalibrationStore::count_before(Timestamp cutoff) const {
    auto it = std::lower_bound(
        records_.begin(), records_.end(), cutoff,
        [](const CalibrationRecord& r, Timestamp t) { return r.time < t; });
    return static_cast<std::size_t>(it - records_.begin());
}

void CalibrationStore::save(const std::string& path) const {
    CsvWriter w(path);
    const std::size_t dim = records_.empty() ? 0 : records_[0].context.size();
    w.field("timestamp");
    w.field("score");
    for (std::size_t k = 0; k < dim; ++k) {
        w.field("context_" + std::to_string(k));
    }
    w.end_row();
    for (const CalibrationRecord& r : records_) {
        w.field(format_timestamp(r.time));
        w.field(r.score);
        for (double c : r.context) w.field(c);
        w.end_row();
    }
}

CalibrationStore CalibrationStore::load(const std::string& path) {
    CsvReader r(path);
    std::vector<std::string> row;
    if (!r.next_row(&row) || row.size() < 2 || row[0] != "timestamp" ||
        row[1] != "score") {
        throw std::runtime_error(path + ": bad calibration store header");
    }
    const std::size_t dim = row.size() - 2;
    CalibrationStore store;
    while (r.next_row(&row)) {
        if (row.size() != dim + 2) {
            throw std::runtime_error(path + ":" +
                                     std::to_string(r.line_number()) +
                                     ": wrong field count");
        }
        CalibrationRecord rec;
        rec.time = parse_timestamp(row[0]);
        rec.score = parse_double(row[1], path);
        rec.context.reserve(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            rec.context.push_back(parse_double(row[k + 2], path));
        }
        store.append(std::move(rec));
    }
    return store;
}

Interval cacp_calibrate(const Interval& raw, std::span<const double> query,
                        const ScoredContexts& calib, double gamma,
                        double alpha, double support_lo, double support_hi,
                        double* s_hat_out, bool parallel) {
    if (calib.size() * calib.dim != calib.contexts.size()) {
        throw std::invalid_argument("cacp_calibrate: ragged context block");
    }
    if (query.size() != calib.dim) {
        throw std::invalid_argument(
            "cacp_calibrate: query dimension mismatch");
    }
    std::vector<double> weights(calib.size());
    if (parallel) {
        kernels::rbf_weights_parallel(query.data(), calib.contexts.data(),
                                      calib.size(), calib.dim, gamma,
                                      weights.data());
    } else {
        kernels::rbf_weights_serial(query.data(), calib.contexts.data(),
                                    calib.size(), calib.dim, gamma,
                                    weights.data());
    }
    const double s_hat =
        weighted_conformal_quantile(calib.scores, weights, alpha);
    if (s_hat_out) *s_hat_out = s_hat;
    return calibrate_interval(raw, s_hat, support_lo, support_hi);
}

}  // namespace fleetcast
