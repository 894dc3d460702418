#include "fleetcast/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fleetcast {

namespace {

void require_rows(const IntervalSeries& s) {
    if (s.rows.empty()) {
        throw std::invalid_argument("metrics: empty interval series");
    }
}

bool covered(const IntervalRow& r) {
    return r.realized >= r.lower && r.realized <= r.upper;
}

}  // namespace

void IntervalSeries::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("interval series: alpha outside (0, 1)");
    }
    Timestamp prev = 0;
    bool first = true;
    for (const IntervalRow& r : rows) {
        if (!(r.lower <= r.upper)) {
            throw std::invalid_argument(
                "interval series: inverted interval at " +
                format_timestamp(r.time));
        }
        if (!std::isfinite(r.lower) || !std::isfinite(r.upper) ||
            !std::isfinite(r.realized)) {
            throw std::invalid_argument(
                "interval series: non-finite entry at " +
                format_timestamp(r.time));
        }
        if (!first && r.time <= prev) {
            throw std::invalid_argument(
                "interval series: timestamps not strictly increasing");
        }
        prev = r.time;
        first = false;
    }
}

double picp(const IntervalSeries& series) {
    require_rows(series);
    std::size_t hits = 0;
    for (const IntervalRow& r : series.rows) {
        if (covered(r)) ++hits;
    }
    return static_cast<double>(hits) /
           static_cast<double>(series.rows.size());
}

double aiw(const IntervalSeries& series) {
    require_rows(series);
    double total = 0.0;
    for (const IntervalRow& r : series.rows) total += r.upper - r.lower;
    return total / static_cast<double>(series.rows.size());
}

double winkler(const IntervalSeries& series) {
    require_rows(series);
    if (!(series.alpha > 0.0 && series.alpha < 1.0)) {
        throw std::invalid_argument("winkler: alpha outside (0, 1)");
    }
    const double penalty = 2.0 / series.alpha;
    double total = 0.0;
    for (const IntervalRow& r : series.rows) {
        double w = r.upper - r.lower;
        if (r.realized > r.upper) {
            w += penalty * (r.realized - r.upper);
        } else if (r.realized < r.lower) {
            w += penalty * (r.lower - r.realized);
        }
        total += w;
    }
    return total / static_cast<double>(series.rows.size());
}

HourlyCoverage hourly_coverage(const IntervalSeries& series) {
    require_rows(series);
    HourlyCoverage out;
    std::array<std::size_t, 24> hits{};
    for (const IntervalRow& r : series.rows) {
        const std::size_t h = static_cast<std::size_t>(hour_of_day(r.time));
        ++out.counts[h];
        if (covered(r)) ++hits[h];
    }
    for (std::size_t h = 0; h < 24; ++h) {
        out.coverage[h] =
            out.counts[h] == 0
                ? std::numeric_limits<double>::quiet_NaN()
                : static_cast<double>(hits[h]) /
                      static_cast<double>(out.counts[h]);
    }
    return out;
}

MetricReport compute_metrics(const IntervalSeries& series) {
    MetricReport rep;
    rep.picp = picp(series);
    rep.aiw = aiw(series);
    rep.winkler = winkler(series);
    rep.count = series.rows.size();
    rep.hourly = hourly_coverage(series);
    return rep;
}

IntervalSeries normalize_by_capacity(const IntervalSeries& raw,
                                     double capacity) {
    if (!(capacity > 0.0)) {
        throw std::invalid_argument(
            "normalize_by_capacity: capacity must be > 0");
    }
    IntervalSeries out;
    out.alpha = raw.alpha;
    out.rows.reserve(raw.rows.size());
    for (const IntervalRow& r : raw.rows) {
        out.rows.push_back(IntervalRow{r.time, r.lower / capacity,
                                       r.upper / capacity,
                                       r.realized / capacity});
    }
    return out;
}

}  // namespace fleetcast
