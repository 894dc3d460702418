#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "fleetcast/time.hpp"

namespace fleetcast {

struct IntervalRow {
    Timestamp time = 0;
    double lower = 0.0;
    double upper = 0.0;
    double realized = 0.0;
};

// Evaluated intervals for one (method, alpha) slice, in capacity-normalized
// units.  Rows are strictly increasing in time with lower <= upper.
struct IntervalSeries {
    double alpha = 0.1;
    std::vector<IntervalRow> rows;

    // Enforces the structural invariants; throws std::invalid_argument.
    void validate() const;
};

// Coverage rate per hour of day; buckets with no rows are reported as
// missing (count 0, coverage NaN) rather than zero.
struct HourlyCoverage {
    std::array<double, 24> coverage{};
    std::array<std::size_t, 24> counts{};
};

struct MetricReport {
    double picp = 0.0;
    double aiw = 0.0;
    double winkler = 0.0;
    std::size_t count = 0;
    HourlyCoverage hourly;
};

// Fraction of rows with lower <= realized <= upper (boundary inclusive).
double picp(const IntervalSeries& series);

// Mean interval width.
double aiw(const IntervalSeries& series);

// Mean Winkler score: width plus (2/alpha) times the violation distance
// for rows falling outside their interval.
double winkler(const IntervalSeries& series);

HourlyCoverage hourly_coverage(const IntervalSeries& series);

// All of the above in one pass.
MetricReport compute_metrics(const IntervalSeries& series);

// Divides lower/upper/realized by a positive capacity.
IntervalSeries normalize_by_capacity(const IntervalSeries& raw,
                                     double capacity);

}  // namespace fleetcast
