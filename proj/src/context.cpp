#include "fleetcast/context.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "fleetcast/log.hpp"

namespace fleetcast {

namespace {

constexpr double kProductiveEps = 1e-9;

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SunTable build_sun_table(std::span<const Timestamp> times,
                         std::span<const double> fleet_totals,
                         Timestamp cutoff) {
    if (times.size() != fleet_totals.size()) {
        throw std::invalid_argument("build_sun_table: size mismatch");
    }
    // Raw first/last productive hour per day, in time order.
    std::vector<Timestamp> raw_days;
    std::vector<double> raw_rise, raw_set;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const Timestamp t = times[i];
        if (t >= cutoff) continue;
        if (i > 0 && times[i] <= times[i - 1]) {
            throw std::invalid_argument(
                "build_sun_table: times must be strictly increasing");
        }
        if (!(fleet_totals[i] > kProductiveEps)) continue;
        const Timestamp day = day_start(t);
        const double hour = static_cast<double>(hour_of_day(t));
        if (raw_days.empty() || raw_days.back() != day) {
            raw_days.push_back(day);
            raw_rise.push_back(hour);
            raw_set.push_back(hour);
        } else {
            raw_set.back() = hour;
        }
    }

    SunTable table;
    table.days = raw_days;
    table.sunrise.resize(raw_days.size());
    table.sunset.resize(raw_days.size());
    for (std::size_t i = 0; i < raw_days.size(); ++i) {
        const std::size_t first = (i >= 6) ? i - 6 : 0;
        std::vector<double> rise(raw_rise.begin() + first,
                                 raw_rise.begin() + i + 1);
        std::vector<double> set(raw_set.begin() + first,
                                raw_set.begin() + i + 1);
        table.sunrise[i] = median_of(std::move(rise));
        table.sunset[i] = median_of(std::move(set));
    }
    return table;
}

double solar_position(const SunTable& table, Timestamp t) {
    const Timestamp day = day_start(t);
    auto it = std::upper_bound(table.days.begin(), table.days.end(), day);
    if (it == table.days.begin()) {
        log::warn("solar_position: no sun-table entry at or before " +
                  format_date(t) + "; using 0");
        return 0.0;
    }
    const std::size_t idx =
        static_cast<std::size_t>(it - table.days.begin()) - 1;
    const double rise = table.sunrise[idx];
    const double set = table.sunset[idx];
    const double hour = static_cast<double>(hour_of_day(t));
    const double span = std::max(set - rise, 1.0);
    const double pos = (hour - rise) / span;
    return std::clamp(pos, 0.0, 1.0);
}

std::vector<double> build_context(std::span<const Timestamp> history_times,
                                  std::span<const double> history_fleet,
                                  Timestamp t, int k, double fleet_capacity,
                                  const SunTable& sun) {
    if (history_times.size() != history_fleet.size()) {
        throw std::invalid_argument("build_context: size mismatch");
    }
    if (k < 0) throw std::invalid_argument("build_context: negative k");
    if (!(fleet_capacity > 0.0)) {
        throw std::invalid_argument("build_context: capacity must be > 0");
    }

    std::vector<double> ctx;
    ctx.reserve(static_cast<std::size_t>(context_dimension(k)));

    // Index of the last history entry usable at day-ahead issue time.
    const Timestamp latest_usable = t - 24 * kSecondsPerHour;
    auto it = std::upper_bound(history_times.begin(), history_times.end(),
                               latest_usable);
    const std::size_t avail =
        static_cast<std::size_t>(it - history_times.begin());
    if (avail < static_cast<std::size_t>(k)) {
        throw std::invalid_argument(
            "build_context: insufficient history before " +
            format_timestamp(t));
    }
    for (int j = 0; j < k; ++j) {
        ctx.push_back(history_fleet[avail - 1 - static_cast<std::size_t>(j)] /
                      fleet_capacity);
    }

    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    const double h = static_cast<double>(hour_of_day(t));
    const double doy = static_cast<double>(day_of_year(t));
    const double m = static_cast<double>(month_of_year(t));
    ctx.push_back(std::sin(kTwoPi * h / 24.0));
    ctx.push_back(std::cos(kTwoPi * h / 24.0));
    ctx.push_back(std::sin(kTwoPi * doy / 365.25));
    ctx.push_back(std::cos(kTwoPi * doy / 365.25));
    ctx.push_back(std::sin(kTwoPi * m / 12.0));
    ctx.push_back(std::cos(kTwoPi * m / 12.0));
    ctx.push_back(solar_position(sun, t));
    return ctx;
}

std::vector<double> Standardizer::transform(
    std::span<const double> raw) const {
    std::vector<double> out(raw.size());
    transform_into(raw, out.data());
    return out;
}

void Standardizer::transform_into(std::span<const double> raw,
                                  double* out) const {
    if (raw.size() != mean.size()) {
        throw std::invalid_argument("Standardizer: dimension mismatch");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = (raw[i] - mean[i]) / sd[i];
    }
}

Standardizer fit_standardizer(std::span<const std::vector<double>> contexts) {
    if (contexts.size() < 2) {
        throw std::invalid_argument(
            "fit_standardizer: need at least two contexts");
    }
    const std::size_t dim = contexts[0].size();
    for (const auto& c : contexts) {
        if (c.size() != dim) {
            throw std::invalid_argument(
                "fit_standardizer: inconsistent dimensions");
        }
    }
    Standardizer s;
    s.mean.assign(dim, 0.0);
    s.sd.assign(dim, 0.0);
    const double n = static_cast<double>(contexts.size());
    for (const auto& c : contexts) {
        for (std::size_t i = 0; i < dim; ++i) s.mean[i] += c[i];
    }
    for (std::size_t i = 0; i < dim; ++i) s.mean[i] /= n;
    for (const auto& c : contexts) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = c[i] - s.mean[i];
            s.sd[i] += d * d;
        }
    }
    // A dimension that is constant across the pool carries no distance
    // information.  Storing +infinity makes transform send any finite
    // value to exactly 0 there; a tiny floor instead would blow off-pool
    // queries (e.g. a new calendar month) up to astronomic distances and
    // zero out every kernel weight.
    constexpr double kSdDegenerate = 1e-8;
    for (std::size_t i = 0; i < dim; ++i) {
        const double sd = std::sqrt(s.sd[i] / n);
        s.sd[i] = sd < kSdDegenerate
                      ? std::numeric_limits<double>::infinity()
                      : sd;
    }
    return s;
}

}  // namespace fleetcast
