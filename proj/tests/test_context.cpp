#include "fleetcast/context.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fleetcast/time.hpp"

using namespace fleetcast;

namespace {

// Hourly fleet history: zero at night, positive between the given hours
// (inclusive), for `days` days starting at `start`.
struct History {
    std::vector<Timestamp> times;
    std::vector<double> values;

    History(Timestamp start, int days, int first_hour, int last_hour,
            double level = 100.0) {
        for (int d = 0; d < days; ++d) {
            for (int h = 0; h < 24; ++h) {
                const Timestamp t =
                    start + d * kSecondsPerDay + h * kSecondsPerHour;
                times.push_back(t);
                values.push_back(h >= first_hour && h <= last_hour ? level
                                                                   : 0.0);
            }
        }
    }
};

const Timestamp kStart = parse_timestamp("2020-06-01T00:00:00Z");

}  // namespace

TEST_CASE("sun table finds the productive window") {
    const History h(kStart, 10, 6, 18);
    const SunTable sun =
        build_sun_table(h.times, h.values, kStart + 10 * kSecondsPerDay);
    REQUIRE(sun.days.size() == 10);
    for (std::size_t i = 0; i < sun.days.size(); ++i) {
        CHECK(sun.sunrise[i] == 6.0);
        CHECK(sun.sunset[i] == 18.0);
    }
}

TEST_CASE("sun table smooths with a trailing median over 7 days") {
    History h(kStart, 9, 6, 18);
    // One anomalous day (index 4): productive only at hour 12.
    for (int hh = 0; hh < 24; ++hh) {
        h.values[static_cast<std::size_t>(4 * 24 + hh)] =
            (hh == 12) ? 50.0 : 0.0;
    }
    const SunTable sun =
        build_sun_table(h.times, h.values, kStart + 9 * kSecondsPerDay);
    REQUIRE(sun.days.size() == 9);
    // The anomaly is outvoted by its trailing window...
    CHECK(sun.sunrise[4] == 6.0);
    CHECK(sun.sunset[4] == 18.0);
    // ...and later days are unaffected.
    CHECK(sun.sunrise[8] == 6.0);
    CHECK(sun.sunset[8] == 18.0);
}

TEST_CASE("sun table respects the cutoff (no look-ahead)") {
    const History h(kStart, 10, 6, 18);
    const SunTable sun =
        build_sun_table(h.times, h.values, kStart + 3 * kSecondsPerDay);
    CHECK(sun.days.size() == 3);
    CHECK(sun.days.back() == kStart + 2 * kSecondsPerDay);
}

TEST_CASE("days with no production contribute no entry") {
    History h(kStart, 5, 6, 18);
    for (int hh = 0; hh < 24; ++hh) {
        h.values[static_cast<std::size_t>(2 * 24 + hh)] = 0.0;
    }
    const SunTable sun =
        build_sun_table(h.times, h.values, kStart + 5 * kSecondsPerDay);
    CHECK(sun.days.size() == 4);
}

TEST_CASE("solar position: sunrise 0, sunset 1, midpoint half") {
    const History h(kStart, 8, 6, 18);
    const SunTable sun =
        build_sun_table(h.times, h.values, kStart + 8 * kSecondsPerDay);
    const Timestamp day = kStart + 7 * kSecondsPerDay;
    CHECK(solar_position(sun, day + 6 * kSecondsPerHour) == 0.0);
    CHECK(solar_position(sun, day + 18 * kSecondsPerHour) == 1.0);
    CHECK(solar_position(sun, day + 12 * kSecondsPerHour) == 0.5);
    // Clipped outside the window.
    CHECK(solar_position(sun, day + 2 * kSecondsPerHour) == 0.0);
    CHECK(solar_position(sun, day + 22 * kSecondsPerHour) == 1.0);
}

TEST_CASE("solar position reuses the latest entry for future days") {
    const History h(kStart, 5, 8, 16);
    const SunTable sun =
        build_sun_table(h.times, h.values, kStart + 5 * kSecondsPerDay);
    const Timestamp future = kStart + 40 * kSecondsPerDay;
    CHECK(solar_position(sun, future + 12 * kSecondsPerHour) == 0.5);
}

TEST_CASE("empty sun table yields position zero") {
    const SunTable sun;
    CHECK(solar_position(sun, kStart) == 0.0);
}

TEST_CASE("context layout: lags, embeddings, solar position") {
    const History h(kStart, 6, 6, 18);
    const SunTable sun =
        build_sun_table(h.times, h.values, kStart + 6 * kSecondsPerDay);
    const int k = 3;
    const Timestamp t = kStart + 5 * kSecondsPerDay + 6 * kSecondsPerHour;
    const double capacity = 200.0;
    const std::vector<double> ctx =
        build_context(h.times, h.values, t, k, capacity, sun);
    REQUIRE(ctx.size() == static_cast<std::size_t>(context_dimension(k)));

    // Lags: the newest history points at or before t - 24h, newest first,
    // capacity-normalized.  t - 24h lands on hour 6 of day 4 (value 100).
    CHECK(ctx[0] == 100.0 / capacity);  // day-4 hour 6
    CHECK(ctx[1] == 0.0);               // day-4 hour 5 (night)
    CHECK(ctx[2] == 0.0);               // day-4 hour 4

    // Hour embedding at hour 6: sin = 1, cos = 0.
    CHECK(ctx[3] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ctx[4] == doctest::Approx(0.0).scale(1).epsilon(1e-12));

    // Day-of-year embedding.
    const double doy = day_of_year(t);
    CHECK(ctx[5] ==
          doctest::Approx(std::sin(2 * std::numbers::pi * doy / 365.25))
              .epsilon(1e-12));
    CHECK(ctx[6] ==
          doctest::Approx(std::cos(2 * std::numbers::pi * doy / 365.25))
              .epsilon(1e-12));

    // Month embedding (June).
    CHECK(ctx[7] ==
          doctest::Approx(std::sin(2 * std::numbers::pi * 6 / 12.0))
              .scale(1)
              .epsilon(1e-12));
    CHECK(ctx[8] ==
          doctest::Approx(std::cos(2 * std::numbers::pi * 6 / 12.0))
              .epsilon(1e-12));

    // Solar position at sunrise hour.
    CHECK(ctx[9] == 0.0);
}

TEST_CASE("hour embedding is periodic across days") {
    const History h(kStart, 6, 6, 18);
    const SunTable sun =
        build_sun_table(h.times, h.values, kStart + 6 * kSecondsPerDay);
    const std::vector<double> a = build_context(
        h.times, h.values, kStart + 3 * kSecondsPerDay, 1, 100.0, sun);
    const std::vector<double> b = build_context(
        h.times, h.values, kStart + 4 * kSecondsPerDay, 1, 100.0, sun);
    CHECK(a[1] == b[1]);  // sin(hour 0)
    CHECK(a[2] == b[2]);  // cos(hour 0)
}

TEST_CASE("context requires k history points at or before t - 24h") {
    const History h(kStart, 3, 6, 18);
    const SunTable sun =
        build_sun_table(h.times, h.values, kStart + 3 * kSecondsPerDay);
    // Exactly at the edge: t - 24h == first history point.
    const Timestamp t = kStart + kSecondsPerDay;
    CHECK_NOTHROW(build_context(h.times, h.values, t, 1, 100.0, sun));
    CHECK_THROWS_AS(build_context(h.times, h.values, t, 2, 100.0, sun),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        build_context(h.times, h.values, kStart, 1, 100.0, sun),
        std::invalid_argument);
}

TEST_CASE("lags never read within 24 hours of the target") {
    History h(kStart, 4, 6, 18);
    // Poison everything after t - 24h; the context must not change.
    const Timestamp t = kStart + 3 * kSecondsPerDay + 9 * kSecondsPerHour;
    const SunTable sun =
        build_sun_table(h.times, h.values, day_start(t));
    const std::vector<double> before =
        build_context(h.times, h.values, t, 4, 100.0, sun);
    History poisoned = h;
    for (std::size_t i = 0; i < poisoned.times.size(); ++i) {
        if (poisoned.times[i] > t - kSecondsPerDay) {
            poisoned.values[i] = 1e9;
        }
    }
    const std::vector<double> after =
        build_context(poisoned.times, poisoned.values, t, 4, 100.0, sun);
    CHECK(before == after);
}

TEST_CASE("standardizer: moments, degenerate dimensions, transform") {
    const std::vector<std::vector<double>> rows{
        {1.0, 5.0, 7.0}, {3.0, 5.0, 9.0}, {5.0, 5.0, 11.0}};
    const Standardizer s = fit_standardizer(rows);
    REQUIRE(s.dim() == 3);
    CHECK(s.mean[0] == 3.0);
    CHECK(s.mean[1] == 5.0);
    CHECK(s.mean[2] == 9.0);
    // Population standard deviation.
    CHECK(s.sd[0] == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-14));
    CHECK(std::isinf(s.sd[1]));  // constant dimension marked inert

    // Standardized calibration set: mean 0, sd 1 per dimension; constant
    // dimensions map to exactly 0.
    double m0 = 0, m2 = 0, v0 = 0, v2 = 0;
    for (const auto& r : rows) {
        const std::vector<double> z = s.transform(r);
        CHECK(z[1] == 0.0);
        m0 += z[0];
        m2 += z[2];
    }
    m0 /= 3;
    m2 /= 3;
    for (const auto& r : rows) {
        const std::vector<double> z = s.transform(r);
        v0 += (z[0] - m0) * (z[0] - m0);
        v2 += (z[2] - m2) * (z[2] - m2);
    }
    CHECK(std::abs(m0) < 1e-10);
    CHECK(std::abs(m2) < 1e-10);
    CHECK(std::sqrt(v0 / 3) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::sqrt(v2 / 3) == doctest::Approx(1.0).epsilon(1e-10));

    // A query off the pool's constant value still maps to 0 in that
    // dimension instead of exploding the distance.
    const std::vector<double> q = s.transform(std::vector<double>{2.0, 6.5,
                                                                  8.0});
    CHECK(q[1] == 0.0);
    CHECK(q[0] == doctest::Approx(-1.0 / std::sqrt(8.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("standardized distances are invariant to affine feature maps") {
    // Scaling or shifting a raw feature dimension changes nothing after
    // standardization, so RBF weights are unaffected.
    const std::vector<std::vector<double>> raw{
        {1.0, 10.0}, {2.0, 30.0}, {4.0, 20.0}, {3.0, 50.0}};
    std::vector<std::vector<double>> mapped;
    for (const auto& r : raw) {
        mapped.push_back({5.0 * r[0] - 2.0, 0.1 * r[1] + 7.0});
    }
    const Standardizer s_raw = fit_standardizer(raw);
    const Standardizer s_map = fit_standardizer(mapped);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto za = s_raw.transform(raw[i]);
        const auto zb = s_map.transform(mapped[i]);
        for (std::size_t d = 0; d < za.size(); ++d) {
            CHECK(za[d] == doctest::Approx(zb[d]).epsilon(1e-12));
        }
    }
}

TEST_CASE("fit_standardizer requires two rows of equal dimension") {
    CHECK_THROWS_AS(fit_standardizer(std::vector<std::vector<double>>{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        fit_standardizer(std::vector<std::vector<double>>{{1.0}}),
        std::invalid_argument);
    CHECK_THROWS_AS(fit_standardizer(
                        std::vector<std::vector<double>>{{1.0}, {1.0, 2.0}}),
                    std::invalid_argument);
}
