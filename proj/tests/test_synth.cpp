#include "fleetcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fleetcast/conformal.hpp"
#include "fleetcast/quantiles.hpp"

using namespace fleetcast;

namespace {

SynthSpec base_spec() {
    SynthSpec spec;
    spec.n_sites = 3;
    spec.days = 20;
    spec.seed = 77;
    spec.system_samples = 200;  // keep generation cheap in unit tests
    return spec;
}

}  // namespace

TEST_CASE("spec defaults and validation") {
    SynthSpec spec;
    CHECK(spec.capacity(0) == 50.0);
    CHECK(spec.capacity(2) == 70.0);
    CHECK(spec.fleet_capacity() == 180.0);
    CHECK_NOTHROW(spec.validate());

    spec.capacities = {10.0, 20.0, 30.0};
    CHECK(spec.capacity(1) == 20.0);
    CHECK(spec.fleet_capacity() == 60.0);

    SynthSpec bad = base_spec();
    bad.n_sites = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = base_spec();
    bad.days = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = base_spec();
    bad.rho = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = base_spec();
    bad.rho = -0.6;  // below -1/(n-1) for n=3
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = base_spec();
    bad.rho = -0.4;  // inside the valid range
    CHECK_NOTHROW(bad.validate());
    bad = base_spec();
    bad.start += 3600;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = base_spec();
    bad.capacities = {1.0};  // size mismatch
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("generated bundle has dense coverage and valid ranges") {
    const SynthSpec spec = base_spec();
    const DatasetBundle b = synth_generate(spec);
    REQUIRE(b.sites.size() == 3);
    CHECK(b.sites[0].site_id == "S001");
    CHECK(b.sites[2].site_id == "S003");
    CHECK(b.sites[1].region == "SYNTH");
    CHECK(b.grid.start == spec.start);
    CHECK(b.grid.count == 20u * 24u);
    CHECK(b.fleet_capacity() == spec.fleet_capacity());

    // Dense: every cell present, none missing.
    CHECK(b.coverage.present_obs_cells == 3 * b.grid.count);
    CHECK(b.coverage.missing_obs_cells == 0);
    CHECK(b.coverage.present_curve_cells == 3 * b.grid.count);
    CHECK(b.coverage.missing_curve_cells == 0);

    REQUIRE(b.system_curves.count("SYNTH") == 1);
    CHECK(b.system_curves.at("SYNTH").size() == b.grid.count);

    for (std::size_t i = 0; i < 3; ++i) {
        const double cap = b.sites[i].capacity_mw;
        for (std::size_t h = 0; h < b.grid.count; ++h) {
            const double y = b.obs[i][h];
            REQUIRE(std::isfinite(y));
            REQUIRE(y >= 0.0);
            REQUIRE(y <= cap);
            REQUIRE_FALSE(b.site_curves[i][h].empty());
        }
    }
}

TEST_CASE("emitted curves reproduce the marginal quantiles") {
    const SynthSpec spec = base_spec();
    const DatasetBundle b = synth_generate(spec);
    const Timestamp t = b.grid.time(30);
    const QuantileCurve& curve = b.site_curves[1][30];
    for (double level : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        CHECK(curve.inv_cdf(level) ==
              doctest::Approx(synth_emitted_value(spec, 1, t, level))
                  .epsilon(1e-12));
    }
}

TEST_CASE("identity miscalibration gives uniform PIT") {
    // The uniform family is represented exactly by the piecewise-linear
    // curves, so the PIT is distributionally exact and only sampling noise
    // remains.
    SynthSpec spec = base_spec();
    spec.family = MarginalFamily::kUniform;
    spec.rho = 0.0;  // pooled values stay independent
    spec.days = 70;
    const DatasetBundle b = synth_generate(spec);
    std::vector<double> pit;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t h = 0; h < b.grid.count; ++h) {
            pit.push_back(b.site_curves[i][h].eval_cdf(b.obs[i][h]));
        }
    }
    REQUIRE(pit.size() >= 5000);
    std::sort(pit.begin(), pit.end());
    const double crit = 1.628 / std::sqrt(static_cast<double>(pit.size()));
    CHECK(ks_uniform_statistic(pit) < crit);
}

TEST_CASE("truncated-normal PIT is uniform up to curve discretization") {
    SynthSpec spec = base_spec();
    spec.rho = 0.0;
    spec.days = 70;
    const DatasetBundle b = synth_generate(spec);
    std::vector<double> pit;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t h = 0; h < b.grid.count; ++h) {
            pit.push_back(b.site_curves[i][h].eval_cdf(b.obs[i][h]));
        }
    }
    std::sort(pit.begin(), pit.end());
    CHECK(ks_uniform_statistic(pit) < 0.05);
}

TEST_CASE("widening the curves makes the conformal correction negative") {
    SynthSpec spec = base_spec();
    spec.days = 60;
    spec.miscal = Miscalibration::kWiden;
    spec.widen_factor = 2.0;
    const DatasetBundle b = synth_generate(spec);
    const double alpha = 0.2;
    std::vector<double> scores;
    for (std::size_t h = 0; h < b.grid.count; ++h) {
        const QuantileCurve& c = b.site_curves[0][h];
        const Interval raw{c.inv_cdf(alpha / 2), c.inv_cdf(1 - alpha / 2)};
        scores.push_back(conformity_score(raw, b.obs[0][h]));
    }
    const double s_hat =
        conformal_quantile(scores, alpha, ConformalMode::kPlain);
    CHECK(s_hat < 0.0);

    // Identity curves at the same alpha need little or no correction.
    SynthSpec ident = spec;
    ident.miscal = Miscalibration::kIdentity;
    const DatasetBundle bi = synth_generate(ident);
    std::vector<double> scores_i;
    for (std::size_t h = 0; h < bi.grid.count; ++h) {
        const QuantileCurve& c = bi.site_curves[0][h];
        const Interval raw{c.inv_cdf(alpha / 2), c.inv_cdf(1 - alpha / 2)};
        scores_i.push_back(conformity_score(raw, bi.obs[0][h]));
    }
    const double s_hat_i =
        conformal_quantile(scores_i, alpha, ConformalMode::kPlain);
    CHECK(s_hat < s_hat_i);
}

TEST_CASE("dependence widens the true fleet interval") {
    SynthSpec indep = base_spec();
    indep.rho = 0.0;
    SynthSpec corr = base_spec();
    corr.rho = 0.9;
    const Timestamp t = indep.start + 12 * kSecondsPerHour;
    const std::size_t S = 20000;

    auto width90 = [&](const SynthSpec& s) {
        std::vector<double> draws = oracle_fleet_samples(s, t, S);
        std::sort(draws.begin(), draws.end());
        return quantile_sorted(draws, 0.95) - quantile_sorted(draws, 0.05);
    };
    CHECK(width90(corr) > width90(indep));
}

TEST_CASE("oracle median of two independent unit uniforms") {
    SynthSpec spec;
    spec.n_sites = 2;
    spec.family = MarginalFamily::kUniform;
    spec.rho = 0.0;
    spec.capacities = {1.0, 1.0};
    spec.seed = 5;
    const std::size_t S = 10000;
    const double q =
        oracle_fleet_quantile(spec, spec.start + 12 * kSecondsPerHour, 0.5, S);
    CHECK(std::abs(q - 1.0) <= 3.0 / std::sqrt(static_cast<double>(S)));
}

TEST_CASE("comonotone oracle adds the marginal quantiles") {
    SynthSpec spec = base_spec();
    spec.rho = 1.0;
    const Timestamp t = spec.start + 12 * kSecondsPerHour;
    const std::size_t S = 40000;
    std::vector<double> draws = oracle_fleet_samples(spec, t, S);
    std::sort(draws.begin(), draws.end());
    for (double u : {0.25, 0.5, 0.75}) {
        double expected = 0.0;
        for (int i = 0; i < spec.n_sites; ++i) {
            expected += synth_true_inverse(spec, i, t, u);
        }
        CHECK(quantile_sorted(draws, u) ==
              doctest::Approx(expected).epsilon(0.02));
    }
    // Every comonotone draw is itself a sum of aligned marginal quantiles,
    // so no sample can exceed the capacity-sum or drop below zero.
    CHECK(draws.front() >= 0.0);
    CHECK(draws.back() <= spec.fleet_capacity());
}

TEST_CASE("diurnal family is dark outside daylight hours") {
    SynthSpec spec = base_spec();
    spec.family = MarginalFamily::kDiurnal;
    spec.days = 5;
    const DatasetBundle b = synth_generate(spec);
    for (std::size_t h = 0; h < b.grid.count; ++h) {
        const int hod = hour_of_day(b.grid.time(h));
        if (hod < 6 || hod > 18) {
            CHECK(b.obs[0][h] == 0.0);
        }
    }
    // Midday observations are usually positive.
    double midday_sum = 0.0;
    for (std::size_t h = 12; h < b.grid.count; h += 24) {
        midday_sum += b.obs[0][h];
    }
    CHECK(midday_sum > 0.0);
}

TEST_CASE("generation and oracle are deterministic in the seed") {
    const SynthSpec spec = base_spec();
    const DatasetBundle a = synth_generate(spec);
    const DatasetBundle b = synth_generate(spec);
    CHECK(a.obs == b.obs);
    CHECK(a.site_curves[2][17].inv_cdf(0.3) ==
          b.site_curves[2][17].inv_cdf(0.3));

    const Timestamp t = spec.start + 12 * kSecondsPerHour;
    CHECK(oracle_fleet_samples(spec, t, 64) ==
          oracle_fleet_samples(spec, t, 64));
    CHECK(oracle_fleet_samples(spec, t, 64) !=
          oracle_fleet_samples(spec, t, 64, 1));

    SynthSpec other = spec;
    other.seed = spec.seed + 1;
    CHECK(synth_generate(other).obs != a.obs);
}

TEST_CASE("system curves are monotone across levels") {
    const SynthSpec spec = base_spec();
    const DatasetBundle b = synth_generate(spec);
    const auto& sys = b.system_curves.at("SYNTH");
    for (std::size_t h = 0; h < b.grid.count; h += 7) {
        double prev = sys[h].inv_cdf(0.0);
        for (double u : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
            const double v = sys[h].inv_cdf(u);
            CHECK(v >= prev);
            prev = v;
        }
        CHECK(sys[h].inv_cdf(1.0) <= spec.fleet_capacity());
    }
}

TEST_CASE("two-sample KS statistic") {
    const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    CHECK(ks_statistic(a, a) == 0.0);
    const std::vector<double> lo{1.0, 2.0};
    const std::vector<double> hi{10.0, 11.0};
    CHECK(ks_statistic(lo, hi) == 1.0);
    // Sharing half the mass: maximum gap 0.5.
    const std::vector<double> mid{1.0, 10.0};
    CHECK(ks_statistic(lo, mid) == 0.5);
    CHECK_THROWS_AS(ks_statistic({}, a), std::invalid_argument);
}

TEST_CASE("uniform KS statistic") {
    // Perfectly spaced mid-grid points: D = 1/(2n).
    const std::size_t n = 10;
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    }
    CHECK(ks_uniform_statistic(u) ==
          doctest::Approx(0.05).epsilon(1e-15));
    // A clumped sample is far from uniform.
    std::vector<double> clump(n, 0.5);
    CHECK(ks_uniform_statistic(clump) == 0.5);
    CHECK_THROWS_AS(ks_uniform_statistic({}), std::invalid_argument);
}
