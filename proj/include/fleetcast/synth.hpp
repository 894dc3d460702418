#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "fleetcast/dataio.hpp"
#include "fleetcast/rng.hpp"
#include "fleetcast/time.hpp"

namespace fleetcast {

enum class MarginalFamily { kUniform, kTruncNormal, kDiurnal };

enum class Miscalibration { kIdentity, kWiden, kShift, kRegime };

// Synthetic fleet with a known Gaussian-copula ground truth.  Observations
// are drawn from the true joint; emitted forecast curves are the true
// marginals passed through the miscalibration operator, so every
// calibration property has an analytic or brute-force oracle.
struct SynthSpec {
    int n_sites = 3;
    int days = 90;
    Timestamp start = 1577836800;  // 2020-01-01T00:00:00Z
    std::uint64_t seed = 1;
    MarginalFamily family = MarginalFamily::kTruncNormal;
    // Equicorrelation of the true copula; 1.0 selects the exact comonotone
    // joint (single shared normal factor).
    double rho = 0.7;
    Miscalibration miscal = Miscalibration::kIdentity;
    double widen_factor = 1.0;  // kWiden: width multiplier about the median
    double shift_fraction = 0.0;  // kShift: location shift as capacity share
    // kRegime: widen factors for hours [0,12) and [12,24).
    double regime_factor_am = 0.4;
    double regime_factor_pm = 0.95;
    int knots = 19;                      // levels i/(knots+1)
    std::size_t system_samples = 2000;   // MC size behind system curves
    std::vector<double> capacities;      // empty: 50 + 10*i MW
    std::string region = "SYNTH";

    double capacity(int site) const;
    double fleet_capacity() const;
    void validate() const;  // throws std::invalid_argument
};

// Inverse CDF of site i's true marginal at hour-of-day context of t.
double synth_true_inverse(const SynthSpec& spec, int site, Timestamp t,
                          double u);

// Emitted (possibly miscalibrated) forecast value at a quantile level.
double synth_emitted_value(const SynthSpec& spec, int site, Timestamp t,
                           double level);

// Full dataset in the exact shape the backtest loader produces, including
// system-level curves derived from oracle fleet quantiles (then passed
// through the same miscalibration operator).
DatasetBundle synth_generate(const SynthSpec& spec);

// Direct draws from the true joint fleet distribution at hour t,
// bypassing all estimation; `replicate` selects an independent stream.
std::vector<double> oracle_fleet_samples(const SynthSpec& spec, Timestamp t,
                                         std::size_t n_samples,
                                         std::uint64_t replicate = 0);

// Empirical u-quantile of oracle_fleet_samples.
double oracle_fleet_quantile(const SynthSpec& spec, Timestamp t, double u,
                             std::size_t n_samples,
                             std::uint64_t replicate = 0);

// Two-sample Kolmogorov-Smirnov statistic; inputs must be sorted.
double ks_statistic(std::span<const double> sorted_a,
                    std::span<const double> sorted_b);

// One-sample KS statistic against the uniform distribution on (0, 1);
// input must be sorted.
double ks_uniform_statistic(std::span<const double> sorted_u);

}  // namespace fleetcast
