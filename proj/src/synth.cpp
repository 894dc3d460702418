#include "fleetcast/synth.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fleetcast/normal.hpp"
#include "fleetcast/quantiles.hpp"

namespace fleetcast {

namespace {

constexpr std::uint64_t kSynthOracle = 0x6f7261636c65ULL;  // "oracle"

// Diurnal envelope: positive between hours 6 and 18, sinusoidal bump.
double diurnal_amplitude(Timestamp t) {
    const double h = static_cast<double>(hour_of_day(t));
    if (h < 6.0 || h > 18.0) return 0.0;
    return std::sin(std::numbers::pi * (h - 6.0) / 12.0);
}

struct TruncNormalParams {
    double mu, sigma, plo, phi;
};

TruncNormalParams trunc_params(double cap) {
    TruncNormalParams p;
    p.mu = 0.55 * cap;
    p.sigma = 0.18 * cap;
    p.plo = normal_cdf((0.0 - p.mu) / p.sigma);
    p.phi = normal_cdf((cap - p.mu) / p.sigma);
    return p;
}

// Cholesky factor of the true equicorrelation matrix (rho < 1).
Eigen::MatrixXd true_chol(const SynthSpec& spec) {
    const int n = spec.n_sites;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(n, n, spec.rho);
    sigma.diagonal().setOnes();
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument(
            "synth: true correlation is not positive definite");
    }
    return llt.matrixL();
}

int regime_of(Timestamp t) { return hour_of_day(t) < 12 ? 0 : 1; }

// One draw of the true site vector at hour t, using stream positions
// [base, base + n) (or a single shared position when comonotone).
void draw_true_sites(const SynthSpec& spec, const Eigen::MatrixXd* chol,
                     const RngStream& stream, std::uint64_t base, Timestamp t,
                     double* out) {
    const int n = spec.n_sites;
    if (spec.rho == 1.0) {
        const double z = stream.normal_at(base);
        const double u = normal_cdf(z);
        for (int i = 0; i < n; ++i) {
            out[i] = synth_true_inverse(spec, i, t, u);
        }
        return;
    }
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        g[static_cast<std::size_t>(j)] =
            stream.normal_at(base + static_cast<std::uint64_t>(j));
    }
    for (int i = 0; i < n; ++i) {
        double z = 0.0;
        for (int j = 0; j <= i; ++j) {
            z += (*chol)(i, j) * g[static_cast<std::size_t>(j)];
        }
        out[i] = synth_true_inverse(spec, i, t, normal_cdf(z));
    }
}

}  // namespace

double SynthSpec::capacity(int site) const {
    if (!capacities.empty()) {
        return capacities[static_cast<std::size_t>(site)];
    }
    return 50.0 + 10.0 * site;
}

double SynthSpec::fleet_capacity() const {
    double total = 0.0;
    for (int i = 0; i < n_sites; ++i) total += capacity(i);
    return total;
}

void SynthSpec::validate() const {
    if (n_sites < 1) throw std::invalid_argument("synth: n_sites < 1");
    if (days < 1) throw std::invalid_argument("synth: days < 1");
    if (start % kSecondsPerDay != 0) {
        throw std::invalid_argument("synth: start must be midnight UTC");
    }
    if (!capacities.empty() &&
        capacities.size() != static_cast<std::size_t>(n_sites)) {
        throw std::invalid_argument("synth: capacities size mismatch");
    }
    for (int i = 0; i < n_sites; ++i) {
        if (!(capacity(i) > 0.0)) {
            throw std::invalid_argument("synth: capacities must be > 0");
        }
    }
    const double min_rho =
        n_sites > 1 ? -1.0 / static_cast<double>(n_sites - 1) : -1.0;
    if (!std::isfinite(rho) || rho > 1.0 || rho <= min_rho) {
        throw std::invalid_argument("synth: rho outside valid range");
    }
    if (knots < 1 || knots > 999) {
        throw std::invalid_argument("synth: knots outside [1, 999]");
    }
    if (!(widen_factor > 0.0) || !std::isfinite(shift_fraction) ||
        !(regime_factor_am > 0.0) || !(regime_factor_pm > 0.0)) {
        throw std::invalid_argument("synth: invalid miscalibration parameter");
    }
    if (system_samples < 2) {
        throw std::invalid_argument("synth: system_samples < 2");
    }
    if (region.empty()) throw std::invalid_argument("synth: empty region");
}

double synth_true_inverse(const SynthSpec& spec, int site, Timestamp t,
                          double u) {
    if (!(u >= 0.0 && u <= 1.0)) {
        throw std::invalid_argument("synth_true_inverse: u outside [0, 1]");
    }
    const double cap = spec.capacity(site);
    switch (spec.family) {
        case MarginalFamily::kUniform:
            return cap * u;
        case MarginalFamily::kTruncNormal: {
            const TruncNormalParams p = trunc_params(cap);
            const double q = p.plo + u * (p.phi - p.plo);
            if (q <= 0.0) return 0.0;
            if (q >= 1.0) return cap;
            const double x = p.mu + p.sigma * normal_quantile(q);
            return std::clamp(x, 0.0, cap);
        }
        case MarginalFamily::kDiurnal: {
            const double amp = diurnal_amplitude(t);
            if (amp == 0.0) return 0.0;
            if (u == 0.0) return 0.0;
            if (u == 1.0) return amp * cap;
            return amp * cap * boost::math::ibeta_inv(2.0, 2.0, u);
        }
    }
    throw std::logic_error("synth_true_inverse: unknown family");
}

double synth_emitted_value(const SynthSpec& spec, int site, Timestamp t,
                           double level) {
    const double cap = spec.capacity(site);
    const double v = synth_true_inverse(spec, site, t, level);
    double out = v;
    switch (spec.miscal) {
        case Miscalibration::kIdentity:
            break;
        case Miscalibration::kWiden: {
            const double med = synth_true_inverse(spec, site, t, 0.5);
            out = med + spec.widen_factor * (v - med);
            break;
        }
        case Miscalibration::kShift:
            out = v + spec.shift_fraction * cap;
            break;
        case Miscalibration::kRegime: {
            const double f = regime_of(t) == 0 ? spec.regime_factor_am
                                               : spec.regime_factor_pm;
            const double med = synth_true_inverse(spec, site, t, 0.5);
            out = med + f * (v - med);
            break;
        }
    }
    return std::clamp(out, 0.0, cap);
}

DatasetBundle synth_generate(const SynthSpec& spec) {
    spec.validate();
    const int n = spec.n_sites;
    const std::size_t hours = static_cast<std::size_t>(spec.days) * 24;

    DatasetBundle bundle;
    bundle.grid.start = spec.start;
    bundle.grid.count = hours;
    for (int i = 0; i < n; ++i) {
        SiteMeta meta;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "S%03d", i + 1);
        meta.site_id = buf;
        meta.capacity_mw = spec.capacity(i);
        meta.latitude = 35.0;
        meta.longitude = -100.0 + 0.1 * i;
        meta.region = spec.region;
        bundle.sites.push_back(std::move(meta));
    }

    // Shared level grid for every emitted curve.
    std::vector<double> levels(static_cast<std::size_t>(spec.knots));
    for (int k = 0; k < spec.knots; ++k) {
        levels[static_cast<std::size_t>(k)] =
            static_cast<double>(k + 1) / static_cast<double>(spec.knots + 1);
    }
    const auto level_grid =
        std::make_shared<const std::vector<double>>(levels);

    Eigen::MatrixXd chol;
    if (spec.rho != 1.0) chol = true_chol(spec);

    bundle.obs.assign(static_cast<std::size_t>(n),
                      std::vector<double>(hours, 0.0));
    bundle.site_curves.assign(static_cast<std::size_t>(n),
                              std::vector<QuantileCurve>(hours));
    auto& system = bundle.system_curves[spec.region];
    system.resize(hours);

    const double fleet_cap = spec.fleet_capacity();
    std::vector<double> site_buf(static_cast<std::size_t>(n));
    std::vector<double> fleet_draws(spec.system_samples);

    for (std::size_t h = 0; h < hours; ++h) {
        const Timestamp t = bundle.grid.time(h);

        // Observations from the true joint.
        const RngStream truth(spec.seed,
                              derive_stream_id(stream_tag::kSynthTruth, t));
        draw_true_sites(spec, &chol, truth, 0, t, site_buf.data());
        for (int i = 0; i < n; ++i) {
            bundle.obs[static_cast<std::size_t>(i)][h] =
                site_buf[static_cast<std::size_t>(i)];
        }

        // Site curves: true marginal quantiles through the miscalibration
        // operator.
        for (int i = 0; i < n; ++i) {
            std::vector<double> values(levels.size());
            for (std::size_t k = 0; k < levels.size(); ++k) {
                values[k] = synth_emitted_value(spec, i, t, levels[k]);
            }
            // The operator preserves monotonicity, but clamping can leave
            // equal consecutive values; the constructor accepts those.
            bundle.site_curves[static_cast<std::size_t>(i)][h] =
                QuantileCurve(level_grid, std::move(values), 0.0,
                              spec.capacity(i));
        }

        // System curve: oracle fleet quantiles, same operator at fleet
        // scale.
        const RngStream sys_stream(
            spec.seed, derive_stream_id(stream_tag::kSynthSystem, t));
        for (std::size_t s = 0; s < spec.system_samples; ++s) {
            draw_true_sites(spec, &chol, sys_stream,
                            s * static_cast<std::size_t>(n), t,
                            site_buf.data());
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                total += site_buf[static_cast<std::size_t>(i)];
            }
            fleet_draws[s] = total;
        }
        std::sort(fleet_draws.begin(), fleet_draws.end());
        const double fleet_med = quantile_sorted(fleet_draws, 0.5);
        std::vector<double> sys_values(levels.size());
        for (std::size_t k = 0; k < levels.size(); ++k) {
            double v = quantile_sorted(fleet_draws, levels[k]);
            switch (spec.miscal) {
                case Miscalibration::kIdentity:
                    break;
                case Miscalibration::kWiden:
                    v = fleet_med + spec.widen_factor * (v - fleet_med);
                    break;
                case Miscalibration::kShift:
                    v += spec.shift_fraction * fleet_cap;
                    break;
                case Miscalibration::kRegime: {
                    const double f = regime_of(t) == 0
                                         ? spec.regime_factor_am
                                         : spec.regime_factor_pm;
                    v = fleet_med + f * (v - fleet_med);
                    break;
                }
            }
            sys_values[k] = std::clamp(v, 0.0, fleet_cap);
        }
        // MC quantiles are monotone by construction; clamping keeps them so.
        system[h] = QuantileCurve(level_grid, std::move(sys_values), 0.0,
                                  fleet_cap);
    }

    // Coverage accounting (dense by construction).
    bundle.coverage.obs_rows = static_cast<std::size_t>(n) * hours;
    bundle.coverage.site_forecast_rows =
        static_cast<std::size_t>(n) * hours * levels.size();
    bundle.coverage.system_forecast_rows = hours * levels.size();
    bundle.coverage.present_obs_cells = static_cast<std::size_t>(n) * hours;
    bundle.coverage.present_curve_cells = static_cast<std::size_t>(n) * hours;
    return bundle;
}

std::vector<double> oracle_fleet_samples(const SynthSpec& spec, Timestamp t,
                                         std::size_t n_samples,
                                         std::uint64_t replicate) {
    spec.validate();
    Eigen::MatrixXd chol;
    if (spec.rho != 1.0) chol = true_chol(spec);
    const RngStream stream(
        spec.seed,
        derive_stream_id(kSynthOracle + replicate * 0x10001ULL, t));
    std::vector<double> out(n_samples);
    std::vector<double> site_buf(static_cast<std::size_t>(spec.n_sites));
    for (std::size_t s = 0; s < n_samples; ++s) {
        draw_true_sites(spec, &chol, stream,
                        s * static_cast<std::size_t>(spec.n_sites), t,
                        site_buf.data());
        double total = 0.0;
        for (double v : site_buf) total += v;
        out[s] = total;
    }
    return out;
}

double oracle_fleet_quantile(const SynthSpec& spec, Timestamp t, double u,
                             std::size_t n_samples, std::uint64_t replicate) {
    if (!(u > 0.0 && u < 1.0)) {
        throw std::invalid_argument("oracle_fleet_quantile: u outside (0, 1)");
    }
    std::vector<double> samples =
        oracle_fleet_samples(spec, t, n_samples, replicate);
    std::sort(samples.begin(), samples.end());
    return quantile_sorted(samples, u);
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("ks_statistic: empty sample");
    }
    double d = 0.0;
    std::size_t i = 0, j = 0;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        // Advance both sides through the smallest pending value so tied
        // observations are counted simultaneously.
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na -
                                 static_cast<double>(j) / nb));
    }
    return d;
}

double ks_uniform_statistic(std::span<const double> sorted_u) {
    if (sorted_u.empty()) {
        throw std::invalid_argument("ks_uniform_statistic: empty sample");
    }
    const double n = static_cast<double>(sorted_u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted_u.size(); ++i) {
        const double u = sorted_u[i];
        d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - u));
        d = std::max(d, std::abs(u - static_cast<double>(i) / n));
    }
    return d;
}

}  // namespace fleetcast
