#include "fleetcast/kernels.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fleetcast/normal.hpp"

namespace fleetcast::kernels {

namespace {

// One fleet total; shared verbatim by the serial and parallel variants so
// the two stay arithmetically identical by construction.
inline double one_fleet_sample(const Eigen::MatrixXd& chol,
                               const std::vector<const QuantileCurve*>& curves,
                               const RngStream& stream, std::size_t s,
                               std::size_t n, double* g_buf) {
    const std::uint64_t base = static_cast<std::uint64_t>(s) *
                               static_cast<std::uint64_t>(n);
    for (std::size_t j = 0; j < n; ++j) {
        g_buf[j] = stream.normal_at(base + j);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
            z += chol(static_cast<Eigen::Index>(i),
                      static_cast<Eigen::Index>(j)) *
                 g_buf[j];
        }
        const double u = normal_cdf(z);
        total += curves[i]->inv_cdf(u);
    }
    return total;
}

void check_args(const Eigen::MatrixXd& chol,
                const std::vector<const QuantileCurve*>& curves,
                std::size_t n_samples) {
    if (chol.rows() != chol.cols()) {
        throw std::invalid_argument("fleet_samples: chol must be square");
    }
    if (static_cast<std::size_t>(chol.rows()) != curves.size()) {
        throw std::invalid_argument(
            "fleet_samples: curve count != factor dimension");
    }
    if (curves.empty() || n_samples == 0) {
        throw std::invalid_argument(
            "fleet_samples: need >= 1 site and >= 1 sample");
    }
    for (const QuantileCurve* c : curves) {
        if (c == nullptr || c->empty()) {
            throw std::invalid_argument("fleet_samples: missing curve");
        }
    }
}

}  // namespace

void fleet_samples_serial(const Eigen::MatrixXd& chol,
                          const std::vector<const QuantileCurve*>& curves,
                          const RngStream& stream, std::size_t n_samples,
                          double* out_totals) {
    check_args(chol, curves, n_samples);
    const std::size_t n = curves.size();
    std::vector<double> g(n);
    for (std::size_t s = 0; s < n_samples; ++s) {
        out_totals[s] = one_fleet_sample(chol, curves, stream, s, n, g.data());
    }
}

void fleet_samples_parallel(const Eigen::MatrixXd& chol,
                            const std::vector<const QuantileCurve*>& curves,
                            const RngStream& stream, std::size_t n_samples,
                            double* out_totals) {
    check_args(chol, curves, n_samples);
    const std::size_t n = curves.size();
#ifdef _OPENMP
#pragma omp parallel
    {
        std::vector<double> g(n);
#pragma omp for schedule(static)
        for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n_samples);
             ++s) {
            out_totals[s] = one_fleet_sample(
                chol, curves, stream, static_cast<std::size_t>(s), n,
                g.data());
        }
    }
#else
    fleet_samples_serial(chol, curves, stream, n_samples, out_totals);
#endif
}

void rbf_weights_serial(const double* query, const double* rows,
                        std::size_t n_rows, std::size_t dim, double gamma,
                        double* out_weights) {
    if (gamma < 0.0) {
        throw std::invalid_argument("rbf_weights: gamma must be >= 0");
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        const double* row = rows + r * dim;
        double d2 = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double diff = query[k] - row[k];
            d2 += diff * diff;
        }
        out_weights[r] = std::exp(-gamma * d2);
    }
}

void rbf_weights_parallel(const double* query, const double* rows,
                          std::size_t n_rows, std::size_t dim, double gamma,
                          double* out_weights) {
    if (gamma < 0.0) {
        throw std::invalid_argument("rbf_weights: gamma must be >= 0");
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n_rows); ++r) {
        const double* row = rows + static_cast<std::size_t>(r) * dim;
        double d2 = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double diff = query[k] - row[k];
            d2 += diff * diff;
        }
        out_weights[r] = std::exp(-gamma * d2);
    }
#else
    rbf_weights_serial(query, rows, n_rows, dim, gamma, out_weights);
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace fleetcast::kernels
