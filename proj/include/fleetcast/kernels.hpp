#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "fleetcast/quantile_curve.hpp"
#include "fleetcast/rng.hpp"

namespace fleetcast::kernels {

// Hot loops of the pipeline, each in a serial reference form and an
// OpenMP form.  Both variants perform the identical floating-point
// operations in the identical order per output element, so their results
// are bit-for-bit equal regardless of thread count; the serial form is the
// testing reference, the parallel form is what production paths call.

// Draws `n_samples` fleet totals from the Gaussian copula: for sample s,
// g ~ N(0, I) from stream positions [s*N, (s+1)*N), z = chol * g,
// u = Phi(z) elementwise, x_i = curve_i.inv_cdf(u_i), total_s = sum_i x_i.
// `chol` is lower triangular, N x N; `curves` has N entries aligned with
// the rows of `chol`.
void fleet_samples_serial(const Eigen::MatrixXd& chol,
                          const std::vector<const QuantileCurve*>& curves,
                          const RngStream& stream, std::size_t n_samples,
                          double* out_totals);

void fleet_samples_parallel(const Eigen::MatrixXd& chol,
                            const std::vector<const QuantileCurve*>& curves,
                            const RngStream& stream, std::size_t n_samples,
                            double* out_totals);

// RBF kernel weights w_r = exp(-gamma * ||query - row_r||^2) for a block
// of reference rows stored contiguously (n_rows x dim, row major).
void rbf_weights_serial(const double* query, const double* rows,
                        std::size_t n_rows, std::size_t dim, double gamma,
                        double* out_weights);

void rbf_weights_parallel(const double* query, const double* rows,
                          std::size_t n_rows, std::size_t dim, double gamma,
                          double* out_weights);

// Number of OpenMP threads the parallel variants will use (1 when built
// without OpenMP).
int max_threads();

}  // namespace fleetcast::kernels
