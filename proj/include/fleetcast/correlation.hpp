#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fleetcast/quantile_curve.hpp"
#include "fleetcast/time.hpp"

namespace fleetcast {

// PIT values are clipped away from {0, 1} so the probit transform stays
// finite.
inline constexpr double kPitClip = 1e-6;

// Probability integral transform of an observation through its forecast
// CDF, clipped to [kPitClip, 1 - kPitClip].
double pit_value(const QuantileCurve& curve, double observation);

// Elementwise probit of a PIT matrix (sites x times).
Eigen::MatrixXd normal_scores(const Eigen::MatrixXd& pit);

struct CorrelationEstimate {
    Eigen::MatrixXd sigma;         // unit-diagonal second-moment matrix
    std::vector<int> degenerate;   // rows with (near) zero score variance
};

// Sigma = (1/T) Z Z^T rescaled to unit diagonal.  Rows whose scores are
// constant carry no dependence information: their off-diagonal entries are
// set to 0 and the diagonal to 1, and the row index is reported.  Requires
// at least two time columns.
CorrelationEstimate estimate_correlation(const Eigen::MatrixXd& scores);

struct PdRepairResult {
    Eigen::MatrixXd sigma;
    bool changed = false;
    int iterations = 0;
    double min_eigenvalue = 0.0;
};

// Projects a symmetric matrix to a valid correlation matrix: eigenvalues
// floored at min_eigenvalue, reconstructed, rescaled to unit diagonal,
// repeating until the floor holds after rescaling.  Inputs that already
// satisfy the constraints are returned unchanged (exact idempotence).
PdRepairResult pd_repair(Eigen::MatrixXd a, double min_eigenvalue = 1e-6);

// A fitted dependence model over an ordered site list.
struct CorrelationModel {
    std::vector<std::string> site_ids;
    Eigen::MatrixXd sigma;  // repaired correlation, unit diagonal
    Eigen::MatrixXd chol;   // lower-triangular L with L L^T = sigma
    Timestamp fitted_through = 0;  // last score timestamp used in the fit
    std::vector<std::string> degenerate_sites;

    std::size_t size() const { return site_ids.size(); }
};

// Estimates, repairs, and factorizes in one step.  `scores` rows follow
// `site_ids` order; `fitted_through` documents the training cutoff.
CorrelationModel fit_correlation_model(const Eigen::MatrixXd& scores,
                                       std::vector<std::string> site_ids,
                                       Timestamp fitted_through);

// CSV round-trip.  Layout: one metadata line ("fitted_through,<iso>"), one
// ("degenerate,<id;id;...>"), a header carrying the site order, then the
// matrix rows at full precision.
void save_correlation_model(const CorrelationModel& model,
                            const std::string& path);
CorrelationModel load_correlation_model(const std::string& path);

}  // namespace fleetcast
