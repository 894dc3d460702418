#include "fleetcast/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fleetcast/csv.hpp"
#include "fleetcast/log.hpp"
#include "fleetcast/normal.hpp"

namespace fleetcast {

double pit_value(const QuantileCurve& curve, double observation) {
    double u = curve.eval_cdf(observation);
    return std::clamp(u, kPitClip, 1.0 - kPitClip);
}

Eigen::MatrixXd normal_scores(const Eigen::MatrixXd& pit) {
    Eigen::MatrixXd z(pit.rows(), pit.cols());
    for (Eigen::Index j = 0; j < pit.cols(); ++j) {
        for (Eigen::Index i = 0; i < pit.rows(); ++i) {
            const double u = pit(i, j);
            if (!(u > 0.0 && u < 1.0)) {
                throw std::invalid_argument(
                    "normal_scores: PIT value outside (0, 1)");
            }
            z(i, j) = normal_quantile(u);
        }
    }
    return z;
}

CorrelationEstimate estimate_correlation(const Eigen::MatrixXd& scores) {
    const Eigen::Index n = scores.rows();
    const Eigen::Index t = scores.cols();
    if (n < 1 || t < 2) {
        throw std::invalid_argument(
            "estimate_correlation: need >= 1 site and >= 2 time steps");
    }
    const Eigen::MatrixXd m =
        (scores * scores.transpose()) / static_cast<double>(t);

    CorrelationEstimate out;
    constexpr double kVarTol = 1e-12;
    std::vector<bool> degenerate(static_cast<std::size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = scores.row(i).mean();
        const double var = m(i, i) - mean * mean;
        if (var < kVarTol) {
            degenerate[static_cast<std::size_t>(i)] = true;
            out.degenerate.push_back(static_cast<int>(i));
        }
    }
    if (!out.degenerate.empty()) {
        log::warn("estimate_correlation: " +
                  std::to_string(out.degenerate.size()) +
                  " site(s) with constant scores; their correlations were "
                  "set to zero");
    }

    out.sigma = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (degenerate[static_cast<std::size_t>(i)]) continue;
        for (Eigen::Index j = 0; j < i; ++j) {
            if (degenerate[static_cast<std::size_t>(j)]) continue;
            const double denom = std::sqrt(m(i, i) * m(j, j));
            const double r = m(i, j) / denom;
            out.sigma(i, j) = r;
            out.sigma(j, i) = r;
        }
    }
    return out;
}

PdRepairResult pd_repair(Eigen::MatrixXd a, double min_eigenvalue) {
    if (a.rows() != a.cols() || a.rows() < 1) {
        throw std::invalid_argument("pd_repair: matrix must be square");
    }
    if (!a.allFinite()) {
        throw std::invalid_argument("pd_repair: non-finite entries");
    }
    const Eigen::Index n = a.rows();
    a = 0.5 * (a + a.transpose()).eval();

    PdRepairResult result;
    constexpr int kMaxIterations = 64;
    for (int iter = 0; iter <= kMaxIterations; ++iter) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        if (es.info() != Eigen::Success) {
            throw std::runtime_error("pd_repair: eigendecomposition failed");
        }
        const double min_eig = es.eigenvalues().minCoeff();
        const bool unit_diag =
            (a.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-12;
        if (min_eig >= min_eigenvalue && unit_diag) {
            result.sigma = std::move(a);
            result.iterations = iter;
            result.min_eigenvalue = min_eig;
            return result;
        }
        result.changed = true;
        // The first pass clips at the exact floor; later passes add
        // headroom because the unit-diagonal rescale below can pull the
        // smallest eigenvalue slightly back under the floor.
        const double floor_used =
            (iter == 0) ? min_eigenvalue : min_eigenvalue * 1.05;
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor_used);
        a = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        a = 0.5 * (a + a.transpose()).eval();
        Eigen::VectorXd d = a.diagonal().cwiseSqrt();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                a(i, j) /= d(i) * d(j);
            }
        }
        a.diagonal().setOnes();
    }
    throw std::runtime_error("pd_repair: did not converge");
}

CorrelationModel fit_correlation_model(const Eigen::MatrixXd& scores,
                                       std::vector<std::string> site_ids,
                                       Timestamp fitted_through) {
    if (static_cast<std::size_t>(scores.rows()) != site_ids.size()) {
        throw std::invalid_argument(
            "fit_correlation_model: score rows != site count");
    }
    CorrelationEstimate est = estimate_correlation(scores);
    PdRepairResult rep = pd_repair(std::move(est.sigma));

    CorrelationModel model;
    model.site_ids = std::move(site_ids);
    model.sigma = std::move(rep.sigma);
    model.fitted_through = fitted_through;
    for (int idx : est.degenerate) {
        model.degenerate_sites.push_back(
            model.site_ids[static_cast<std::size_t>(idx)]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(model.sigma);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error(
            "fit_correlation_model: Cholesky failed after repair");
    }
    model.chol = llt.matrixL();
    return model;
}

void save_correlation_model(const CorrelationModel& model,
                            const std::string& path) {
    CsvWriter w(path);
    w.field("fitted_through");
    w.field(format_timestamp(model.fitted_through));
    w.end_row();
    w.field("degenerate");
    std::string joined;
    for (std::size_t i = 0; i < model.degenerate_sites.size(); ++i) {
        if (i) joined += ';';
        joined += model.degenerate_sites[i];
    }
    w.field(joined);
    w.end_row();
    w.field("site_id");
    for (const std::string& id : model.site_ids) w.field(id);
    w.end_row();
    for (Eigen::Index i = 0; i < model.sigma.rows(); ++i) {
        w.field(model.site_ids[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < model.sigma.cols(); ++j) {
            w.field(model.sigma(i, j));
        }
        w.end_row();
    }
}

CorrelationModel load_correlation_model(const std::string& path) {
    CsvReader r(path);
    std::vector<std::string> row;
    if (!r.next_row(&row) || row.size() != 2 || row[0] != "fitted_through") {
        throw std::runtime_error(path + ": missing fitted_through line");
    }
    CorrelationModel model;
    model.fitted_through = parse_timestamp(row[1]);
    if (!r.next_row(&row) || row.empty() || row[0] != "degenerate") {
        throw std::runtime_error(path + ": missing degenerate line");
    }
    if (row.size() > 1 && !row[1].empty()) {
        std::stringstream ss(row[1]);
        std::string part;
        while (std::getline(ss, part, ';')) {
            model.degenerate_sites.push_back(part);
        }
    }
    if (!r.next_row(&row) || row.size() < 2 || row[0] != "site_id") {
        throw std::runtime_error(path + ": missing site header");
    }
    model.site_ids.assign(row.begin() + 1, row.end());
    const std::size_t n = model.site_ids.size();
    model.sigma.resize(static_cast<Eigen::Index>(n),
                       static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!r.next_row(&row) || row.size() != n + 1) {
            throw std::runtime_error(path + ": truncated matrix row");
        }
        if (row[0] != model.site_ids[i]) {
            throw std::runtime_error(path + ": row order mismatch at '" +
                                     row[0] + "'");
        }
        for (std::size_t j = 0; j < n; ++j) {
            model.sigma(static_cast<Eigen::Index>(i),
                        static_cast<Eigen::Index>(j)) =
                parse_double(row[j + 1], path);
        }
    }
    if (!model.sigma.isApprox(model.sigma.transpose(), 1e-12)) {
        throw std::runtime_error(path + ": matrix not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(model.sigma);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error(path + ": matrix not positive definite");
    }
    model.chol = llt.matrixL();
    return model;
}

}  // namespace fleetcast
