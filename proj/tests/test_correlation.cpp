#include "fleetcast/correlation.hpp"

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "fleetcast/normal.hpp"
#include "fleetcast/rng.hpp"

using namespace fleetcast;

namespace {

// Brute-force pairwise Pearson correlation oracle.  The estimator under
// test is the unit-rescaled second-moment matrix, which equals Pearson on
// centered rows, so the oracle centers its inputs.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd ac = a.array() - a.mean();
    const Eigen::VectorXd bc = b.array() - b.mean();
    return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

Eigen::MatrixXd random_scores(int n, int t, std::uint64_t seed) {
    const RngStream s(seed, 0);
    Eigen::MatrixXd m(n, t);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < t; ++j) {
            m(i, j) = s.normal_at(static_cast<std::uint64_t>(i * t + j));
        }
    }
    // Center rows so the second-moment estimator and Pearson agree.
    for (int i = 0; i < n; ++i) {
        m.row(i).array() -= m.row(i).mean();
    }
    return m;
}

}  // namespace

TEST_CASE("estimate matches the pairwise Pearson oracle") {
    const Eigen::MatrixXd z = random_scores(5, 200, 99);
    const CorrelationEstimate est = estimate_correlation(z);
    for (int i = 0; i < 5; ++i) {
        CHECK(est.sigma(i, i) == 1.0);
        for (int j = 0; j < i; ++j) {
            const double ref = pearson(z.row(i), z.row(j));
            CHECK(est.sigma(i, j) == doctest::Approx(ref).epsilon(1e-10));
            CHECK(est.sigma(i, j) == est.sigma(j, i));
        }
    }
    CHECK(est.degenerate.empty());
}

TEST_CASE("identical rows give off-diagonal 1") {
    Eigen::MatrixXd z(2, 4);
    z << 1, -1, 1, -1, 1, -1, 1, -1;
    const CorrelationEstimate est = estimate_correlation(z);
    CHECK(est.sigma(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("orthogonal rows give off-diagonal 0") {
    Eigen::MatrixXd z(2, 4);
    z << 1, -1, 1, -1, 1, 1, -1, -1;
    const CorrelationEstimate est = estimate_correlation(z);
    CHECK(est.sigma(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("constant rows are degenerate: zero correlation, unit diagonal") {
    Eigen::MatrixXd z(3, 5);
    z.row(0) << 1, -1, 2, -2, 0.5;
    z.row(1).setZero();  // no variance
    z.row(2) << 0.3, 0.1, -0.4, 0.2, -0.2;
    const CorrelationEstimate est = estimate_correlation(z);
    CHECK(est.degenerate == std::vector<int>{1});
    CHECK(est.sigma(1, 1) == 1.0);
    CHECK(est.sigma(0, 1) == 0.0);
    CHECK(est.sigma(2, 1) == 0.0);
    CHECK(est.sigma(0, 2) != 0.0);
}

TEST_CASE("estimate requires at least two columns") {
    CHECK_THROWS_AS(estimate_correlation(Eigen::MatrixXd::Zero(2, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_correlation(Eigen::MatrixXd::Zero(0, 5)),
                    std::invalid_argument);
}

TEST_CASE("pd_repair returns valid input unchanged, bit for bit") {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
    const PdRepairResult r = pd_repair(eye);
    CHECK_FALSE(r.changed);
    CHECK(r.sigma == eye);

    Eigen::MatrixXd good(2, 2);
    good << 1.0, 0.6, 0.6, 1.0;
    const PdRepairResult g = pd_repair(good);
    CHECK_FALSE(g.changed);
    CHECK(g.sigma == good);
}

TEST_CASE("pd_repair fixes an invalid 2x2") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 1.2, 1.2, 1.0;
    const PdRepairResult r = pd_repair(bad);
    CHECK(r.changed);
    CHECK(r.sigma(0, 0) == 1.0);
    CHECK(r.sigma(1, 1) == 1.0);
    CHECK(r.sigma(0, 1) < 1.0);
    CHECK(r.sigma(0, 1) == r.sigma(1, 0));
    // Independent eigenvalue oracle.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.sigma);
    CHECK(es.eigenvalues().minCoeff() >= 1e-6);
}

TEST_CASE("pd_repair is idempotent") {
    const RngStream s(31, 7);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 6;
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i) {
            m(i, i) = 1.0;
            for (int j = 0; j < i; ++j) {
                // Deliberately wild entries so most draws are not PSD.
                const double v =
                    2.4 * s.uniform_at(
                              static_cast<std::uint64_t>(trial * 100 + i * n +
                                                         j)) -
                    1.2;
                m(i, j) = m(j, i) = v;
            }
        }
        const PdRepairResult first = pd_repair(m);
        const PdRepairResult again = pd_repair(first.sigma);
        CHECK_FALSE(again.changed);
        CHECK((again.sigma - first.sigma).cwiseAbs().maxCoeff() <= 1e-12);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(first.sigma);
        CHECK(es.eigenvalues().minCoeff() >= 1e-6 * (1.0 - 1e-9));
        for (int i = 0; i < n; ++i) CHECK(first.sigma(i, i) == 1.0);
    }
}

TEST_CASE("perfectly dependent rows survive fit via repair") {
    Eigen::MatrixXd z(2, 6);
    z.row(0) << 0.5, -1.2, 0.8, -0.3, 1.1, -0.9;
    z.row(1) = z.row(0);
    const CorrelationModel m = fit_correlation_model(z, {"a", "b"}, 1000);
    CHECK(m.sigma(0, 1) < 1.0);
    CHECK(m.sigma(0, 1) > 0.99);
    // Cholesky factor reproduces sigma.
    const Eigen::MatrixXd back = m.chol * m.chol.transpose();
    CHECK((back - m.sigma).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_correlation_model wires ids, cutoff, and factorization") {
    const Eigen::MatrixXd z = random_scores(4, 300, 17);
    const CorrelationModel m =
        fit_correlation_model(z, {"s1", "s2", "s3", "s4"}, 42 * 3600);
    CHECK(m.site_ids == std::vector<std::string>{"s1", "s2", "s3", "s4"});
    CHECK(m.fitted_through == 42 * 3600);
    CHECK(m.size() == 4);
    const Eigen::MatrixXd back = m.chol * m.chol.transpose();
    CHECK((back - m.sigma).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m.degenerate_sites.empty());
}

TEST_CASE("model save/load round-trips exactly") {
    Eigen::MatrixXd z = random_scores(3, 100, 5);
    z.row(1).setZero();  // force a degenerate entry into the metadata
    const CorrelationModel m =
        fit_correlation_model(z, {"x", "y", "z"}, 7200);
    const std::string path =
        (std::filesystem::temp_directory_path() / "fc_corr_model.csv")
            .string();
    save_correlation_model(m, path);
    const CorrelationModel back = load_correlation_model(path);
    CHECK(back.site_ids == m.site_ids);
    CHECK(back.fitted_through == m.fitted_through);
    CHECK(back.degenerate_sites == m.degenerate_sites);
    CHECK(back.degenerate_sites == std::vector<std::string>{"y"});
    CHECK(back.sigma == m.sigma);  // bitwise: shortest round-trip doubles
    const Eigen::MatrixXd diff = back.chol - m.chol;
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-12);
    std::filesystem::remove(path);
}

TEST_CASE("pit_value clips into [kPitClip, 1 - kPitClip]") {
    const QuantileCurve c({0.25, 0.5, 0.75}, {10.0, 20.0, 30.0}, 0.0, 40.0);
    CHECK(pit_value(c, 20.0) == 0.5);
    CHECK(pit_value(c, -5.0) == kPitClip);
    CHECK(pit_value(c, 0.0) == kPitClip);
    CHECK(pit_value(c, 40.0) == 1.0 - kPitClip);
    CHECK(pit_value(c, 45.0) == 1.0 - kPitClip);
}

TEST_CASE("normal_scores maps PIT through the probit") {
    Eigen::MatrixXd pit(1, 3);
    pit << 0.5, 0.975, 0.025;
    const Eigen::MatrixXd z = normal_scores(pit);
    CHECK(z(0, 0) == 0.0);
    CHECK(z(0, 1) == doctest::Approx(1.9599639845400545).epsilon(1e-12));
    CHECK(z(0, 2) == doctest::Approx(-1.9599639845400545).epsilon(1e-12));
    Eigen::MatrixXd bad(1, 1);
    bad << 0.0;
    CHECK_THROWS_AS(normal_scores(bad), std::invalid_argument);
}
