// Timing comparison of the serial reference kernels against the OpenMP
// variants, plus a bitwise equality check on every measured configuration.
//
//   fleetcast_bench [n_samples] [repeats]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "fleetcast/kernels.hpp"
#include "fleetcast/synth.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_of(Clock::duration d) {
    return std::chrono::duration<double>(d).count();
}

template <typename Fn>
double best_of(int repeats, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = Clock::now();
        fn();
        best = std::min(best, seconds_of(Clock::now() - t0));
    }
    return best;
}

bool bitwise_equal(const std::vector<double>& a,
                   const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t n_samples =
        argc > 1 ? static_cast<std::size_t>(std::atoll(argv[1])) : 20000;
    const int repeats = argc > 2 ? std::atoi(argv[2]) : 5;

    std::printf("fleetcast kernel benchmark (threads=%d)\n",
                fleetcast::kernels::max_threads());
    std::printf("%-28s %12s %12s %9s %8s\n", "kernel", "serial_s",
                "parallel_s", "speedup", "equal");

    // Realistic inputs: a synthetic fleet's fitted Cholesky factor and
    // forecast curves.
    for (const int n_sites : {5, 25, 100}) {
        fleetcast::SynthSpec spec;
        spec.n_sites = n_sites;
        spec.days = 2;
        spec.validate();
        const fleetcast::DatasetBundle bundle = fleetcast::synth_generate(spec);

        // Equicorrelated Cholesky straight from the true copula.
        Eigen::MatrixXd sigma =
            Eigen::MatrixXd::Constant(n_sites, n_sites, spec.rho);
        sigma.diagonal().setOnes();
        const Eigen::MatrixXd chol =
            Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();

        const std::size_t hour = 12;  // midday curves
        std::vector<const fleetcast::QuantileCurve*> curves;
        for (int s = 0; s < n_sites; ++s) {
            curves.push_back(&bundle.site_curves[static_cast<std::size_t>(s)]
                                                [hour]);
        }
        const fleetcast::RngStream stream(7, 11);

        std::vector<double> serial(n_samples), parallel(n_samples);
        const double ts = best_of(repeats, [&] {
            fleetcast::kernels::fleet_samples_serial(chol, curves, stream,
                                                     n_samples,
                                                     serial.data());
        });
        const double tp = best_of(repeats, [&] {
            fleetcast::kernels::fleet_samples_parallel(chol, curves, stream,
                                                       n_samples,
                                                       parallel.data());
        });
        const std::string name =
            "fleet_samples N=" + std::to_string(n_sites);
        std::printf("%-28s %12.6f %12.6f %8.2fx %8s\n", name.c_str(), ts, tp,
                    ts / tp, bitwise_equal(serial, parallel) ? "yes" : "NO");
    }

    for (const std::size_t n_rows : {std::size_t{5000}, std::size_t{50000}}) {
        const std::size_t dim = 10;
        std::vector<double> rows(n_rows * dim), query(dim, 0.3);
        const fleetcast::RngStream stream(13, 17);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i] = stream.normal_at(i);
        }
        std::vector<double> serial(n_rows), parallel(n_rows);
        const double ts = best_of(repeats, [&] {
            fleetcast::kernels::rbf_weights_serial(query.data(), rows.data(),
                                                   n_rows, dim, 0.5,
                                                   serial.data());
        });
        const double tp = best_of(repeats, [&] {
            fleetcast::kernels::rbf_weights_parallel(
                query.data(), rows.data(), n_rows, dim, 0.5,
                parallel.data());
        });
        const std::string name = "rbf_weights n=" + std::to_string(n_rows);
        std::printf("%-28s %12.6f %12.6f %8.2fx %8s\n", name.c_str(), ts, tp,
                    ts / tp, bitwise_equal(serial, parallel) ? "yes" : "NO");
    }
    return 0;
}
