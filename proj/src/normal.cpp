#include "fleetcast/normal.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <stdexcept>

namespace fleetcast {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
}  // namespace

double normal_cdf(double z) {
    // erfc keeps relative accuracy in the lower tail where 1 - erf loses it.
    return 0.5 * std::erfc(-z / kSqrt2);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile requires p in (0, 1)");
    }
    // erfc_inv on the nearer tail keeps relative accuracy where 2p - 1
    // would saturate at +/-1.
    return p < 0.5 ? -kSqrt2 * boost::math::erfc_inv(2.0 * p)
                   : kSqrt2 * boost::math::erfc_inv(2.0 * (1.0 - p));
}

double normal_pdf(double z) {
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

}  // namespace fleetcast
