#pragma once

namespace fleetcast {

// Standard normal CDF, accurate to double precision in both tails.
double normal_cdf(double z);

// Standard normal quantile (probit).  Requires p in (0, 1); throws
// std::domain_error otherwise.
double normal_quantile(double p);

// Standard normal density.
double normal_pdf(double z);

}  // namespace fleetcast
