#pragma once

#include <cmath>
#include <numbers>

namespace iclv {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Upper tail 1 - Phi(x), accurate for large positive x.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Phi(hi) - Phi(lo) for lo < hi, evaluated on whichever tail keeps precision.
inline double normal_interval(double lo, double hi) {
  if (lo > 0.0) return normal_sf(lo) - normal_sf(hi);
  return normal_cdf(hi) - normal_cdf(lo);
}

// Inverse standard normal CDF (Wichura's AS241, PPND16). Throws NumericError
// unless 0 < p < 1.
double inv_normal_cdf(double p);

}  // namespace iclv
