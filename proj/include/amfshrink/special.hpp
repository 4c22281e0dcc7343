#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "amfshrink/error.hpp"

namespace amfshrink {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

inline double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DataError("normal_quantile: argument must be in (0,1)");
  return -M_SQRT2 * boost::math::erfc_inv(2.0 * u);
}

/// Marcum Q-function of order one,
///   Q1(nu, b) = sum_k Poisson(k; nu^2/2) * GammaTail(k + 1, b^2/2),
/// where GammaTail(k+1, y) = e^{-y} sum_{i<=k} y^i / i! is built up by
/// recursion. Both factors are formed from logarithms so large arguments do
/// not overflow. The sum stops once the remaining Poisson mass is below
/// 1e-12 (the gamma factor is at most 1).
inline double marcum_q1(double nu, double b) {
  if (!(nu >= 0.0) || !(b >= 0.0) || !std::isfinite(nu) || !std::isfinite(b))
    throw DataError("marcum_q1: arguments must be finite and nonnegative");
  if (b == 0.0) return 1.0;
  const double x = 0.5 * nu * nu;
  const double y = 0.5 * b * b;
  if (x == 0.0) return std::exp(-y);

  constexpr double tol = 1e-12;
  const double log_x = std::log(x);
  const double log_y = std::log(y);

  double sum = 0.0;
  double poisson_mass = 0.0;
  double gamma_tail = 0.0;
  // Beyond the mode the Poisson tail decays geometrically; this bound is
  // only a safety net.
  const long k_max = static_cast<long>(x + 40.0 * std::sqrt(x + 1.0) + 200.0);
  for (long k = 0; k <= k_max; ++k) {
    const double lgk1 = std::lgamma(static_cast<double>(k) + 1.0);
    gamma_tail += std::exp(-y + static_cast<double>(k) * log_y - lgk1);
    const double w = std::exp(-x + static_cast<double>(k) * log_x - lgk1);
    sum += w * std::min(gamma_tail, 1.0);
    poisson_mass += w;
    if (static_cast<double>(k) > x && 1.0 - poisson_mass < tol) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace amfshrink
