#pragma once

// Adaptive matched filter T = mu' R^{-1} y / (mu' R^{-1} mu)^{1/2} and its
// false-alarm / detection probabilities.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "amfshrink/estimators.hpp"
#include "amfshrink/special.hpp"

namespace amfshrink {

template <FieldScalar S>
struct AmfStatistic {
  S value = S(0);
  double squared = 0.0;  // |value|^2
};

template <FieldScalar S>
AmfStatistic<S> amf_statistic(const Vector<S>& mu, const ShrinkageCovariance<S>& est,
                              const Vector<S>& y) {
  if (y.size() != est.dim())
    throw DataError("amf_statistic: observation length " + std::to_string(y.size()) +
                    " does not match dimension " + std::to_string(est.dim()));
  const Vector<S> f = est.solve(mu);
  const double q = real_part(mu.dot(f));
  if (!(q > 0.0)) throw NumericalError("amf_statistic: mu' R^{-1} mu is not positive");
  const S t = f.dot(y) / std::sqrt(q);
  return {t, abs2(t)};
}

/// xi = mu'R^-1 R R^-1 mu / mu'R^-1 mu,  nu = mu'R^-1 mu / (mu'R^-1 R R^-1 mu)^{1/2}.
struct DetectorDiagnostics {
  double xi = 0.0;
  double nu = 0.0;
  double mu_quad = 0.0;  // mu' R^-1 mu
};

template <FieldScalar S>
DetectorDiagnostics diagnostics(const Vector<S>& mu, const ShrinkageCovariance<S>& est,
                                const PopulationCovariance<S>& r) {
  if (mu.size() != est.dim() || r.dim() != est.dim())
    throw DataError("diagnostics: dimension mismatch (direction " + std::to_string(mu.size()) +
                    ", estimator " + std::to_string(est.dim()) + ", population " +
                    std::to_string(r.dim()) + ")");
  const Vector<S> f = est.solve(mu);
  const double q = real_part(mu.dot(f));
  const double spread = real_part(f.dot(r.matrix().matrix() * f));
  if (!(q > 0.0) || !(spread > 0.0))
    throw NumericalError("diagnostics: nonpositive quadratic form");
  return {spread / q, q / std::sqrt(spread), q};
}

inline double threshold_for_alpha(double alpha, Field field) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DataError("threshold_for_alpha: alpha must lie in (0,1), got " + std::to_string(alpha));
  if (field == Field::Complex) return -std::log(alpha);
  const double z = normal_quantile(1.0 - alpha / 2.0);
  return z * z;
}

/// Pr[|Z|^2 > t] for a standard normal Z in the field.
inline double p0_analytic(double t, Field field) {
  if (!(t >= 0.0)) throw DataError("p0_analytic: threshold must be >= 0");
  if (field == Field::Complex) return std::exp(-t);
  return 2.0 * normal_cdf(-std::sqrt(t));
}

/// Pr[|Z + a (mu'R^-1 mu)^{1/2}|^2 > t], with only |a| mattering.
inline double p1_analytic(double t, double amplitude_modulus, double mu_quad, Field field) {
  if (!(t >= 0.0)) throw DataError("p1_analytic: threshold must be >= 0");
  if (!(mu_quad > 0.0)) throw DataError("p1_analytic: mu' R^-1 mu must be positive");
  if (std::isinf(t)) return 0.0;
  const double m = std::abs(amplitude_modulus) * std::sqrt(mu_quad);
  if (field == Field::Complex) return marcum_q1(M_SQRT2 * m, std::sqrt(2.0 * t));
  const double rt = std::sqrt(t);
  return normal_cdf(-rt + m) + normal_cdf(-rt - m);
}

template <FieldScalar S>
double p1_analytic(double t, S amplitude, double mu_quad) {
  return p1_analytic(t, std::abs(amplitude), mu_quad, field_of<S>);
}

/// Exact conditional rates given the true covariance: T / sqrt(xi) is
/// a nu + (standard normal), so Pr[|T|^2 > t] = Pr[|Z + a nu|^2 > t / xi].
inline double p0_conditional(double t, const DetectorDiagnostics& d, Field field) {
  return p0_analytic(t / d.xi, field);
}
inline double p1_conditional(double t, double amplitude_modulus, const DetectorDiagnostics& d,
                             Field field) {
  return p1_analytic(t / d.xi, amplitude_modulus, d.nu * d.nu, field);
}

// ---------------------------------------------------------------------------
// Monte Carlo rates

struct RocPoint {
  enum class Provenance { Analytic, Empirical };
  double threshold = 0.0;
  double p0 = 0.0;
  double p1 = 0.0;
  double se0 = 0.0;
  double se1 = 0.0;
  Provenance provenance = Provenance::Empirical;
  long trials = 0;
};

inline std::string_view to_string(RocPoint::Provenance p) {
  return p == RocPoint::Provenance::Analytic ? "analytic" : "empirical";
}

/// The statistic is linear in y = a mu + R^{1/2} z, so for a fixed
/// estimator T = a sqrt(q) + w' z with q = mu'R^-1 mu and
/// w = R^{1/2} R^-1 mu / sqrt(q).
template <FieldScalar S>
struct MatchedFilter {
  Vector<S> noise_weights;
  S signal_gain = S(0);
  double mu_quad = 0.0;
};

template <FieldScalar S>
MatchedFilter<S> make_filter(const Vector<S>& mu, const ShrinkageCovariance<S>& est,
                             const PopulationCovariance<S>& r, S amplitude) {
  if (mu.size() != est.dim() || r.dim() != est.dim())
    throw DataError("make_filter: dimension mismatch");
  const Vector<S> f = est.solve(mu);
  const double q = real_part(mu.dot(f));
  if (!(q > 0.0)) throw NumericalError("make_filter: mu' R^-1 mu is not positive");
  const double root = std::sqrt(q);
  MatchedFilter<S> out;
  out.noise_weights = r.sqrt_matrix().matrix() * f / root;
  out.signal_gain = amplitude * root;
  out.mu_quad = q;
  return out;
}

/// |T|^2 under each hypothesis for every filter, one row per filter.
struct StatisticDraws {
  std::vector<std::vector<double>> h0;
  std::vector<std::vector<double>> h1;
};

inline constexpr Index kDrawBlock = 256;

/// Draws `trials` Gaussian observations per hypothesis and evaluates every
/// filter on the same draws. Block b of noise vectors comes from
/// derive_seed(seed, "h0"/"h1", b), so results depend only on the seed.
template <FieldScalar S>
StatisticDraws simulate_statistics(std::span<const MatchedFilter<S>> filters, Index p,
                                   long trials, Seed seed) {
  if (trials < 1) throw DataError("simulate_statistics: trials must be >= 1");
  const Index k = static_cast<Index>(filters.size());
  Matrix<S> w(p, k);
  Vector<S> gains(k);
  for (Index i = 0; i < k; ++i) {
    if (filters[i].noise_weights.size() != p) throw DataError("simulate_statistics: dimension mismatch");
    w.col(i) = filters[i].noise_weights;
    gains(i) = filters[i].signal_gain;
  }
  StatisticDraws out;
  out.h0.assign(k, std::vector<double>(static_cast<std::size_t>(trials)));
  out.h1.assign(k, std::vector<double>(static_cast<std::size_t>(trials)));

  const long blocks = (trials + kDrawBlock - 1) / kDrawBlock;
  for (long b = 0; b < blocks; ++b) {
    const long start = b * kDrawBlock;
    const Index width = static_cast<Index>(std::min<long>(kDrawBlock, trials - start));
    const Matrix<S> z0 = standard_normal_matrix<S>(p, width, derive_seed(seed, "h0", b));
    const Matrix<S> z1 = standard_normal_matrix<S>(p, width, derive_seed(seed, "h1", b));
    const Matrix<S> t0 = w.adjoint() * z0;
    Matrix<S> t1 = w.adjoint() * z1;
    t1.colwise() += gains;
    for (Index i = 0; i < k; ++i)
      for (Index c = 0; c < width; ++c) {
        out.h0[i][start + c] = abs2(t0(i, c));
        out.h1[i][start + c] = abs2(t1(i, c));
      }
  }
  return out;
}

namespace detail {

inline double exceed_fraction(const std::vector<double>& sorted, double t) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

inline double standard_error(double p, long trials) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(trials));
}

}  // namespace detail

/// Empirical (p0, p1) at each threshold from one shared pool of draws, so
/// both curves are exactly non-increasing in t.
inline std::vector<RocPoint> roc_from_draws(std::vector<double> h0, std::vector<double> h1,
                                            std::span<const double> thresholds) {
  std::sort(h0.begin(), h0.end());
  std::sort(h1.begin(), h1.end());
  const long trials = static_cast<long>(h0.size());
  std::vector<RocPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    if (!(t >= 0.0)) throw DataError("roc: thresholds must be >= 0");
    RocPoint pt;
    pt.threshold = t;
    pt.p0 = detail::exceed_fraction(h0, t);
    pt.p1 = detail::exceed_fraction(h1, t);
    pt.se0 = detail::standard_error(pt.p0, trials);
    pt.se1 = detail::standard_error(pt.p1, trials);
    pt.trials = trials;
    out.push_back(pt);
  }
  return out;
}

template <FieldScalar S>
std::vector<RocPoint> roc_curve(const Vector<S>& mu, const ShrinkageCovariance<S>& est,
                                const PopulationCovariance<S>& r, S amplitude,
                                std::span<const double> thresholds, long trials, Seed seed) {
  const MatchedFilter<S> filter = make_filter(mu, est, r, amplitude);
  StatisticDraws draws = simulate_statistics<S>(std::span(&filter, 1), r.dim(), trials, seed);
  return roc_from_draws(std::move(draws.h0[0]), std::move(draws.h1[0]), thresholds);
}

/// Rates conditional on the training data behind `est`: only the test
/// observations are redrawn.
template <FieldScalar S>
RocPoint empirical_rates(const Vector<S>& mu, const ShrinkageCovariance<S>& est,
                         const PopulationCovariance<S>& r, S amplitude, double t, long trials,
                         Seed seed) {
  const double thresholds[] = {t};
  return roc_curve(mu, est, r, amplitude, std::span<const double>(thresholds), trials, seed)[0];
}

inline std::vector<RocPoint> analytic_roc(std::span<const double> thresholds,
                                          double amplitude_modulus, double mu_quad, Field field) {
  std::vector<RocPoint> out;
  for (double t : thresholds) {
    RocPoint pt;
    pt.threshold = t;
    pt.p0 = std::isinf(t) ? 0.0 : p0_analytic(t, field);
    pt.p1 = p1_analytic(t, amplitude_modulus, mu_quad, field);
    pt.provenance = RocPoint::Provenance::Analytic;
    out.push_back(pt);
  }
  return out;
}

}  // namespace amfshrink
