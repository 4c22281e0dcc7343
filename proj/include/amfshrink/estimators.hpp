#pragma once

// Shrinkage covariance estimators R = U diag(d) U' built on the sample
// eigenvectors: sample covariance, diagonal loading, the Ledoit-Wolf
// analytical nonlinear shrinkage, and the finite-sample oracle u' R u.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "amfshrink/linalg.hpp"
#include "amfshrink/population.hpp"
#include "amfshrink/sampling.hpp"

namespace amfshrink {

/// What happened inside the Ledoit-Wolf pipeline for one fit.
struct ShrinkageDiagnostics {
  RealVector raw;            // unclipped shrunken values, index-paired with eigenvalues
  int zero_eigenvalues = 0;  // sample eigenvalues treated as exactly zero
  int nonpositive_raw = 0;   // raw values <= 0 (only possible on the zero branch)
  int clipped_upper = 0;
  int clipped_lower = 0;
  int floored = 0;
  double bandwidth = 0.0;    // n^{-1/3}
  double upper_bound = 0.0;
  double lower_bound = 0.0;  // max(T0, floor)
};

template <FieldScalar S>
class ShrinkageCovariance {
 public:
  ShrinkageCovariance(EigenSystem<S> eigensystem, RealVector shrunken, std::string label,
                      std::optional<ShrinkageDiagnostics> diagnostics = std::nullopt)
      : eigensystem_(std::move(eigensystem)),
        shrunken_(std::move(shrunken)),
        label_(std::move(label)),
        diagnostics_(std::move(diagnostics)) {
    if (shrunken_.size() != eigensystem_.dim())
      throw DataError("shrinkage: " + std::to_string(shrunken_.size()) +
                      " shrunken values for dimension " + std::to_string(eigensystem_.dim()));
    for (Index j = 0; j < shrunken_.size(); ++j)
      if (!(shrunken_(j) > 0.0) || !std::isfinite(shrunken_(j))) {
        std::ostringstream os;
        os << label_ << ": shrunken value " << j << " = " << shrunken_(j)
           << " is not a positive finite number";
        throw NumericalError(os.str());
      }
  }

  Index dim() const { return shrunken_.size(); }
  const EigenSystem<S>& eigensystem() const { return eigensystem_; }
  const RealVector& shrunken() const { return shrunken_; }
  const std::string& label() const { return label_; }
  const std::optional<ShrinkageDiagnostics>& diagnostics() const { return diagnostics_; }

  Matrix<S> matrix() const { return eigensystem_.reconstruct(shrunken_); }
  Matrix<S> inverse() const { return eigensystem_.reconstruct(shrunken_.cwiseInverse()); }

  /// R^{-1} v through the eigensystem.
  Vector<S> solve(const Vector<S>& v) const {
    check_dim(v);
    Vector<S> coords = eigensystem_.vectors.adjoint() * v;
    coords.array() /= shrunken_.array().template cast<S>();
    return eigensystem_.vectors * coords;
  }

  /// v' R^{-1} v
  double inv_quad(const Vector<S>& v) const {
    return inv_quad_form(v, eigensystem_, shrunken_);
  }

 private:
  void check_dim(const Vector<S>& v) const {
    if (v.size() != dim())
      throw DataError("vector length " + std::to_string(v.size()) +
                      " does not match estimator dimension " + std::to_string(dim()));
  }

  EigenSystem<S> eigensystem_;
  RealVector shrunken_;
  std::string label_;
  std::optional<ShrinkageDiagnostics> diagnostics_;
};

/// S = n^{-1} X X'.
template <FieldScalar S>
HermitianMatrix<S> sample_covariance(const Matrix<S>& x) {
  if (x.cols() < 1) throw DataError("sample_covariance: need at least one column");
  const double n = static_cast<double>(x.cols());
  return HermitianMatrix<S>((x * x.adjoint()) / n);
}

template <FieldScalar S>
HermitianMatrix<S> sample_covariance(const TrainingSet<S>& t) {
  return sample_covariance(t.x);
}

// ---------------------------------------------------------------------------
// Ledoit-Wolf analytical nonlinear shrinkage

struct KernelEvaluation {
  double a = 0.0;          // Hilbert-transform sum
  double b = 0.0;          // density sum
  double lambda = 0.0;     // evaluation point
  double bandwidth = 0.0;  // n^{-1/3}
};

/// Which formula the p > n nonzero eigenvalues use.
///  - FullSpectrum: the Stieltjes term includes the (p-n)/p atom at zero
///    that the nonzero-eigenvalue kernel sum leaves out.
///  - NonzeroOnly: plug the nonzero-eigenvalue transform straight into
///    lambda / |1 - c - c lambda zeta|^2. Identical to FullSpectrum when p <= n.
enum class LwFormula { FullSpectrum, NonzeroOnly };

/// Upper clip for the shrunken values.
///  - SampleMax: largest sample eigenvalue.
///  - MpEdge: largest sample eigenvalue / (1 + sqrt(p/n))^2.
enum class UpperClip { SampleMax, MpEdge };

struct LwOptions {
  double t0 = 0.0;
  UpperClip upper_clip = UpperClip::SampleMax;
  LwFormula formula = LwFormula::FullSpectrum;
};

inline constexpr double kZeroEigenvalueThreshold = 1e-12;  // relative to lambda_max
inline constexpr double kInvertibilityFloor = 1e-8;        // relative to lambda_max

namespace detail {

inline void require_ascending(const RealVector& lams) {
  for (Index j = 1; j < lams.size(); ++j)
    if (lams(j) < lams(j - 1))
      throw DataError("sample eigenvalues must be ascending (index " + std::to_string(j) + ")");
}

/// Eigenvalues with entries below 1e-12 lambda_max set to exactly zero.
inline RealVector zero_small_eigenvalues(const RealVector& lams) {
  RealVector out = lams;
  const double cut = kZeroEigenvalueThreshold * std::max(lams.maxCoeff(), 0.0);
  for (Index j = 0; j < out.size(); ++j)
    if (out(j) < cut) out(j) = 0.0;
  return out;
}

inline Index first_kernel_index(Index p, Index n) { return std::max<Index>(p - n, 0); }

}  // namespace detail

/// Epanechnikov-kernel density (b) and Hilbert transform (a) sums over the
/// sample eigenvalues with index >= [p - n]^+, with per-eigenvalue
/// bandwidth lambda_j n^{-1/3}. Terms are accumulated in ascending j.
inline KernelEvaluation lw_kernel(double lambda, const RealVector& lams, Index p, Index n) {
  if (lams.size() != p)
    throw DataError("lw_kernel: expected " + std::to_string(p) + " eigenvalues, got " +
                    std::to_string(lams.size()));
  if (n < 1) throw DataError("lw_kernel: n must be >= 1");
  detail::require_ascending(lams);

  constexpr double pi = std::numbers::pi;
  const double sqrt5 = std::sqrt(5.0);
  const double hn = std::pow(static_cast<double>(n), -1.0 / 3.0);

  KernelEvaluation k;
  k.lambda = lambda;
  k.bandwidth = hn;
  for (Index j = detail::first_kernel_index(p, n); j < p; ++j) {
    const double lj = lams(j);
    const double h = lj * hn;
    if (!(h > 0.0))
      throw NumericalError("lw_kernel: zero sample eigenvalue at index " + std::to_string(j) +
                           " inside the kernel range");
    const double diff = lambda - lj;
    const double x = diff / h;
    const double bracket = 1.0 - x * x / 5.0;

    k.a += -3.0 * diff / (10.0 * pi * h * h);
    // At the kernel edge the bracket is zero and the log diverges; the
    // product is taken as 0.
    const double num = sqrt5 * h - diff;
    const double den = sqrt5 * h + diff;
    if (num != 0.0 && den != 0.0 && bracket != 0.0)
      k.a += 3.0 / (4.0 * sqrt5 * pi * h) * bracket * std::log(std::abs(num / den));

    if (bracket > 0.0) k.b += 3.0 / (4.0 * sqrt5 * h) * bracket;
  }
  return k;
}

/// Unclipped shrunken values d~_j for ascending sample eigenvalues.
inline ShrinkageDiagnostics lw_shrink_raw(const RealVector& eigenvalues, Index p, Index n,
                                          LwFormula formula = LwFormula::FullSpectrum) {
  if (eigenvalues.size() != p)
    throw DataError("lw_shrink_raw: expected " + std::to_string(p) + " eigenvalues");
  if (p == n)
    throw DataError("lw_shrink_raw: p == n is excluded (aspect ratio must differ from 1)");
  detail::require_ascending(eigenvalues);
  if (!(eigenvalues.maxCoeff() > 0.0))
    throw NumericalError("lw_shrink_raw: all sample eigenvalues are zero");

  constexpr double pi = std::numbers::pi;
  const RealVector lams = detail::zero_small_eigenvalues(eigenvalues);
  const double c = static_cast<double>(p) / static_cast<double>(n);
  const double scale = pi / static_cast<double>(std::min(n, p));

  ShrinkageDiagnostics diag;
  diag.raw.resize(p);
  diag.bandwidth = std::pow(static_cast<double>(n), -1.0 / 3.0);

  std::optional<double> zero_branch;
  for (Index j = 0; j < p; ++j) {
    const double lam = lams(j);
    if (lam > 0.0) {
      const KernelEvaluation k = lw_kernel(lam, lams, p, n);
      Complex zeta = scale * Complex(k.a, k.b);
      if (formula == LwFormula::FullSpectrum && p > n) {
        // Stieltjes transform of the full sample spectrum: the nonzero part
        // carries weight n/p, the atom at zero contributes -(1 - n/p)/lambda.
        zeta = zeta / c - (1.0 - 1.0 / c) / lam;
      }
      const double denom = std::norm(1.0 - c - c * lam * zeta);
      if (!(denom > 0.0))
        throw NumericalError("lw_shrink_raw: zero denominator at eigenvalue index " +
                             std::to_string(j));
      diag.raw(j) = lam / denom;
    } else {
      if (p <= n)
        throw NumericalError("lw_shrink_raw: zero sample eigenvalue at index " +
                             std::to_string(j) + " with p <= n");
      if (!zero_branch) {
        const KernelEvaluation k0 = lw_kernel(0.0, lams, p, n);
        zero_branch = 1.0 / (pi * (c - 1.0) * k0.a / static_cast<double>(n));
      }
      diag.raw(j) = *zero_branch;
      ++diag.zero_eigenvalues;
    }
    if (!(diag.raw(j) > 0.0)) ++diag.nonpositive_raw;
  }
  return diag;
}

struct ClipResult {
  RealVector values;
  int clipped_upper = 0;
  int clipped_lower = 0;
  int floored = 0;
  double upper_bound = 0.0;
  double lower_bound = 0.0;
};

inline double lw_upper_bound(double lambda_max, Index p, Index n, UpperClip rule) {
  if (rule == UpperClip::SampleMax) return lambda_max;
  const double root = 1.0 + std::sqrt(static_cast<double>(p) / static_cast<double>(n));
  return lambda_max / (root * root);
}

/// Clip raw values into [max(T0, 1e-8 lambda_max), upper bound].
inline ClipResult lw_clip(const RealVector& raw, const RealVector& eigenvalues, Index p, Index n,
                          double t0, UpperClip rule = UpperClip::SampleMax) {
  if (!(t0 >= 0.0)) throw DataError("lw_clip: T0 must be >= 0");
  if (raw.size() != eigenvalues.size())
    throw DataError("lw_clip: raw values and eigenvalues differ in length");
  const double lambda_max = eigenvalues.maxCoeff();
  ClipResult out;
  out.upper_bound = lw_upper_bound(lambda_max, p, n, rule);
  const double floor = kInvertibilityFloor * lambda_max;
  out.lower_bound = std::max(t0, floor);
  out.values.resize(raw.size());
  for (Index j = 0; j < raw.size(); ++j) {
    double d = raw(j);
    if (d > out.upper_bound) {
      d = out.upper_bound;
      ++out.clipped_upper;
    } else if (d < t0) {
      d = t0;
      ++out.clipped_lower;
    }
    if (d < floor) {
      d = floor;
      ++out.floored;
    }
    out.values(j) = d;
  }
  return out;
}

namespace detail {

inline void require_aspect_ratio(Index p, Index n) {
  const double c = static_cast<double>(p) / static_cast<double>(n);
  if (c > 0.95 && c < 1.05) {
    std::ostringstream os;
    os << "aspect ratio p/n = " << c << " lies in the excluded band (0.95, 1.05)";
    throw DataError(os.str());
  }
}

}  // namespace detail

/// Ledoit-Wolf estimator from the eigensystem of a sample covariance built
/// from n samples.
template <FieldScalar S>
ShrinkageCovariance<S> lw_estimator(EigenSystem<S> e, Index n, const LwOptions& opts = {}) {
  const Index p = e.dim();
  if (n < 1) throw DataError("lw_estimator: n must be >= 1");
  detail::require_aspect_ratio(p, n);
  ShrinkageDiagnostics diag = lw_shrink_raw(e.eigenvalues, p, n, opts.formula);
  ClipResult clip = lw_clip(diag.raw, e.eigenvalues, p, n, opts.t0, opts.upper_clip);
  diag.clipped_upper = clip.clipped_upper;
  diag.clipped_lower = clip.clipped_lower;
  diag.floored = clip.floored;
  diag.upper_bound = clip.upper_bound;
  diag.lower_bound = clip.lower_bound;
  return ShrinkageCovariance<S>(std::move(e), std::move(clip.values), "lw-analytical",
                                std::move(diag));
}

template <FieldScalar S>
ShrinkageCovariance<S> lw_estimator(const HermitianMatrix<S>& sample_cov, Index n,
                                    const LwOptions& opts = {}) {
  if (n < 1) throw DataError("lw_estimator: n must be >= 1");
  detail::require_aspect_ratio(sample_cov.dim(), n);
  return lw_estimator(eig_hermitian(sample_cov), n, opts);
}

template <FieldScalar S>
ShrinkageCovariance<S> lw_estimator(const TrainingSet<S>& x, const LwOptions& opts = {}) {
  detail::require_aspect_ratio(x.dim(), x.samples());
  return lw_estimator(sample_covariance(x), x.samples(), opts);
}

/// d*_j = u_j' R u_j: the best diagonal for the sample eigenvectors.
template <FieldScalar S>
ShrinkageCovariance<S> oracle_estimator(const EigenSystem<S>& e, const PopulationCovariance<S>& r) {
  if (e.dim() != r.dim())
    throw DataError("oracle_estimator: sample dimension " + std::to_string(e.dim()) +
                    " does not match population dimension " + std::to_string(r.dim()));
  const Matrix<S> ru = r.matrix().matrix() * e.vectors;
  RealVector d(e.dim());
  for (Index j = 0; j < e.dim(); ++j) d(j) = real_part(e.vectors.col(j).dot(ru.col(j)));
  return ShrinkageCovariance<S>(e, std::move(d), "oracle-finite-sample");
}

template <FieldScalar S>
ShrinkageCovariance<S> oracle_estimator(const TrainingSet<S>& x, const PopulationCovariance<S>& r) {
  return oracle_estimator(eig_hermitian(sample_covariance(x)), r);
}

/// Default loading 0.1 tr(S)/p.
inline double default_loading(const RealVector& eigenvalues) {
  return 0.1 * eigenvalues.sum() / static_cast<double>(eigenvalues.size());
}

/// S + beta I. Without an explicit beta, uses default_loading.
template <FieldScalar S>
ShrinkageCovariance<S> diagonal_loading(EigenSystem<S> e, std::optional<double> beta = std::nullopt) {
  const double load = beta.value_or(default_loading(e.eigenvalues));
  if (!(load > 0.0)) throw DataError("diagonal_loading: beta must be positive");
  RealVector d = (e.eigenvalues.array() + load).matrix();
  return ShrinkageCovariance<S>(std::move(e), std::move(d), "diagonal-loading");
}

template <FieldScalar S>
ShrinkageCovariance<S> diagonal_loading(const HermitianMatrix<S>& sample_cov,
                                        std::optional<double> beta = std::nullopt) {
  if (beta && !(*beta > 0.0)) throw DataError("diagonal_loading: beta must be positive");
  return diagonal_loading(eig_hermitian(sample_cov), beta);
}

template <FieldScalar S>
ShrinkageCovariance<S> diagonal_loading(const TrainingSet<S>& x,
                                        std::optional<double> beta = std::nullopt) {
  return diagonal_loading(sample_covariance(x), beta);
}

/// The sample covariance itself; fails when S is singular (p > n).
template <FieldScalar S>
ShrinkageCovariance<S> sample_estimator(EigenSystem<S> e) {
  const double cut = kZeroEigenvalueThreshold * std::max(e.eigenvalues.maxCoeff(), 0.0);
  if (!(e.eigenvalues.minCoeff() > cut))
    throw NumericalError("sample covariance is singular (smallest eigenvalue " +
                         std::to_string(e.eigenvalues.minCoeff()) + ")");
  RealVector d = e.eigenvalues;
  return ShrinkageCovariance<S>(std::move(e), std::move(d), "sample");
}

template <FieldScalar S>
ShrinkageCovariance<S> sample_estimator(const HermitianMatrix<S>& sample_cov) {
  return sample_estimator(eig_hermitian(sample_cov));
}

/// R itself, in the same representation (simulation reference).
template <FieldScalar S>
ShrinkageCovariance<S> clairvoyant_estimator(const PopulationCovariance<S>& r) {
  return ShrinkageCovariance<S>(r.eigensystem(), r.eigenvalues(), "clairvoyant");
}

}  // namespace amfshrink
