#pragma once

// Population covariances with a prescribed limiting spectral distribution.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "amfshrink/linalg.hpp"
#include "amfshrink/seed.hpp"

namespace amfshrink {

/// Mixture of point masses and uniform intervals on (0, inf).
class SpectrumModel {
 public:
  struct Component {
    enum class Kind { PointMass, UniformInterval };
    Kind kind;
    double lo;  // equals hi for a point mass
    double hi;
    double weight;
  };

  SpectrumModel() = default;
  explicit SpectrumModel(std::vector<Component> components)
      : components_(std::move(components)) {
    validate();
  }

  static Component point_mass(double tau, double weight = 1.0) {
    return {Component::Kind::PointMass, tau, tau, weight};
  }
  static Component uniform(double lo, double hi, double weight = 1.0) {
    return {Component::Kind::UniformInterval, lo, hi, weight};
  }

  const std::vector<Component>& components() const { return components_; }
  bool empty() const { return components_.empty(); }

  double lower_bound() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& c : components_) lo = std::min(lo, c.lo);
    return lo;
  }
  double upper_bound() const {
    double hi = 0.0;
    for (const auto& c : components_) hi = std::max(hi, c.hi);
    return hi;
  }

  /// Right-continuous distribution function H(x).
  double cdf(double x) const {
    double acc = 0.0;
    for (const auto& c : components_) {
      if (c.kind == Component::Kind::PointMass) {
        if (x >= c.lo) acc += c.weight;
      } else if (x >= c.hi) {
        acc += c.weight;
      } else if (x > c.lo) {
        acc += c.weight * (x - c.lo) / (c.hi - c.lo);
      }
    }
    return std::min(acc, 1.0);
  }

  /// Mass of the atoms located exactly at x.
  double atom_at(double x) const {
    double acc = 0.0;
    for (const auto& c : components_)
      if (c.kind == Component::Kind::PointMass && c.lo == x) acc += c.weight;
    return acc;
  }

  /// Generalized inverse inf{x : H(x) >= u} for u in (0, 1].
  double quantile(double u) const {
    if (empty()) throw DataError("spectrum model has no components");
    std::vector<double> knots;
    for (const auto& c : components_) {
      knots.push_back(c.lo);
      knots.push_back(c.hi);
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    // H is linear between consecutive knots and may jump at a knot.
    for (std::size_t i = 0; i < knots.size(); ++i) {
      const double at = cdf(knots[i]);
      if (at < u) continue;
      if (i == 0) return knots[0];
      const double left_value = cdf(knots[i - 1]);
      const double left_limit = at - atom_at(knots[i]);
      if (u <= left_limit && left_limit > left_value) {
        const double frac = (u - left_value) / (left_limit - left_value);
        return knots[i - 1] + frac * (knots[i] - knots[i - 1]);
      }
      return knots[i];
    }
    return knots.back();
  }

 private:
  void validate() const {
    if (components_.empty()) throw DataError("spectrum model has no components");
    double total = 0.0;
    for (const auto& c : components_) {
      if (!(c.weight > 0.0) || !std::isfinite(c.weight))
        throw DataError("spectrum component weight must be positive and finite");
      if (!(c.lo > 0.0) || !std::isfinite(c.hi))
        throw DataError("spectrum support must lie in (0, inf)");
      if (c.kind == Component::Kind::UniformInterval && !(c.hi > c.lo))
        throw DataError("uniform spectrum interval needs lo < hi");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "spectrum weights sum to " << total << ", expected 1";
      throw DataError(os.str());
    }
  }

  std::vector<Component> components_;
};

/// tau_j = H^{-1}((j - 1/2) / p), ascending.
inline RealVector spectrum_quantiles(const SpectrumModel& h, Index p) {
  if (p < 1) throw DataError("spectrum_quantiles: p must be >= 1");
  if (h.empty()) throw DataError("spectrum model has no components");
  RealVector tau(p);
  for (Index j = 0; j < p; ++j)
    tau(j) = h.quantile((static_cast<double>(j) + 0.5) / static_cast<double>(p));
  return tau;
}

/// Haar-distributed orthogonal/unitary matrix: QR of an i.i.d. normal grid
/// with the phases of R's diagonal absorbed into Q.
template <FieldScalar S>
Matrix<S> haar_rotation(Index p, Seed seed) {
  const Matrix<S> g = standard_normal_matrix<S>(p, p, seed);
  Eigen::HouseholderQR<Matrix<S>> qr(g);
  Matrix<S> q = qr.householderQ();
  const Matrix<S>& r = qr.matrixQR();
  for (Index j = 0; j < p; ++j) {
    const S d = r(j, j);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(j) *= d / mag;
  }
  return q;
}

/// R = Q diag(tau) Q' together with its square root Q diag(sqrt tau) Q'.
template <FieldScalar S>
class PopulationCovariance {
 public:
  PopulationCovariance(RealVector eigenvalues, Matrix<S> rotation)
      : eigenvalues_(checked(std::move(eigenvalues), rotation)),
        rotation_(std::move(rotation)),
        matrix_(rotation_ * eigenvalues_.asDiagonal() * rotation_.adjoint()),
        sqrt_(rotation_ * eigenvalues_.cwiseSqrt().asDiagonal() * rotation_.adjoint()) {}

  Index dim() const { return eigenvalues_.size(); }
  const RealVector& eigenvalues() const { return eigenvalues_; }
  const Matrix<S>& rotation() const { return rotation_; }
  const HermitianMatrix<S>& matrix() const { return matrix_; }
  const HermitianMatrix<S>& sqrt_matrix() const { return sqrt_; }

  EigenSystem<S> eigensystem() const { return EigenSystem<S>{eigenvalues_, rotation_}; }

 private:
  static RealVector checked(RealVector tau, const Matrix<S>& q) {
    if (tau.size() == 0 || tau.size() != q.rows() || q.rows() != q.cols())
      throw DataError("population eigenvalue count does not match rotation size");
    if (!(tau.minCoeff() > 0.0) || !tau.allFinite())
      throw DataError("population covariance must be positive definite");
    return tau;
  }

  RealVector eigenvalues_;
  Matrix<S> rotation_;
  HermitianMatrix<S> matrix_;
  HermitianMatrix<S> sqrt_;
};

template <FieldScalar S>
PopulationCovariance<S> build_population(const SpectrumModel& h, Index p, bool rotate, Seed seed) {
  RealVector tau = spectrum_quantiles(h, p);
  Matrix<S> q = rotate ? haar_rotation<S>(p, seed) : Matrix<S>(Matrix<S>::Identity(p, p));
  return PopulationCovariance<S>(std::move(tau), std::move(q));
}

}  // namespace amfshrink
