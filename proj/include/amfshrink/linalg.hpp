#pragma once

// Dense Hermitian linear algebra over real and complex scalars.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "amfshrink/field.hpp"

namespace amfshrink {

/// Largest |m_ij - conj(m_ji)| over all entries.
template <FieldScalar S>
double max_asymmetry(const Matrix<S>& m) {
  double worst = 0.0;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < j; ++i)
      worst = std::max(worst, std::abs(m(i, j) - Eigen::numext::conj(m(j, i))));
  for (Index i = 0; i < m.rows(); ++i)
    worst = std::max(worst, std::abs(imag_part(m(i, i))));
  return worst;
}

/// Square matrix equal to its conjugate transpose. Construction checks the
/// asymmetry against a 1e-12 relative tolerance and then stores the exact
/// Hermitian part, so downstream code may rely on exact symmetry.
template <FieldScalar S>
class HermitianMatrix {
 public:
  static constexpr double kTolerance = 1e-12;

  explicit HermitianMatrix(Matrix<S> m) {
    if (m.rows() < 1 || m.rows() != m.cols()) {
      std::ostringstream os;
      os << "Hermitian matrix must be square with dimension >= 1, got " << m.rows()
         << "x" << m.cols();
      throw DataError(os.str());
    }
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = max_asymmetry(m);
    if (asym > kTolerance * scale) {
      std::ostringstream os;
      os << "matrix is not Hermitian: max asymmetry " << asym << " exceeds "
         << kTolerance << " x max entry " << scale;
      throw DataError(os.str());
    }
    Matrix<S> sym = (m + m.adjoint()) / 2.0;
    m_ = std::move(sym);
  }

  static HermitianMatrix identity(Index p) {
    return HermitianMatrix(Matrix<S>::Identity(p, p));
  }

  Index dim() const { return m_.rows(); }
  const Matrix<S>& matrix() const { return m_; }

 private:
  Matrix<S> m_;
};

/// Ascending eigenvalues with orthonormal eigenvector columns.
template <FieldScalar S>
struct EigenSystem {
  RealVector eigenvalues;
  Matrix<S> vectors;

  Index dim() const { return eigenvalues.size(); }

  /// U diag(d) U'
  Matrix<S> reconstruct(const RealVector& d) const {
    return vectors * d.asDiagonal() * vectors.adjoint();
  }
  Matrix<S> reconstruct() const { return reconstruct(eigenvalues); }
};

template <FieldScalar S>
EigenSystem<S> eig_hermitian(const HermitianMatrix<S>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix<S>> solver(m.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericalError(
        "Hermitian eigensolver did not converge within its iteration cap of " +
        std::to_string(Eigen::SelfAdjointEigenSolver<Matrix<S>>::m_maxIterations) +
        " sweeps per eigenvalue");
  }
  // Eigen returns eigenvalues in increasing order already.
  return EigenSystem<S>{solver.eigenvalues(), solver.eigenvectors()};
}

/// Unique Hermitian PSD square root. Eigenvalues in [-1e-12 lambda_max, 0)
/// are treated as zero; anything more negative is an error.
template <FieldScalar S>
HermitianMatrix<S> sqrt_psd(const HermitianMatrix<S>& m) {
  EigenSystem<S> e = eig_hermitian(m);
  const double top = std::max(e.eigenvalues.maxCoeff(), 0.0);
  const double floor = -1e-12 * top;
  RealVector roots(e.dim());
  for (Index j = 0; j < e.dim(); ++j) {
    const double lam = e.eigenvalues(j);
    if (lam < floor) {
      std::ostringstream os;
      os << "matrix is not positive semidefinite: eigenvalue " << lam
         << " below tolerance floor " << floor;
      throw NumericalError(os.str());
    }
    roots(j) = std::sqrt(std::max(lam, 0.0));
  }
  return HermitianMatrix<S>(e.reconstruct(roots));
}

/// v' m v for Hermitian m; the imaginary rounding residue is discarded.
template <FieldScalar S>
double quad_form(const Vector<S>& v, const HermitianMatrix<S>& m) {
  if (v.size() != m.dim())
    throw DataError("quad_form: vector length " + std::to_string(v.size()) +
                    " does not match matrix dimension " + std::to_string(m.dim()));
  return real_part(v.dot(m.matrix() * v));
}

/// v' U diag(1/d) U' v without forming the inverse.
template <FieldScalar S>
double inv_quad_form(const Vector<S>& v, const EigenSystem<S>& e, const RealVector& d) {
  if (v.size() != e.dim() || d.size() != e.dim())
    throw DataError("inv_quad_form: dimension mismatch (vector " + std::to_string(v.size()) +
                    ", eigensystem " + std::to_string(e.dim()) + ", diagonal " +
                    std::to_string(d.size()) + ")");
  for (Index j = 0; j < d.size(); ++j)
    if (!(d(j) > 0.0))
      throw NumericalError("inv_quad_form: diagonal entry " + std::to_string(j) +
                           " is not positive (" + std::to_string(d(j)) + ")");
  const Vector<S> coords = e.vectors.adjoint() * v;
  double acc = 0.0;
  for (Index j = 0; j < d.size(); ++j) acc += abs2(coords(j)) / d(j);
  return acc;
}

}  // namespace amfshrink
