#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "amfshrink/estimators.hpp"
#include "amfshrink/population.hpp"
#include "amfshrink/sampling.hpp"
#include "oracles.hpp"

using namespace amfshrink;

namespace {

SpectrumModel two_atom() {
  return SpectrumModel({SpectrumModel::point_mass(1, 0.5), SpectrumModel::point_mass(5, 0.5)});
}

template <FieldScalar S>
TrainingSet<S> draw(const SpectrumModel& h, Index p, Index n, Seed seed) {
  const auto pop = build_population<S>(h, p, true, derive_seed(seed, "pop"));
  return sample_training(pop, n, EntryLaw::gaussian(), derive_seed(seed, "train"));
}

std::vector<double> to_std(const RealVector& v) { return {v.data(), v.data() + v.size()}; }

double rel_err(const auto& a, const auto& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(SampleCovariance, Examples) {
  Eigen::MatrixXd x(2, 1);
  x << 1, 0;
  Eigen::MatrixXd want(2, 2);
  want << 1, 0, 0, 0;
  EXPECT_EQ(sample_covariance(x).matrix(), want);

  EXPECT_EQ(sample_covariance(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2))).matrix(),
            Eigen::MatrixXd(0.5 * Eigen::MatrixXd::Identity(2, 2)));
  EXPECT_EQ(sample_covariance(Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 4))).matrix(),
            Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 3)));
}

TEST(SampleCovariance, DivisorIsNAndRankBounded) {
  const auto t = draw<Complex>(two_atom(), 30, 10, 1);
  const Eigen::MatrixXcd s = sample_covariance(t).matrix();
  EXPECT_LE((s - t.x * t.x.adjoint() / 10.0).cwiseAbs().maxCoeff(), 1e-14);
  const auto e = eig_hermitian(sample_covariance(t));
  int positive = 0;
  for (Index j = 0; j < 30; ++j) positive += e.eigenvalues(j) > 1e-10 * e.eigenvalues.maxCoeff();
  EXPECT_EQ(positive, 10);
}

TEST(LwKernel, EqualPairExample) {
  const auto k = lw_kernel(1.0, Eigen::Vector2d(1, 1), 2, 8);
  EXPECT_NEAR(k.bandwidth, 0.5, 1e-15);
  EXPECT_NEAR(k.a, 0.0, 1e-12);
  EXPECT_NEAR(k.b, 1.341641, 1e-6);
  EXPECT_NEAR(k.b, 2 * 3 / (4 * std::sqrt(5.0) * 0.5), 1e-14);
}

TEST(LwKernel, SingleEigenvalueExample) {
  const auto k = lw_kernel(2.0, Eigen::VectorXd::Constant(1, 2.0), 1, 1000);
  EXPECT_NEAR(k.a, 0.0, 1e-12);
  EXPECT_NEAR(k.b, 1.677051, 1e-6);
}

TEST(LwKernel, KernelEdgeUsesOnlyLinearTerm) {
  // lambda - lambda_j = sqrt(5) h exactly: h = 1 * 8^{-1/3} = 0.5
  const double edge = 1.0 + std::sqrt(5.0) * 0.5;
  const auto k = lw_kernel(edge, Eigen::VectorXd::Constant(1, 1.0), 1, 8);
  EXPECT_TRUE(std::isfinite(k.a));
  EXPECT_NEAR(k.a, -3 * (edge - 1) / (10 * std::numbers::pi * 0.25), 1e-12);
  EXPECT_EQ(k.b, 0.0);
}

TEST(LwKernel, RejectsNonAscending) {
  EXPECT_THROW(lw_kernel(1.0, Eigen::Vector2d(2, 1), 2, 8), DataError);
}

TEST(LwKernel, ExcludesTheSmallestPMinusNEigenvalues) {
  // p = 3, n = 1: only the largest eigenvalue enters
  const Eigen::Vector3d lams(0, 0, 2);
  const auto k = lw_kernel(2.0, lams, 3, 1);
  EXPECT_NEAR(k.b, 3 / (4 * std::sqrt(5.0) * 2.0), 1e-14);
  EXPECT_THROW(lw_kernel(2.0, lams, 3, 2), NumericalError);  // a zero enters the range
}

TEST(LwKernel, DensitySumIsNonnegativeAndPositiveAtEigenvalues) {
  const auto t = draw<Complex>(two_atom(), 60, 120, 2);
  const RealVector lams = eig_hermitian(sample_covariance(t)).eigenvalues;
  for (Index j = 0; j < lams.size(); ++j) EXPECT_GT(lw_kernel(lams(j), lams, 60, 120).b, 0.0);
  for (double x : {-1.0, 0.0, 0.3, 7.0, 40.0}) EXPECT_GE(lw_kernel(x, lams, 60, 120).b, 0.0);
}

TEST(LwKernel, MatchesNumericalHilbertTransform) {
  for (auto [p, n] : {std::pair<Index, Index>{40, 100}, {80, 40}}) {
    const auto t = draw<double>(SpectrumModel({SpectrumModel::uniform(1, 4)}), p, n, 3 + p);
    const RealVector lams = detail::zero_small_eigenvalues(eig_hermitian(sample_covariance(t)).eigenvalues);
    std::vector<double> points = to_std(lams.tail(std::min(p, n)));
    for (double x : {0.0, 0.5, 2.5, 12.0}) points.push_back(x);
    for (double x : points) {
      const auto k = lw_kernel(x, lams, p, n);
      const auto ref = oracle::kernel_sums(x, to_std(lams), n);
      const double scale = std::max<double>(1.0, std::fabs(static_cast<double>(ref.a)));
      EXPECT_NEAR(k.a, static_cast<double>(ref.a), 1e-9 * scale) << "x=" << x;
      EXPECT_NEAR(k.b, static_cast<double>(ref.b), 1e-9 * std::max<double>(1.0, k.b)) << "x=" << x;
    }
  }
}

TEST(LwShrinkRaw, SingleEigenvalueChain) {
  const auto d = lw_shrink_raw(Eigen::VectorXd::Constant(1, 2.0), 1, 1000);
  EXPECT_NEAR(d.raw(0), 2.003783, 1e-6);
  const double zeta_im = std::numbers::pi * 3 / (4 * std::sqrt(5.0) * 2 * 0.1);
  const double want = 2.0 / std::norm(Complex(0.999, -0.001 * 2 * zeta_im));
  EXPECT_NEAR(d.raw(0), want, 1e-12);
}

TEST(LwShrinkRaw, RejectsSquareAspect) {
  EXPECT_THROW(lw_shrink_raw(Eigen::Vector3d(1, 2, 3), 3, 3), DataError);
}

TEST(LwShrinkRaw, EqualSpectrumGivesEqualValues) {
  const auto d = lw_shrink_raw(Eigen::VectorXd::Constant(7, 1.7), 7, 30);
  for (Index j = 1; j < 7; ++j) EXPECT_DOUBLE_EQ(d.raw(j), d.raw(0));
}

TEST(LwShrinkRaw, ZeroBranchRequiresMoreVariablesThanSamples) {
  EXPECT_THROW(lw_shrink_raw(Eigen::Vector3d(0, 1, 2), 3, 10), NumericalError);
}

TEST(LwShrinkRaw, MatchesDensityHilbertReference) {
  for (auto [p, n] : {std::pair<Index, Index>{50, 150}, {40, 70}, {90, 30}, {60, 40}}) {
    const auto t = draw<Complex>(two_atom(), p, n, 10 + p);
    const RealVector lams = detail::zero_small_eigenvalues(eig_hermitian(sample_covariance(t)).eigenvalues);
    const auto got = lw_shrink_raw(lams, p, n);
    const auto want = oracle::shrunken_reference(to_std(lams), n);
    for (Index j = 0; j < p; ++j)
      EXPECT_NEAR(got.raw(j), want[j], 1e-8 * std::abs(want[j])) << "p=" << p << " n=" << n << " j=" << j;
    if (p > n) {
      EXPECT_EQ(got.zero_eigenvalues, p - n);
    }
  }
}

TEST(LwShrinkRaw, NonzeroOnlyFormulaAgreesWhenPAtMostN) {
  const auto t = draw<double>(two_atom(), 40, 90, 5);
  const RealVector lams = eig_hermitian(sample_covariance(t)).eigenvalues;
  EXPECT_EQ(lw_shrink_raw(lams, 40, 90, LwFormula::FullSpectrum).raw,
            lw_shrink_raw(lams, 40, 90, LwFormula::NonzeroOnly).raw);
}

TEST(LwClip, Examples) {
  const Eigen::Vector3d lams(1, 2, 4);
  const double bound = 4.0;
  // inside (T0, bound): unchanged
  auto r = lw_clip(Eigen::Vector3d(1.5, 2.5, 3.5), lams, 3, 10, 0.5);
  EXPECT_EQ(r.values, Eigen::Vector3d(1.5, 2.5, 3.5));
  EXPECT_EQ(r.clipped_upper + r.clipped_lower + r.floored, 0);
  // 10 x bound -> bound
  r = lw_clip(Eigen::Vector3d(1.5, 2.5, 10 * bound), lams, 3, 10, 0.5);
  EXPECT_EQ(r.values(2), bound);
  EXPECT_EQ(r.clipped_upper, 1);
  // below T0 -> T0
  r = lw_clip(Eigen::Vector3d(0.1, 2.5, 3.5), lams, 3, 10, 0.5);
  EXPECT_EQ(r.values(0), 0.5);
  EXPECT_EQ(r.clipped_lower, 1);
}

TEST(LwClip, MpEdgeUpperBound) {
  const Eigen::Vector3d lams(1, 2, 4);
  const double bound = 4.0 / std::pow(1 + std::sqrt(0.3), 2);
  const auto r = lw_clip(Eigen::Vector3d(1.5, 2.5, 3.9), lams, 3, 10, 0.0, UpperClip::MpEdge);
  EXPECT_DOUBLE_EQ(r.upper_bound, bound);
  EXPECT_DOUBLE_EQ(r.values(1), bound);
  EXPECT_DOUBLE_EQ(r.values(2), bound);
  EXPECT_EQ(r.values(0), 1.5);
  EXPECT_EQ(r.clipped_upper, 2);
}

TEST(LwClip, InvertibilityFloorWhenT0IsZero) {
  const Eigen::Vector3d lams(0, 0, 2);
  const auto r = lw_clip(Eigen::Vector3d(-1, 0, 1), lams, 3, 1, 0.0);
  EXPECT_EQ(r.values(0), 2e-8);
  EXPECT_EQ(r.values(1), 2e-8);
  EXPECT_EQ(r.floored, 2);
  EXPECT_THROW(lw_clip(Eigen::Vector3d(1, 1, 1), lams, 3, 1, -0.1), DataError);
}

TEST(LwEstimator, SingleVarianceExample) {
  // sample variance 2 from n = 1000: raw value 2.003783; the default upper
  // clip at the largest sample eigenvalue binds, the edge bound binds lower.
  const auto e = eig_hermitian(HermitianMatrix<double>(Eigen::MatrixXd::Constant(1, 1, 2.0)));
  const auto est = lw_estimator(e, 1000);
  ASSERT_TRUE(est.diagnostics());
  EXPECT_NEAR(est.diagnostics()->raw(0), 2.003783, 1e-6);
  EXPECT_DOUBLE_EQ(est.shrunken()(0), 2.0);
  EXPECT_EQ(est.diagnostics()->clipped_upper, 1);
  EXPECT_EQ(est.label(), "lw-analytical");

  LwOptions edge;
  edge.upper_clip = UpperClip::MpEdge;
  const auto alt = lw_estimator(e, 1000, edge);
  EXPECT_NEAR(alt.shrunken()(0), 2.0 / std::pow(1 + std::sqrt(0.001), 2), 1e-12);
}

TEST(LwEstimator, LargeSampleLimitForOneVariable) {
  const auto e = eig_hermitian(HermitianMatrix<double>(Eigen::MatrixXd::Constant(1, 1, 3.0)));
  const auto est = lw_estimator(e, 1000000);
  EXPECT_NEAR(est.diagnostics()->raw(0), 3.0, 3e-3);
  EXPECT_NEAR(est.shrunken()(0), 3.0, 3e-3);
}

TEST(LwEstimator, IdentityPopulationMeanNearOne) {
  const auto t = draw<Complex>(SpectrumModel({SpectrumModel::point_mass(1)}), 200, 400, 21);
  const auto est = lw_estimator(t);
  EXPECT_GE(est.shrunken().mean(), 0.8);
  EXPECT_LE(est.shrunken().mean(), 1.2);
}

TEST(LwEstimator, RejectsAspectRatioNearOne) {
  const auto t = draw<double>(two_atom(), 100, 101, 2);
  EXPECT_THROW(lw_estimator(t), DataError);
  EXPECT_NO_THROW(lw_estimator(draw<double>(two_atom(), 100, 106, 2)));
}

TEST(LwEstimator, LowerClipAndT0) {
  const auto t = draw<double>(two_atom(), 60, 30, 4);
  LwOptions o;
  o.t0 = 0.9;
  const auto est = lw_estimator(t, o);
  EXPECT_GE(est.shrunken().minCoeff(), 0.9);
}

TEST(OracleEstimator, Examples) {
  const SpectrumModel three({SpectrumModel::point_mass(3)});
  const auto pop = build_population<Complex>(three, 10, true, 1);
  const auto t = sample_training(pop, 25, EntryLaw::gaussian(), 2);
  const auto o = oracle_estimator(t, pop);
  for (Index j = 0; j < 10; ++j) EXPECT_NEAR(o.shrunken()(j), 3.0, 1e-12);
  EXPECT_EQ(o.label(), "oracle-finite-sample");

  // diagonal sample covariance: U = I (up to ordering), d*_j = R_jj
  const auto pop2 = build_population<double>(two_atom(), 4, true, 3);
  const EigenSystem<double> id{Eigen::Vector4d(1, 2, 3, 4), Eigen::MatrixXd::Identity(4, 4)};
  const auto o2 = oracle_estimator(id, pop2);
  for (Index j = 0; j < 4; ++j) EXPECT_NEAR(o2.shrunken()(j), pop2.matrix().matrix()(j, j), 1e-14);

  const auto pop3 = build_population<Complex>(two_atom(), 30, true, 4);
  const auto o3 = oracle_estimator(sample_training(pop3, 12, EntryLaw::gaussian(), 5), pop3);
  EXPECT_NEAR(o3.shrunken().sum(), pop3.eigenvalues().sum(), 1e-10);
}

TEST(OracleEstimator, DimensionMismatch) {
  const auto pop = build_population<double>(two_atom(), 4, false, 0);
  const EigenSystem<double> e{Eigen::Vector3d(1, 2, 3), Eigen::MatrixXd::Identity(3, 3)};
  EXPECT_THROW(oracle_estimator(e, pop), DataError);
}

TEST(DiagonalLoading, Examples) {
  const EigenSystem<double> e{Eigen::Vector2d(0, 2), Eigen::MatrixXd::Identity(2, 2)};
  EXPECT_EQ(diagonal_loading(e, 1.0).shrunken(), Eigen::Vector2d(1, 3));

  const auto t = draw<double>(two_atom(), 10, 40, 6);
  const auto s = sample_estimator(sample_covariance(t));
  const auto dl = diagonal_loading(sample_covariance(t), 1e-12);
  EXPECT_LE(rel_err(dl.matrix(), s.matrix()), 1e-10);

  const auto tw = draw<double>(two_atom(), 30, 10, 7);
  const double beta = 0.37;
  EXPECT_NEAR(diagonal_loading(tw, beta).shrunken().minCoeff(), beta, 1e-12);

  EXPECT_THROW(diagonal_loading(e, 0.0), DataError);
  EXPECT_THROW(diagonal_loading(e, -1.0), DataError);
}

TEST(DiagonalLoading, DefaultIsTenthOfAverageEigenvalue) {
  const EigenSystem<double> e{Eigen::Vector2d(1, 3), Eigen::MatrixXd::Identity(2, 2)};
  EXPECT_EQ(diagonal_loading(e).shrunken(), Eigen::Vector2d(1.2, 3.2));
}

TEST(SampleEstimator, SingularRejected) {
  const auto t = draw<double>(two_atom(), 20, 10, 8);
  EXPECT_THROW(sample_estimator(sample_covariance(t)), NumericalError);
}

TEST(ShrinkageCovariance, RejectsNonpositive) {
  const EigenSystem<double> e{Eigen::Vector2d(1, 2), Eigen::MatrixXd::Identity(2, 2)};
  EXPECT_THROW(ShrinkageCovariance<double>(e, Eigen::Vector2d(1, 0), "x"), NumericalError);
  EXPECT_THROW(ShrinkageCovariance<double>(e, Eigen::Vector3d(1, 1, 1), "x"), DataError);
}

TEST(ShrinkageCovariance, InverseSolveAndQuadAgree) {
  const auto t = draw<Complex>(two_atom(), 25, 60, 9);
  const auto est = lw_estimator(t);
  const Vector<Complex> v = standard_normal_matrix<Complex>(25, 1, 10).col(0);
  const Matrix<Complex> m = est.matrix();
  EXPECT_LE(rel_err(Matrix<Complex>(est.inverse() * m), Matrix<Complex>(Matrix<Complex>::Identity(25, 25))), 1e-10);
  EXPECT_LE(rel_err(Vector<Complex>(m * est.solve(v)), v), 1e-10);
  EXPECT_NEAR(est.inv_quad(v), oracle::dense_inverse_quad(v, m), 1e-10 * est.inv_quad(v));
}

template <class S>
class EstimatorTyped : public ::testing::Test {};
using Scalars = ::testing::Types<double, Complex>;
TYPED_TEST_SUITE(EstimatorTyped, Scalars);

TYPED_TEST(EstimatorTyped, AllEstimatorsArePositiveDefinite) {
  using S = TypeParam;
  for (auto [p, n] : {std::pair<Index, Index>{40, 120}, {120, 40}}) {
    const auto pop = build_population<S>(two_atom(), p, true, 11);
    const auto t = sample_training(pop, n, EntryLaw::gaussian(), 12);
    const auto e = eig_hermitian(sample_covariance(t));
    EXPECT_GT(lw_estimator(e, n).shrunken().minCoeff(), 0);
    EXPECT_GT(diagonal_loading(e).shrunken().minCoeff(), 0);
    EXPECT_GT(oracle_estimator(e, pop).shrunken().minCoeff(), 0);
  }
}

TYPED_TEST(EstimatorTyped, RotationEquivariance) {
  using S = TypeParam;
  for (auto [p, n] : {std::pair<Index, Index>{30, 90}, {60, 25}}) {
    const auto pop = build_population<S>(two_atom(), p, true, 13);
    const auto t = sample_training(pop, n, EntryLaw::gaussian(), 14);
    const Matrix<S> q = haar_rotation<S>(p, 15);
    const Matrix<S> qx = q * t.x;
    const PopulationCovariance<S> qpop(pop.eigenvalues(), Matrix<S>(q * pop.rotation()));

    const auto e = eig_hermitian(sample_covariance(t.x));
    const auto eq = eig_hermitian(sample_covariance(qx));
    auto check = [&](const ShrinkageCovariance<S>& a, const ShrinkageCovariance<S>& b) {
      const Matrix<S> rotated = q * a.matrix() * q.adjoint();
      EXPECT_LE(rel_err(b.matrix(), rotated), 1e-8) << a.label();
      EXPECT_LE((a.shrunken() - b.shrunken()).norm() / a.shrunken().norm(), 1e-8) << a.label();
    };
    check(lw_estimator(e, n), lw_estimator(eq, n));
    check(diagonal_loading(e), diagonal_loading(eq));
    if (p < n) {
      check(oracle_estimator(e, pop), oracle_estimator(eq, qpop));
      check(sample_estimator(e), sample_estimator(eq));
    } else {
      // the null space of S has no preferred basis: compare the range part
      // and the null-space total
      const RealVector a = oracle_estimator(e, pop).shrunken();
      const RealVector b = oracle_estimator(eq, qpop).shrunken();
      EXPECT_LE((a.tail(n) - b.tail(n)).norm() / a.tail(n).norm(), 1e-8);
      EXPECT_NEAR(a.head(p - n).sum(), b.head(p - n).sum(), 1e-8 * a.sum());
    }
  }
}

TYPED_TEST(EstimatorTyped, LwScaleEquivariance) {
  using S = TypeParam;
  for (auto [p, n] : {std::pair<Index, Index>{50, 140}, {90, 40}}) {
    const auto t = draw<S>(two_atom(), p, n, 16);
    const double c = 3.7;
    const auto a = lw_estimator(eig_hermitian(sample_covariance(t.x)), n);
    const auto b = lw_estimator(eig_hermitian(sample_covariance(Matrix<S>(c * t.x))), n);
    EXPECT_LE((b.shrunken() - c * c * a.shrunken()).norm() / b.shrunken().norm(), 1e-8);
  }
}
