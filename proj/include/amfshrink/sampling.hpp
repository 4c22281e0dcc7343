#pragma once

// Training data X = R^{1/2} W, signal directions, and test observations.

#include <cmath>
#include <random>
#include <string>

#include "amfshrink/population.hpp"

namespace amfshrink {

/// Law of the i.i.d. entries of W. All laws are centered with unit variance;
/// complex entries get independent real and imaginary parts of variance 1/2.
struct EntryLaw {
  enum class Kind { Gaussian, Rademacher, StudentT };
  Kind kind = Kind::Gaussian;
  double df = 0.0;  // StudentT only

  static EntryLaw gaussian() { return {}; }
  static EntryLaw rademacher() { return {Kind::Rademacher, 0.0}; }
  static EntryLaw student_t(double df) { return {Kind::StudentT, df}; }

  void validate() const {
    if (kind == Kind::StudentT && !(df >= 17.0))
      throw DataError("scaled Student-t entries need df >= 17 for a finite 16th absolute moment, got df=" +
                      std::to_string(df));
  }

  std::string name() const {
    switch (kind) {
      case Kind::Gaussian: return "gaussian";
      case Kind::Rademacher: return "rademacher";
      case Kind::StudentT: return "student_t(" + std::to_string(df) + ")";
    }
    return "?";
  }
};

namespace detail {

class EntrySampler {
 public:
  explicit EntrySampler(const EntryLaw& law)
      : law_(law), student_(law.kind == EntryLaw::Kind::StudentT ? law.df : 1.0) {
    if (law.kind == EntryLaw::Kind::StudentT) t_scale_ = std::sqrt((law.df - 2.0) / law.df);
  }

  double unit(Rng& rng) {
    switch (law_.kind) {
      case EntryLaw::Kind::Gaussian: return normal_(rng);
      case EntryLaw::Kind::Rademacher: return (rng() >> 63) ? 1.0 : -1.0;
      case EntryLaw::Kind::StudentT: return t_scale_ * student_(rng);
    }
    return 0.0;
  }

  template <FieldScalar S>
  S draw(Rng& rng) {
    if constexpr (std::same_as<S, Complex>) {
      const double re = unit(rng);
      const double im = unit(rng);
      return Complex(re, im) * M_SQRT1_2;
    } else {
      return unit(rng);
    }
  }

 private:
  EntryLaw law_;
  std::normal_distribution<double> normal_;
  std::student_t_distribution<double> student_;
  double t_scale_ = 1.0;
};

}  // namespace detail

template <FieldScalar S>
struct TrainingSet {
  Matrix<S> x;  // p x n, columns are the training vectors
  Seed seed = 0;

  Index dim() const { return x.rows(); }
  Index samples() const { return x.cols(); }
};

/// Column j of W is drawn from its own stream derive_seed(seed, "column", j).
template <FieldScalar S>
TrainingSet<S> sample_training(const PopulationCovariance<S>& r, Index n, const EntryLaw& law,
                               Seed seed) {
  if (n < 1) throw DataError("sample_training: n must be >= 1");
  law.validate();
  const Index p = r.dim();
  Matrix<S> w(p, n);
  for (Index j = 0; j < n; ++j) {
    Rng rng = make_rng(derive_seed(seed, "column", static_cast<std::uint64_t>(j)));
    detail::EntrySampler sampler(law);
    for (Index i = 0; i < p; ++i) w(i, j) = sampler.draw<S>(rng);
  }
  return TrainingSet<S>{r.sqrt_matrix().matrix() * w, seed};
}

/// Uniform on the unit sphere: normalized i.i.d. standard normal vector.
template <FieldScalar S>
Vector<S> sample_signal_direction(Index p, Seed seed) {
  if (p < 1) throw DataError("sample_signal_direction: p must be >= 1");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  Vector<S> mu(p);
  double norm = 0.0;
  do {
    for (Index i = 0; i < p; ++i) mu(i) = standard_normal<S>(rng, normal);
    norm = mu.norm();
  } while (norm == 0.0);
  return mu / norm;
}

template <FieldScalar S>
struct Hypothesis {
  bool signal = false;
  S amplitude = S(0);

  static Hypothesis null() { return {}; }
  static Hypothesis alternative(S a) {
    if (a == S(0)) throw DataError("alternative hypothesis requires a nonzero amplitude");
    return {true, a};
  }
};

template <FieldScalar S>
struct Observation {
  Vector<S> y;
  Hypothesis<S> hypothesis;
};

/// y = (a mu under H1) + R^{1/2} z for a given noise vector z.
template <FieldScalar S>
Observation<S> observation_from_noise(const PopulationCovariance<S>& r, const Vector<S>& mu,
                                      const Hypothesis<S>& hyp, const Vector<S>& z) {
  if (mu.size() != r.dim() || z.size() != r.dim())
    throw DataError("sample_observation: dimension mismatch (population " +
                    std::to_string(r.dim()) + ", direction " + std::to_string(mu.size()) + ")");
  if (hyp.signal && hyp.amplitude == S(0))
    throw DataError("alternative hypothesis requires a nonzero amplitude");
  Vector<S> y = r.sqrt_matrix().matrix() * z;
  if (hyp.signal) y += hyp.amplitude * mu;
  return Observation<S>{std::move(y), hyp};
}

/// Test observations are always Gaussian, whatever law generated training.
template <FieldScalar S>
Observation<S> sample_observation(const PopulationCovariance<S>& r, const Vector<S>& mu,
                                  const Hypothesis<S>& hyp, Seed seed) {
  const Vector<S> z = standard_normal_matrix<S>(r.dim(), 1, seed).col(0);
  return observation_from_noise(r, mu, hyp, z);
}

}  // namespace amfshrink
