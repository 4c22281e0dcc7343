#pragma once

#include <complex>
#include <concepts>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "amfshrink/error.hpp"

namespace amfshrink {

enum class Field { Real, Complex };

using Complex = std::complex<double>;
using Index = Eigen::Index;

template <class S>
concept FieldScalar = std::same_as<S, double> || std::same_as<S, Complex>;

template <FieldScalar S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <FieldScalar S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using RealVector = Eigen::VectorXd;

template <FieldScalar S>
inline constexpr Field field_of = std::same_as<S, Complex> ? Field::Complex : Field::Real;

inline std::string_view to_string(Field f) {
  return f == Field::Complex ? "complex" : "real";
}

inline Field parse_field(std::string_view s) {
  if (s == "complex") return Field::Complex;
  if (s == "real") return Field::Real;
  throw DataError("unknown field '" + std::string(s) + "' (expected real or complex)");
}

inline double abs2(double x) { return x * x; }
inline double abs2(const Complex& z) { return std::norm(z); }

inline double real_part(double x) { return x; }
inline double real_part(const Complex& z) { return z.real(); }

inline double imag_part(double) { return 0.0; }
inline double imag_part(const Complex& z) { return z.imag(); }

}  // namespace amfshrink
