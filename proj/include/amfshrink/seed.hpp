#pragma once

// Seed streams. Every random draw in the library comes from a generator
// seeded by derive_seed(master, tag, i, j), so a stream depends only on its
// coordinates and never on the order in which streams are consumed.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "amfshrink/field.hpp"

namespace amfshrink {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a
inline constexpr std::uint64_t tag_hash(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr Seed derive_seed(Seed master, std::string_view tag, std::uint64_t i = 0,
                                  std::uint64_t j = 0) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ tag_hash(tag));
  h = splitmix64(h ^ i);
  h = splitmix64(h ^ (j + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(Seed seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

/// Standard normal in the field: real N(0,1), or complex with independent
/// N(0,1/2) parts so that E|z|^2 = 1.
template <FieldScalar S>
S standard_normal(Rng& rng, std::normal_distribution<double>& normal) {
  if constexpr (std::same_as<S, Complex>) {
    const double re = normal(rng);
    const double im = normal(rng);
    return Complex(re, im) * M_SQRT1_2;
  } else {
    return normal(rng);
  }
}

template <FieldScalar S>
Matrix<S> standard_normal_matrix(Index rows, Index cols, Seed seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  Matrix<S> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = standard_normal<S>(rng, normal);
  return m;
}

}  // namespace amfshrink
