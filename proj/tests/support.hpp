#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "phasekit/core.hpp"

namespace phasekit::testing {

inline CVector random_cvector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  CVector v(n);
  for (Index j = 0; j < n; ++j) {
    const double re = d(rng);
    const double im = d(rng);
    v[j] = cplx(re, im);
  }
  return v;
}

inline ComplexImage random_image(int rows, int cols, std::uint64_t seed) {
  return ComplexImage(rows, cols, random_cvector(Index(rows) * cols, seed));
}

// Modulus in [0.5, 1] with uniform random phase; nowhere small.
inline ComplexImage random_object(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ComplexImage x(rows, cols);
  for (Index k = 0; k < x.size(); ++k) {
    const double mod = 0.5 + 0.5 * u(rng);
    x.vec()[k] = std::polar(mod, 2.0 * std::numbers::pi * u(rng));
  }
  return x;
}

// Rows a_k^* with a_k i.i.d. circular complex Gaussian, E|a_kj|^2 = 1.
inline CMatrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, std::sqrt(0.5));
  CMatrix a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const double re = d(rng);
      const double im = d(rng);
      a(i, j) = cplx(re, im);
    }
  return a;
}

inline RVector random_rvector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RVector v(n);
  for (Index j = 0; j < n; ++j) v[j] = u(rng);
  return v;
}

}  // namespace phasekit::testing
