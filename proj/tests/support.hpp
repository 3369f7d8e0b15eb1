#pragma once

#include <cmath>

#include "accelkit/problems.hpp"
#include "accelkit/random.hpp"

namespace accelkit::testing {

// A = I + scale * G / sqrt(n) with G uniform in [-1, 1]: nonsymmetric and well conditioned.
inline Matrix random_nonsymmetric(Index n, std::uint64_t seed, double scale = 0.5) {
  CounterRng rng(seed);
  return Matrix::Identity(n, n) + scale * rng.uniform_matrix(n, n, -1.0, 1.0) / std::sqrt(static_cast<double>(n));
}

inline Matrix random_spd(Index n, std::uint64_t seed) {
  CounterRng rng(seed);
  const Matrix g = rng.uniform_matrix(n, n, -1.0, 1.0);
  return g.transpose() * g / static_cast<double>(n) + Matrix::Identity(n, n);
}

inline Matrix random_orthogonal(Index n, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::HouseholderQR<Matrix> qr(rng.uniform_matrix(n, n, -1.0, 1.0));
  return qr.householderQ() * Matrix::Identity(n, n);
}

inline Problem dense_linear(const Matrix& a, const Vector& b, const std::string& label = "dense") {
  return make_linear_problem(make_dense_operator(a, label), b, label);
}

inline Vector random_vector(Index n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  CounterRng rng(seed);
  return rng.uniform_vector(n, lo, hi);
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace accelkit::testing
