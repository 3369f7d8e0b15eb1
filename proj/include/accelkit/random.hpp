#pragma once

// Counter-based 64-bit generator. Draw i of stream `seed` is
//
//   z = seed + (i + 1) * 0x9E3779B97F4A7C15          (mod 2^64)
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   out = z ^ (z >> 31)
//
// i.e. the SplitMix64 finalizer applied to a Weyl counter. Uniform doubles
// take the top 53 bits: u = (out >> 11) * 2^-53 in [0, 1). Every draw is a
// pure function of (seed, i), so results never depend on platform or libstdc++
// distribution implementations.

#include <Eigen/Dense>

#include <cstdint>

namespace accelkit {

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix(seed_, counter_++); }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) { return low + (high - low) * uniform(); }

  Eigen::VectorXd uniform_vector(Eigen::Index n, double low, double high) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(low, high);
    return v;
  }

  Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double low, double high) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform(low, high);
    return m;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace accelkit
