#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "groupprox/core.hpp"

namespace groupprox {

/// The one random source used everywhere in the project.
///
/// Engine: std::mt19937_64 (its output sequence is fixed by the C++
/// standard). Derived draws avoid std::*_distribution, whose algorithms are
/// implementation-defined:
///   uniform()  = (next() >> 11) * 2^-53                 in [0, 1)
///   normal()   = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)     (Box-Muller, no caching)
///   below(n)   = next() % n
/// so any implementation of mt19937_64 reproduces every generated value.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// exp(uniform(log lo, log hi))
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t below(std::uint64_t n) { return next() % n; }

  bool coin() { return (next() >> 63) != 0; }

  Vector<double> normal_vector(Index n) {
    Vector<double> v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Matrix<double> normal_matrix(Index rows, Index cols) {
    Matrix<double> m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  /// Fisher-Yates permutation of [0, n).
  std::vector<Index> permutation(Index n) {
    std::vector<Index> p(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Index>(below(static_cast<std::uint64_t>(i + 1)));
      std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
    }
    return p;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace groupprox
