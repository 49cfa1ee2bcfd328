#pragma once

#include <cstdint>
#include <random>

#include "wkoopman/error.hpp"
#include "wkoopman/types.hpp"

namespace wktest {

using wkoopman::Matrix;
using wkoopman::Vector;

// Runs `fn` and returns the kind of the wkoopman::Error it throws.
template <typename Fn>
wkoopman::ErrorKind error_kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const wkoopman::Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected a wkoopman::Error");
}

inline Matrix random_matrix(int rows, int cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = u(rng);
  return out;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace wktest
