// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

#include "ldgcn/tensor.hpp"

namespace ldgcn {

// Deterministic splitmix64 generator. We roll our own scaling instead of
// <random> distributions so that a given seed produces identical streams on
// every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection-free modulo is fine at our scales.
  int uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

 private:
  std::uint64_t state_;
};

// Uniform init in +-sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(int rows, int cols, Rng& rng) {
  double a = std::sqrt(6.0 / (rows + cols));
  Tensor t(rows, cols);
  for (auto& x : t.v) x = rng.uniform(-a, a);
  return t;
}

}  // namespace ldgcn
