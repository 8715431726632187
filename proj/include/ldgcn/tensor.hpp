// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ldgcn/errors.hpp"

namespace ldgcn {

// Dense row-major tensor of 64-bit reals. Rank 2 throughout (row vectors are
// 1xd, scalars 1x1). `node` is the handle into the Tape that produced the
// tensor; -1 marks a detached tensor, which is immutable by convention and
// safe to share across threads.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;
  int node = -1;

  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0)
      : shape{rows, cols},
        v(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
          fill) {}

  static Tensor scalar(double x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }

  static Tensor from_rows(const std::vector<std::vector<double>>& rows) {
    Tensor t(static_cast<int>(rows.size()),
             rows.empty() ? 0 : static_cast<int>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<int>(rows[r].size()) != t.cols())
        throw ShapeError("from_rows: ragged row lengths");
      for (std::size_t c = 0; c < rows[r].size(); ++c)
        t.v[r * rows[r].size() + c] = rows[r][c];
    }
    return t;
  }

  static Tensor identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
  }

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  std::size_t numel() const { return v.size(); }

  double& at(int r, int c) {
    return v[static_cast<std::size_t>(r) * cols() + c];
  }
  double at(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols() + c];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("max_abs_diff: shapes " + a.shape_str() + " vs " +
                     b.shape_str());
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    double d = a.v[i] - b.v[i];
    if (d < 0) d = -d;
    if (d > m) m = d;
  }
  return m;
}

}  // namespace ldgcn
