// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "ldgcn/penman.hpp"
#include "ldgcn/tensor.hpp"

namespace ldgcn::amr {

struct AdjacencyFlags {
  bool reverse_edges = true;
  bool self_loops = true;
  bool row_normalize = false;
};

// Coordinate-format n x n adjacency. Entries are unique, sorted by
// (row, col). Immutable after construction; safe to share across threads.
struct SparseAdjacency {
  struct Entry {
    int row = 0;
    int col = 0;
    double value = 0.0;
  };

  int n = 0;
  std::vector<Entry> entries;
  AdjacencyFlags flags;

  std::size_t nnz() const { return entries.size(); }
  Tensor to_dense() const;
};

// A_uv = 1 for every edge u->v; flags add reverse entries, self loops, and
// row normalization. Duplicate coordinates collapse to a single entry before
// normalization.
SparseAdjacency build_adjacency(const AmrGraph& g, AdjacencyFlags flags = {});

// Builds directly from coordinates (values default to 1); duplicates
// collapse. Used for hand-constructed matrices.
SparseAdjacency adjacency_from_entries(
    int n, const std::vector<std::pair<int, int>>& coords,
    AdjacencyFlags flags = {false, false, false});

SparseAdjacency identity_adjacency(int n);

// out = A * in, where `in` is row-major n x cols. Adds nnz * cols to the
// sparse multiply-add counter.
void apply_sparse(const SparseAdjacency& a, const double* in, double* out,
                  int cols);

// out = A^T * in. Backward pass of apply_sparse; also counts nnz * cols.
void apply_sparse_transposed(const SparseAdjacency& a, const double* in,
                             double* out, int cols);

// Instrumentation: multiply-add counters, kept separately for sparse
// propagation and dense matmul. Thread-local so parallel evaluation does not
// race.
struct MacCounters {
  std::uint64_t sparse = 0;
  std::uint64_t dense = 0;
};

MacCounters& mac_counters();
void reset_mac_counters();

}  // namespace ldgcn::amr
