// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#include "ldgcn/adjacency.hpp"

#include <algorithm>
#include <map>

namespace ldgcn::amr {

namespace {

SparseAdjacency finish(int n, std::map<std::pair<int, int>, double> cells,
                       AdjacencyFlags flags) {
  SparseAdjacency a;
  a.n = n;
  a.flags = flags;
  if (flags.row_normalize) {
    std::vector<double> row_sum(n, 0.0);
    for (const auto& [rc, v] : cells) row_sum[rc.first] += v;
    for (auto& [rc, v] : cells)
      if (row_sum[rc.first] != 0.0) v /= row_sum[rc.first];
  }
  a.entries.reserve(cells.size());
  for (const auto& [rc, v] : cells) a.entries.push_back({rc.first, rc.second, v});
  return a;  // map iteration is already (row, col) sorted
}

}  // namespace

Tensor SparseAdjacency::to_dense() const {
  Tensor d(n, n);
  for (const auto& e : entries) d.at(e.row, e.col) = e.value;
  return d;
}

SparseAdjacency build_adjacency(const AmrGraph& g, AdjacencyFlags flags) {
  const int n = static_cast<int>(g.nodes.size());
  std::map<std::pair<int, int>, double> cells;
  for (const auto& e : g.edges) {
    cells[{e.src, e.tgt}] = 1.0;
    if (flags.reverse_edges) cells[{e.tgt, e.src}] = 1.0;
  }
  if (flags.self_loops)
    for (int i = 0; i < n; ++i) cells[{i, i}] = 1.0;
  return finish(n, std::move(cells), flags);
}

SparseAdjacency adjacency_from_entries(
    int n, const std::vector<std::pair<int, int>>& coords,
    AdjacencyFlags flags) {
  std::map<std::pair<int, int>, double> cells;
  for (const auto& [r, c] : coords) {
    if (r < 0 || r >= n || c < 0 || c >= n)
      throw UsageError("adjacency_from_entries: coordinate out of range");
    cells[{r, c}] = 1.0;
    if (flags.reverse_edges) cells[{c, r}] = 1.0;
  }
  if (flags.self_loops)
    for (int i = 0; i < n; ++i) cells[{i, i}] = 1.0;
  return finish(n, std::move(cells), flags);
}

SparseAdjacency identity_adjacency(int n) {
  return adjacency_from_entries(n, {}, {false, true, false});
}

MacCounters& mac_counters() {
  thread_local MacCounters counters;
  return counters;
}

void reset_mac_counters() { mac_counters() = MacCounters{}; }

void apply_sparse(const SparseAdjacency& a, const double* in, double* out,
                  int cols) {
  std::fill(out, out + static_cast<std::size_t>(a.n) * cols, 0.0);
  for (const auto& e : a.entries) {
    const double* src = in + static_cast<std::size_t>(e.col) * cols;
    double* dst = out + static_cast<std::size_t>(e.row) * cols;
    for (int j = 0; j < cols; ++j) dst[j] += e.value * src[j];
  }
  mac_counters().sparse += a.entries.size() * static_cast<std::uint64_t>(cols);
}

void apply_sparse_transposed(const SparseAdjacency& a, const double* in,
                             double* out, int cols) {
  std::fill(out, out + static_cast<std::size_t>(a.n) * cols, 0.0);
  for (const auto& e : a.entries) {
    const double* src = in + static_cast<std::size_t>(e.row) * cols;
    double* dst = out + static_cast<std::size_t>(e.col) * cols;
    for (int j = 0; j < cols; ++j) dst[j] += e.value * src[j];
  }
  mac_counters().sparse += a.entries.size() * static_cast<std::uint64_t>(cols);
}

}  // namespace ldgcn::amr
