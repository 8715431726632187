// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldgcn/layers.hpp"
#include "ldgcn/optim.hpp"

namespace ldgcn::nn {

enum class Strategy { dense, group, tied };

Strategy strategy_from_string(const std::string& s);
const char* to_string(Strategy s);

// Encoder layout: a stack of sub-blocks, each a run of convolution layers.
// Under the dense and group strategies every sub-block maps width d to width
// d (each of its L layers emits d/L columns, concatenated), with a bias-free
// d x d projection between consecutive sub-blocks. The tied strategy spans
// all sub-blocks with a single shared (W, b) plus one jumping map.
struct StackConfig {
  Strategy strategy = Strategy::group;
  int d = 32;
  std::vector<int> blocks = {4, 2, 4, 2};  // sub-block layer counts
  int depthwise_groups = 2;   // N; column groups inside each layer
  int layerwise_groups = 0;   // M; 0 = match sub-block layer count, 1 = off
  bool use_dfm = true;
  DfmConfig dfm;
  double dropout = 0.0;

  int total_layers() const;
  // Effective M for a sub-block with `layers` layers.
  int sub_layerwise_groups(int layers) const;
  // Effective N (1 unless strategy is group).
  int sub_depthwise_groups() const;
  void validate() const;
};

// Exact per-layer weight shapes and totals. Strategy totals cover the
// convolution parameters (the per-layer W and b); the jumping map and
// inter-sub-block projections are listed as aux rows, and the grand total
// equals the number of scalars the registry allocates.
struct ParamReport {
  struct Row {
    std::string name;
    int rows = 0;
    int cols = 0;
    int groups = 1;
    std::uint64_t count() const {
      return static_cast<std::uint64_t>(rows) * cols * groups;
    }
  };

  Strategy strategy = Strategy::dense;
  std::vector<Row> conv_rows;
  std::vector<Row> aux_rows;

  std::uint64_t conv_total() const;
  std::uint64_t aux_total() const;
  std::uint64_t grand_total() const { return conv_total() + aux_total(); }
};

ParamReport count_parameters(const StackConfig& cfg);

// Splits the columns of H into N independent convolutions (DFM when dfm is
// non-null, vanilla otherwise) and concatenates the outputs in group order.
// Per-layer parameters drop by a factor of N.
Tensor depthwise_forward(Tape& tape, const Tensor& H,
                         const amr::SparseAdjacency& A,
                         const std::vector<GcnLayerParams>& groups,
                         Activation phi, const DfmConfig* dfm);

// Input of the l-th layer (1-based) under layerwise grouping: input groups
// 1..min(l, M) — group j enters at layer j, so group 1 feeds all L layers,
// group 2 feeds L-1 layers — followed by all prior layer outputs.
Tensor layerwise_input(Tape& tape, int layer_index,
                       const std::vector<Tensor>& input_groups,
                       const std::vector<Tensor>& prior_outputs);

// Per-layer parameters of one sub-block: layers[l][g] is the weight of
// depthwise group g in layer l.
struct SubBlockParams {
  std::vector<std::vector<GcnLayerParams>> layers;
};

// One sub-block of the group (or dense, with N = M = 1) strategy: layer l
// consumes layerwise_input(l, ...), produces d/L columns via
// depthwise_forward, and the L outputs concatenate to the final n x d
// representation.
Tensor group_stack_forward(Tape& tape, const Tensor& H0,
                           const amr::SparseAdjacency& A,
                           const StackConfig& cfg,
                           const SubBlockParams& params);

// Concatenates the layer outputs deepest-first and applies the linear map
// F of shape (L*d) x d.
Tensor jumping_connection(Tape& tape, const std::vector<Tensor>& outputs,
                          const Tensor& F);

// Applies one shared (W, b) at every layer (DFM-fused when cfg.use_dfm) and
// returns jumping_connection over all layer outputs.
Tensor tied_stack_forward(Tape& tape, const Tensor& H0,
                          const amr::SparseAdjacency& A,
                          const GcnLayerParams& shared, int layers,
                          const StackConfig& cfg, const Tensor& jump_map);

// Creates every encoder parameter for cfg in the store under "enc." names,
// in deterministic order. Weights are Glorot-uniform, biases zero, the
// jumping map starts as the averaging map (each block I/L).
void init_encoder_params(ParamStore& store, const StackConfig& cfg, Rng& rng);

// Full encoder pass over all sub-blocks, with inter-sub-block projections
// (dense/group) or the shared-parameter stack (tied). When train_rng is
// non-null and cfg.dropout > 0, inverted dropout follows each sub-block.
Tensor encoder_forward(Tape& tape, PassBinder& params, const Tensor& H0,
                       const amr::SparseAdjacency& A, const StackConfig& cfg,
                       Rng* train_rng = nullptr);

// Desk-scale defaults: d=32, two blocks of 4+2 layers, N=2, M matching each
// sub-block, lambda=0.7, K=2.
StackConfig desk_preset();
// Documented full-scale layout: d=480, four blocks of 6+3 layers, N=2,
// M matching each sub-block, lambda=0.7, K=2.
StackConfig full_scale_preset();

}  // namespace ldgcn::nn
