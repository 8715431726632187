// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ldgcn/adjacency.hpp"
#include "ldgcn/tape.hpp"

namespace ldgcn::nn {

enum class Activation { relu, tanh, identity };

Activation activation_from_string(const std::string& s);
const char* to_string(Activation a);

Tensor apply_activation(Tape& tape, const Tensor& x, Activation a);

// Dynamic fusion settings: a gated elementwise mixture of the first-order
// convolution with convolutions over adjacency powers 2..highest_order,
// sharing one (W, b) across all orders. Gates are bounded by 1 - lambda^k.
struct DfmConfig {
  double lambda = 0.7;
  int highest_order = 2;  // K
  Activation activation = Activation::relu;

  void validate() const;
};

struct GcnLayerParams {
  Tensor W;  // d_in x d_out
  Tensor b;  // 1 x d_out
};

// phi(A * H * W + b), bias broadcast across rows, A applied sparsely.
Tensor gcn_layer(Tape& tape, const Tensor& H, const amr::SparseAdjacency& A,
                 const GcnLayerParams& p, Activation phi);

// (1 - lambda^k) * sigmoid(A^k * H * W + b); every entry lies strictly in
// (0, 1 - lambda^k).
Tensor dfm_gate(Tape& tape, const amr::SparseAdjacency& A, const Tensor& H,
                const GcnLayerParams& p, int k, double lambda);

// Gated fusion over orders 1..K with one shared (W, b):
//   out = (1 - mean_k G_k) . phi(A H W + b) + mean_k [G_k . phi(A^k H W + b)]
// where the mean runs over k = 2..K with weight 1/(K-1). Evaluated in the
// algebraically equal residual form phi_1 + mean_k G_k . (phi_k - phi_1), so
// the result is bit-exact equal to the common value whenever all orders
// coincide.
Tensor dfm_layer(Tape& tape, const Tensor& H, const amr::SparseAdjacency& A,
                 const GcnLayerParams& p, const DfmConfig& cfg);

// Column-wise concatenation of the layer history [H_0; H_1; ...; H_{l-1}].
Tensor dense_concat(Tape& tape, const std::vector<Tensor>& history);

// Stacks dfm_layer with densely concatenated inputs; layer l consumes the
// concatenation of H_0 and all prior outputs. Returns the final layer's
// output.
Tensor deep_dfm_forward(Tape& tape, const Tensor& H0,
                        const amr::SparseAdjacency& A,
                        const std::vector<GcnLayerParams>& layers,
                        const DfmConfig& cfg);

}  // namespace ldgcn::nn
