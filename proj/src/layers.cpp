// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#include "ldgcn/layers.hpp"

#include <cmath>

namespace ldgcn::nn {

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + s + "'");
}

const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

Tensor apply_activation(Tape& tape, const Tensor& x, Activation a) {
  switch (a) {
    case Activation::relu: return tape.relu(x);
    case Activation::tanh: return tape.tanh(x);
    case Activation::identity: return x.node >= 0 ? x : tape.leaf(x);
  }
  throw UsageError("apply_activation: bad enum");
}

void DfmConfig::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ConfigError("DfmConfig: lambda must be in (0, 1)");
  if (highest_order < 2)
    throw ConfigError("DfmConfig: highest order K must be >= 2");
}

namespace {

// Shared pre-activation A^k * H * W + b of Eqs. 4 and 5; one sparse
// application chain per order, reused for gate and value.
Tensor order_preactivation(Tape& tape, const amr::SparseAdjacency& A,
                           const Tensor& H, const GcnLayerParams& p, int k) {
  Tensor s = tape.kth_order_apply(A, H, k);
  return tape.add_rowvec(tape.matmul(s, p.W), p.b);
}

void check_layer_shapes(const Tensor& H, const amr::SparseAdjacency& A,
                        const GcnLayerParams& p, const char* who) {
  if (H.rows() != A.n)
    throw ShapeError(std::string(who) + ": H " + H.shape_str() +
                     " vs adjacency n=" + std::to_string(A.n));
  if (p.W.rows() != H.cols())
    throw ShapeError(std::string(who) + ": H " + H.shape_str() + " vs W " +
                     p.W.shape_str());
  if (p.b.rows() != 1 || p.b.cols() != p.W.cols())
    throw ShapeError(std::string(who) + ": bias " + p.b.shape_str() +
                     " vs W " + p.W.shape_str());
}

}  // namespace

Tensor gcn_layer(Tape& tape, const Tensor& H, const amr::SparseAdjacency& A,
                 const GcnLayerParams& p, Activation phi) {
  check_layer_shapes(H, A, p, "gcn_layer");
  return apply_activation(tape, order_preactivation(tape, A, H, p, 1), phi);
}

Tensor dfm_gate(Tape& tape, const amr::SparseAdjacency& A, const Tensor& H,
                const GcnLayerParams& p, int k, double lambda) {
  if (k < 2) throw UsageError("dfm_gate: order k must be >= 2");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ConfigError("dfm_gate: lambda must be in (0, 1)");
  check_layer_shapes(H, A, p, "dfm_gate");
  double bound = 1.0 - std::pow(lambda, k);
  return tape.scalar_mul(tape.sigmoid(order_preactivation(tape, A, H, p, k)),
                         bound);
}

Tensor dfm_layer(Tape& tape, const Tensor& H, const amr::SparseAdjacency& A,
                 const GcnLayerParams& p, const DfmConfig& cfg) {
  cfg.validate();
  check_layer_shapes(H, A, p, "dfm_layer");
  const int K = cfg.highest_order;

  Tensor first = apply_activation(
      tape, order_preactivation(tape, A, H, p, 1), cfg.activation);

  Tensor acc;
  bool have_acc = false;
  for (int k = 2; k <= K; ++k) {
    Tensor pre = order_preactivation(tape, A, H, p, k);
    Tensor gate =
        tape.scalar_mul(tape.sigmoid(pre), 1.0 - std::pow(cfg.lambda, k));
    Tensor value = apply_activation(tape, pre, cfg.activation);
    Tensor term = tape.mul_elementwise(gate, tape.sub(value, first));
    acc = have_acc ? tape.add(acc, term) : term;
    have_acc = true;
  }
  return tape.add(first, tape.scalar_mul(acc, 1.0 / (K - 1)));
}

Tensor dense_concat(Tape& tape, const std::vector<Tensor>& history) {
  if (history.empty()) throw UsageError("dense_concat: empty history");
  if (history.size() == 1)
    return history[0].node >= 0 ? history[0] : tape.leaf(history[0]);
  return tape.concat_cols(history);
}

Tensor deep_dfm_forward(Tape& tape, const Tensor& H0,
                        const amr::SparseAdjacency& A,
                        const std::vector<GcnLayerParams>& layers,
                        const DfmConfig& cfg) {
  if (layers.empty()) throw UsageError("deep_dfm_forward: no layers");
  std::vector<Tensor> history{H0};
  Tensor out;
  for (const auto& p : layers) {
    Tensor input = dense_concat(tape, history);
    out = dfm_layer(tape, input, A, p, cfg);
    history.push_back(out);
  }
  return out;
}

}  // namespace ldgcn::nn
