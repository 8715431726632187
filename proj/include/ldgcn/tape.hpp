// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "ldgcn/adjacency.hpp"
#include "ldgcn/rng.hpp"
#include "ldgcn/tensor.hpp"

namespace ldgcn {

// Reverse-mode differentiation tape. Operations append one record each, in
// topological order by construction; backward() replays the records in
// reverse. A tape is single-threaded: one active tape per training thread.
//
// Operations accept tensors bound to this tape (node >= 0) or detached
// tensors, which are bound as constant leaves on first use.
class Tape {
 public:
  // Binds a tensor as a leaf node and returns the bound handle.
  Tensor leaf(const Tensor& t);

  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor transpose(const Tensor& a);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  // a is n x d, bias is 1 x d, broadcast across rows. The only broadcast in
  // the library.
  Tensor add_rowvec(const Tensor& a, const Tensor& bias);
  Tensor mul_elementwise(const Tensor& a, const Tensor& b);
  Tensor scalar_mul(const Tensor& a, double s);
  // s * a + c, elementwise.
  Tensor affine(const Tensor& a, double s, double c);
  Tensor concat_cols(const std::vector<Tensor>& parts);
  Tensor slice_cols(const Tensor& a, int start, int width);
  Tensor sigmoid(const Tensor& a);
  Tensor relu(const Tensor& a);
  Tensor tanh(const Tensor& a);
  Tensor softmax_rows(const Tensor& a);
  Tensor sum_all(const Tensor& a);
  Tensor mean_all(const Tensor& a);
  // Row lookup into `table` (V x e). Throws VocabError on out-of-range ids.
  Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);
  // Sparse adjacency application A * h. Counts nnz * cols multiply-adds.
  Tensor sparse_apply(const amr::SparseAdjacency& a, const Tensor& h);
  // A^k * h via right-to-left application: exactly k sparse products, A^k is
  // never materialized. Multiply-add count is exactly k * nnz * cols.
  Tensor kth_order_apply(const amr::SparseAdjacency& a, const Tensor& h,
                         int k);
  // Mean cross-entropy of softmax(logits) rows against target ids.
  Tensor cross_entropy_rows(const Tensor& logits,
                            const std::vector<int>& targets);
  // Elementwise y = f(x) with user-supplied derivative df(x, y). Extension
  // point for activations not built in.
  Tensor elementwise_custom(const Tensor& a, std::function<double(double)> f,
                            std::function<double(double, double)> df);
  // Inverted dropout; identity when rate == 0.
  Tensor dropout(const Tensor& a, double rate, Rng& rng);

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every node.
  // Throws ShapeError unless loss is a scalar produced on this tape.
  void backward(const Tensor& loss);

  // Gradient of the last backward() with respect to a bound tensor.
  Tensor grad(const Tensor& t) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  int push(Tensor value, std::function<void(Tape&)> back);
  int bound_id(const Tensor& t);
  int bound_id_const(const Tensor& t) const;
  const Tensor& val(int id) const { return nodes_[id].value; }
  std::vector<double>& grad_buf(int id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

// Max over all input coordinates of |analytic - central difference| /
// max(1, |analytic|) for a scalar-valued tensor function.
double grad_check(
    const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& inputs, double eps);

}  // namespace ldgcn
