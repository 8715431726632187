// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ldgcn/tape.hpp"
#include "ldgcn/tensor.hpp"

namespace ldgcn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Tensor m;
  Tensor v;
  long t = 0;
};

// One Adam update in place. Bit-identical results for identical inputs and
// state; throws OptimError on non-finite gradients.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               const AdamConfig& cfg);

// Named parameter tensors in insertion order. The insertion order defines
// the checkpoint layout and the optimizer update order, so training is
// deterministic.
class ParamStore {
 public:
  Tensor& create(const std::string& name, Tensor init);
  bool contains(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t count() const { return items_.size(); }
  std::uint64_t total_scalars() const;
  const std::vector<std::pair<std::string, Tensor>>& items() const {
    return items_;
  }
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;

  // Checkpoint format: magic "LDGCNCKPT1", then per parameter: u32 name
  // length, UTF-8 name, u32 rank, u32 dims, little-endian f64 values.
  // Round trips bit-exactly.
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::map<std::string, std::size_t> index_;
};

// Adam over every parameter that received a gradient this step, in store
// order.
class Optimizer {
 public:
  explicit Optimizer(AdamConfig cfg) : cfg_(cfg) {}
  void step(ParamStore& store, const std::map<std::string, Tensor>& grads);

 private:
  AdamConfig cfg_;
  std::map<std::string, AdamState> states_;
};

// Binds store parameters onto a tape lazily, one leaf per parameter per
// pass, and collects their gradients after backward(). The second
// constructor wires in tensors already bound to the tape (gradient checks
// route perturbed leaves through the same forward code this way).
class PassBinder {
 public:
  PassBinder(Tape& tape, const ParamStore& store)
      : tape_(tape), store_(&store) {}
  PassBinder(Tape& tape, const std::vector<std::string>& names,
             const std::vector<Tensor>& bound_values);

  const Tensor& operator()(const std::string& name);
  // Gradients of all bound parameters; call after tape.backward().
  std::map<std::string, Tensor> grads() const;
  const std::vector<std::string>& bound_names() const { return order_; }

 private:
  Tape& tape_;
  const ParamStore* store_ = nullptr;
  std::map<std::string, Tensor> bound_;
  std::vector<std::string> order_;
};

}  // namespace ldgcn
