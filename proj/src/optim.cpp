// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#include "ldgcn/optim.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace ldgcn {

void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               const AdamConfig& cfg) {
  if (!param.same_shape(grad))
    throw ShapeError("adam_step: param " + param.shape_str() + " vs grad " +
                     grad.shape_str());
  for (double g : grad.v)
    if (!std::isfinite(g)) throw OptimError("adam_step: non-finite gradient");
  if (state.t == 0) {
    state.m = Tensor(param.rows(), param.cols());
    state.v = Tensor(param.rows(), param.cols());
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < param.v.size(); ++i) {
    double g = grad.v[i];
    state.m.v[i] = cfg.beta1 * state.m.v[i] + (1.0 - cfg.beta1) * g;
    state.v.v[i] = cfg.beta2 * state.v.v[i] + (1.0 - cfg.beta2) * g * g;
    double mhat = state.m.v[i] / c1;
    double vhat = state.v.v[i] / c2;
    param.v[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Tensor& ParamStore::create(const std::string& name, Tensor init) {
  if (index_.count(name))
    throw UsageError("ParamStore: duplicate parameter '" + name + "'");
  init.node = -1;
  index_[name] = items_.size();
  items_.emplace_back(name, std::move(init));
  return items_.back().second;
}

bool ParamStore::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end())
    throw UsageError("ParamStore: unknown parameter '" + name + "'");
  return items_[it->second].second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw UsageError("ParamStore: unknown parameter '" + name + "'");
  return items_[it->second].second;
}

std::uint64_t ParamStore::total_scalars() const {
  std::uint64_t total = 0;
  for (const auto& [name, t] : items_) total += t.numel();
  return total;
}

std::vector<std::string> ParamStore::names_with_prefix(
    const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, t] : items_)
    if (name.rfind(prefix, 0) == 0) out.push_back(name);
  return out;
}

namespace {

constexpr char kMagic[] = "LDGCNCKPT1";  // 10 bytes, no terminator on disk

void write_u32(std::ostream& os, std::uint32_t x) {
  unsigned char b[4] = {static_cast<unsigned char>(x),
                        static_cast<unsigned char>(x >> 8),
                        static_cast<unsigned char>(x >> 16),
                        static_cast<unsigned char>(x >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("checkpoint: truncated u32");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64(std::ostream& os, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw IoError("checkpoint: truncated f64");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

}  // namespace

void ParamStore::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 10);
  for (const auto& [name, t] : items_) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(t.shape.size()));
    for (int dim : t.shape) write_u32(os, static_cast<std::uint32_t>(dim));
    for (double x : t.v) write_f64(os, x);
  }
  if (!os) throw IoError("checkpoint write failed: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[10];
  is.read(magic, 10);
  if (!is || std::memcmp(magic, kMagic, 10) != 0)
    throw IoError("not a checkpoint file: " + path);
  ParamStore store;
  while (true) {
    int c = is.peek();
    if (c == std::char_traits<char>::eof()) break;
    std::uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw IoError("checkpoint: truncated name");
    std::uint32_t rank = read_u32(is);
    Tensor t;
    std::size_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      t.shape.push_back(static_cast<int>(read_u32(is)));
      numel *= static_cast<std::size_t>(t.shape.back());
    }
    t.v.resize(numel);
    for (auto& x : t.v) x = read_f64(is);
    store.create(name, std::move(t));
  }
  return store;
}

void Optimizer::step(ParamStore& store,
                     const std::map<std::string, Tensor>& grads) {
  for (const auto& [name, value] : store.items()) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;
    adam_step(store.at(name), it->second, states_[name], cfg_);
  }
}

PassBinder::PassBinder(Tape& tape, const std::vector<std::string>& names,
                       const std::vector<Tensor>& bound_values)
    : tape_(tape) {
  if (names.size() != bound_values.size())
    throw UsageError("PassBinder: names and values differ in length");
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (bound_values[i].node < 0)
      throw UsageError("PassBinder: value for '" + names[i] +
                       "' is not bound to the tape");
    bound_.emplace(names[i], bound_values[i]);
    order_.push_back(names[i]);
  }
}

const Tensor& PassBinder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  if (!store_)
    throw UsageError("PassBinder: unknown pre-bound parameter '" + name + "'");
  Tensor leafed = tape_.leaf(store_->at(name));
  order_.push_back(name);
  return bound_.emplace(name, std::move(leafed)).first->second;
}

std::map<std::string, Tensor> PassBinder::grads() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, bound] : bound_) out[name] = tape_.grad(bound);
  return out;
}

}  // namespace ldgcn
