// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#include "ldgcn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace ldgcn {

int Tape::push(Tensor value, std::function<void(Tape&)> back) {
  int id = static_cast<int>(nodes_.size());
  value.node = id;
  nodes_.push_back({std::move(value), {}, std::move(back)});
  return id;
}

int Tape::bound_id(const Tensor& t) {
  if (t.node >= 0) {
    if (t.node >= static_cast<int>(nodes_.size()))
      throw UsageError("tensor bound to a different tape");
    return t.node;
  }
  Tensor copy = t;
  return push(std::move(copy), nullptr);
}

int Tape::bound_id_const(const Tensor& t) const {
  if (t.node < 0 || t.node >= static_cast<int>(nodes_.size()))
    throw UsageError("tensor is not bound to this tape");
  return t.node;
}

Tensor Tape::leaf(const Tensor& t) {
  Tensor copy = t;
  copy.node = -1;
  int id = push(std::move(copy), nullptr);
  return nodes_[id].value;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + a.shape_str() + " x " + b.shape_str());
  int ia = bound_id(a), ib = bound_id(b);
  const int p = a.rows(), q = a.cols(), r = b.cols();
  Tensor out(p, r);
  const Tensor& av = val(ia);
  const Tensor& bv = val(ib);
  for (int i = 0; i < p; ++i)
    for (int k = 0; k < q; ++k) {
      double aik = av.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < r; ++j) out.at(i, j) += aik * bv.at(k, j);
    }
  amr::mac_counters().dense += static_cast<std::uint64_t>(p) * q * r;
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, ib, id, p, q, r](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    const Tensor& av2 = t.val(ia);
    const Tensor& bv2 = t.val(ib);
    auto& ga = t.grad_buf(ia);
    auto& gb = t.grad_buf(ib);
    // ga += g * b^T
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < r; ++j) {
        double gij = g[static_cast<std::size_t>(i) * r + j];
        if (gij == 0.0) continue;
        for (int k = 0; k < q; ++k)
          ga[static_cast<std::size_t>(i) * q + k] += gij * bv2.at(k, j);
      }
    // gb += a^T * g
    for (int i = 0; i < p; ++i)
      for (int k = 0; k < q; ++k) {
        double aik = av2.at(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < r; ++j)
          gb[static_cast<std::size_t>(k) * r + j] +=
              aik * g[static_cast<std::size_t>(i) * r + j];
      }
  };
  return nodes_[id].value;
}

Tensor Tape::transpose(const Tensor& a) {
  int ia = bound_id(a);
  const int p = a.rows(), q = a.cols();
  Tensor out(q, p);
  const Tensor& av = val(ia);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j) out.at(j, i) = av.at(i, j);
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, id, p, q](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    auto& ga = t.grad_buf(ia);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < q; ++j)
        ga[static_cast<std::size_t>(i) * q + j] +=
            g[static_cast<std::size_t>(j) * p + i];
  };
  return nodes_[id].value;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("add: " + a.shape_str() + " vs " + b.shape_str());
  int ia = bound_id(a), ib = bound_id(b);
  Tensor out = val(ia);
  out.node = -1;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += val(ib).v[i];
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, ib, id](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    auto& ga = t.grad_buf(ia);
    auto& gb = t.grad_buf(ib);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  };
  return nodes_[id].value;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("sub: " + a.shape_str() + " vs " + b.shape_str());
  int ia = bound_id(a), ib = bound_id(b);
  Tensor out = val(ia);
  out.node = -1;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= val(ib).v[i];
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, ib, id](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    auto& ga = t.grad_buf(ia);
    auto& gb = t.grad_buf(ib);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  };
  return nodes_[id].value;
}

Tensor Tape::add_rowvec(const Tensor& a, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw ShapeError("add_rowvec: " + a.shape_str() + " + " +
                     bias.shape_str());
  int ia = bound_id(a), ib = bound_id(bias);
  const int n = a.rows(), d = a.cols();
  Tensor out = val(ia);
  out.node = -1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out.at(i, j) += val(ib).v[j];
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, ib, id, n, d](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    auto& ga = t.grad_buf(ia);
    auto& gb = t.grad_buf(ib);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        double gij = g[static_cast<std::size_t>(i) * d + j];
        ga[static_cast<std::size_t>(i) * d + j] += gij;
        gb[j] += gij;
      }
  };
  return nodes_[id].value;
}

Tensor Tape::mul_elementwise(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("mul_elementwise: " + a.shape_str() + " vs " +
                     b.shape_str());
  int ia = bound_id(a), ib = bound_id(b);
  Tensor out = val(ia);
  out.node = -1;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= val(ib).v[i];
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, ib, id](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    const Tensor& av = t.val(ia);
    const Tensor& bv = t.val(ib);
    auto& ga = t.grad_buf(ia);
    auto& gb = t.grad_buf(ib);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * bv.v[i];
      gb[i] += g[i] * av.v[i];
    }
  };
  return nodes_[id].value;
}

Tensor Tape::scalar_mul(const Tensor& a, double s) { return affine(a, s, 0.0); }

Tensor Tape::affine(const Tensor& a, double s, double c) {
  int ia = bound_id(a);
  Tensor out = val(ia);
  out.node = -1;
  for (auto& x : out.v) x = s * x + c;
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, id, s](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    auto& ga = t.grad_buf(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  };
  return nodes_[id].value;
}

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: empty input list");
  const int n = parts[0].rows();
  int total = 0;
  std::vector<int> ids, widths;
  for (const auto& p : parts) {
    if (p.rows() != n)
      throw ShapeError("concat_cols: row mismatch " + p.shape_str());
    total += p.cols();
  }
  Tensor out(n, total);
  int off = 0;
  for (const auto& p : parts) {
    int ip = bound_id(p);
    ids.push_back(ip);
    widths.push_back(p.cols());
    const Tensor& pv = val(ip);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < pv.cols(); ++j) out.at(i, off + j) = pv.at(i, j);
    off += pv.cols();
  }
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ids, widths, id, n, total](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    int off2 = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      auto& gp = t.grad_buf(ids[p]);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < widths[p]; ++j)
          gp[static_cast<std::size_t>(i) * widths[p] + j] +=
              g[static_cast<std::size_t>(i) * total + off2 + j];
      off2 += widths[p];
    }
  };
  return nodes_[id].value;
}

Tensor Tape::slice_cols(const Tensor& a, int start, int width) {
  if (start < 0 || width < 0 || start + width > a.cols())
    throw ShapeError("slice_cols: range [" + std::to_string(start) + ", " +
                     std::to_string(start + width) + ") of " + a.shape_str());
  int ia = bound_id(a);
  const int n = a.rows(), d = a.cols();
  Tensor out(n, width);
  const Tensor& av = val(ia);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < width; ++j) out.at(i, j) = av.at(i, start + j);
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, id, n, d, start, width](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    auto& ga = t.grad_buf(ia);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < width; ++j)
        ga[static_cast<std::size_t>(i) * d + start + j] +=
            g[static_cast<std::size_t>(i) * width + j];
  };
  return nodes_[id].value;
}

Tensor Tape::sigmoid(const Tensor& a) {
  int ia = bound_id(a);
  Tensor out = val(ia);
  out.node = -1;
  for (auto& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, id](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    const Tensor& y = t.val(id);
    auto& ga = t.grad_buf(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i] * y.v[i] * (1.0 - y.v[i]);
  };
  return nodes_[id].value;
}

Tensor Tape::relu(const Tensor& a) {
  int ia = bound_id(a);
  Tensor out = val(ia);
  out.node = -1;
  for (auto& x : out.v)
    if (x < 0.0) x = 0.0;
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, id](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    const Tensor& x = t.val(ia);
    auto& ga = t.grad_buf(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x.v[i] > 0.0) ga[i] += g[i];
  };
  return nodes_[id].value;
}

Tensor Tape::tanh(const Tensor& a) {
  int ia = bound_id(a);
  Tensor out = val(ia);
  out.node = -1;
  for (auto& x : out.v) x = std::tanh(x);
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, id](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    const Tensor& y = t.val(id);
    auto& ga = t.grad_buf(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i] * (1.0 - y.v[i] * y.v[i]);
  };
  return nodes_[id].value;
}

Tensor Tape::softmax_rows(const Tensor& a) {
  int ia = bound_id(a);
  const int n = a.rows(), d = a.cols();
  Tensor out(n, d);
  const Tensor& av = val(ia);
  for (int i = 0; i < n; ++i) {
    double mx = av.at(i, 0);
    for (int j = 1; j < d; ++j) mx = std::max(mx, av.at(i, j));
    double z = 0.0;
    for (int j = 0; j < d; ++j) {
      out.at(i, j) = std::exp(av.at(i, j) - mx);
      z += out.at(i, j);
    }
    for (int j = 0; j < d; ++j) out.at(i, j) /= z;
  }
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, id, n, d](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    const Tensor& y = t.val(id);
    auto& ga = t.grad_buf(ia);
    for (int i = 0; i < n; ++i) {
      double dot = 0.0;
      for (int j = 0; j < d; ++j)
        dot += g[static_cast<std::size_t>(i) * d + j] * y.at(i, j);
      for (int j = 0; j < d; ++j)
        ga[static_cast<std::size_t>(i) * d + j] +=
            y.at(i, j) * (g[static_cast<std::size_t>(i) * d + j] - dot);
    }
  };
  return nodes_[id].value;
}

Tensor Tape::sum_all(const Tensor& a) {
  int ia = bound_id(a);
  double s = 0.0;
  for (double x : val(ia).v) s += x;
  int id = push(Tensor::scalar(s), nullptr);
  nodes_[id].back = [ia, id](Tape& t) {
    double g = t.nodes_[id].grad[0];
    auto& ga = t.grad_buf(ia);
    for (auto& x : ga) x += g;
  };
  return nodes_[id].value;
}

Tensor Tape::mean_all(const Tensor& a) {
  return scalar_mul(sum_all(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor Tape::gather_rows(const Tensor& table, const std::vector<int>& ids) {
  int it = bound_id(table);
  const int v = table.rows(), e = table.cols();
  for (int ix : ids)
    if (ix < 0 || ix >= v)
      throw VocabError("gather_rows: index " + std::to_string(ix) +
                       " out of range [0, " + std::to_string(v) + ")");
  Tensor out(static_cast<int>(ids.size()), e);
  const Tensor& tv = val(it);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (int j = 0; j < e; ++j) out.at(static_cast<int>(i), j) = tv.at(ids[i], j);
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [it, id, ids, e](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    auto& gt = t.grad_buf(it);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < e; ++j)
        gt[static_cast<std::size_t>(ids[i]) * e + j] +=
            g[i * static_cast<std::size_t>(e) + j];
  };
  return nodes_[id].value;
}

Tensor Tape::sparse_apply(const amr::SparseAdjacency& a, const Tensor& h) {
  if (h.rows() != a.n)
    throw ShapeError("sparse_apply: adjacency n=" + std::to_string(a.n) +
                     " vs h " + h.shape_str());
  int ih = bound_id(h);
  const int d = h.cols();
  Tensor out(a.n, d);
  apply_sparse(a, val(ih).v.data(), out.v.data(), d);
  int id = push(std::move(out), nullptr);
  // The closure keeps its own copy so the adjacency need not outlive the
  // tape.
  nodes_[id].back = [ih, id, adj = a, d](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    std::vector<double> gh(g.size());
    apply_sparse_transposed(adj, g.data(), gh.data(), d);
    auto& ga = t.grad_buf(ih);
    for (std::size_t i = 0; i < gh.size(); ++i) ga[i] += gh[i];
  };
  return nodes_[id].value;
}

Tensor Tape::kth_order_apply(const amr::SparseAdjacency& a, const Tensor& h,
                             int k) {
  if (k < 1) throw UsageError("kth_order_apply: k must be >= 1");
  Tensor cur = h;
  for (int i = 0; i < k; ++i) cur = sparse_apply(a, cur);
  return cur;
}

Tensor Tape::cross_entropy_rows(const Tensor& logits,
                                const std::vector<int>& targets) {
  if (static_cast<int>(targets.size()) != logits.rows())
    throw ShapeError("cross_entropy_rows: " + std::to_string(targets.size()) +
                     " targets for " + logits.shape_str());
  int il = bound_id(logits);
  const int n = logits.rows(), d = logits.cols();
  for (int tgt : targets)
    if (tgt < 0 || tgt >= d)
      throw VocabError("cross_entropy_rows: target out of range");
  const Tensor& lv = val(il);
  Tensor probs(n, d);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    double mx = lv.at(i, 0);
    for (int j = 1; j < d; ++j) mx = std::max(mx, lv.at(i, j));
    double z = 0.0;
    for (int j = 0; j < d; ++j) z += std::exp(lv.at(i, j) - mx);
    double logz = mx + std::log(z);
    loss += logz - lv.at(i, targets[i]);
    for (int j = 0; j < d; ++j)
      probs.at(i, j) = std::exp(lv.at(i, j) - logz);
  }
  loss /= n;
  int id = push(Tensor::scalar(loss), nullptr);
  nodes_[id].back = [il, id, probs, targets, n, d](Tape& t) {
    double g = t.nodes_[id].grad[0] / n;
    auto& ga = t.grad_buf(il);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        double p = probs.at(i, j) - (j == targets[i] ? 1.0 : 0.0);
        ga[static_cast<std::size_t>(i) * d + j] += g * p;
      }
  };
  return nodes_[id].value;
}

Tensor Tape::elementwise_custom(const Tensor& a,
                                std::function<double(double)> f,
                                std::function<double(double, double)> df) {
  int ia = bound_id(a);
  Tensor out = val(ia);
  out.node = -1;
  for (auto& x : out.v) x = f(x);
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, id, df](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    const Tensor& x = t.val(ia);
    const Tensor& y = t.val(id);
    auto& ga = t.grad_buf(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i] * df(x.v[i], y.v[i]);
  };
  return nodes_[id].value;
}

Tensor Tape::dropout(const Tensor& a, double rate, Rng& rng) {
  if (rate == 0.0) return nodes_[bound_id(a)].value;
  if (rate < 0.0 || rate >= 1.0)
    throw UsageError("dropout: rate must be in [0, 1)");
  int ia = bound_id(a);
  std::vector<double> mask(val(ia).numel());
  double keep = 1.0 - rate;
  for (auto& m : mask) m = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  Tensor out = val(ia);
  out.node = -1;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= mask[i];
  int id = push(std::move(out), nullptr);
  nodes_[id].back = [ia, id, mask](Tape& t) {
    const std::vector<double>& g = t.nodes_[id].grad;
    auto& ga = t.grad_buf(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  };
  return nodes_[id].value;
}

void Tape::backward(const Tensor& loss) {
  int id = bound_id_const(loss);
  if (nodes_[id].value.numel() != 1)
    throw ShapeError("backward: loss must be a scalar, got " +
                     nodes_[id].value.shape_str());
  for (auto& n : nodes_) n.grad.assign(n.value.numel(), 0.0);
  nodes_[id].grad[0] = 1.0;
  for (int i = id; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back(*this);
}

Tensor Tape::grad(const Tensor& t) const {
  int id = bound_id_const(t);
  if (nodes_[id].grad.size() != nodes_[id].value.numel())
    throw UsageError("grad: backward() has not been run on this tape");
  Tensor g = nodes_[id].value;
  g.node = -1;
  g.v = nodes_[id].grad;
  return g;
}

double grad_check(
    const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& inputs, double eps) {
  if (eps < 1e-7 || eps > 1e-3)
    throw UsageError("grad_check: eps must be in [1e-7, 1e-3]");

  Tape tape;
  std::vector<Tensor> bound;
  bound.reserve(inputs.size());
  for (const auto& in : inputs) bound.push_back(tape.leaf(in));
  Tensor loss = f(tape, bound);
  if (loss.numel() != 1) throw ShapeError("grad_check: f must be scalar");
  tape.backward(loss);
  std::vector<Tensor> analytic;
  analytic.reserve(bound.size());
  for (const auto& b : bound) analytic.push_back(tape.grad(b));

  auto eval = [&](const std::vector<Tensor>& xs) {
    Tape t2;
    std::vector<Tensor> b2;
    b2.reserve(xs.size());
    for (const auto& x : xs) b2.push_back(t2.leaf(x));
    return f(t2, b2).v[0];
  };

  double worst = 0.0;
  std::vector<Tensor> work = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].v.size(); ++j) {
      double keep = work[i].v[j];
      work[i].v[j] = keep + eps;
      double up = eval(work);
      work[i].v[j] = keep - eps;
      double down = eval(work);
      work[i].v[j] = keep;
      double numeric = (up - down) / (2.0 * eps);
      double a = analytic[i].v[j];
      double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace ldgcn
