// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#include "ldgcn/stacks.hpp"

#include <algorithm>
#include <numeric>

namespace ldgcn::nn {

Strategy strategy_from_string(const std::string& s) {
  if (s == "dense") return Strategy::dense;
  if (s == "group") return Strategy::group;
  if (s == "tied") return Strategy::tied;
  throw ConfigError("unknown strategy '" + s + "'");
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::dense: return "dense";
    case Strategy::group: return "group";
    case Strategy::tied: return "tied";
  }
  return "?";
}

int StackConfig::total_layers() const {
  return std::accumulate(blocks.begin(), blocks.end(), 0);
}

int StackConfig::sub_layerwise_groups(int layers) const {
  if (strategy != Strategy::group) return 1;
  if (layerwise_groups == 0) return layers;
  return layerwise_groups;
}

int StackConfig::sub_depthwise_groups() const {
  return strategy == Strategy::group ? depthwise_groups : 1;
}

void StackConfig::validate() const {
  if (d < 1) throw ConfigError("StackConfig: d must be positive");
  if (blocks.empty())
    throw ConfigError("StackConfig: at least one sub-block required");
  for (int L : blocks)
    if (L < 1) throw ConfigError("StackConfig: sub-block layer count must be >= 1");
  if (use_dfm) dfm.validate();
  if (dropout < 0.0 || dropout >= 1.0)
    throw ConfigError("StackConfig: dropout must be in [0, 1)");
  if (strategy == Strategy::tied) return;  // constant width, no splits

  if (depthwise_groups < 1)
    throw ConfigError("StackConfig: depthwise groups N must be >= 1");
  if (layerwise_groups < 0)
    throw ConfigError("StackConfig: layerwise groups M must be >= 0");
  const int N = sub_depthwise_groups();
  for (int L : blocks) {
    if (d % L != 0)
      throw ConfigError("StackConfig: d=" + std::to_string(d) +
                        " not divisible by sub-block layer count " +
                        std::to_string(L));
    const int M = sub_layerwise_groups(L);
    if (M != 1 && M != L)
      throw ConfigError(
          "StackConfig: layerwise groups M must equal the sub-block layer "
          "count (or 1 to disable); got M=" +
          std::to_string(M) + " for a " + std::to_string(L) +
          "-layer sub-block");
    if (d % M != 0)
      throw ConfigError("StackConfig: d not divisible by M=" +
                        std::to_string(M));
    if ((d / L) % N != 0)
      throw ConfigError("StackConfig: layer output width d/L=" +
                        std::to_string(d / L) + " not divisible by N=" +
                        std::to_string(N));
    for (int l = 1; l <= L; ++l) {
      int in_width = std::min(l, M) * (d / M) + (l - 1) * (d / L);
      if (in_width % N != 0)
        throw ConfigError("StackConfig: layer " + std::to_string(l) +
                          " input width " + std::to_string(in_width) +
                          " not divisible by N=" + std::to_string(N));
    }
  }
}

std::uint64_t ParamReport::conv_total() const {
  std::uint64_t t = 0;
  for (const auto& r : conv_rows) t += r.count();
  return t;
}

std::uint64_t ParamReport::aux_total() const {
  std::uint64_t t = 0;
  for (const auto& r : aux_rows) t += r.count();
  return t;
}

ParamReport count_parameters(const StackConfig& cfg) {
  cfg.validate();
  ParamReport report;
  report.strategy = cfg.strategy;
  const int d = cfg.d;

  if (cfg.strategy == Strategy::tied) {
    report.conv_rows.push_back({"enc.tied.W", d, d, 1});
    report.conv_rows.push_back({"enc.tied.b", 1, d, 1});
    report.aux_rows.push_back(
        {"enc.jump.F", cfg.total_layers() * d, d, 1});
    return report;
  }

  const int N = cfg.sub_depthwise_groups();
  for (std::size_t s = 0; s < cfg.blocks.size(); ++s) {
    const int L = cfg.blocks[s];
    const int M = cfg.sub_layerwise_groups(L);
    const int out = d / L;
    for (int l = 1; l <= L; ++l) {
      int in_width = std::min(l, M) * (d / M) + (l - 1) * out;
      std::string base =
          "enc.s" + std::to_string(s) + ".l" + std::to_string(l);
      report.conv_rows.push_back({base + ".W", in_width / N, out / N, N});
      report.conv_rows.push_back({base + ".b", 1, out / N, N});
    }
    if (s + 1 < cfg.blocks.size())
      report.aux_rows.push_back(
          {"enc.proj" + std::to_string(s + 1) + ".W", d, d, 1});
  }
  return report;
}

Tensor depthwise_forward(Tape& tape, const Tensor& H,
                         const amr::SparseAdjacency& A,
                         const std::vector<GcnLayerParams>& groups,
                         Activation phi, const DfmConfig* dfm) {
  if (groups.empty()) throw UsageError("depthwise_forward: no groups");
  const int N = static_cast<int>(groups.size());
  const int d_in = H.cols();
  if (d_in % N != 0)
    throw ConfigError("depthwise_forward: input width " +
                      std::to_string(d_in) + " not divisible by N=" +
                      std::to_string(N));
  auto convolve = [&](const Tensor& x, const GcnLayerParams& p) {
    return dfm ? dfm_layer(tape, x, A, p, *dfm)
               : gcn_layer(tape, x, A, p, phi);
  };
  if (N == 1) return convolve(H, groups[0]);

  const int w = d_in / N;
  std::vector<Tensor> outs;
  outs.reserve(groups.size());
  for (int g = 0; g < N; ++g)
    outs.push_back(convolve(tape.slice_cols(H, g * w, w), groups[g]));
  return tape.concat_cols(outs);
}

Tensor layerwise_input(Tape& tape, int layer_index,
                       const std::vector<Tensor>& input_groups,
                       const std::vector<Tensor>& prior_outputs) {
  if (input_groups.empty())
    throw UsageError("layerwise_input: no input groups");
  if (layer_index < 1)
    throw UsageError("layerwise_input: layer index must be >= 1");
  if (static_cast<int>(prior_outputs.size()) != layer_index - 1)
    throw UsageError("layerwise_input: layer " + std::to_string(layer_index) +
                     " expects " + std::to_string(layer_index - 1) +
                     " prior outputs, got " +
                     std::to_string(prior_outputs.size()));
  const int M = static_cast<int>(input_groups.size());
  std::vector<Tensor> parts;
  int take = std::min(layer_index, M);
  for (int j = 0; j < take; ++j) parts.push_back(input_groups[j]);
  for (const auto& h : prior_outputs) parts.push_back(h);
  return dense_concat(tape, parts);
}

Tensor group_stack_forward(Tape& tape, const Tensor& H0,
                           const amr::SparseAdjacency& A,
                           const StackConfig& cfg,
                           const SubBlockParams& params) {
  if (cfg.strategy == Strategy::tied)
    throw UsageError("group_stack_forward: tied strategy takes "
                     "tied_stack_forward");
  const int L = static_cast<int>(params.layers.size());
  if (L == 0) throw UsageError("group_stack_forward: no layers");
  const int d = H0.cols();
  if (d != cfg.d)
    throw ShapeError("group_stack_forward: input width " + std::to_string(d) +
                     " vs configured d=" + std::to_string(cfg.d));
  const int M = cfg.sub_layerwise_groups(L);
  if (d % M != 0 || d % L != 0)
    throw ConfigError("group_stack_forward: indivisible widths");

  std::vector<Tensor> input_groups;
  if (M == 1) {
    input_groups.push_back(H0);
  } else {
    const int w = d / M;
    for (int j = 0; j < M; ++j)
      input_groups.push_back(tape.slice_cols(H0, j * w, w));
  }

  const DfmConfig* dfm = cfg.use_dfm ? &cfg.dfm : nullptr;
  std::vector<Tensor> outputs;
  outputs.reserve(L);
  for (int l = 1; l <= L; ++l) {
    Tensor input = layerwise_input(tape, l, input_groups, outputs);
    outputs.push_back(depthwise_forward(tape, input, A, params.layers[l - 1],
                                        cfg.dfm.activation, dfm));
  }
  return outputs.size() == 1 ? outputs[0] : tape.concat_cols(outputs);
}

Tensor jumping_connection(Tape& tape, const std::vector<Tensor>& outputs,
                          const Tensor& F) {
  if (outputs.empty()) throw UsageError("jumping_connection: no outputs");
  for (const auto& o : outputs)
    if (!o.same_shape(outputs[0]))
      throw ShapeError("jumping_connection: output shapes differ");
  std::vector<Tensor> deepest_first(outputs.rbegin(), outputs.rend());
  Tensor stacked = deepest_first.size() == 1
                       ? deepest_first[0]
                       : tape.concat_cols(deepest_first);
  if (F.rows() != stacked.cols())
    throw ShapeError("jumping_connection: map " + F.shape_str() +
                     " vs stacked " + stacked.shape_str());
  return tape.matmul(stacked, F);
}

Tensor tied_stack_forward(Tape& tape, const Tensor& H0,
                          const amr::SparseAdjacency& A,
                          const GcnLayerParams& shared, int layers,
                          const StackConfig& cfg, const Tensor& jump_map) {
  if (layers < 1) throw UsageError("tied_stack_forward: layers must be >= 1");
  const int d = H0.cols();
  if (shared.W.rows() != d || shared.W.cols() != d)
    throw ShapeError("tied_stack_forward: shared W " + shared.W.shape_str() +
                     " is not " + std::to_string(d) + "x" + std::to_string(d));
  std::vector<Tensor> outputs;
  outputs.reserve(layers);
  Tensor h = H0;
  for (int l = 0; l < layers; ++l) {
    h = cfg.use_dfm ? dfm_layer(tape, h, A, shared, cfg.dfm)
                    : gcn_layer(tape, h, A, shared, cfg.dfm.activation);
    outputs.push_back(h);
  }
  return jumping_connection(tape, outputs, jump_map);
}

namespace {

Tensor averaging_jump_map(int layers, int d) {
  Tensor f(layers * d, d);
  for (int l = 0; l < layers; ++l)
    for (int c = 0; c < d; ++c) f.at(l * d + c, c) = 1.0 / layers;
  return f;
}

}  // namespace

void init_encoder_params(ParamStore& store, const StackConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d = cfg.d;
  if (cfg.strategy == Strategy::tied) {
    store.create("enc.tied.W", glorot_uniform(d, d, rng));
    store.create("enc.tied.b", Tensor(1, d));
    store.create("enc.jump.F", averaging_jump_map(cfg.total_layers(), d));
    return;
  }
  const int N = cfg.sub_depthwise_groups();
  for (std::size_t s = 0; s < cfg.blocks.size(); ++s) {
    const int L = cfg.blocks[s];
    const int M = cfg.sub_layerwise_groups(L);
    const int out = d / L;
    for (int l = 1; l <= L; ++l) {
      int in_width = std::min(l, M) * (d / M) + (l - 1) * out;
      for (int g = 0; g < N; ++g) {
        std::string base = "enc.s" + std::to_string(s) + ".l" +
                           std::to_string(l) + ".g" + std::to_string(g);
        store.create(base + ".W", glorot_uniform(in_width / N, out / N, rng));
        store.create(base + ".b", Tensor(1, out / N));
      }
    }
    if (s + 1 < cfg.blocks.size())
      store.create("enc.proj" + std::to_string(s + 1) + ".W",
                   glorot_uniform(d, d, rng));
  }
}

Tensor encoder_forward(Tape& tape, PassBinder& params, const Tensor& H0,
                       const amr::SparseAdjacency& A, const StackConfig& cfg,
                       Rng* train_rng) {
  cfg.validate();
  if (cfg.strategy == Strategy::tied) {
    GcnLayerParams shared{params("enc.tied.W"), params("enc.tied.b")};
    return tied_stack_forward(tape, H0, A, shared, cfg.total_layers(), cfg,
                              params("enc.jump.F"));
  }
  const int N = cfg.sub_depthwise_groups();
  Tensor cur = H0;
  for (std::size_t s = 0; s < cfg.blocks.size(); ++s) {
    const int L = cfg.blocks[s];
    SubBlockParams sub;
    sub.layers.resize(L);
    for (int l = 1; l <= L; ++l)
      for (int g = 0; g < N; ++g) {
        std::string base = "enc.s" + std::to_string(s) + ".l" +
                           std::to_string(l) + ".g" + std::to_string(g);
        sub.layers[l - 1].push_back({params(base + ".W"), params(base + ".b")});
      }
    cur = group_stack_forward(tape, cur, A, cfg, sub);
    if (train_rng && cfg.dropout > 0.0)
      cur = tape.dropout(cur, cfg.dropout, *train_rng);
    if (s + 1 < cfg.blocks.size())
      cur = tape.matmul(cur, params("enc.proj" + std::to_string(s + 1) + ".W"));
  }
  return cur;
}

StackConfig desk_preset() {
  StackConfig cfg;
  cfg.strategy = Strategy::group;
  cfg.d = 32;
  cfg.blocks = {4, 2, 4, 2};
  cfg.depthwise_groups = 2;
  cfg.layerwise_groups = 0;
  // tanh here: twelve fused relu layers plateau on the synthetic task.
  cfg.dfm = DfmConfig{0.7, 2, Activation::tanh};
  return cfg;
}

StackConfig full_scale_preset() {
  StackConfig cfg;
  cfg.strategy = Strategy::group;
  cfg.d = 480;
  cfg.blocks = {6, 3, 6, 3, 6, 3, 6, 3};
  cfg.depthwise_groups = 2;
  cfg.layerwise_groups = 0;
  cfg.dfm = DfmConfig{0.7, 2, Activation::relu};
  return cfg;
}

}  // namespace ldgcn::nn
