// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldgcn/dataset.hpp"
#include "ldgcn/stacks.hpp"

namespace ldgcn::cli {

// Full run settings. Every piece of randomness flows from `seed`, so a fixed
// config file gives bit-identical runs.
struct RunConfig {
  nn::StackConfig stack = nn::desk_preset();
  double lr = 1e-3;
  double clip_norm = 5.0;  // global gradient-norm clip; 0 disables
  int epochs = 300;
  std::uint64_t seed = 1;
  int beam = 1;
  int decoder_hidden = 64;
  int decoder_embed = 32;
  int max_decode_len = 48;
  std::string data;
  std::string ckpt;
  std::string log;  // defaults to ckpt + ".log"

  std::string log_path() const { return log.empty() ? ckpt + ".log" : log; }
};

// Flat `key = value` file with '#' comments; unknown keys are errors.
RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text);
// The meta sidecar written next to checkpoints; same key = value syntax.
std::string render_run_config(const RunConfig& cfg);

// Random tree-shaped graph over the 50-concept vocabulary with up to
// `max_reentrancies` extra edges; every node is reachable from the root
// along edge direction.
amr::AmrGraph random_graph(Rng& rng, int max_nodes, int max_reentrancies = 2);

// Writes `count` random tree-shaped PENMAN graphs (up to 2 re-entrancies)
// over a 50-concept vocabulary, each paired with its depth-first concept
// linearization as the target sentence. Same seed, identical bytes.
void gen_synthetic(std::uint64_t seed, int count, int max_nodes,
                   const std::string& out_path);
std::string gen_synthetic_text(std::uint64_t seed, int count, int max_nodes);

// Model state shared by train/evaluate: vocabularies plus every parameter.
struct ModelContext {
  RunConfig cfg;
  s2s::Vocab src_vocab;
  s2s::Vocab tgt_vocab;
  ParamStore params;
};

// Initializes parameters from cfg.seed with vocabularies built from records.
ModelContext build_model(const RunConfig& cfg,
                         const std::vector<Record>& records);

// Encoder node representations for one record.
Tensor model_node_reps(Tape& tape, PassBinder& params, const ModelContext& m,
                       const Record& rec, Rng* dropout_rng = nullptr);

struct TeacherForcedLoss {
  Tensor loss;  // scalar, mean over predicted tokens
  int correct = 0;
  int total = 0;
};

// Teacher-forced cross entropy over target tokens plus EOS.
TeacherForcedLoss model_teacher_forced(Tape& tape, PassBinder& params,
                                       const ModelContext& m,
                                       const Record& rec,
                                       Rng* dropout_rng = nullptr);

// Central-difference check of the full encoder+decoder loss over every
// parameter coordinate.
double model_grad_check(const ModelContext& m, const Record& rec, double eps);

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double token_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  std::string log_text;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
};

// Teacher-forced training with Adam; writes the metrics log, the checkpoint,
// and its .meta/.vocab sidecars. Deterministic for a fixed seed. Non-finite
// losses abort with the epoch and record id.
TrainResult train(const RunConfig& cfg);

struct EvalResult {
  double token_accuracy = 0.0;
  double corpus_bleu = 0.0;
  int records = 0;
};

// Decodes every record of `data` with the checkpointed model.
EvalResult evaluate(const std::string& ckpt, const std::string& data,
                    int beam);

struct BenchRow {
  int nodes = 0;
  int edges = 0;
  int highest_order = 0;
  std::uint64_t sparse_macs = 0;
  double wall_ms = 0.0;
};

// One DFM layer per edge-count size; verifies the instrumented sparse
// multiply-add count equals sum_{k=1..K} k*m*d exactly.
std::vector<BenchRow> bench_scaling(const std::vector<int>& sizes, int K,
                                    int d, int repeats);

// Aligned text plus tab-separated machine-readable rows.
std::string render_param_report(const nn::ParamReport& report);

// Sidecar helpers (also used by tests).
void save_vocab_sidecar(const std::string& path, const s2s::Vocab& src,
                        const s2s::Vocab& tgt);
std::pair<s2s::Vocab, s2s::Vocab> load_vocab_sidecar(const std::string& path);

}  // namespace ldgcn::cli
