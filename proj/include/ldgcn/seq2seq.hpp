// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ldgcn/optim.hpp"
#include "ldgcn/tape.hpp"

namespace ldgcn::s2s {

// Token table with fixed reserved slots.
class Vocab {
 public:
  static constexpr int pad = 0;
  static constexpr int bos = 1;
  static constexpr int eos = 2;
  static constexpr int unk = 3;

  Vocab();
  int add(const std::string& token);     // idempotent
  int id(const std::string& token) const;  // unk when absent
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

struct DecoderState {
  Tensor hidden;   // 1 x h
  Tensor context;  // 1 x d, last attention context
  int step = 0;
};

// One pass's bound decoder parameters.
struct DecoderParams {
  Tensor embed;        // V x e
  Tensor attn_proj;    // d x h
  Tensor in_update, state_update, bias_update;
  Tensor in_reset, state_reset, bias_reset;
  Tensor in_cand, state_cand, bias_cand;
  Tensor out_proj, out_bias;    // h x V, 1 x V
  Tensor init_proj, init_bias;  // d x h, 1 x h
};

void init_decoder_params(ParamStore& store, int vocab_size, int embed_dim,
                         int hidden, int enc_width, Rng& rng);
DecoderParams bind_decoder_params(PassBinder& params);

// Row lookup of token embeddings; out-of-range ids throw VocabError.
Tensor embed(Tape& tape, const std::vector<int>& tokens, const Tensor& table);

// Dot-product attention: scores s_i = state . (nodeReps_i W), weights =
// softmax(s), context = weights . nodeReps. Returns (context, weights).
std::pair<Tensor, Tensor> attend(Tape& tape, const Tensor& state_hidden,
                                 const Tensor& node_reps,
                                 const Tensor& attn_proj);

DecoderState decoder_init(Tape& tape, const Tensor& node_reps,
                          const DecoderParams& p);

struct StepResult {
  Tensor logits;  // 1 x V
  DecoderState state;
};

// Gated recurrent update on [embed(prev); context], then projection to
// vocabulary logits.
StepResult decode_step(Tape& tape, const DecoderState& state, int prev_token,
                       const Tensor& node_reps, const DecoderParams& p);

// Argmax per step, ties broken by lowest index; stops at EOS or max_len.
// The returned body excludes EOS.
std::vector<int> greedy_decode(Tape& tape, const Tensor& node_reps,
                               const DecoderParams& p, int max_len);

// Length-normalized beam search. Each step keeps the top `beam` expansions
// by cumulative log-probability (EOS expansions retire to the finished
// pool); the best finished hypothesis by (score, then lexicographic token
// order) wins. beam = 1 coincides with greedy_decode.
std::vector<int> beam_decode(Tape& tape, const Tensor& node_reps,
                             const DecoderParams& p, int beam, int max_len);

// Corpus-level BLEU accumulator: modified n-gram precisions with clipped
// counts, add-one smoothing on zero counts for n >= 2, brevity penalty from
// the closest reference length. PAD tokens are ignored.
class BleuAccumulator {
 public:
  explicit BleuAccumulator(int max_n = 4);
  void add(const std::vector<int>& candidate,
           const std::vector<std::vector<int>>& references);
  double score() const;
  // Unsmoothed clipped precision of order n (1-based); -1 when no n-grams.
  double precision(int n) const;

 private:
  int max_n_;
  std::vector<std::uint64_t> match_, total_;
  std::uint64_t cand_len_ = 0;
  std::uint64_t ref_len_ = 0;
};

// Sentence-level convenience wrapper; in [0, 1].
double bleu(const std::vector<int>& candidate,
            const std::vector<std::vector<int>>& references, int max_n = 4);

}  // namespace ldgcn::s2s
