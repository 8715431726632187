// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#include "ldgcn/seq2seq.hpp"

#include <algorithm>
#include <cmath>

namespace ldgcn::s2s {

Vocab::Vocab() {
  for (const char* t : {"<pad>", "<bos>", "<eos>", "<unk>"}) add(t);
}

int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_[token] = id;
  return id;
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size())
    throw VocabError("Vocab: id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

void init_decoder_params(ParamStore& store, int vocab_size, int embed_dim,
                         int hidden, int enc_width, Rng& rng) {
  const int x = embed_dim + enc_width;  // [embedding; context]
  store.create("dec.embed", glorot_uniform(vocab_size, embed_dim, rng));
  store.create("dec.attn.W", glorot_uniform(enc_width, hidden, rng));
  store.create("dec.gru.Wz", glorot_uniform(x, hidden, rng));
  store.create("dec.gru.Uz", glorot_uniform(hidden, hidden, rng));
  store.create("dec.gru.bz", Tensor(1, hidden));
  store.create("dec.gru.Wr", glorot_uniform(x, hidden, rng));
  store.create("dec.gru.Ur", glorot_uniform(hidden, hidden, rng));
  store.create("dec.gru.br", Tensor(1, hidden));
  store.create("dec.gru.Wh", glorot_uniform(x, hidden, rng));
  store.create("dec.gru.Uh", glorot_uniform(hidden, hidden, rng));
  store.create("dec.gru.bh", Tensor(1, hidden));
  store.create("dec.out.W", glorot_uniform(hidden, vocab_size, rng));
  store.create("dec.out.b", Tensor(1, vocab_size));
  store.create("dec.init.W", glorot_uniform(enc_width, hidden, rng));
  store.create("dec.init.b", Tensor(1, hidden));
}

DecoderParams bind_decoder_params(PassBinder& params) {
  DecoderParams p;
  p.embed = params("dec.embed");
  p.attn_proj = params("dec.attn.W");
  p.in_update = params("dec.gru.Wz");
  p.state_update = params("dec.gru.Uz");
  p.bias_update = params("dec.gru.bz");
  p.in_reset = params("dec.gru.Wr");
  p.state_reset = params("dec.gru.Ur");
  p.bias_reset = params("dec.gru.br");
  p.in_cand = params("dec.gru.Wh");
  p.state_cand = params("dec.gru.Uh");
  p.bias_cand = params("dec.gru.bh");
  p.out_proj = params("dec.out.W");
  p.out_bias = params("dec.out.b");
  p.init_proj = params("dec.init.W");
  p.init_bias = params("dec.init.b");
  return p;
}

Tensor embed(Tape& tape, const std::vector<int>& tokens,
             const Tensor& table) {
  return tape.gather_rows(table, tokens);
}

std::pair<Tensor, Tensor> attend(Tape& tape, const Tensor& state_hidden,
                                 const Tensor& node_reps,
                                 const Tensor& attn_proj) {
  Tensor projected = tape.matmul(node_reps, attn_proj);       // n x h
  Tensor scores = tape.matmul(state_hidden, tape.transpose(projected));
  Tensor weights = tape.softmax_rows(scores);                 // 1 x n
  Tensor context = tape.matmul(weights, node_reps);           // 1 x d
  return {context, weights};
}

DecoderState decoder_init(Tape& tape, const Tensor& node_reps,
                          const DecoderParams& p) {
  const int n = node_reps.rows();
  Tensor pool(1, n, 1.0 / n);
  Tensor mean = tape.matmul(tape.leaf(pool), node_reps);  // 1 x d
  DecoderState s;
  s.hidden = tape.tanh(
      tape.add_rowvec(tape.matmul(mean, p.init_proj), p.init_bias));
  s.context = tape.leaf(Tensor(1, node_reps.cols()));
  s.step = 0;
  return s;
}

StepResult decode_step(Tape& tape, const DecoderState& state, int prev_token,
                       const Tensor& node_reps, const DecoderParams& p) {
  auto [context, weights] = attend(tape, state.hidden, node_reps, p.attn_proj);
  (void)weights;
  Tensor x = tape.concat_cols({embed(tape, {prev_token}, p.embed), context});
  const Tensor& h = state.hidden;
  auto gate = [&](const Tensor& Wi, const Tensor& Ui, const Tensor& bi) {
    return tape.add_rowvec(
        tape.add(tape.matmul(x, Wi), tape.matmul(h, Ui)), bi);
  };
  Tensor z = tape.sigmoid(gate(p.in_update, p.state_update, p.bias_update));
  Tensor r = tape.sigmoid(gate(p.in_reset, p.state_reset, p.bias_reset));
  Tensor cand = tape.tanh(tape.add_rowvec(
      tape.add(tape.matmul(x, p.in_cand),
               tape.matmul(tape.mul_elementwise(r, h), p.state_cand)),
      p.bias_cand));
  // h' = (1 - z) . h + z . cand
  Tensor next = tape.add(h, tape.mul_elementwise(z, tape.sub(cand, h)));
  Tensor logits =
      tape.add_rowvec(tape.matmul(next, p.out_proj), p.out_bias);
  return {logits, DecoderState{next, context, state.step + 1}};
}

namespace {

std::vector<double> log_softmax_row(const Tensor& logits) {
  std::vector<double> out(logits.v.begin(), logits.v.end());
  double mx = out[0];
  for (double x : out) mx = std::max(mx, x);
  double z = 0.0;
  for (double x : out) z += std::exp(x - mx);
  double logz = mx + std::log(z);
  for (auto& x : out) x -= logz;
  return out;
}

int argmax_lowest(const Tensor& logits) {
  int best = 0;
  for (std::size_t i = 1; i < logits.v.size(); ++i)
    if (logits.v[i] > logits.v[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace

std::vector<int> greedy_decode(Tape& tape, const Tensor& node_reps,
                               const DecoderParams& p, int max_len) {
  if (max_len < 1) throw UsageError("greedy_decode: max_len must be >= 1");
  std::vector<int> out;
  DecoderState state = decoder_init(tape, node_reps, p);
  int prev = Vocab::bos;
  for (int t = 0; t < max_len; ++t) {
    StepResult step = decode_step(tape, state, prev, node_reps, p);
    int tok = argmax_lowest(step.logits);
    if (tok == Vocab::eos) break;
    out.push_back(tok);
    prev = tok;
    state = step.state;
  }
  return out;
}

std::vector<int> beam_decode(Tape& tape, const Tensor& node_reps,
                             const DecoderParams& p, int beam, int max_len) {
  if (beam < 1) throw UsageError("beam_decode: beam must be >= 1");
  if (max_len < 1) throw UsageError("beam_decode: max_len must be >= 1");

  struct Hyp {
    std::vector<int> tokens;
    DecoderState state;
    double logp = 0.0;
  };
  struct Done {
    std::vector<int> tokens;
    double logp = 0.0;
    int emitted = 0;  // tokens plus EOS when one was produced
    double score() const { return logp / emitted; }
  };

  std::vector<Hyp> live;
  live.push_back({{}, decoder_init(tape, node_reps, p), 0.0});
  std::vector<Done> finished;

  for (int t = 0; t < max_len && !live.empty(); ++t) {
    struct Cand {
      std::size_t hyp;
      int token;
      double logp;
      std::vector<int> tokens;
    };
    std::vector<Cand> cands;
    std::vector<StepResult> steps;
    steps.reserve(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      int prev = live[i].tokens.empty() ? Vocab::bos : live[i].tokens.back();
      steps.push_back(decode_step(tape, live[i].state, prev, node_reps, p));
      std::vector<double> lp = log_softmax_row(steps[i].logits);
      for (std::size_t tok = 0; tok < lp.size(); ++tok) {
        Cand c{i, static_cast<int>(tok), live[i].logp + lp[tok], {}};
        c.tokens = live[i].tokens;
        c.tokens.push_back(c.token);
        cands.push_back(std::move(c));
      }
    }
    // All candidates at a step share their length, so cumulative and
    // length-normalized ranking agree here.
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Cand& a, const Cand& b) {
                       if (a.logp != b.logp) return a.logp > b.logp;
                       return a.tokens < b.tokens;
                     });
    // The top `beam` expansions survive; an EOS expansion consumes its slot
    // and retires, so beam = 1 follows exactly the greedy path.
    std::vector<Hyp> next;
    int selected = 0;
    for (const auto& c : cands) {
      if (selected >= beam) break;
      ++selected;
      if (c.token == Vocab::eos)
        finished.push_back({live[c.hyp].tokens, c.logp, t + 1});
      else
        next.push_back({c.tokens, steps[c.hyp].state, c.logp});
    }
    live = std::move(next);
  }
  for (const auto& h : live)
    finished.push_back({h.tokens, h.logp, max_len});

  if (finished.empty()) return {};
  const Done* best = &finished[0];
  for (const auto& d : finished) {
    if (d.score() > best->score() ||
        (d.score() == best->score() && d.tokens < best->tokens))
      best = &d;
  }
  return best->tokens;
}

BleuAccumulator::BleuAccumulator(int max_n)
    : max_n_(max_n), match_(max_n, 0), total_(max_n, 0) {
  if (max_n < 1) throw UsageError("BleuAccumulator: max_n must be >= 1");
}

namespace {

std::vector<int> strip_pad(const std::vector<int>& seq) {
  std::vector<int> out;
  out.reserve(seq.size());
  for (int t : seq)
    if (t != Vocab::pad) out.push_back(t);
  return out;
}

std::map<std::vector<int>, std::uint64_t> ngram_counts(
    const std::vector<int>& seq, int n) {
  std::map<std::vector<int>, std::uint64_t> counts;
  if (static_cast<int>(seq.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i)
    ++counts[std::vector<int>(seq.begin() + i, seq.begin() + i + n)];
  return counts;
}

}  // namespace

void BleuAccumulator::add(const std::vector<int>& candidate,
                          const std::vector<std::vector<int>>& references) {
  if (references.empty())
    throw UsageError("bleu: at least one reference required");
  std::vector<int> cand = strip_pad(candidate);
  std::vector<std::vector<int>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(strip_pad(r));

  cand_len_ += cand.size();
  // Closest reference length; ties prefer the shorter.
  std::uint64_t best_len = refs[0].size();
  for (const auto& r : refs) {
    auto dist = [&](std::uint64_t len) {
      return len > cand.size() ? len - cand.size() : cand.size() - len;
    };
    if (dist(r.size()) < dist(best_len) ||
        (dist(r.size()) == dist(best_len) && r.size() < best_len))
      best_len = r.size();
  }
  ref_len_ += best_len;

  for (int n = 1; n <= max_n_; ++n) {
    auto cand_counts = ngram_counts(cand, n);
    std::map<std::vector<int>, std::uint64_t> max_ref;
    for (const auto& r : refs)
      for (const auto& [gram, c] : ngram_counts(r, n))
        max_ref[gram] = std::max(max_ref[gram], c);
    for (const auto& [gram, c] : cand_counts) {
      total_[n - 1] += c;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) match_[n - 1] += std::min(c, it->second);
    }
  }
}

double BleuAccumulator::precision(int n) const {
  if (n < 1 || n > max_n_ || total_[n - 1] == 0) return -1.0;
  return static_cast<double>(match_[n - 1]) /
         static_cast<double>(total_[n - 1]);
}

double BleuAccumulator::score() const {
  if (cand_len_ == 0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n_; ++n) {
    if (total_[n - 1] == 0) continue;  // no n-grams of this order
    double m = static_cast<double>(match_[n - 1]);
    double t = static_cast<double>(total_[n - 1]);
    if (m == 0.0) {
      if (n == 1) return 0.0;
      m += 1.0;  // add-one smoothing for higher orders
      t += 1.0;
    }
    log_sum += std::log(m / t);
    ++orders;
  }
  if (orders == 0) return 0.0;
  double geo = std::exp(log_sum / orders);
  double bp = cand_len_ >= ref_len_
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len_) /
                                       static_cast<double>(cand_len_));
  return bp * geo;
}

double bleu(const std::vector<int>& candidate,
            const std::vector<std::vector<int>>& references, int max_n) {
  BleuAccumulator acc(max_n);
  acc.add(candidate, references);
  return acc.score();
}

}  // namespace ldgcn::s2s
