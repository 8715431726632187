// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#include "ldgcn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace ldgcn::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ','))
    if (!trim(cur).empty()) out.push_back(std::stoi(trim(cur)));
  return out;
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config: key '" + key + "' expects true/false, got '" +
                    s + "'");
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig cfg;
  bool saw_blocks = false, saw_layers = false;
  int single_sub_block = 0;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "strategy") {
        cfg.stack.strategy = nn::strategy_from_string(value);
      } else if (key == "blocks") {
        cfg.stack.blocks = parse_int_list(value);
        saw_blocks = true;
      } else if (key == "L") {
        single_sub_block = std::stoi(value);
        saw_layers = true;
      } else if (key == "d") {
        cfg.stack.d = std::stoi(value);
      } else if (key == "N") {
        cfg.stack.depthwise_groups = std::stoi(value);
      } else if (key == "M") {
        cfg.stack.layerwise_groups = std::stoi(value);
      } else if (key == "lambda") {
        cfg.stack.dfm.lambda = std::stod(value);
      } else if (key == "K") {
        cfg.stack.dfm.highest_order = std::stoi(value);
      } else if (key == "activation") {
        cfg.stack.dfm.activation = nn::activation_from_string(value);
      } else if (key == "dfm") {
        cfg.stack.use_dfm = parse_bool(value, key);
      } else if (key == "dropout") {
        cfg.stack.dropout = std::stod(value);
      } else if (key == "lr") {
        cfg.lr = std::stod(value);
      } else if (key == "clip_norm") {
        cfg.clip_norm = std::stod(value);
      } else if (key == "epochs") {
        cfg.epochs = std::stoi(value);
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else if (key == "beam") {
        cfg.beam = std::stoi(value);
      } else if (key == "decoder_hidden") {
        cfg.decoder_hidden = std::stoi(value);
      } else if (key == "decoder_embed") {
        cfg.decoder_embed = std::stoi(value);
      } else if (key == "max_decode_len") {
        cfg.max_decode_len = std::stoi(value);
      } else if (key == "data") {
        cfg.data = value;
      } else if (key == "ckpt") {
        cfg.ckpt = value;
      } else if (key == "log") {
        cfg.log = value;
      } else {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": bad value for '" + key + "'");
    }
  }
  if (saw_blocks && saw_layers)
    throw ConfigError("config: 'blocks' and 'L' are mutually exclusive");
  if (saw_layers) cfg.stack.blocks = {single_sub_block};
  return cfg;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_run_config_text(buf.str());
}

std::string render_run_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "strategy = " << nn::to_string(cfg.stack.strategy) << "\n";
  os << "blocks = ";
  for (std::size_t i = 0; i < cfg.stack.blocks.size(); ++i)
    os << (i ? "," : "") << cfg.stack.blocks[i];
  os << "\n";
  os << "d = " << cfg.stack.d << "\n";
  os << "N = " << cfg.stack.depthwise_groups << "\n";
  os << "M = " << cfg.stack.layerwise_groups << "\n";
  os << "lambda = " << fmt_double(cfg.stack.dfm.lambda) << "\n";
  os << "K = " << cfg.stack.dfm.highest_order << "\n";
  os << "activation = " << nn::to_string(cfg.stack.dfm.activation) << "\n";
  os << "dfm = " << (cfg.stack.use_dfm ? "true" : "false") << "\n";
  os << "dropout = " << fmt_double(cfg.stack.dropout) << "\n";
  os << "lr = " << fmt_double(cfg.lr) << "\n";
  os << "clip_norm = " << fmt_double(cfg.clip_norm) << "\n";
  os << "epochs = " << cfg.epochs << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "beam = " << cfg.beam << "\n";
  os << "decoder_hidden = " << cfg.decoder_hidden << "\n";
  os << "decoder_embed = " << cfg.decoder_embed << "\n";
  os << "max_decode_len = " << cfg.max_decode_len << "\n";
  return os.str();
}

namespace {

const char* kConcepts[50] = {
    "alpha",  "bravo",   "charlie", "delta",  "echo",    "foxtrot", "golf",
    "hotel",  "india",   "juliet",  "kilo",   "lima",    "mike",    "november",
    "oscar",  "papa",    "quebec",  "romeo",  "sierra",  "tango",   "uniform",
    "victor", "whiskey", "xray",    "yankee", "zulu",    "amber",   "birch",
    "cedar",  "dune",    "ember",   "fjord",  "glade",   "harbor",  "isle",
    "jade",   "knoll",   "lagoon",  "meadow", "nectar",  "onyx",    "pebble",
    "quarry", "reef",    "slate",   "thicket", "umber",  "vale",    "willow",
    "zephyr"};

const char* kRoles[8] = {":ARG0", ":ARG1",     ":ARG2",  ":ARG3",
                         ":mod",  ":time",     ":location", ":manner"};

}  // namespace

amr::AmrGraph random_graph(Rng& rng, int max_nodes, int max_reentrancies) {
  if (max_nodes < 1) throw UsageError("random_graph: max_nodes must be >= 1");
  amr::AmrGraph g;
  const int n = 1 + rng.uniform_int(max_nodes);
  std::map<std::string, int> name_uses;
  for (int i = 0; i < n; ++i) {
    std::string label = kConcepts[rng.uniform_int(50)];
    std::string base(1, label[0]);
    int uses = ++name_uses[base];
    std::string var = uses == 1 ? base : base + std::to_string(uses);
    g.nodes.push_back({var, label, amr::NodeKind::concept_node});
  }
  for (int i = 1; i < n; ++i)
    g.edges.push_back({rng.uniform_int(i), i, kRoles[rng.uniform_int(8)]});
  if (n >= 2 && max_reentrancies > 0) {
    int extra = rng.uniform_int(max_reentrancies + 1);
    for (int r = 0; r < extra; ++r) {
      int src = rng.uniform_int(n);
      int tgt = rng.uniform_int(n);
      if (src == tgt) continue;
      bool dup = false;
      for (const auto& e : g.edges)
        if (e.src == src && e.tgt == tgt) dup = true;
      if (dup) continue;
      g.edges.push_back({src, tgt, kRoles[rng.uniform_int(8)]});
    }
  }
  g.root = 0;
  return g;
}

std::string gen_synthetic_text(std::uint64_t seed, int count, int max_nodes) {
  if (count < 1) throw UsageError("gen_synthetic: count must be >= 1");
  Rng rng(seed);
  std::ostringstream os;
  for (int i = 0; i < count; ++i) {
    amr::AmrGraph g = random_graph(rng, max_nodes, 2);
    os << amr::serialize_penman(g) << '\t';
    std::vector<std::string> target = dfs_concepts(g);
    for (std::size_t j = 0; j < target.size(); ++j)
      os << (j ? " " : "") << target[j];
    os << '\n';
    if (i + 1 < count) os << '\n';
  }
  return os.str();
}

void gen_synthetic(std::uint64_t seed, int count, int max_nodes,
                   const std::string& out_path) {
  std::string text = gen_synthetic_text(seed, count, max_nodes);
  std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open output file: " + out_path);
  f << text;
  if (!f) throw IoError("write failed: " + out_path);
}

ModelContext build_model(const RunConfig& cfg,
                         const std::vector<Record>& records) {
  cfg.stack.validate();
  ModelContext m;
  m.cfg = cfg;
  m.src_vocab = build_source_vocab(records);
  m.tgt_vocab = build_target_vocab(records);
  Rng rng(cfg.seed);
  m.params.create("src.embed",
                  glorot_uniform(m.src_vocab.size(), cfg.stack.d, rng));
  nn::init_encoder_params(m.params, cfg.stack, rng);
  s2s::init_decoder_params(m.params, m.tgt_vocab.size(), cfg.decoder_embed,
                           cfg.decoder_hidden, cfg.stack.d, rng);
  return m;
}

Tensor model_node_reps(Tape& tape, PassBinder& params, const ModelContext& m,
                       const Record& rec, Rng* dropout_rng) {
  std::vector<int> ids;
  ids.reserve(rec.graph.nodes.size());
  for (const auto& node : rec.graph.nodes)
    ids.push_back(m.src_vocab.id(node.label));
  Tensor h0 = tape.gather_rows(params("src.embed"), ids);
  amr::SparseAdjacency adj = amr::build_adjacency(rec.graph);
  return nn::encoder_forward(tape, params, h0, adj, m.cfg.stack, dropout_rng);
}

namespace {

TeacherForcedLoss sequence_loss(Tape& tape, const Tensor& reps,
                                const s2s::DecoderParams& dec,
                                const std::vector<int>& target_ids) {
  std::vector<int> targets = target_ids;
  targets.push_back(s2s::Vocab::eos);
  TeacherForcedLoss out;
  s2s::DecoderState state = s2s::decoder_init(tape, reps, dec);
  int prev = s2s::Vocab::bos;
  Tensor total;
  bool have_total = false;
  for (int target : targets) {
    s2s::StepResult step = s2s::decode_step(tape, state, prev, reps, dec);
    Tensor step_loss = tape.cross_entropy_rows(step.logits, {target});
    total = have_total ? tape.add(total, step_loss) : step_loss;
    have_total = true;
    int best = 0;
    for (std::size_t i = 1; i < step.logits.v.size(); ++i)
      if (step.logits.v[i] > step.logits.v[best]) best = static_cast<int>(i);
    if (best == target) ++out.correct;
    ++out.total;
    prev = target;
    state = step.state;
  }
  out.loss = tape.scalar_mul(total, 1.0 / static_cast<double>(targets.size()));
  return out;
}

std::vector<int> target_ids_of(const ModelContext& m, const Record& rec) {
  std::vector<int> ids;
  ids.reserve(rec.target.size());
  for (const auto& tok : rec.target) ids.push_back(m.tgt_vocab.id(tok));
  return ids;
}

}  // namespace

TeacherForcedLoss model_teacher_forced(Tape& tape, PassBinder& params,
                                       const ModelContext& m,
                                       const Record& rec, Rng* dropout_rng) {
  Tensor reps = model_node_reps(tape, params, m, rec, dropout_rng);
  return sequence_loss(tape, reps, s2s::bind_decoder_params(params),
                       target_ids_of(m, rec));
}

double model_grad_check(const ModelContext& m, const Record& rec, double eps) {
  std::vector<std::string> names;
  std::vector<Tensor> values;
  for (const auto& [name, tensor] : m.params.items()) {
    names.push_back(name);
    values.push_back(tensor);
  }
  auto f = [&](Tape& tape, const std::vector<Tensor>& inputs) {
    PassBinder binder(tape, names, inputs);
    return model_teacher_forced(tape, binder, m, rec, nullptr).loss;
  };
  return grad_check(f, values, eps);
}

TrainResult train(const RunConfig& cfg) {
  if (cfg.epochs < 0) throw ConfigError("train: epochs must be >= 0");
  std::vector<Record> records = read_records(cfg.data);
  if (records.empty()) throw UsageError("train: dataset is empty: " + cfg.data);
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].target.empty())
      throw UsageError("train: record " + std::to_string(i + 1) +
                       " has no target sentence");
  ModelContext m = build_model(cfg, records);
  Optimizer opt({cfg.lr, 0.9, 0.999, 1e-8});
  Rng dropout_rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  const bool use_dropout = cfg.stack.dropout > 0.0;

  TrainResult result;
  std::ostringstream log;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    int correct = 0, total = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      Tape tape;
      PassBinder binder(tape, m.params);
      TeacherForcedLoss tf = model_teacher_forced(
          tape, binder, m, records[i], use_dropout ? &dropout_rng : nullptr);
      double loss = tf.loss.v[0];
      if (!std::isfinite(loss))
        throw OptimError("train: non-finite loss at epoch " +
                         std::to_string(epoch) + ", example " +
                         std::to_string(i + 1));
      tape.backward(tf.loss);
      std::map<std::string, Tensor> grads = binder.grads();
      if (cfg.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& [name, g] : grads)
          for (double x : g.v) sq += x * x;
        double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm) {
          double scale = cfg.clip_norm / norm;
          for (auto& [name, g] : grads)
            for (double& x : g.v) x *= scale;
        }
      }
      opt.step(m.params, grads);
      loss_sum += loss;
      correct += tf.correct;
      total += tf.total;
    }
    EpochStats stats{epoch, loss_sum / static_cast<double>(records.size()),
                     static_cast<double>(correct) / total};
    result.epochs.push_back(stats);
    log << stats.epoch << '\t' << fmt_double(stats.loss) << '\t'
        << fmt_double(stats.token_accuracy) << '\n';
  }
  result.log_text = log.str();
  if (!result.epochs.empty()) {
    result.final_loss = result.epochs.back().loss;
    result.final_accuracy = result.epochs.back().token_accuracy;
  }

  if (!cfg.ckpt.empty()) {
    m.params.save(cfg.ckpt);
    std::ofstream meta(cfg.ckpt + ".meta", std::ios::trunc);
    if (!meta) throw IoError("cannot write meta: " + cfg.ckpt + ".meta");
    meta << render_run_config(cfg);
    save_vocab_sidecar(cfg.ckpt + ".vocab", m.src_vocab, m.tgt_vocab);
  }
  std::ofstream logf(cfg.log_path(), std::ios::trunc);
  if (!logf) throw IoError("cannot write log: " + cfg.log_path());
  logf << result.log_text;
  return result;
}

void save_vocab_sidecar(const std::string& path, const s2s::Vocab& src,
                        const s2s::Vocab& tgt) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write vocab: " + path);
  os << "src " << src.size() << "\n";
  for (const auto& t : src.tokens()) os << t << "\n";
  os << "tgt " << tgt.size() << "\n";
  for (const auto& t : tgt.tokens()) os << t << "\n";
}

std::pair<s2s::Vocab, s2s::Vocab> load_vocab_sidecar(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open vocab: " + path);
  auto read_section = [&](const std::string& tag) {
    std::string head;
    int count = 0;
    if (!(is >> head >> count) || head != tag)
      throw IoError("vocab sidecar: malformed section '" + tag + "'");
    std::string skip;
    std::getline(is, skip);
    s2s::Vocab v;
    for (int i = 0; i < count; ++i) {
      std::string tok;
      if (!std::getline(is, tok))
        throw IoError("vocab sidecar: truncated section '" + tag + "'");
      if (i < 4) continue;  // reserved slots are fixed by construction
      v.add(tok);
    }
    return v;
  };
  s2s::Vocab src = read_section("src");
  s2s::Vocab tgt = read_section("tgt");
  return {src, tgt};
}

EvalResult evaluate(const std::string& ckpt, const std::string& data,
                    int beam) {
  if (beam < 1) throw UsageError("evaluate: beam must be >= 1");
  std::vector<Record> records = read_records(data);
  if (records.empty()) throw EvalError("evaluate: empty dataset: " + data);
  ModelContext m;
  m.params = ParamStore::load(ckpt);
  m.cfg = parse_run_config(ckpt + ".meta");
  auto vocabs = load_vocab_sidecar(ckpt + ".vocab");
  m.src_vocab = vocabs.first;
  m.tgt_vocab = vocabs.second;
  if (m.params.at("src.embed").rows() != m.src_vocab.size() ||
      m.params.at("dec.embed").rows() != m.tgt_vocab.size())
    throw EvalError("evaluate: vocab size does not match checkpoint");

  s2s::BleuAccumulator bleu_acc;
  int correct = 0, total = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& rec = records[i];
    if (rec.target.empty())
      throw EvalError("evaluate: record " + std::to_string(i + 1) +
                      " has no target sentence");
    Tape tape;
    PassBinder binder(tape, m.params);
    Tensor reps = model_node_reps(tape, binder, m, rec, nullptr);
    s2s::DecoderParams dec = s2s::bind_decoder_params(binder);
    TeacherForcedLoss tf =
        sequence_loss(tape, reps, dec, target_ids_of(m, rec));
    correct += tf.correct;
    total += tf.total;
    std::vector<int> decoded =
        s2s::beam_decode(tape, reps, dec, beam, m.cfg.max_decode_len);
    bleu_acc.add(decoded, {target_ids_of(m, rec)});
  }
  EvalResult out;
  out.token_accuracy = static_cast<double>(correct) / total;
  out.corpus_bleu = bleu_acc.score();
  out.records = static_cast<int>(records.size());
  return out;
}

std::vector<BenchRow> bench_scaling(const std::vector<int>& sizes, int K,
                                    int d, int repeats) {
  if (sizes.empty()) throw UsageError("bench_scaling: no sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1])
      throw UsageError("bench_scaling: sizes must be ascending");
  if (repeats < 1) throw UsageError("bench_scaling: repeats must be >= 1");

  std::vector<BenchRow> rows;
  Rng rng(7);
  for (int m : sizes) {
    // A tree with m edges and m+1 nodes; adjacency kept bare so nnz == m.
    amr::AmrGraph g;
    const int n = m + 1;
    for (int i = 0; i < n; ++i)
      g.nodes.push_back({"n" + std::to_string(i),
                         kConcepts[rng.uniform_int(50)],
                         amr::NodeKind::concept_node});
    for (int i = 1; i < n; ++i)
      g.edges.push_back({rng.uniform_int(i), i, kRoles[rng.uniform_int(8)]});
    amr::SparseAdjacency adj =
        amr::build_adjacency(g, {false, false, false});
    if (static_cast<int>(adj.nnz()) != m)
      throw UsageError("bench_scaling: unexpected edge collapse");

    Tensor h = glorot_uniform(n, d, rng);
    nn::GcnLayerParams params{glorot_uniform(d, d, rng), Tensor(1, d)};
    nn::DfmConfig dfm{0.7, K, nn::Activation::relu};

    std::uint64_t macs = 0;
    std::vector<double> times;
    for (int r = 0; r < repeats; ++r) {
      amr::reset_mac_counters();
      auto t0 = std::chrono::steady_clock::now();
      Tape tape;
      nn::dfm_layer(tape, tape.leaf(h), adj, params, dfm);
      auto t1 = std::chrono::steady_clock::now();
      macs = amr::mac_counters().sparse;
      times.push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::uint64_t expected = 0;
    for (int k = 1; k <= K; ++k)
      expected += static_cast<std::uint64_t>(k) * m * d;
    if (macs != expected)
      throw std::runtime_error(
          "bench_scaling: sparse multiply-add count " + std::to_string(macs) +
          " != expected " + std::to_string(expected));
    std::sort(times.begin(), times.end());
    rows.push_back({n, m, K, macs, times[times.size() / 2]});
  }
  return rows;
}

std::string render_param_report(const nn::ParamReport& report) {
  std::ostringstream os;
  os << "strategy: " << nn::to_string(report.strategy) << "\n";
  auto shape_str = [](const nn::ParamReport::Row& r) {
    std::string s = std::to_string(r.rows) + "x" + std::to_string(r.cols);
    if (r.groups != 1) s += " x" + std::to_string(r.groups);
    return s;
  };
  os << "  convolution parameters:\n";
  for (const auto& r : report.conv_rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "    %-18s %-12s %10llu\n",
                  r.name.c_str(), shape_str(r).c_str(),
                  static_cast<unsigned long long>(r.count()));
    os << line;
  }
  if (!report.aux_rows.empty()) {
    os << "  auxiliary parameters:\n";
    for (const auto& r : report.aux_rows) {
      char line[128];
      std::snprintf(line, sizeof(line), "    %-18s %-12s %10llu\n",
                    r.name.c_str(), shape_str(r).c_str(),
                    static_cast<unsigned long long>(r.count()));
      os << line;
    }
  }
  os << "  conv total:  " << report.conv_total() << "\n";
  os << "  aux total:   " << report.aux_total() << "\n";
  os << "  grand total: " << report.grand_total() << "\n";
  os << "rows:\n";
  for (const auto& r : report.conv_rows)
    os << nn::to_string(report.strategy) << '\t' << r.name << '\t'
       << shape_str(r) << '\t' << r.count() << '\t' << report.grand_total()
       << '\n';
  for (const auto& r : report.aux_rows)
    os << nn::to_string(report.strategy) << '\t' << r.name << '\t'
       << shape_str(r) << '\t' << r.count() << '\t' << report.grand_total()
       << '\n';
  return os.str();
}

}  // namespace ldgcn::cli
