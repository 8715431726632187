// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ldgcn/harness.hpp"

using namespace ldgcn;
using namespace ldgcn::cli;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

RunConfig tiny_train_config(const std::string& data, const std::string& ckpt) {
  RunConfig cfg;
  cfg.stack = nn::desk_preset();
  cfg.stack.d = 8;
  cfg.stack.blocks = {2, 2};
  cfg.decoder_hidden = 16;
  cfg.decoder_embed = 8;
  cfg.epochs = 10;
  cfg.lr = 0.003;
  cfg.seed = 4;
  cfg.data = data;
  cfg.ckpt = ckpt;
  return cfg;
}

}  // namespace

TEST_CASE("gen_synthetic: identical bytes for identical seeds") {
  std::string a = tmp_path("ldgcn_gen_a.txt");
  std::string b = tmp_path("ldgcn_gen_b.txt");
  gen_synthetic(11, 25, 8, a);
  gen_synthetic(11, 25, 8, b);
  CHECK(slurp(a) == slurp(b));
  gen_synthetic(12, 25, 8, b);
  CHECK(slurp(a) != slurp(b));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST_CASE("gen_synthetic: one record parses back") {
  std::string path = tmp_path("ldgcn_gen_one.txt");
  gen_synthetic(1, 1, 8, path);
  auto records = read_records(path);
  REQUIRE(records.size() == 1);
  CHECK(!records[0].target.empty());
  std::filesystem::remove(path);
}

TEST_CASE("gen_synthetic: 200 records parse, connect, and linearize") {
  std::string path = tmp_path("ldgcn_gen_200.txt");
  gen_synthetic(3, 200, 8, path);
  auto records = read_records(path);
  REQUIRE(records.size() == 200);
  for (const auto& rec : records) {
    rec.graph.validate();  // includes connectivity from the root
    CHECK(rec.target == dfs_concepts(rec.graph));
    CHECK(rec.graph.nodes.size() <= 8);
  }
  std::filesystem::remove(path);
}

TEST_CASE("gen_synthetic: output re-parses across 10,000 seeds") {
  for (std::uint64_t seed = 1; seed <= 10000; ++seed) {
    auto records = parse_records_text(gen_synthetic_text(seed, 1, 8));
    REQUIRE(records.size() == 1);
    records[0].graph.validate();
    REQUIRE(!records[0].target.empty());
  }
}

TEST_CASE("train: loss decreases monotonically over the first 50 steps") {
  // 5 epochs over a 10-example dataset = 50 optimizer steps.
  std::string data = tmp_path("ldgcn_mono_data.txt");
  std::string ckpt = tmp_path("ldgcn_mono.ckpt");
  gen_synthetic(5, 10, 7, data);
  RunConfig cfg;
  cfg.stack = nn::desk_preset();
  cfg.lr = 0.003;
  cfg.epochs = 5;
  cfg.seed = 3;
  cfg.data = data;
  cfg.ckpt = ckpt;
  TrainResult r = train(cfg);
  for (std::size_t i = 1; i < r.epochs.size(); ++i)
    CHECK(r.epochs[i].loss < r.epochs[i - 1].loss);
  for (const auto& p : {ckpt, ckpt + ".meta", ckpt + ".vocab", ckpt + ".log",
                        data})
    std::filesystem::remove(p);
}

TEST_CASE("config parsing") {
  SUBCASE("round trip through render") {
    RunConfig cfg;
    cfg.stack = nn::desk_preset();
    cfg.stack.dfm.lambda = 0.55;
    cfg.lr = 0.0025;
    cfg.seed = 17;
    RunConfig again = parse_run_config_text(render_run_config(cfg));
    CHECK(again.stack.dfm.lambda == cfg.stack.dfm.lambda);
    CHECK(again.lr == cfg.lr);
    CHECK(again.seed == cfg.seed);
    CHECK(again.stack.blocks == cfg.stack.blocks);
  }
  SUBCASE("unknown keys are errors") {
    CHECK_THROWS_AS(parse_run_config_text("stratgy = group\n"), ConfigError);
  }
  SUBCASE("comments and blank lines are ignored") {
    RunConfig cfg = parse_run_config_text(
        "# a comment\n\n  d = 16  # trailing comment\nN = 1\n");
    CHECK(cfg.stack.d == 16);
    CHECK(cfg.stack.depthwise_groups == 1);
  }
  SUBCASE("L expands to a single sub-block") {
    RunConfig cfg = parse_run_config_text("L = 6\nd = 360\nstrategy = dense\n");
    CHECK(cfg.stack.blocks == std::vector<int>{6});
  }
  SUBCASE("L and blocks are mutually exclusive") {
    CHECK_THROWS_AS(parse_run_config_text("L = 6\nblocks = 3,3\n"),
                    ConfigError);
  }
  SUBCASE("bad values carry the key name") {
    CHECK_THROWS_AS(parse_run_config_text("epochs = soon\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config_text("dfm = maybe\n"), ConfigError);
  }
}

TEST_CASE("train: epochs=0 writes an initial checkpoint and no log lines") {
  std::string data = tmp_path("ldgcn_e0_data.txt");
  std::string ckpt = tmp_path("ldgcn_e0.ckpt");
  gen_synthetic(5, 4, 6, data);
  RunConfig cfg = tiny_train_config(data, ckpt);
  cfg.epochs = 0;
  TrainResult result = train(cfg);
  CHECK(result.epochs.empty());
  CHECK(result.log_text.empty());
  CHECK(std::filesystem::exists(ckpt));
  ParamStore store = ParamStore::load(ckpt);
  CHECK(store.contains("src.embed"));
  CHECK(store.contains("enc.s0.l1.g0.W"));
  for (const auto& p :
       {ckpt, ckpt + ".meta", ckpt + ".vocab", ckpt + ".log", data})
    std::filesystem::remove(p);
}

TEST_CASE("train: identical configs give bit-identical logs and checkpoints") {
  std::string data = tmp_path("ldgcn_det_data.txt");
  gen_synthetic(6, 5, 6, data);
  std::string c1 = tmp_path("ldgcn_det1.ckpt");
  std::string c2 = tmp_path("ldgcn_det2.ckpt");
  RunConfig cfg1 = tiny_train_config(data, c1);
  RunConfig cfg2 = tiny_train_config(data, c2);
  TrainResult r1 = train(cfg1);
  TrainResult r2 = train(cfg2);
  CHECK(r1.log_text == r2.log_text);
  CHECK(slurp(c1) == slurp(c2));
  SUBCASE("the metrics log has one tab-separated line per epoch") {
    std::istringstream is(r1.log_text);
    std::string line;
    int lines = 0;
    while (std::getline(is, line)) {
      ++lines;
      CHECK(std::count(line.begin(), line.end(), '\t') == 2);
      std::istringstream ls(line);
      int epoch;
      double loss, acc;
      char t1, t2;
      ls >> epoch >> std::noskipws >> t1 >> loss >> t2 >> acc;
      CHECK(epoch == lines);
      CHECK(t1 == '\t');
      CHECK(std::isfinite(loss));
      CHECK(acc >= 0.0);
      CHECK(acc <= 1.0);
    }
    CHECK(lines == cfg1.epochs);
  }
  for (const auto& p : {c1, c1 + ".meta", c1 + ".vocab", c1 + ".log", c2,
                        c2 + ".meta", c2 + ".vocab", c2 + ".log", data})
    std::filesystem::remove(p);
}

TEST_CASE("train: loss decreases over the first epochs") {
  std::string data = tmp_path("ldgcn_down_data.txt");
  gen_synthetic(8, 6, 6, data);
  std::string ckpt = tmp_path("ldgcn_down.ckpt");
  RunConfig cfg = tiny_train_config(data, ckpt);
  cfg.epochs = 50;
  TrainResult r = train(cfg);
  CHECK(r.epochs.front().loss > r.epochs.back().loss);
  CHECK(r.epochs.back().loss < 0.8 * r.epochs.front().loss);
  for (const auto& p : {ckpt, ckpt + ".meta", ckpt + ".vocab", ckpt + ".log",
                        data})
    std::filesystem::remove(p);
}

TEST_CASE("train: dense strategy memorizes ten examples") {
  std::string data = tmp_path("ldgcn_dense_data.txt");
  std::string ckpt = tmp_path("ldgcn_dense.ckpt");
  gen_synthetic(5, 10, 7, data);
  RunConfig cfg;
  cfg.stack = nn::desk_preset();
  cfg.stack.strategy = nn::Strategy::dense;
  cfg.lr = 0.003;
  cfg.epochs = 60;  // crosses 0.95 around epoch 15
  cfg.seed = 3;
  cfg.data = data;
  cfg.ckpt = ckpt;
  TrainResult r = train(cfg);
  double best = 0.0;
  for (const auto& e : r.epochs) best = std::max(best, e.token_accuracy);
  CHECK(best >= 0.95);
  for (const auto& p : {ckpt, ckpt + ".meta", ckpt + ".vocab", ckpt + ".log",
                        data})
    std::filesystem::remove(p);
}

TEST_CASE("evaluate: checkpoint round trip and beam-1 consistency") {
  std::string data = tmp_path("ldgcn_eval_data.txt");
  gen_synthetic(10, 6, 6, data);
  std::string ckpt = tmp_path("ldgcn_eval.ckpt");
  RunConfig cfg = tiny_train_config(data, ckpt);
  cfg.epochs = 30;
  train(cfg);
  EvalResult a = evaluate(ckpt, data, 1);
  EvalResult b = evaluate(ckpt, data, 1);
  CHECK(a.token_accuracy == b.token_accuracy);
  CHECK(a.corpus_bleu == b.corpus_bleu);
  CHECK(a.records == 6);
  // Save -> load -> save reproduces the checkpoint bytes.
  ParamStore loaded = ParamStore::load(ckpt);
  std::string copy = tmp_path("ldgcn_eval_copy.ckpt");
  loaded.save(copy);
  CHECK(slurp(ckpt) == slurp(copy));
  for (const auto& p : {ckpt, ckpt + ".meta", ckpt + ".vocab", ckpt + ".log",
                        copy, data})
    std::filesystem::remove(p);
}

TEST_CASE("evaluate: empty dataset is an error, not a zero score") {
  std::string data = tmp_path("ldgcn_empty.txt");
  {
    std::ofstream os(data);
    os << "\n\n";
  }
  CHECK_THROWS_AS(evaluate(tmp_path("nonexistent.ckpt"), data, 1),
                  EvalError);
  std::filesystem::remove(data);
}

TEST_CASE("bench_scaling: counts follow the closed form") {
  auto rows = bench_scaling({50, 100, 200}, 2, 8, 2);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.sparse_macs ==
          static_cast<std::uint64_t>(3) * r.edges * 8);  // (1+2) * m * d
  }
  CHECK(rows[1].sparse_macs == 2 * rows[0].sparse_macs);
  CHECK(rows[2].sparse_macs == 2 * rows[1].sparse_macs);
  SUBCASE("sizes must ascend") {
    CHECK_THROWS_AS(bench_scaling({100, 50}, 2, 8, 1), UsageError);
  }
}

TEST_CASE("dataset reader: parse-mode and training-mode records") {
  std::string path = tmp_path("ldgcn_mixed.txt");
  {
    std::ofstream os(path);
    os << "(a / alpha :ARG0 (b / bravo))\n\n";
    os << "(c / cedar)\tcedar\n";
  }
  auto records = read_records(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].target.empty());
  REQUIRE(records[1].target.size() == 1);
  CHECK(records[1].target[0] == "cedar");
  std::filesystem::remove(path);
}

TEST_CASE("dataset reader: multi-line PENMAN with a tab on the final line") {
  std::string path = tmp_path("ldgcn_multiline.txt");
  {
    std::ofstream os(path);
    os << "(a / alpha\n   :ARG0 (b / bravo)\n   :ARG1 (c / cedar))\talpha bravo cedar\n";
  }
  auto records = read_records(path);
  REQUIRE(records.size() == 1);
  CHECK(records[0].graph.nodes.size() == 3);
  CHECK(records[0].target.size() == 3);
  std::filesystem::remove(path);
}

TEST_CASE("dataset reader: parse errors carry the record number") {
  std::string path = tmp_path("ldgcn_badrec.txt");
  {
    std::ofstream os(path);
    os << "(a / alpha)\n\n(b / bravo\n";
  }
  try {
    read_records(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("record 2") != std::string::npos);
  }
  std::filesystem::remove(path);
}
