// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: dataset generation, training, evaluation,
// parameter reports, and scaling benchmarks.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ldgcn/harness.hpp"

namespace {

int run_parse(const std::string& path) {
  auto records = ldgcn::cli::read_records(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& g = records[i].graph;
    std::printf("record %zu: %zu nodes, %zu edges, root=%s, reentrancies=%d%s\n",
                i + 1, g.nodes.size(), g.edges.size(),
                g.nodes[g.root].var.c_str(), g.reentrancy_count(),
                records[i].target.empty() ? "" : " [has target]");
  }
  std::printf("%zu records parsed\n", records.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ldgcn: dynamic-fusion graph convolutions for "
               "graph-to-sequence generation"};
  app.require_subcommand(1);

  std::string parse_file;
  auto* parse_cmd = app.add_subcommand("parse", "Parse a PENMAN dataset");
  parse_cmd->add_option("file", parse_file, "dataset file")->required();

  std::uint64_t gen_seed = 1;
  int gen_count = 10;
  int gen_max_nodes = 8;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen_cmd->add_option("--seed", gen_seed, "random seed");
  gen_cmd->add_option("--count", gen_count, "number of records")->required();
  gen_cmd->add_option("--max-nodes", gen_max_nodes, "max nodes per graph");
  gen_cmd->add_option("--out", gen_out, "output file")->required();

  std::string train_config;
  auto* train_cmd = app.add_subcommand("train", "Train from a config file");
  train_cmd->add_option("--config", train_config, "config file")->required();

  std::string eval_ckpt, eval_data;
  int eval_beam = 1;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "dataset file")->required();
  eval_cmd->add_option("--beam", eval_beam, "beam width");

  std::string bench_sizes = "100,200,400";
  int bench_k = 2, bench_d = 8, bench_repeats = 5;
  auto* bench_cmd = app.add_subcommand("bench", "Scaling benchmark");
  bench_cmd->add_option("--sizes", bench_sizes, "comma-separated edge counts");
  bench_cmd->add_option("--K", bench_k, "highest adjacency order");
  bench_cmd->add_option("--d", bench_d, "feature width");
  bench_cmd->add_option("--repeats", bench_repeats, "timing repeats");

  std::string params_config;
  auto* params_cmd = app.add_subcommand("params", "Report parameter shapes");
  params_cmd->add_option("--config", params_config, "config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*parse_cmd) return run_parse(parse_file);
    if (*gen_cmd) {
      ldgcn::cli::gen_synthetic(gen_seed, gen_count, gen_max_nodes, gen_out);
      std::printf("wrote %d records to %s\n", gen_count, gen_out.c_str());
      return 0;
    }
    if (*train_cmd) {
      auto cfg = ldgcn::cli::parse_run_config(train_config);
      if (cfg.data.empty())
        throw ldgcn::ConfigError("train: config must set 'data'");
      if (cfg.ckpt.empty())
        throw ldgcn::ConfigError("train: config must set 'ckpt'");
      auto result = ldgcn::cli::train(cfg);
      std::fputs(result.log_text.c_str(), stdout);
      std::printf("checkpoint: %s\nlog: %s\n", cfg.ckpt.c_str(),
                  cfg.log_path().c_str());
      return 0;
    }
    if (*eval_cmd) {
      auto result = ldgcn::cli::evaluate(eval_ckpt, eval_data, eval_beam);
      std::printf("records\t%d\ntoken_acc\t%.6f\nbleu\t%.6f\n", result.records,
                  result.token_accuracy, result.corpus_bleu);
      return 0;
    }
    if (*bench_cmd) {
      std::vector<int> sizes;
      std::string cur;
      std::istringstream is(bench_sizes);
      while (std::getline(is, cur, ',')) sizes.push_back(std::stoi(cur));
      auto rows =
          ldgcn::cli::bench_scaling(sizes, bench_k, bench_d, bench_repeats);
      std::printf("nodes\tedges\tK\tsparse_macs\twall_ms\n");
      for (const auto& r : rows)
        std::printf("%d\t%d\t%d\t%llu\t%.4f\n", r.nodes, r.edges,
                    r.highest_order,
                    static_cast<unsigned long long>(r.sparse_macs), r.wall_ms);
      return 0;
    }
    if (*params_cmd) {
      auto cfg = ldgcn::cli::parse_run_config(params_config);
      auto report = ldgcn::nn::count_parameters(cfg.stack);
      std::fputs(ldgcn::cli::render_param_report(report).c_str(), stdout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
