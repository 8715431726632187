// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#include "ldgcn/dataset.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace ldgcn::cli {

namespace {

bool blank(const std::string& line) {
  for (char c : line)
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

std::vector<Record> parse_records_text(const std::string& text) {
  std::vector<std::vector<std::string>> chunks;
  std::vector<std::string> cur;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (blank(line)) {
      if (!cur.empty()) chunks.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(line);
    }
  }
  if (!cur.empty()) chunks.push_back(std::move(cur));

  std::vector<Record> records;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    Record rec;
    std::vector<std::string> lines = chunks[i];
    auto tab = lines.back().find('\t');
    if (tab != std::string::npos) {
      rec.target = split_ws(lines.back().substr(tab + 1));
      lines.back() = lines.back().substr(0, tab);
    }
    std::string penman;
    for (const auto& l : lines) {
      penman += l;
      penman += '\n';
    }
    rec.penman = penman;
    try {
      rec.graph = amr::parse_penman(penman);
    } catch (const ParseError& e) {
      throw ParseError("record " + std::to_string(i + 1) + ": " + e.what(),
                       e.offset());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<Record> read_records(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_records_text(buf.str());
}

s2s::Vocab build_source_vocab(const std::vector<Record>& records) {
  s2s::Vocab v;
  for (const auto& r : records)
    for (const auto& node : r.graph.nodes) v.add(node.label);
  return v;
}

s2s::Vocab build_target_vocab(const std::vector<Record>& records) {
  s2s::Vocab v;
  for (const auto& r : records)
    for (const auto& tok : r.target) v.add(tok);
  return v;
}

std::vector<std::string> dfs_concepts(const amr::AmrGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<std::vector<int>> out(n);
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    out[g.edges[i].src].push_back(g.edges[i].tgt);
  std::vector<char> seen(n, 0);
  std::vector<std::string> order;
  auto walk = [&](auto&& self, int u) -> void {
    seen[u] = 1;
    order.push_back(g.nodes[u].label);
    for (int w : out[u])
      if (!seen[w]) self(self, w);
  };
  walk(walk, g.root);
  return order;
}

}  // namespace ldgcn::cli
