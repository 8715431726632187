// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "ldgcn/penman.hpp"
#include "ldgcn/seq2seq.hpp"

namespace ldgcn::cli {

// One dataset record: a PENMAN graph, optionally paired with a target
// sentence (tab-separated on the record's final line).
struct Record {
  amr::AmrGraph graph;
  std::vector<std::string> target;  // empty in parse mode
  std::string penman;
};

// Records are separated by one blank line. Parse failures carry the record
// number and byte offset.
std::vector<Record> read_records(const std::string& path);
std::vector<Record> parse_records_text(const std::string& text);

s2s::Vocab build_source_vocab(const std::vector<Record>& records);
s2s::Vocab build_target_vocab(const std::vector<Record>& records);

// Concept labels in depth-first first-visit order from the root, following
// edges in insertion order. The synthetic task's target sentence.
std::vector<std::string> dfs_concepts(const amr::AmrGraph& g);

}  // namespace ldgcn::cli
