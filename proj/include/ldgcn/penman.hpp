// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ldgcn/errors.hpp"

namespace ldgcn::amr {

enum class NodeKind {
  concept_node,     // declared as (var / label)
  constant_atom,    // unquoted literal argument: numbers, -, +
  constant_string,  // quoted literal argument
};

struct AmrNode {
  std::string var;    // unique within a graph; synthesized for constants
  std::string label;  // concept label or constant text
  NodeKind kind = NodeKind::concept_node;
};

struct AmrEdge {
  int src = 0;
  int tgt = 0;
  std::string role;  // stored with the leading ':', e.g. ":ARG0"
};

// Rooted, directed, labeled graph parsed from PENMAN text. Nodes are kept in
// declaration order, edges in attachment order. Immutable after construction;
// safe to share across threads.
struct AmrGraph {
  std::vector<AmrNode> nodes;
  std::vector<AmrEdge> edges;
  int root = 0;

  int find_var(std::string_view var) const;
  // Number of nodes with more than one incoming edge.
  int reentrancy_count() const;
  bool has_reentrancy_at(std::string_view var) const;
  // Throws UsageError when an invariant is broken (edge indices out of
  // range, duplicate variable names, or not weakly connected from root).
  void validate() const;
};

// Parses a single well-formed PENMAN expression. Alignment annotations
// ("~e.10,12") are stripped. Bare variable references become re-entrant
// edges and may precede the declaration textually; quoted strings and
// numeric/polarity atoms become constant leaf nodes.
AmrGraph parse_penman(std::string_view text);

// Deterministic single-line serialization: depth-first from the root,
// children in edge insertion order, re-entrant edges as bare references.
// Requires every node to be reachable from the root along edge direction
// (the class of graphs PENMAN can express without role inversion).
std::string serialize_penman(const AmrGraph& g);

// Label-preserving isomorphism keyed by variable names: same (var, label,
// kind) node multiset, same (src-var, tgt-var, role) edge multiset, same
// root variable.
bool isomorphic(const AmrGraph& a, const AmrGraph& b);

}  // namespace ldgcn::amr
