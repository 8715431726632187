// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#include "ldgcn/penman.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <tuple>

namespace ldgcn::amr {

int AmrGraph::find_var(std::string_view var) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].var == var) return static_cast<int>(i);
  return -1;
}

int AmrGraph::reentrancy_count() const {
  std::vector<int> in(nodes.size(), 0);
  for (const auto& e : edges) ++in[e.tgt];
  int c = 0;
  for (int d : in)
    if (d > 1) ++c;
  return c;
}

bool AmrGraph::has_reentrancy_at(std::string_view var) const {
  int idx = find_var(var);
  if (idx < 0) return false;
  int in = 0;
  for (const auto& e : edges)
    if (e.tgt == idx) ++in;
  return in > 1;
}

void AmrGraph::validate() const {
  const int n = static_cast<int>(nodes.size());
  if (n == 0) throw UsageError("AmrGraph: empty graph");
  if (root < 0 || root >= n) throw UsageError("AmrGraph: root out of range");
  std::set<std::string> vars;
  for (const auto& node : nodes)
    if (!vars.insert(node.var).second)
      throw UsageError("AmrGraph: duplicate variable name '" + node.var + "'");
  for (const auto& e : edges)
    if (e.src < 0 || e.src >= n || e.tgt < 0 || e.tgt >= n)
      throw UsageError("AmrGraph: edge index out of range");
  // Weak connectivity from root.
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[e.src].push_back(e.tgt);
    adj[e.tgt].push_back(e.src);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{root};
  seen[root] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int w : adj[u])
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
  for (int i = 0; i < n; ++i)
    if (!seen[i])
      throw UsageError("AmrGraph: node '" + nodes[i].var +
                       "' unreachable from root (ignoring direction)");
}

namespace {

enum class TokKind { lparen, rparen, slash, role, atom, quoted, end };

struct Token {
  TokKind kind;
  std::string text;  // alignment suffix already stripped
  std::size_t offset;
};

// Drops a trailing "~..." alignment annotation.
std::string strip_alignment(std::string_view s) {
  auto pos = s.find('~');
  return std::string(pos == std::string_view::npos ? s : s.substr(0, pos));
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    std::size_t start = pos_;
    if (pos_ >= text_.size()) return {TokKind::end, "", start};
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      return {TokKind::lparen, "(", start};
    }
    if (c == ')') {
      ++pos_;
      return {TokKind::rparen, ")", start};
    }
    if (c == '/') {
      ++pos_;
      return {TokKind::slash, "/", start};
    }
    if (c == '"') {
      ++pos_;
      std::string out;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        out += text_[pos_++];
      }
      if (pos_ >= text_.size())
        throw ParseError("unterminated string literal", start);
      ++pos_;  // closing quote
      // Alignments may follow the closing quote.
      while (pos_ < text_.size() && text_[pos_] == '~') {
        while (pos_ < text_.size() && !is_break(text_[pos_])) ++pos_;
      }
      return {TokKind::quoted, out, start};
    }
    std::string raw;
    while (pos_ < text_.size() && !is_break(text_[pos_])) raw += text_[pos_++];
    if (raw.empty()) throw ParseError("unexpected character", start);
    if (raw[0] == ':') return {TokKind::role, strip_alignment(raw), start};
    return {TokKind::atom, strip_alignment(raw), start};
  }

 private:
  static bool is_break(char c) {
    return c == '(' || c == ')' || c == '/' ||
           std::isspace(static_cast<unsigned char>(c));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool looks_numeric(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  bool digit = false;
  for (; i < s.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(s[i])))
      digit = true;
    else if (s[i] != '.')
      return false;
  }
  return digit;
}

struct PendingRef {
  int src;
  std::string role;
  std::string var;
  std::size_t offset;
  std::size_t edge_slot;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) { tok_ = lex_.next(); }

  AmrGraph parse() {
    expect(TokKind::lparen, "expected '('");
    int root = parse_node();
    if (tok_.kind != TokKind::end)
      throw ParseError("trailing input after graph", tok_.offset);
    g_.root = root;
    resolve_references();
    return std::move(g_);
  }

 private:
  // node := '(' VAR '/' CONCEPT attachment* ')'. The '(' is consumed.
  int parse_node() {
    Token var = tok_;
    if (var.kind != TokKind::atom)
      throw ParseError("expected variable name", var.offset);
    advance();
    expect(TokKind::slash, "expected '/' after variable");
    Token concept_tok = tok_;
    if (concept_tok.kind != TokKind::atom &&
        concept_tok.kind != TokKind::quoted)
      throw ParseError("expected concept label", concept_tok.offset);
    advance();
    int id = declare(var.text, concept_tok.text, var.offset);
    while (tok_.kind == TokKind::role) {
      std::string role = tok_.text;
      advance();
      parse_value(id, role);
    }
    if (tok_.kind == TokKind::end)
      throw ParseError("unbalanced parentheses: missing ')'", tok_.offset);
    expect(TokKind::rparen, "expected ')'");
    return id;
  }

  void parse_value(int src, const std::string& role) {
    if (tok_.kind == TokKind::lparen) {
      advance();
      std::size_t slot = g_.edges.size();
      g_.edges.push_back({src, -1, role});
      int child = parse_node();
      g_.edges[slot].tgt = child;
      return;
    }
    if (tok_.kind == TokKind::quoted) {
      int leaf = constant(tok_.text, NodeKind::constant_string);
      g_.edges.push_back({src, leaf, role});
      advance();
      return;
    }
    if (tok_.kind == TokKind::atom) {
      const std::string& text = tok_.text;
      if (looks_numeric(text) || text == "-" || text == "+") {
        int leaf = constant(text, NodeKind::constant_atom);
        g_.edges.push_back({src, leaf, role});
      } else {
        // Variable reference; resolved once the whole expression is read.
        pending_.push_back({src, role, text, tok_.offset, g_.edges.size()});
        g_.edges.push_back({src, -1, role});
      }
      advance();
      return;
    }
    if (tok_.kind == TokKind::rparen || tok_.kind == TokKind::end)
      throw ParseError("role '" + role + "' has no argument", tok_.offset);
    throw ParseError("unexpected token after role", tok_.offset);
  }

  int declare(const std::string& var, const std::string& label,
              std::size_t offset) {
    if (vars_.count(var))
      throw ParseError("duplicate variable declaration '" + var + "'", offset);
    int id = static_cast<int>(g_.nodes.size());
    g_.nodes.push_back({var, label, NodeKind::concept_node});
    vars_[var] = id;
    return id;
  }

  int constant(const std::string& text, NodeKind kind) {
    std::string name = "_c" + std::to_string(const_count_++);
    while (vars_.count(name)) name = "_c" + std::to_string(const_count_++);
    int id = static_cast<int>(g_.nodes.size());
    g_.nodes.push_back({name, text, kind});
    vars_[name] = id;
    return id;
  }

  void resolve_references() {
    for (const auto& p : pending_) {
      auto it = vars_.find(p.var);
      if (it == vars_.end() ||
          g_.nodes[it->second].kind != NodeKind::concept_node)
        throw ParseError("reference to undeclared variable '" + p.var + "'",
                         p.offset);
      g_.edges[p.edge_slot].tgt = it->second;
    }
  }

  void expect(TokKind kind, const char* message) {
    if (tok_.kind != kind) {
      if (tok_.kind == TokKind::end)
        throw ParseError(std::string("unbalanced parentheses: ") + message,
                         tok_.offset);
      throw ParseError(message, tok_.offset);
    }
    advance();
  }

  void advance() { tok_ = lex_.next(); }

  Lexer lex_;
  Token tok_{TokKind::end, "", 0};
  AmrGraph g_;
  std::map<std::string, int> vars_;
  std::vector<PendingRef> pending_;
  int const_count_ = 0;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// Concept labels are normally plain atoms; quote the odd one that would not
// survive re-tokenization.
std::string atom_or_quoted(const std::string& s) {
  if (s.empty()) return quote(s);
  for (char c : s)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' ||
        c == '/' || c == '"' || c == '~' || c == ':')
      return quote(s);
  return s;
}

}  // namespace

AmrGraph parse_penman(std::string_view text) { return Parser(text).parse(); }

std::string serialize_penman(const AmrGraph& g) {
  g.validate();
  const int n = static_cast<int>(g.nodes.size());
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<int> in_degree(n, 0);
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    out[g.edges[i].src].push_back(i);
    ++in_degree[g.edges[i].tgt];
  }
  for (int i = 0; i < n; ++i) {
    if (g.nodes[i].kind == NodeKind::concept_node) continue;
    if (!out[i].empty())
      throw UsageError("serialize_penman: constant node '" + g.nodes[i].var +
                       "' has outgoing edges");
    if (in_degree[i] > 1)
      throw UsageError("serialize_penman: constant node '" + g.nodes[i].var +
                       "' is shared");
  }

  std::string text;
  std::vector<char> declared(n, 0);
  // Recursive emit; declared nodes are referenced by bare variable.
  auto emit = [&](auto&& self, int u) -> void {
    declared[u] = 1;
    text += '(' + g.nodes[u].var + " / " + atom_or_quoted(g.nodes[u].label);
    for (std::size_t ei : out[u]) {
      const AmrEdge& e = g.edges[ei];
      text += ' ' + e.role + ' ';
      const AmrNode& child = g.nodes[e.tgt];
      if (child.kind == NodeKind::constant_string)
        text += quote(child.label);
      else if (child.kind == NodeKind::constant_atom)
        text += child.label;
      else if (declared[e.tgt])
        text += child.var;
      else
        self(self, e.tgt);
    }
    text += ')';
  };
  emit(emit, g.root);

  for (int i = 0; i < n; ++i)
    if (!declared[i] && g.nodes[i].kind == NodeKind::concept_node)
      throw UsageError("serialize_penman: node '" + g.nodes[i].var +
                       "' not reachable from root along edge direction");
  return text;
}

bool isomorphic(const AmrGraph& a, const AmrGraph& b) {
  if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size())
    return false;
  if (a.nodes.empty()) return true;

  // Constant nodes carry synthesized variable names, so they are compared by
  // label and kind alone; declared nodes keep their variable names.
  auto node_name = [](const AmrGraph& g, int i) {
    const AmrNode& node = g.nodes[i];
    return node.kind == NodeKind::concept_node
               ? node.var
               : "#const" + std::to_string(static_cast<int>(node.kind));
  };
  auto node_key = [&](const AmrGraph& g, int i) {
    return std::tuple<std::string, std::string, int>(
        node_name(g, i), g.nodes[i].label, static_cast<int>(g.nodes[i].kind));
  };
  std::multiset<std::tuple<std::string, std::string, int>> na, nb;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    na.insert(node_key(a, static_cast<int>(i)));
    nb.insert(node_key(b, static_cast<int>(i)));
  }
  if (na != nb) return false;

  auto edge_key = [&](const AmrGraph& g, const AmrEdge& e) {
    std::string tgt = g.nodes[e.tgt].kind == NodeKind::concept_node
                          ? g.nodes[e.tgt].var
                          : "#const:" + g.nodes[e.tgt].label;
    return std::tuple<std::string, std::string, std::string>(
        g.nodes[e.src].var, tgt, e.role);
  };
  std::multiset<std::tuple<std::string, std::string, std::string>> ea, eb;
  for (const auto& e : a.edges) ea.insert(edge_key(a, e));
  for (const auto& e : b.edges) eb.insert(edge_key(b, e));
  if (ea != eb) return false;

  return a.nodes[a.root].var == b.nodes[b.root].var;
}

}  // namespace ldgcn::amr
