#pragma once

#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spnmap/io.hpp"
#include "spnmap/spn.hpp"

namespace spnmap {

class BnError : public SpnError {
 public:
  using SpnError::SpnError;
};

/// Tree-structured Bayesian network over finite variables.
struct TreeBn {
  VariableTable vars;
  std::vector<int> parent;  // -1 for the root
  // cpt[v][u] is P(v | parent = u); the root has a single row P(v).
  std::vector<std::vector<std::vector<double>>> cpt;

  int num_vars() const { return vars.count(); }

  int root() const {
    for (int v = 0; v < num_vars(); ++v)
      if (parent[static_cast<std::size_t>(v)] < 0) return v;
    return -1;
  }

  std::vector<std::vector<int>> children() const {
    std::vector<std::vector<int>> ch(static_cast<std::size_t>(num_vars()));
    for (int v = 0; v < num_vars(); ++v)
      if (parent[static_cast<std::size_t>(v)] >= 0) ch[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])].push_back(v);
    return ch;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& rows : cpt)
      for (const auto& row : rows) n += row.size();
    return n;
  }

  double joint(std::span<const int> x) const {
    double p = 1.0;
    for (int v = 0; v < num_vars(); ++v) {
      const int u = parent[static_cast<std::size_t>(v)];
      const auto& rows = cpt[static_cast<std::size_t>(v)];
      const auto& row = rows[u < 0 ? 0 : static_cast<std::size_t>(x[static_cast<std::size_t>(u)])];
      p *= row[static_cast<std::size_t>(x[static_cast<std::size_t>(v)])];
    }
    return p;
  }
};

/// Throws BnError unless the parent relation is a single rooted tree and every
/// CPT row is a distribution (sum 1 within 1e-9).
inline void validate_bn(const TreeBn& bn) {
  const int n = bn.num_vars();
  if (static_cast<int>(bn.parent.size()) != n || static_cast<int>(bn.cpt.size()) != n)
    throw BnError("parent/CPT tables do not match the variable count");
  int roots = 0;
  for (int v = 0; v < n; ++v) {
    const int u = bn.parent[static_cast<std::size_t>(v)];
    if (u < 0) ++roots;
    else if (u >= n || u == v) throw BnError("bad parent for variable " + std::to_string(v));
  }
  if (roots != 1) throw BnError("expected exactly one root, found " + std::to_string(roots));
  for (int v = 0; v < n; ++v) {
    int steps = 0;
    for (int u = v; u >= 0; u = bn.parent[static_cast<std::size_t>(u)])
      if (++steps > n) throw BnError("cyclic parent relation through variable " + std::to_string(v));
  }
  for (int v = 0; v < n; ++v) {
    const int u = bn.parent[static_cast<std::size_t>(v)];
    const auto& rows = bn.cpt[static_cast<std::size_t>(v)];
    const std::size_t want_rows = u < 0 ? 1 : static_cast<std::size_t>(bn.vars.cardinality(u));
    if (rows.size() != want_rows) throw BnError("variable " + std::to_string(v) + " has missing or extra CPT rows");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != static_cast<std::size_t>(bn.vars.cardinality(v)))
        throw BnError("CPT row " + std::to_string(r) + " of variable " + std::to_string(v) + " has wrong length");
      double total = 0.0;
      for (double p : rows[r]) {
        if (!(p >= 0.0)) throw BnError("negative probability in CPT of variable " + std::to_string(v));
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9)
        throw BnError("CPT row " + std::to_string(r) + " of variable " + std::to_string(v) + " sums to " +
                      format_score(total) + ", not 1");
    }
  }
}

/// Grammar:
///
///     BN <n>
///     CARD <var> <k>
///     ROOT <var> p0 p1 ...
///     EDGE <parent> <child>
///     CPT <child> | <parent_val> : p0 p1 ...
inline TreeBn parse_bn(std::string_view text) {
  TreeBn bn;
  bool have_header = false;
  bool have_root = false;
  std::vector<std::map<int, std::vector<double>>> rows;
  const auto lines = detail::split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int ln = static_cast<int>(li) + 1;
    const auto tok = detail::tokenize(lines[li]);
    if (tok.empty()) continue;
    const std::string_view kw = tok[0].text;
    auto var_at = [&](std::size_t i) {
      if (i >= tok.size()) throw ParseError(ln, tok.back().column, "missing variable");
      const int v = detail::parse_int(tok[i], ln);
      if (v < 0 || v >= bn.num_vars()) throw ParseError(ln, tok[i].column, "variable out of range");
      return v;
    };
    if (!have_header) {
      if (kw != "BN" || tok.size() != 2) throw ParseError(ln, tok[0].column, "expected 'BN <n>' header");
      const int n = detail::parse_int(tok[1], ln);
      if (n <= 0) throw ParseError(ln, tok[1].column, "variable count must be positive");
      bn.vars = VariableTable(n);
      bn.parent.assign(static_cast<std::size_t>(n), -1);
      rows.resize(static_cast<std::size_t>(n));
      have_header = true;
      continue;
    }
    if (kw == "CARD") {
      if (tok.size() != 3) throw ParseError(ln, tok[0].column, "CARD takes <var> <k>");
      const int v = var_at(1);
      const int k = detail::parse_int(tok[2], ln);
      if (k < 2 || k > kMaxCardinality) throw ParseError(ln, tok[2].column, "cardinality must be in [2, 64]");
      bn.vars.set_cardinality(v, k);
    } else if (kw == "ROOT") {
      if (have_root) throw ParseError(ln, tok[0].column, "multiple ROOT lines");
      const int v = var_at(1);
      std::vector<double> p;
      for (std::size_t i = 2; i < tok.size(); ++i) p.push_back(detail::parse_double(tok[i], ln));
      rows[static_cast<std::size_t>(v)][-1] = std::move(p);
      have_root = true;
    } else if (kw == "EDGE") {
      if (tok.size() != 3) throw ParseError(ln, tok[0].column, "EDGE takes <parent> <child>");
      const int u = var_at(1);
      const int v = var_at(2);
      if (bn.parent[static_cast<std::size_t>(v)] >= 0) throw ParseError(ln, tok[2].column, "variable already has a parent");
      bn.parent[static_cast<std::size_t>(v)] = u;
    } else if (kw == "CPT") {
      if (tok.size() < 6 || tok[2].text != "|" || tok[4].text != ":")
        throw ParseError(ln, tok[0].column, "expected 'CPT <child> | <parent_val> : p0 p1 ...'");
      const int v = var_at(1);
      const int u = detail::parse_int(tok[3], ln);
      if (u < 0) throw ParseError(ln, tok[3].column, "negative parent value");
      std::vector<double> p;
      for (std::size_t i = 5; i < tok.size(); ++i) p.push_back(detail::parse_double(tok[i], ln));
      if (!rows[static_cast<std::size_t>(v)].emplace(u, std::move(p)).second)
        throw ParseError(ln, tok[3].column, "duplicate CPT row");
    } else {
      throw ParseError(ln, tok[0].column, "unknown record '" + std::string(kw) + "'");
    }
  }
  if (!have_header) throw ParseError(1, 1, "missing 'BN <n>' header");
  if (!have_root) throw BnError("missing ROOT line");

  bn.cpt.resize(static_cast<std::size_t>(bn.num_vars()));
  for (int v = 0; v < bn.num_vars(); ++v) {
    auto& r = rows[static_cast<std::size_t>(v)];
    const bool is_root = r.count(-1) > 0;
    if (is_root && bn.parent[static_cast<std::size_t>(v)] >= 0) throw BnError("ROOT variable has an EDGE into it");
    if (!is_root && bn.parent[static_cast<std::size_t>(v)] < 0)
      throw BnError("variable " + std::to_string(v) + " has neither ROOT nor a parent EDGE");
    if (is_root) {
      if (r.size() != 1) throw BnError("root variable has conditional CPT rows");
      bn.cpt[static_cast<std::size_t>(v)].push_back(r[-1]);
      continue;
    }
    const int k = bn.vars.cardinality(bn.parent[static_cast<std::size_t>(v)]);
    for (int u = 0; u < k; ++u) {
      auto it = r.find(u);
      if (it == r.end()) throw BnError("variable " + std::to_string(v) + " lacks CPT row for parent value " + std::to_string(u));
      bn.cpt[static_cast<std::size_t>(v)].push_back(it->second);
    }
    if (static_cast<int>(r.size()) != k) throw BnError("variable " + std::to_string(v) + " has CPT rows for unknown parent values");
  }
  validate_bn(bn);
  return bn;
}

struct BnCompileStats {
  std::size_t cache_entries = 0;
  std::size_t cache_hits = 0;
};

/// Compiles a tree BN into an equivalent selective SPN of linear size.
///
/// The root sum has one arc per root value weighted P(x). Each (variable,
/// value) pair is built once: a product of the value's indicator and, per
/// child variable, a sum over the child's sub-SPNs weighted P(child | value).
/// For a variable without children the indicator itself stands in for the
/// product.
inline Spn bn_to_spn(const TreeBn& bn, BnCompileStats* stats = nullptr) {
  validate_bn(bn);
  const auto children = bn.children();
  std::vector<Node> nodes;
  std::vector<std::vector<int>> indicator(static_cast<std::size_t>(bn.num_vars()));
  for (int v = 0; v < bn.num_vars(); ++v) {
    for (int x = 0; x < bn.vars.cardinality(v); ++x) {
      indicator[static_cast<std::size_t>(v)].push_back(static_cast<int>(nodes.size()));
      nodes.push_back(Node::indicator(v, x));
    }
  }
  std::map<std::pair<int, int>, int> cache;
  BnCompileStats local;

  // Post-order over the tree so every child entry exists before its parent.
  std::vector<int> order;
  std::vector<std::pair<int, std::size_t>> stack{{bn.root(), 0}};
  while (!stack.empty()) {
    auto& [v, next] = stack.back();
    const auto& ch = children[static_cast<std::size_t>(v)];
    if (next < ch.size()) {
      const int c = ch[next++];
      stack.push_back({c, 0});
    } else {
      order.push_back(v);
      stack.pop_back();
    }
  }

  // A request for an already requested (variable, value) entry is a cache hit.
  std::map<std::pair<int, int>, int> requests;
  auto lookup = [&](int v, int x) {
    if (requests[{v, x}]++ > 0) ++local.cache_hits;
    return cache.at({v, x});
  };

  auto build = [&](int v, int x) {
    int id;
    const auto& ch = children[static_cast<std::size_t>(v)];
    if (ch.empty()) {
      id = indicator[static_cast<std::size_t>(v)][static_cast<std::size_t>(x)];
    } else {
      std::vector<int> factors{indicator[static_cast<std::size_t>(v)][static_cast<std::size_t>(x)]};
      for (int c : ch) {
        std::vector<int> sub;
        std::vector<double> w;
        for (int y = 0; y < bn.vars.cardinality(c); ++y) {
          sub.push_back(lookup(c, y));
          w.push_back(bn.cpt[static_cast<std::size_t>(c)][static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]);
        }
        factors.push_back(static_cast<int>(nodes.size()));
        nodes.push_back(Node::sum(std::move(sub), std::move(w)));
      }
      id = static_cast<int>(nodes.size());
      nodes.push_back(Node::product(std::move(factors)));
    }
    cache.emplace(std::make_pair(v, x), id);
  };

  for (int v : order)
    for (int x = 0; x < bn.vars.cardinality(v); ++x) build(v, x);

  const int r = bn.root();
  std::vector<int> top;
  std::vector<double> w;
  for (int x = 0; x < bn.vars.cardinality(r); ++x) {
    top.push_back(lookup(r, x));
    w.push_back(bn.cpt[static_cast<std::size_t>(r)][0][static_cast<std::size_t>(x)]);
  }
  nodes.push_back(Node::sum(std::move(top), std::move(w)));
  local.cache_entries = cache.size();
  if (stats) *stats = local;
  return Spn(bn.vars, std::move(nodes));
}

}  // namespace spnmap
