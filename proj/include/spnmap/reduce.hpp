#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "spnmap/io.hpp"
#include "spnmap/spn.hpp"

namespace spnmap {

/// Query / evidence / hidden partition of the variables plus evidence values.
struct MapProblem {
  std::vector<int> query;
  std::vector<int> evidence_vars;
  std::vector<int> evidence_values;  // parallel to evidence_vars
  std::vector<int> hidden;

  bool operator==(const MapProblem&) const = default;
};

class ProblemError : public SpnError {
 public:
  using SpnError::SpnError;
};

enum class Role : char { kQuery, kEvidence, kHidden };

namespace detail {

// Role per variable; throws on overlap, omission, empty Q or bad evidence.
inline std::vector<Role> check_problem(const VariableTable& vars, const MapProblem& p) {
  if (p.query.empty()) throw ProblemError("query set Q is empty");
  if (p.evidence_vars.size() != p.evidence_values.size()) throw ProblemError("evidence values do not match E");
  std::vector<int> seen(static_cast<std::size_t>(vars.count()), 0);
  std::vector<Role> role(static_cast<std::size_t>(vars.count()), Role::kHidden);
  auto mark = [&](const std::vector<int>& set, Role r) {
    for (int v : set) {
      if (v < 0 || v >= vars.count()) throw ProblemError("variable " + std::to_string(v) + " out of range");
      if (seen[static_cast<std::size_t>(v)]++) throw ProblemError("variable " + std::to_string(v) + " appears in more than one part");
      role[static_cast<std::size_t>(v)] = r;
    }
  };
  mark(p.query, Role::kQuery);
  mark(p.evidence_vars, Role::kEvidence);
  mark(p.hidden, Role::kHidden);
  for (int v = 0; v < vars.count(); ++v)
    if (!seen[static_cast<std::size_t>(v)]) throw ProblemError("variable " + std::to_string(v) + " is in none of Q/E/H");
  for (std::size_t i = 0; i < p.evidence_vars.size(); ++i) {
    const int v = p.evidence_vars[i];
    if (p.evidence_values[i] < 0 || p.evidence_values[i] >= vars.cardinality(v))
      throw ProblemError("evidence value out of range for variable " + std::to_string(v));
  }
  return role;
}

}  // namespace detail

inline void validate_problem(const VariableTable& vars, const MapProblem& p) { detail::check_problem(vars, p); }

/// Reduces MAP(Q, e, H) on `spn` to MAX on the returned SPN:
/// for every q, result(q) == spn({q} x {e} x val(H)).
///
/// Bottom-up, each node gets a multiplier w_N: contradicted evidence
/// indicators get 0, sums fully inside E u H collapse to the sum of their
/// (already multiplied) arc weights, products take the product over their
/// children. Each sum arc absorbs its child's multiplier, then every node
/// whose scope lies inside E u H is dropped. The input is not modified.
inline Spn map_to_max(const Spn& spn, const MapProblem& problem) {
  const auto role = detail::check_problem(spn.variables(), problem);
  std::vector<int> evidence(static_cast<std::size_t>(spn.num_vars()), -1);
  for (std::size_t i = 0; i < problem.evidence_vars.size(); ++i)
    evidence[static_cast<std::size_t>(problem.evidence_vars[i])] = problem.evidence_values[i];

  std::vector<Node> nodes = spn.nodes();
  std::vector<std::vector<int>> scopes;
  scopes.reserve(nodes.size() + 1);
  for (int i = 0; i < spn.size(); ++i) scopes.push_back(spn.scope(i));
  if (!nodes.back().is_sum()) {
    nodes.push_back(Node::sum({spn.root()}, {1.0}));
    scopes.push_back(spn.scope(spn.root()));
  }

  const std::size_t n = nodes.size();
  std::vector<char> removed(n, 0);
  std::vector<double> w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    Node& node = nodes[i];
    bool outside_q = true;
    for (int v : scopes[i]) {
      if (role[static_cast<std::size_t>(v)] == Role::kQuery) {
        outside_q = false;
        break;
      }
    }
    removed[i] = outside_q;
    if (node.is_indicator()) {
      const int e = evidence[static_cast<std::size_t>(node.var)];
      if (e >= 0 && e != node.value) w[i] = 0.0;
    } else if (node.is_sum()) {
      for (std::size_t k = 0; k < node.children.size(); ++k) node.weights[k] *= w[static_cast<std::size_t>(node.children[k])];
      if (outside_q) {
        double total = 0.0;
        for (double wk : node.weights) total += wk;
        w[i] = total;
      }
    } else {
      double prod = 1.0;
      for (int c : node.children) prod *= w[static_cast<std::size_t>(c)];
      w[i] = prod;
    }
  }
  if (removed[n - 1]) throw ProblemError("no query variable occurs in the SPN scope");

  std::vector<int> new_id(n, -1);
  std::vector<Node> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (removed[i]) continue;
    Node node = std::move(nodes[i]);
    Node kept = node;
    kept.children.clear();
    kept.weights.clear();
    for (std::size_t k = 0; k < node.children.size(); ++k) {
      const int c = node.children[k];
      if (removed[static_cast<std::size_t>(c)]) continue;
      kept.children.push_back(new_id[static_cast<std::size_t>(c)]);
      if (node.is_sum()) kept.weights.push_back(node.weights[k]);
    }
    new_id[i] = static_cast<int>(out.size());
    out.push_back(std::move(kept));
  }
  return Spn(spn.variables(), std::move(out));
}

/// Optional clean-up of a reduced SPN: drops zero-weight sum arcs (keeping at
/// least one arc per sum) and splices out unary products and unary sums with
/// weight 1. The function computed is unchanged.
inline Spn simplify(const Spn& spn) {
  const auto n = static_cast<std::size_t>(spn.size());
  std::vector<int> alias(n);
  std::vector<int> new_id(n, -1);
  std::vector<Node> out;
  for (std::size_t i = 0; i < n; ++i) {
    Node node = spn.node(static_cast<int>(i));
    if (node.is_sum()) {
      Node kept = Node::sum({}, {});
      for (std::size_t k = 0; k < node.children.size(); ++k) {
        if (node.weights[k] == 0.0) continue;
        kept.children.push_back(node.children[k]);
        kept.weights.push_back(node.weights[k]);
      }
      if (kept.children.empty()) {
        kept.children.push_back(node.children.front());
        kept.weights.push_back(0.0);
      }
      node = std::move(kept);
    }
    for (int& c : node.children) c = alias[static_cast<std::size_t>(c)];
    const bool last = i + 1 == n;
    const bool unary = node.children.size() == 1 && (node.is_product() || node.weights.front() == 1.0);
    if (unary && !last) {
      alias[i] = node.children.front();
      continue;
    }
    for (int& c : node.children) c = new_id[static_cast<std::size_t>(c)];
    new_id[i] = static_cast<int>(out.size());
    alias[i] = static_cast<int>(i);
    out.push_back(std::move(node));
  }
  // Splicing can orphan nodes that were only referenced through removed arcs.
  std::vector<char> live(out.size(), 0);
  live.back() = 1;
  for (std::size_t i = out.size(); i-- > 0;)
    if (live[i])
      for (int c : out[i].children) live[static_cast<std::size_t>(c)] = 1;
  std::vector<int> compact(out.size(), -1);
  std::vector<Node> final_nodes;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!live[i]) continue;
    for (int& c : out[i].children) c = compact[static_cast<std::size_t>(c)];
    compact[i] = static_cast<int>(final_nodes.size());
    final_nodes.push_back(std::move(out[i]));
  }
  return Spn(spn.variables(), std::move(final_nodes));
}

namespace detail {

inline std::vector<int> parse_var_list(std::string_view s, const std::string& where) {
  std::vector<int> out;
  if (s == "-") return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    const std::string_view item = s.substr(start, end - start);
    int v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || p != item.data() + item.size())
      throw ProblemError(where + ": bad variable '" + std::string(item) + "'");
    out.push_back(v);
    if (end == s.size()) break;
    start = end + 1;
  }
  return out;
}

}  // namespace detail

/// Parses "var=val,var=val" into parallel lists; "-" is the empty list.
inline void parse_assignment_list(std::string_view s, std::vector<int>& vars, std::vector<int>& values,
                                  const std::string& where = "evidence") {
  vars.clear();
  values.clear();
  if (s == "-" || s.empty()) return;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    const std::string_view item = s.substr(start, end - start);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ProblemError(where + ": expected var=val, got '" + std::string(item) + "'");
    int v = 0;
    int x = 0;
    auto r1 = std::from_chars(item.data(), item.data() + eq, v);
    auto r2 = std::from_chars(item.data() + eq + 1, item.data() + item.size(), x);
    if (eq == 0 || eq + 1 == item.size() || r1.ec != std::errc{} || r1.ptr != item.data() + eq ||
        r2.ec != std::errc{} || r2.ptr != item.data() + item.size())
      throw ProblemError(where + ": expected var=val, got '" + std::string(item) + "'");
    vars.push_back(v);
    values.push_back(x);
    if (end == s.size()) break;
    start = end + 1;
  }
}

/// One problem line: "q:<list|-> e:<var>=<val>,...|- h:<list|->".
inline MapProblem parse_problem_line(std::string_view line, const VariableTable& vars, int line_no = 1) {
  const auto tok = detail::tokenize(line);
  MapProblem p;
  bool have_q = false, have_e = false, have_h = false;
  const std::string where = "problem line " + std::to_string(line_no);
  for (const auto& t : tok) {
    const std::string_view s = t.text;
    if (s.size() < 2 || s[1] != ':') throw ProblemError(where + ": expected q:, e: or h: field");
    const std::string_view body = s.substr(2);
    switch (s[0]) {
      case 'q':
        if (have_q) throw ProblemError(where + ": duplicate q field");
        p.query = detail::parse_var_list(body, where);
        have_q = true;
        break;
      case 'e':
        if (have_e) throw ProblemError(where + ": duplicate e field");
        parse_assignment_list(body, p.evidence_vars, p.evidence_values, where);
        have_e = true;
        break;
      case 'h':
        if (have_h) throw ProblemError(where + ": duplicate h field");
        p.hidden = detail::parse_var_list(body, where);
        have_h = true;
        break;
      default:
        throw ProblemError(where + ": unknown field '" + std::string(s) + "'");
    }
  }
  if (!have_q || !have_e || !have_h) throw ProblemError(where + ": needs q:, e: and h: fields");
  try {
    validate_problem(vars, p);
  } catch (const ProblemError& e) {
    throw ProblemError(where + ": " + e.what());
  }
  return p;
}

/// A problem file holds one problem per non-blank line; '#' starts a comment.
inline std::vector<MapProblem> parse_problems(std::string_view text, const VariableTable& vars) {
  std::vector<MapProblem> out;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::tokenize(lines[i]).empty()) continue;
    out.push_back(parse_problem_line(lines[i], vars, static_cast<int>(i) + 1));
  }
  return out;
}

inline std::string format_problem(const MapProblem& p) {
  auto list = [](const std::vector<int>& v) {
    if (v.empty()) return std::string("-");
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  std::string e;
  for (std::size_t i = 0; i < p.evidence_vars.size(); ++i)
    e += (i ? "," : "") + std::to_string(p.evidence_vars[i]) + "=" + std::to_string(p.evidence_values[i]);
  return "q:" + list(p.query) + " e:" + (e.empty() ? "-" : e) + " h:" + list(p.hidden);
}

}  // namespace spnmap
