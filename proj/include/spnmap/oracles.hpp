#pragma once

// Exponential-time reference computations. Intended for tests and for
// verifying solvers on small instances.

#include <chrono>
#include <cstdint>
#include <vector>

#include "spnmap/evaluate.hpp"
#include "spnmap/solve_result.hpp"
#include "spnmap/spn.hpp"

namespace spnmap {

struct ParseTree {
  std::vector<int> choice;  // per node: chosen child position for included sums, -1 otherwise
  double value = 1.0;
  Assignment assignment;    // variables outside the root scope are 0
};

class OverflowError : public SpnError {
 public:
  using SpnError::SpnError;
};

namespace detail {

struct PartialTree {
  double value = 1.0;
  std::vector<std::pair<int, int>> choices;  // (sum id, child position)
  std::vector<std::pair<int, int>> leaves;   // (var, value)
};

}  // namespace detail

/// Every parse tree of `spn`, in child-index lexicographic order.
inline std::vector<ParseTree> enumerate_parse_trees(const Spn& spn, std::size_t cap = 1u << 20) {
  std::vector<std::vector<detail::PartialTree>> trees(static_cast<std::size_t>(spn.size()));
  for (int i = 0; i < spn.size(); ++i) {
    const Node& n = spn.node(i);
    auto& out = trees[static_cast<std::size_t>(i)];
    if (n.is_indicator()) {
      out.push_back({1.0, {}, {{n.var, n.value}}});
    } else if (n.is_sum()) {
      for (std::size_t k = 0; k < n.children.size(); ++k) {
        for (const auto& t : trees[static_cast<std::size_t>(n.children[k])]) {
          if (out.size() >= cap) throw OverflowError("parse tree count exceeds cap");
          detail::PartialTree nt = t;
          nt.value = n.weights[k] * t.value;
          nt.choices.insert(nt.choices.begin(), {i, static_cast<int>(k)});
          out.push_back(std::move(nt));
        }
      }
    } else {
      out.push_back({1.0, {}, {}});
      for (int c : n.children) {
        const auto& sub = trees[static_cast<std::size_t>(c)];
        if (out.size() * sub.size() > cap) throw OverflowError("parse tree count exceeds cap");
        std::vector<detail::PartialTree> next;
        next.reserve(out.size() * sub.size());
        for (const auto& a : out) {
          for (const auto& b : sub) {
            detail::PartialTree nt = a;
            nt.value = a.value * b.value;
            nt.choices.insert(nt.choices.end(), b.choices.begin(), b.choices.end());
            nt.leaves.insert(nt.leaves.end(), b.leaves.begin(), b.leaves.end());
            next.push_back(std::move(nt));
          }
        }
        out = std::move(next);
      }
    }
  }

  std::vector<ParseTree> result;
  for (auto& t : trees.back()) {
    ParseTree pt;
    pt.choice.assign(static_cast<std::size_t>(spn.size()), -1);
    for (auto [id, k] : t.choices) pt.choice[static_cast<std::size_t>(id)] = k;
    pt.value = t.value;
    pt.assignment.assign(static_cast<std::size_t>(spn.num_vars()), 0);
    for (auto [v, x] : t.leaves) pt.assignment[static_cast<std::size_t>(v)] = x;
    result.push_back(std::move(pt));
  }
  return result;
}

/// Exhaustive MAX; ties go to the lexicographically smallest assignment.
inline SolveResult brute_force_max(const Spn& spn, std::uint64_t cap = std::uint64_t{1} << 20) {
  const auto start = std::chrono::steady_clock::now();
  const VariableTable& vars = spn.variables();
  if (vars.assignment_count() > cap) throw OverflowError("assignment space exceeds brute-force cap");

  SolveResult r;
  Assignment x(static_cast<std::size_t>(vars.count()), 0);
  PartialEvidence e = PartialEvidence::from_assignment(vars, x);
  std::vector<double> scratch;
  while (true) {
    const double s = evaluate(spn, e, scratch);
    if (s > r.score) {
      r.score = s;
      r.assignment = x;
    }
    // Odometer with the last variable fastest gives lexicographic order.
    int v = vars.count() - 1;
    while (v >= 0) {
      auto& xv = x[static_cast<std::size_t>(v)];
      if (++xv < vars.cardinality(v)) {
        e.set_value(v, xv);
        break;
      }
      xv = 0;
      e.set_value(v, 0);
      --v;
    }
    if (v < 0) break;
  }
  r.status = SolveStatus::kFinished;
  r.zero_mass = r.score == 0.0;
  r.elapsed = std::chrono::steady_clock::now() - start;
  return r;
}

}  // namespace spnmap
