#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "spnmap/spnmap.hpp"

namespace spnmap::test {

inline const char* kSpnA =
    "SPN 2\nL 0 1\nL 0 0\nL 1 1\nL 1 0\n"
    "S 0 0.9 1 0.1\nS 2 0.2 3 0.8\nS 0 0.3 1 0.7\nS 2 0.5 3 0.5\n"
    "P 4 5\nP 6 7\nS 8 0.4 9 0.6";

inline Spn spn_a() { return parse_spn(kSpnA); }
inline Spn single_indicator() { return parse_spn("SPN 1\nL 0 0"); }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

// Plain enumeration of every complete assignment, lexicographic order.
template <class F>
void for_each_assignment(const VariableTable& vars, F&& f) {
  Assignment x(static_cast<std::size_t>(vars.count()), 0);
  while (true) {
    f(x);
    int v = vars.count() - 1;
    while (v >= 0 && ++x[static_cast<std::size_t>(v)] == vars.cardinality(v)) x[static_cast<std::size_t>(v--)] = 0;
    if (v < 0) return;
  }
}

// Sum of S(x) over the complete assignments inside the space, by enumeration.
inline double brute_marginal(const Spn& spn, const PartialEvidence& space) {
  double total = 0.0;
  for_each_assignment(spn.variables(), [&](const Assignment& x) {
    for (int v = 0; v < spn.num_vars(); ++v)
      if (!space.allows(v, x[static_cast<std::size_t>(v)])) return;
    total += evaluate(spn, x);
  });
  return total;
}

inline RandomSpnOptions small_options(int vars) {
  RandomSpnOptions o;
  o.num_vars = vars;
  return o;
}

}  // namespace spnmap::test
