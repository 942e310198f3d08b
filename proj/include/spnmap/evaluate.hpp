#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "spnmap/spn.hpp"

namespace spnmap {

namespace detail {

inline void check_arity(const Spn& spn, const PartialEvidence& x) {
  if (x.num_vars() != spn.num_vars())
    throw std::invalid_argument("evidence has " + std::to_string(x.num_vars()) + " variables, SPN has " +
                                std::to_string(spn.num_vars()));
}

}  // namespace detail

/// Bottom-up pass computing every node value at lambda(x). `values` is
/// caller-owned scratch and is resized to the node count.
inline void evaluate_nodes(const Spn& spn, const PartialEvidence& x, std::vector<double>& values) {
  detail::check_arity(spn, x);
  values.resize(static_cast<std::size_t>(spn.size()));
  for (int i = 0; i < spn.size(); ++i) {
    const Node& n = spn.node(i);
    double v;
    switch (n.kind) {
      case NodeKind::kIndicator:
        v = x.allows(n.var, n.value) ? 1.0 : 0.0;
        break;
      case NodeKind::kSum:
        v = 0.0;
        for (std::size_t k = 0; k < n.children.size(); ++k)
          v += n.weights[k] * values[static_cast<std::size_t>(n.children[k])];
        break;
      case NodeKind::kProduct:
      default:
        v = 1.0;
        for (int c : n.children) v *= values[static_cast<std::size_t>(c)];
        break;
    }
    values[static_cast<std::size_t>(i)] = v;
  }
}

inline double evaluate(const Spn& spn, const PartialEvidence& x, std::vector<double>& scratch) {
  evaluate_nodes(spn, x, scratch);
  return scratch.back();
}

inline double evaluate(const Spn& spn, const PartialEvidence& x) {
  std::vector<double> scratch;
  return evaluate(spn, x, scratch);
}

inline double evaluate(const Spn& spn, std::span<const int> assignment) {
  return evaluate(spn, PartialEvidence::from_assignment(spn.variables(), assignment));
}

/// Partial derivatives of the network polynomial with respect to every
/// indicator, evaluated at lambda(X). Entry (var, x) is the SPN value at the
/// modified evidence {x} x X[rest].
struct DerivativeTable {
  double root_value = 0.0;
  std::vector<std::vector<double>> entries;  // [var][value]

  double at(int var, int value) const {
    return entries[static_cast<std::size_t>(var)][static_cast<std::size_t>(value)];
  }
};

struct DerivativeScratch {
  std::vector<double> values;
  std::vector<double> grad;
};

inline void derivatives(const Spn& spn, const PartialEvidence& x, DerivativeTable& out, DerivativeScratch& s) {
  evaluate_nodes(spn, x, s.values);
  const auto n = static_cast<std::size_t>(spn.size());
  s.grad.assign(n, 0.0);
  s.grad[n - 1] = 1.0;

  out.root_value = s.values.back();
  out.entries.resize(static_cast<std::size_t>(spn.num_vars()));
  for (int v = 0; v < spn.num_vars(); ++v) {
    auto& row = out.entries[static_cast<std::size_t>(v)];
    // A variable the root does not depend on leaves the value unchanged.
    row.assign(static_cast<std::size_t>(spn.variables().cardinality(v)),
               spn.root_covers(v) ? 0.0 : out.root_value);
  }

  for (int i = spn.size() - 1; i >= 0; --i) {
    const Node& node = spn.node(i);
    const double d = s.grad[static_cast<std::size_t>(i)];
    if (node.is_indicator()) {
      out.entries[static_cast<std::size_t>(node.var)][static_cast<std::size_t>(node.value)] += d;
      continue;
    }
    if (d == 0.0) continue;
    if (node.is_sum()) {
      for (std::size_t k = 0; k < node.children.size(); ++k)
        s.grad[static_cast<std::size_t>(node.children[k])] += node.weights[k] * d;
      continue;
    }
    // Zero-count scheme: partial wrt child c is the product of the others.
    int zeros = 0;
    double nonzero = 1.0;
    for (int c : node.children) {
      const double v = s.values[static_cast<std::size_t>(c)];
      if (v == 0.0) ++zeros; else nonzero *= v;
    }
    if (zeros > 1) continue;
    for (int c : node.children) {
      const double v = s.values[static_cast<std::size_t>(c)];
      double partial;
      if (zeros == 0) partial = nonzero / v;
      else partial = (v == 0.0) ? nonzero : 0.0;
      s.grad[static_cast<std::size_t>(c)] += d * partial;
    }
  }
}

inline DerivativeTable derivatives(const Spn& spn, const PartialEvidence& x) {
  DerivativeTable t;
  DerivativeScratch s;
  derivatives(spn, x, t, s);
  return t;
}

}  // namespace spnmap
