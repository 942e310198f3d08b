#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spnmap {

// Largest supported cardinality; value sets are 64-bit masks.
inline constexpr int kMaxCardinality = 64;

class SpnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VariableTable {
 public:
  VariableTable() = default;
  explicit VariableTable(int count, int default_card = 2)
      : card_(static_cast<std::size_t>(count), default_card) {
    if (count <= 0) throw SpnError("variable count must be positive");
    if (default_card < 2 || default_card > kMaxCardinality)
      throw SpnError("cardinality must be in [2, 64]");
  }

  int count() const { return static_cast<int>(card_.size()); }
  int cardinality(int var) const { return card_.at(static_cast<std::size_t>(var)); }

  void set_cardinality(int var, int k) {
    if (var < 0 || var >= count()) throw SpnError("CARD variable out of range");
    if (k < 2 || k > kMaxCardinality) throw SpnError("cardinality must be in [2, 64]");
    card_[static_cast<std::size_t>(var)] = k;
  }

  // Number of complete assignments, saturating at UINT64_MAX.
  std::uint64_t assignment_count() const {
    std::uint64_t n = 1;
    for (int k : card_) {
      if (n > UINT64_MAX / static_cast<std::uint64_t>(k)) return UINT64_MAX;
      n *= static_cast<std::uint64_t>(k);
    }
    return n;
  }

  bool operator==(const VariableTable&) const = default;

 private:
  std::vector<int> card_;
};

enum class NodeKind { kIndicator, kSum, kProduct };

struct Node {
  NodeKind kind = NodeKind::kIndicator;
  int var = -1;    // indicator only
  int value = -1;  // indicator only
  std::vector<int> children;
  std::vector<double> weights;  // sum only, parallel to children

  static Node indicator(int var, int value) {
    Node n;
    n.kind = NodeKind::kIndicator;
    n.var = var;
    n.value = value;
    return n;
  }
  static Node sum(std::vector<int> children, std::vector<double> weights) {
    Node n;
    n.kind = NodeKind::kSum;
    n.children = std::move(children);
    n.weights = std::move(weights);
    return n;
  }
  static Node product(std::vector<int> children) {
    Node n;
    n.kind = NodeKind::kProduct;
    n.children = std::move(children);
    return n;
  }

  bool is_indicator() const { return kind == NodeKind::kIndicator; }
  bool is_sum() const { return kind == NodeKind::kSum; }
  bool is_product() const { return kind == NodeKind::kProduct; }

  bool operator==(const Node&) const = default;
};

// Result of structural validation. Each list holds offending node ids.
struct ValidationReport {
  std::vector<int> bad_reference;     // child id out of range or not preceding the parent
  std::vector<int> bad_indicator;     // variable or value out of range
  std::vector<int> malformed;         // internal node without children, weight count mismatch
  std::vector<int> negative_weight;
  std::vector<int> incomplete;        // sum with unequal child scopes
  std::vector<int> not_decomposable;  // product with overlapping child scopes
  std::vector<int> multiple_roots;    // parentless nodes other than the root
  std::vector<int> unreachable;

  bool ok() const {
    return bad_reference.empty() && bad_indicator.empty() && malformed.empty() &&
           negative_weight.empty() && incomplete.empty() && not_decomposable.empty() &&
           multiple_roots.empty() && unreachable.empty();
  }

  std::string to_string() const {
    std::string out;
    auto section = [&out](const char* name, const std::vector<int>& ids) {
      if (ids.empty()) return;
      out += name;
      out += ':';
      for (int id : ids) out += ' ' + std::to_string(id);
      out += '\n';
    };
    section("bad reference", bad_reference);
    section("bad indicator", bad_indicator);
    section("malformed node", malformed);
    section("negative weight", negative_weight);
    section("completeness violation", incomplete);
    section("decomposability violation", not_decomposable);
    section("multiple roots", multiple_roots);
    section("unreachable", unreachable);
    return out;
  }
};

class ValidationError : public SpnError {
 public:
  explicit ValidationError(ValidationReport report)
      : SpnError("invalid SPN:\n" + report.to_string()), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

namespace detail {

inline std::vector<int> merge_scopes(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool scopes_intersect(const std::vector<int>& a, const std::vector<int>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

// Scopes as sorted variable lists. Assumes references already checked.
inline std::vector<std::vector<int>> compute_scopes(std::span<const Node> nodes) {
  std::vector<std::vector<int>> scopes(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    if (n.is_indicator()) {
      scopes[i] = {n.var};
      continue;
    }
    for (int c : n.children) scopes[i] = merge_scopes(scopes[i], scopes[static_cast<std::size_t>(c)]);
  }
  return scopes;
}

}  // namespace detail

// Checks a node list in storage order; the root is the last node.
inline ValidationReport validate(const VariableTable& vars, std::span<const Node> nodes) {
  ValidationReport r;
  const int n = static_cast<int>(nodes.size());
  if (n == 0) {
    r.malformed.push_back(-1);
    return r;
  }
  bool refs_ok = true;
  for (int i = 0; i < n; ++i) {
    const Node& node = nodes[static_cast<std::size_t>(i)];
    if (node.is_indicator()) {
      if (node.var < 0 || node.var >= vars.count() || node.value < 0 ||
          node.value >= vars.cardinality(node.var))
        r.bad_indicator.push_back(i);
      if (!node.children.empty()) r.malformed.push_back(i);
      continue;
    }
    if (node.children.empty() || (node.is_sum() && node.weights.size() != node.children.size()) ||
        (node.is_product() && !node.weights.empty()))
      r.malformed.push_back(i);
    for (int c : node.children) {
      if (c < 0 || c >= i) {
        r.bad_reference.push_back(i);
        refs_ok = false;
        break;
      }
    }
    for (double w : node.weights) {
      if (!(w >= 0.0)) {
        r.negative_weight.push_back(i);
        break;
      }
    }
  }
  if (!refs_ok || !r.bad_indicator.empty()) return r;

  const auto scopes = detail::compute_scopes(nodes);
  for (int i = 0; i < n; ++i) {
    const Node& node = nodes[static_cast<std::size_t>(i)];
    if (node.is_sum()) {
      for (int c : node.children) {
        if (scopes[static_cast<std::size_t>(c)] != scopes[static_cast<std::size_t>(node.children.front())]) {
          r.incomplete.push_back(i);
          break;
        }
      }
    } else if (node.is_product()) {
      std::vector<int> seen;
      for (int c : node.children) {
        const auto& sc = scopes[static_cast<std::size_t>(c)];
        if (detail::scopes_intersect(seen, sc)) {
          r.not_decomposable.push_back(i);
          break;
        }
        seen = detail::merge_scopes(seen, sc);
      }
    }
  }

  std::vector<char> has_parent(static_cast<std::size_t>(n), 0);
  std::vector<char> reachable(static_cast<std::size_t>(n), 0);
  reachable[static_cast<std::size_t>(n - 1)] = 1;
  for (int i = n - 1; i >= 0; --i) {
    for (int c : nodes[static_cast<std::size_t>(i)].children) {
      has_parent[static_cast<std::size_t>(c)] = 1;
      if (reachable[static_cast<std::size_t>(i)]) reachable[static_cast<std::size_t>(c)] = 1;
    }
  }
  for (int i = 0; i + 1 < n; ++i) {
    if (!has_parent[static_cast<std::size_t>(i)]) r.multiple_roots.push_back(i);
    else if (!reachable[static_cast<std::size_t>(i)]) r.unreachable.push_back(i);
  }
  return r;
}

/// A validated, immutable sum-product network.
///
/// Nodes are stored children-before-parents and the root is the last node, so
/// a forward sweep over node ids is a bottom-up pass and a reverse sweep is
/// top-down.
class Spn {
 public:
  Spn(VariableTable vars, std::vector<Node> nodes) : vars_(std::move(vars)), nodes_(std::move(nodes)) {
    ValidationReport r = spnmap::validate(vars_, nodes_);
    if (!r.ok()) throw ValidationError(std::move(r));
    scopes_ = detail::compute_scopes(nodes_);
    in_scope_.assign(static_cast<std::size_t>(vars_.count()), 0);
    for (int v : scopes_.back()) in_scope_[static_cast<std::size_t>(v)] = 1;
  }

  const VariableTable& variables() const { return vars_; }
  int num_vars() const { return vars_.count(); }
  int size() const { return static_cast<int>(nodes_.size()); }
  int root() const { return size() - 1; }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<int>& scope(int id) const { return scopes_.at(static_cast<std::size_t>(id)); }

  bool root_covers(int var) const { return in_scope_[static_cast<std::size_t>(var)] != 0; }

  int arc_count() const {
    int a = 0;
    for (const Node& n : nodes_) a += static_cast<int>(n.children.size());
    return a;
  }

  bool operator==(const Spn& o) const { return vars_ == o.vars_ && nodes_ == o.nodes_; }

 private:
  VariableTable vars_;
  std::vector<Node> nodes_;
  std::vector<std::vector<int>> scopes_;
  std::vector<char> in_scope_;
};

inline ValidationReport validate(const Spn& spn) { return validate(spn.variables(), spn.nodes()); }

/// Per-variable sets of admitted values. A complete assignment is the case
/// where every set is a singleton.
class PartialEvidence {
 public:
  PartialEvidence() = default;

  // The full space val(X).
  explicit PartialEvidence(const VariableTable& vars) : card_(static_cast<std::size_t>(vars.count())) {
    masks_.resize(card_.size());
    for (int v = 0; v < vars.count(); ++v) {
      card_[static_cast<std::size_t>(v)] = vars.cardinality(v);
      masks_[static_cast<std::size_t>(v)] = full_mask(vars.cardinality(v));
    }
  }

  static PartialEvidence from_assignment(const VariableTable& vars, std::span<const int> x) {
    if (static_cast<int>(x.size()) != vars.count()) throw std::invalid_argument("assignment size mismatch");
    PartialEvidence e(vars);
    for (int v = 0; v < vars.count(); ++v) e.set_value(v, x[static_cast<std::size_t>(v)]);
    return e;
  }

  int num_vars() const { return static_cast<int>(masks_.size()); }
  int cardinality(int var) const { return card_[static_cast<std::size_t>(var)]; }
  std::uint64_t mask(int var) const { return masks_[static_cast<std::size_t>(var)]; }

  bool allows(int var, int value) const { return (mask(var) >> value) & 1U; }
  int count(int var) const { return std::popcount(mask(var)); }
  bool determined(int var) const { return count(var) == 1; }
  // Lowest admitted value; meaningful for determined variables.
  int first_value(int var) const { return std::countr_zero(mask(var)); }

  std::vector<int> values(int var) const {
    std::vector<int> out;
    for (std::uint64_t m = mask(var); m != 0; m &= m - 1) out.push_back(std::countr_zero(m));
    return out;
  }

  void set_mask(int var, std::uint64_t m) { masks_[static_cast<std::size_t>(var)] = m & full_mask(cardinality(var)); }
  void set_value(int var, int value) {
    if (value < 0 || value >= cardinality(var)) throw std::out_of_range("value out of range");
    masks_[static_cast<std::size_t>(var)] = std::uint64_t{1} << value;
  }
  void allow_all(int var) { masks_[static_cast<std::size_t>(var)] = full_mask(cardinality(var)); }
  void remove(int var, int value) { masks_[static_cast<std::size_t>(var)] &= ~(std::uint64_t{1} << value); }

  // An empty per-variable set marks a pruned space.
  bool empty() const {
    return std::any_of(masks_.begin(), masks_.end(), [](std::uint64_t m) { return m == 0; });
  }
  void clear() { std::fill(masks_.begin(), masks_.end(), 0); }

  bool complete() const {
    return std::all_of(masks_.begin(), masks_.end(), [](std::uint64_t m) { return std::popcount(m) == 1; });
  }

  // The unique assignment of a complete space.
  std::vector<int> assignment() const {
    std::vector<int> x(masks_.size());
    for (int v = 0; v < num_vars(); ++v) x[static_cast<std::size_t>(v)] = first_value(v);
    return x;
  }

  bool operator==(const PartialEvidence&) const = default;

 private:
  static std::uint64_t full_mask(int k) { return k >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1; }

  std::vector<int> card_;
  std::vector<std::uint64_t> masks_;
};

using Assignment = std::vector<int>;

}  // namespace spnmap
