#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "spnmap/bn.hpp"
#include "spnmap/spn.hpp"

namespace spnmap {

struct RandomSpnOptions {
  int num_vars = 8;
  int cardinality = 2;
  int max_sum_children = 3;
  int max_product_children = 3;
  // Sums below this depth get a single child, which bounds the size.
  int branching_depth = 3;
  double share_probability = 0.3;  // reuse an earlier sub-network with the same scope
  double min_weight = 0.0;
  double max_weight = 1.0;
};

/// Random complete and decomposable SPN built by alternating sums (mixtures
/// over the same scope) and products (random partitions of the scope).
/// Indicators are shared, and sub-networks over a repeated scope are reused
/// with `share_probability`, so the result is a DAG.
inline Spn random_spn(const RandomSpnOptions& opt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VariableTable vars(opt.num_vars, opt.cardinality);
  std::vector<Node> nodes;
  std::vector<std::vector<int>> leaf(static_cast<std::size_t>(opt.num_vars));
  for (int v = 0; v < opt.num_vars; ++v) {
    for (int x = 0; x < opt.cardinality; ++x) {
      leaf[static_cast<std::size_t>(v)].push_back(static_cast<int>(nodes.size()));
      nodes.push_back(Node::indicator(v, x));
    }
  }
  std::uniform_real_distribution<double> weight(opt.min_weight, opt.max_weight);
  auto coin = [&rng](double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; };
  auto pick = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::map<std::vector<int>, std::vector<int>> by_scope;

  auto add = [&nodes](Node n) {
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size()) - 1;
  };

  auto make_sum = [&](auto& self, const std::vector<int>& scope, int depth) -> int {
    auto& pool = by_scope[scope];
    if (!pool.empty() && coin(opt.share_probability))
      return pool[static_cast<std::size_t>(pick(0, static_cast<int>(pool.size()) - 1))];
    std::vector<int> ch;
    std::vector<double> w;
    if (scope.size() == 1) {
      for (int id : leaf[static_cast<std::size_t>(scope[0])]) {
        ch.push_back(id);
        w.push_back(weight(rng));
      }
    } else {
      const int k = depth < opt.branching_depth ? pick(2, std::max(2, opt.max_sum_children)) : 1;
      for (int c = 0; c < k; ++c) {
        std::vector<int> perm = scope;
        std::shuffle(perm.begin(), perm.end(), rng);
        const int parts = pick(2, std::min<int>(static_cast<int>(perm.size()), std::max(2, opt.max_product_children)));
        // Random cut points give `parts` nonempty blocks.
        std::vector<int> cuts(perm.size() - 1);
        std::iota(cuts.begin(), cuts.end(), 1);
        std::shuffle(cuts.begin(), cuts.end(), rng);
        cuts.resize(static_cast<std::size_t>(parts - 1));
        std::sort(cuts.begin(), cuts.end());
        cuts.push_back(static_cast<int>(perm.size()));
        std::vector<int> factors;
        int from = 0;
        for (int cut : cuts) {
          std::vector<int> block(perm.begin() + from, perm.begin() + cut);
          std::sort(block.begin(), block.end());
          factors.push_back(self(self, block, depth + 1));
          from = cut;
        }
        ch.push_back(add(Node::product(std::move(factors))));
        w.push_back(weight(rng));
      }
    }
    const int id = add(Node::sum(std::move(ch), std::move(w)));
    by_scope[scope].push_back(id);
    return id;
  };

  std::vector<int> all(static_cast<std::size_t>(opt.num_vars));
  std::iota(all.begin(), all.end(), 0);
  if (opt.num_vars == 1) {
    std::vector<int> ch = leaf[0];
    std::vector<double> w;
    for (std::size_t i = 0; i < ch.size(); ++i) w.push_back(weight(rng));
    nodes.push_back(Node::sum(std::move(ch), std::move(w)));
  } else {
    make_sum(make_sum, all, 0);
  }
  // Compact away anything the root does not reach.
  std::vector<char> live(nodes.size(), 0);
  live.back() = 1;
  for (std::size_t i = nodes.size(); i-- > 0;)
    if (live[i])
      for (int c : nodes[i].children) live[static_cast<std::size_t>(c)] = 1;
  std::vector<int> remap(nodes.size(), -1);
  std::vector<Node> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!live[i]) continue;
    for (int& c : nodes[i].children) c = remap[static_cast<std::size_t>(c)];
    remap[i] = static_cast<int>(out.size());
    out.push_back(std::move(nodes[i]));
  }
  return Spn(std::move(vars), std::move(out));
}

/// Draws random SPNs from successive seeds until the node count lands in
/// [min_nodes, max_nodes]. Deterministic in `seed`.
inline Spn random_spn_sized(RandomSpnOptions opt, std::uint64_t seed, int min_nodes, int max_nodes) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Spn s = random_spn(opt, rng());
    if (s.size() >= min_nodes && s.size() <= max_nodes) return s;
    // Nudge the branching depth toward the target size.
    if (s.size() > max_nodes && opt.branching_depth > 1 && attempt % 8 == 7) --opt.branching_depth;
    if (s.size() < min_nodes && attempt % 8 == 7) ++opt.branching_depth;
  }
  throw SpnError("could not generate an SPN in the requested size range");
}

/// Random tree BN: variable v > 0 gets a parent among 0..v-1; CPT rows are
/// normalised uniform draws.
inline TreeBn random_tree_bn(int num_vars, int max_card, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TreeBn bn;
  bn.vars = VariableTable(num_vars);
  for (int v = 0; v < num_vars; ++v) bn.vars.set_cardinality(v, std::uniform_int_distribution<int>(2, max_card)(rng));
  bn.parent.assign(static_cast<std::size_t>(num_vars), -1);
  for (int v = 1; v < num_vars; ++v) bn.parent[static_cast<std::size_t>(v)] = std::uniform_int_distribution<int>(0, v - 1)(rng);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  bn.cpt.resize(static_cast<std::size_t>(num_vars));
  for (int v = 0; v < num_vars; ++v) {
    const int p = bn.parent[static_cast<std::size_t>(v)];
    const int rows = p < 0 ? 1 : bn.vars.cardinality(p);
    for (int r = 0; r < rows; ++r) {
      std::vector<double> row(static_cast<std::size_t>(bn.vars.cardinality(v)));
      double total = 0.0;
      for (auto& x : row) total += (x = u(rng));
      for (auto& x : row) x /= total;
      bn.cpt[static_cast<std::size_t>(v)].push_back(std::move(row));
    }
  }
  return bn;
}

/// Random nonempty value set per variable.
inline PartialEvidence random_partial_evidence(const VariableTable& vars, std::mt19937_64& rng) {
  PartialEvidence e(vars);
  for (int v = 0; v < vars.count(); ++v) {
    const int k = vars.cardinality(v);
    std::uint64_t m = 0;
    while (m == 0) m = rng() & (k >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1);
    e.set_mask(v, m);
  }
  return e;
}

inline Assignment random_assignment(const VariableTable& vars, std::mt19937_64& rng) {
  Assignment x(static_cast<std::size_t>(vars.count()));
  for (int v = 0; v < vars.count(); ++v)
    x[static_cast<std::size_t>(v)] = std::uniform_int_distribution<int>(0, vars.cardinality(v) - 1)(rng);
  return x;
}

}  // namespace spnmap
