#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "spnmap/evaluate.hpp"
#include "spnmap/solve_result.hpp"
#include "spnmap/spn.hpp"

namespace spnmap {

namespace detail {

inline SolveResult timed_out_result(std::chrono::steady_clock::time_point start) {
  SolveResult r;
  r.status = SolveStatus::kTimeoutNoResult;
  r.elapsed = std::chrono::steady_clock::now() - start;
  return r;
}

inline void finish(const Spn& spn, SolveResult& r, std::chrono::steady_clock::time_point start) {
  r.score = evaluate(spn, r.assignment);
  r.zero_mass = r.score == 0.0;
  r.elapsed = std::chrono::steady_clock::now() - start;
}

// Walks the parse tree selected by `pick` (sum id -> child position) from the
// root and writes the leaves into an assignment. Variables the tree does not
// reach are left at 0.
template <typename Pick>
Assignment descend(const Spn& spn, Pick&& pick) {
  Assignment x(static_cast<std::size_t>(spn.num_vars()), 0);
  std::vector<int> stack{spn.root()};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Node& n = spn.node(id);
    if (n.is_indicator()) {
      x[static_cast<std::size_t>(n.var)] = n.value;
    } else if (n.is_sum()) {
      stack.push_back(n.children[static_cast<std::size_t>(pick(id))]);
    } else {
      for (int c : n.children) stack.push_back(c);
    }
  }
  return x;
}

inline std::uint64_t uncovered_vars(const Spn& spn) {
  std::uint64_t n = 0;
  for (int v = 0; v < spn.num_vars(); ++v) n += spn.root_covers(v) ? 0 : 1;
  return n;
}

}  // namespace detail

/// Max-product pass with sums replaced by maxima, then a top-down descent
/// choosing the first maximising child. Returns the SPN score of the sample;
/// the winning tree value is in stats.tree_value.
inline SolveResult best_tree(const Spn& spn, Deadline deadline = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (deadline.expired()) return detail::timed_out_result(start);
  std::vector<double> best(static_cast<std::size_t>(spn.size()));
  std::vector<int> arg(static_cast<std::size_t>(spn.size()), -1);
  for (int i = 0; i < spn.size(); ++i) {
    const Node& n = spn.node(i);
    double v = 1.0;
    if (n.is_sum()) {
      v = -1.0;
      for (std::size_t k = 0; k < n.children.size(); ++k) {
        const double c = n.weights[k] * best[static_cast<std::size_t>(n.children[k])];
        if (c > v) {
          v = c;
          arg[static_cast<std::size_t>(i)] = static_cast<int>(k);
        }
      }
    } else if (n.is_product()) {
      for (int c : n.children) v *= best[static_cast<std::size_t>(c)];
    }
    best[static_cast<std::size_t>(i)] = v;
  }
  SolveResult r;
  r.assignment = detail::descend(spn, [&](int id) { return arg[static_cast<std::size_t>(id)]; });
  r.stats.tree_value = best.back();
  r.stats.defaulted_vars = detail::uncovered_vars(spn);
  r.status = SolveStatus::kFinished;
  detail::finish(spn, r, start);
  return r;
}

/// Greedy top-down parse tree: each visited sum takes the child with the
/// largest locally normalised weight.
inline SolveResult normalized_greedy(const Spn& spn, Deadline deadline = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (deadline.expired()) return detail::timed_out_result(start);
  SolveResult r;
  r.assignment = detail::descend(spn, [&](int id) {
    const Node& n = spn.node(id);
    double total = 0.0;
    for (double w : n.weights) total += w;
    if (total == 0.0) {
      ++r.stats.zero_weight_sums;
      return 0;
    }
    int arg = 0;
    double best = -1.0;
    for (std::size_t k = 0; k < n.weights.size(); ++k) {
      const double p = n.weights[k] / total;
      if (p > best) {
        best = p;
        arg = static_cast<int>(k);
      }
    }
    return arg;
  });
  r.stats.defaulted_vars = detail::uncovered_vars(spn);
  r.status = SolveStatus::kFinished;
  detail::finish(spn, r, start);
  return r;
}

struct BeamOptions {
  int beam_size = 10;
  std::uint64_t seed = 0;
  bool seed_with_greedy = false;          // member 0 starts at the NG sample
  std::vector<Assignment> initial;        // explicit start beam; overrides random draws
  std::uint64_t max_rounds = 100000;
};

/// Beam search over one-variable changes. Each round, one derivative pass per
/// member scores all of its single-variable mutations at once; members and
/// mutations are pooled and the best `beam_size` distinct assignments kept
/// (score descending, lexicographically smaller assignment on ties). Stops
/// when the beam no longer changes.
inline SolveResult beam_search(const Spn& spn, const BeamOptions& opt, Deadline deadline = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (deadline.expired()) return detail::timed_out_result(start);
  if (opt.beam_size < 1) throw std::invalid_argument("beam size must be >= 1");
  const VariableTable& vars = spn.variables();
  const auto k = static_cast<std::size_t>(opt.beam_size);

  std::vector<Assignment> beam;
  auto add_unique = [&beam](Assignment x) {
    if (std::find(beam.begin(), beam.end(), x) == beam.end()) beam.push_back(std::move(x));
  };
  if (!opt.initial.empty()) {
    for (const auto& x : opt.initial) {
      if (static_cast<int>(x.size()) != vars.count()) throw std::invalid_argument("initial beam member has wrong size");
      if (beam.size() < k) add_unique(x);
    }
  } else {
    if (opt.seed_with_greedy) add_unique(normalized_greedy(spn).assignment);
    std::mt19937_64 rng(opt.seed);
    const std::uint64_t space = vars.assignment_count();
    const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(k, space));
    // Bounded number of draws; duplicates are dropped.
    for (std::size_t tries = 0; beam.size() < want && tries < 16 * k + 64; ++tries) {
      Assignment x(static_cast<std::size_t>(vars.count()));
      for (int v = 0; v < vars.count(); ++v)
        x[static_cast<std::size_t>(v)] = std::uniform_int_distribution<int>(0, vars.cardinality(v) - 1)(rng);
      add_unique(std::move(x));
    }
  }

  struct Scored {
    double score;
    Assignment x;
  };
  auto better = [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.x < b.x;
  };

  std::vector<Scored> members;
  std::vector<double> scratch;
  for (auto& x : beam) members.push_back({evaluate(spn, PartialEvidence::from_assignment(vars, x), scratch), x});
  std::sort(members.begin(), members.end(), better);

  SolveResult r;
  DerivativeTable d;
  DerivativeScratch ds;
  bool timed_out = false;
  while (r.stats.rounds < opt.max_rounds) {
    if (deadline.expired()) {
      timed_out = true;
      break;
    }
    ++r.stats.rounds;
    std::map<Assignment, double> pool;
    for (const auto& m : members) pool[m.x] = m.score;
    for (const auto& m : members) {
      derivatives(spn, PartialEvidence::from_assignment(vars, m.x), d, ds);
      Assignment y = m.x;
      for (int v = 0; v < vars.count(); ++v) {
        const int keep = y[static_cast<std::size_t>(v)];
        for (int x = 0; x < vars.cardinality(v); ++x) {
          if (x == keep) continue;
          y[static_cast<std::size_t>(v)] = x;
          pool.try_emplace(y, d.at(v, x));
        }
        y[static_cast<std::size_t>(v)] = keep;
      }
    }
    std::vector<Scored> cand;
    cand.reserve(pool.size());
    for (auto& [x, s] : pool) cand.push_back({s, x});
    const std::size_t keep = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), better);
    cand.resize(keep);
    // Re-score exactly so stored scores are evaluate() outputs.
    for (auto& c : cand) c.score = evaluate(spn, PartialEvidence::from_assignment(vars, c.x), scratch);
    std::sort(cand.begin(), cand.end(), better);
    bool same = cand.size() == members.size();
    for (std::size_t i = 0; same && i < cand.size(); ++i) same = cand[i].x == members[i].x;
    members = std::move(cand);
    if (same) break;
  }
  r.assignment = members.front().x;
  r.status = timed_out ? SolveStatus::kTimeoutWithResult : SolveStatus::kFinished;
  detail::finish(spn, r, start);
  return r;
}

inline SolveResult beam_search(const Spn& spn, int beam_size, std::uint64_t seed, Deadline deadline = {}) {
  BeamOptions opt;
  opt.beam_size = beam_size;
  opt.seed = seed;
  return beam_search(spn, opt, deadline);
}

/// Argmax-product. Every node carries one candidate assignment over its scope:
/// indicators their own value, products the union of their children's, and a
/// sum the candidate of whichever child scores highest when the sub-network
/// rooted at the sum is evaluated on it (first child on ties). Costs one
/// sub-network evaluation per sum arc, so quadratic in the worst case.
inline SolveResult argmax_product(const Spn& spn, Deadline deadline = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (deadline.expired()) return detail::timed_out_result(start);
  const auto n = static_cast<std::size_t>(spn.size());
  std::vector<std::vector<std::pair<int, int>>> cand(n);
  std::vector<double> values(n);
  std::vector<char> mark(n, 0);
  std::vector<int> sub;
  PartialEvidence ev(spn.variables());

  for (int i = 0; i < spn.size(); ++i) {
    const Node& node = spn.node(i);
    auto& out = cand[static_cast<std::size_t>(i)];
    if (node.is_indicator()) {
      out = {{node.var, node.value}};
      continue;
    }
    if (node.is_product()) {
      for (int c : node.children) {
        const auto& cc = cand[static_cast<std::size_t>(c)];
        out.insert(out.end(), cc.begin(), cc.end());
      }
      continue;
    }
    if (deadline.expired()) return detail::timed_out_result(start);
    // Descendants of this sum in storage order.
    sub.clear();
    std::vector<int> stack{i};
    mark[static_cast<std::size_t>(i)] = 1;
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      sub.push_back(id);
      for (int c : spn.node(id).children) {
        if (!mark[static_cast<std::size_t>(c)]) {
          mark[static_cast<std::size_t>(c)] = 1;
          stack.push_back(c);
        }
      }
    }
    std::sort(sub.begin(), sub.end());
    for (int id : sub) mark[static_cast<std::size_t>(id)] = 0;

    int arg = 0;
    double best = -1.0;
    for (std::size_t k = 0; k < node.children.size(); ++k) {
      const auto& cc = cand[static_cast<std::size_t>(node.children[k])];
      for (auto [v, x] : cc) ev.set_value(v, x);
      for (int id : sub) {
        const Node& m = spn.node(id);
        double v;
        if (m.is_indicator()) {
          v = ev.allows(m.var, m.value) ? 1.0 : 0.0;
        } else if (m.is_sum()) {
          v = 0.0;
          for (std::size_t j = 0; j < m.children.size(); ++j) v += m.weights[j] * values[static_cast<std::size_t>(m.children[j])];
        } else {
          v = 1.0;
          for (int c : m.children) v *= values[static_cast<std::size_t>(c)];
        }
        values[static_cast<std::size_t>(id)] = v;
      }
      for (auto [v, x] : cc) ev.allow_all(v);
      const double s = values[static_cast<std::size_t>(i)];
      if (s > best) {
        best = s;
        arg = static_cast<int>(k);
      }
    }
    out = cand[static_cast<std::size_t>(node.children[static_cast<std::size_t>(arg)])];
  }

  SolveResult r;
  r.assignment.assign(static_cast<std::size_t>(spn.num_vars()), 0);
  for (auto [v, x] : cand.back()) r.assignment[static_cast<std::size_t>(v)] = x;
  r.stats.defaulted_vars = detail::uncovered_vars(spn);
  r.status = SolveStatus::kFinished;
  detail::finish(spn, r, start);
  return r;
}

/// Up to K best values of a multiset with backtracking provenance, in the
/// deterministic order (value descending, then provenance ascending).
struct TopKList {
  std::vector<double> values;
  std::vector<std::pair<int, int>> from;  // sum: (child position, entry); product merge: (left entry, right entry)

  std::size_t size() const { return values.size(); }
};

/// best_K of the union over children of {w_c * m | m in lists[c]}, via a heap
/// seeded with each child's head.
inline TopKList best_k_sum(const std::vector<const std::vector<double>*>& lists, const std::vector<double>& weights,
                           std::size_t k) {
  struct Item {
    double value;
    int child;
    int entry;
  };
  auto after = [](const Item& a, const Item& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.child != b.child) return a.child > b.child;
    return a.entry > b.entry;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(after)> heap(after);
  for (std::size_t c = 0; c < lists.size(); ++c)
    if (!lists[c]->empty()) heap.push({weights[c] * lists[c]->front(), static_cast<int>(c), 0});
  TopKList out;
  while (!heap.empty() && out.size() < k) {
    const Item it = heap.top();
    heap.pop();
    out.values.push_back(it.value);
    out.from.emplace_back(it.child, it.entry);
    const auto& l = *lists[static_cast<std::size_t>(it.child)];
    const auto next = static_cast<std::size_t>(it.entry) + 1;
    if (next < l.size()) heap.push({weights[static_cast<std::size_t>(it.child)] * l[next], it.child, static_cast<int>(next)});
  }
  return out;
}

/// best_K of {a * b | a in left, b in right} for two descending lists. Each
/// pop of (i, j) pushes (i+1, j), and (0, j+1) when i == 0, so every pair
/// enters the heap at most once.
inline TopKList best_k_product(const std::vector<double>& left, const std::vector<double>& right, std::size_t k) {
  struct Item {
    double value;
    int i;
    int j;
  };
  auto after = [](const Item& a, const Item& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.i != b.i) return a.i > b.i;
    return a.j > b.j;
  };
  TopKList out;
  if (left.empty() || right.empty()) return out;
  std::priority_queue<Item, std::vector<Item>, decltype(after)> heap(after);
  heap.push({left[0] * right[0], 0, 0});
  while (!heap.empty() && out.size() < k) {
    const Item it = heap.top();
    heap.pop();
    out.values.push_back(it.value);
    out.from.emplace_back(it.i, it.j);
    const auto i = static_cast<std::size_t>(it.i);
    const auto j = static_cast<std::size_t>(it.j);
    if (i + 1 < left.size()) heap.push({left[i + 1] * right[j], it.i + 1, it.j});
    if (i == 0 && j + 1 < right.size()) heap.push({left[0] * right[j + 1], 0, it.j + 1});
  }
  return out;
}

struct TreeSample {
  double tree_value;
  Assignment assignment;
};

/// The samples induced by the K best parse trees, best first. Several trees
/// may induce the same sample; duplicates are kept.
inline std::vector<TreeSample> k_best_tree_samples(const Spn& spn, int k_in, Deadline deadline = {},
                                                   bool* timed_out = nullptr) {
  if (k_in < 1) throw std::invalid_argument("K must be >= 1");
  const auto k = static_cast<std::size_t>(k_in);
  const auto n = static_cast<std::size_t>(spn.size());
  std::vector<TopKList> lists(n);
  // Products keep the provenance of every pairwise merge stage.
  std::vector<std::vector<std::vector<std::pair<int, int>>>> stages(n);
  if (timed_out) *timed_out = false;

  for (int i = 0; i < spn.size(); ++i) {
    if (deadline.expired()) {
      if (timed_out) *timed_out = true;
      return {};
    }
    const Node& node = spn.node(i);
    auto& out = lists[static_cast<std::size_t>(i)];
    if (node.is_indicator()) {
      out.values = {1.0};
      out.from = {{0, 0}};
    } else if (node.is_sum()) {
      std::vector<const std::vector<double>*> ch;
      for (int c : node.children) ch.push_back(&lists[static_cast<std::size_t>(c)].values);
      out = best_k_sum(ch, node.weights, k);
    } else {
      TopKList acc = lists[static_cast<std::size_t>(node.children.front())];
      for (std::size_t m = 1; m < node.children.size(); ++m) {
        acc = best_k_product(acc.values, lists[static_cast<std::size_t>(node.children[m])].values, k);
        stages[static_cast<std::size_t>(i)].push_back(acc.from);
      }
      out.values = std::move(acc.values);
      out.from.clear();
    }
  }

  std::vector<TreeSample> samples;
  const auto& root = lists.back();
  for (std::size_t e = 0; e < root.size(); ++e) {
    Assignment x(static_cast<std::size_t>(spn.num_vars()), 0);
    std::vector<std::pair<int, int>> stack{{spn.root(), static_cast<int>(e)}};
    while (!stack.empty()) {
      auto [id, entry] = stack.back();
      stack.pop_back();
      const Node& node = spn.node(id);
      if (node.is_indicator()) {
        x[static_cast<std::size_t>(node.var)] = node.value;
      } else if (node.is_sum()) {
        auto [pos, sub] = lists[static_cast<std::size_t>(id)].from[static_cast<std::size_t>(entry)];
        stack.emplace_back(node.children[static_cast<std::size_t>(pos)], sub);
      } else {
        const auto& st = stages[static_cast<std::size_t>(id)];
        int idx = entry;
        for (std::size_t m = st.size(); m-- > 0;) {
          auto [left, right] = st[m][static_cast<std::size_t>(idx)];
          stack.emplace_back(node.children[m + 1], right);
          idx = left;
        }
        stack.emplace_back(node.children.front(), idx);
      }
    }
    samples.push_back({root.values[e], std::move(x)});
  }
  return samples;
}

/// K-best trees: find the K largest parse trees, recover their samples and
/// return the one with the highest SPN score (earliest tree on ties). K = 1
/// is exactly best_tree.
inline SolveResult k_best_trees(const Spn& spn, int k, Deadline deadline = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (deadline.expired()) return detail::timed_out_result(start);
  bool timed_out = false;
  auto samples = k_best_tree_samples(spn, k, deadline, &timed_out);
  if (timed_out) return detail::timed_out_result(start);
  SolveResult r;
  std::vector<double> scratch;
  double best = -1.0;
  for (const auto& s : samples) {
    const double v = evaluate(spn, PartialEvidence::from_assignment(spn.variables(), s.assignment), scratch);
    if (v > best) {
      best = v;
      r.assignment = s.assignment;
    }
  }
  r.stats.tree_value = samples.front().tree_value;
  r.stats.candidates = samples.size();
  r.stats.defaulted_vars = detail::uncovered_vars(spn);
  r.status = SolveStatus::kFinished;
  detail::finish(spn, r, start);
  return r;
}

}  // namespace spnmap
