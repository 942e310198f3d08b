#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "spnmap/approx.hpp"
#include "spnmap/evaluate.hpp"
#include "spnmap/reduce.hpp"
#include "spnmap/solve_result.hpp"
#include "spnmap/spn.hpp"

namespace spnmap {

enum class Pruning { kMarginal, kForward };
enum class Initializer { kFirstAssignment, kRandom, kBestTree };

/// One pruning call as seen by the search: the SPN in use (possibly staged),
/// the candidate space before pruning and the incumbent score.
struct PruneEvent {
  const Spn& spn;
  const PartialEvidence& space;
  double best_score;
  bool emptied;
};

struct SearchConfig {
  Pruning pruning = Pruning::kForward;
  bool ordering = false;
  bool staging = false;
  int stage_interval = 4;
  std::optional<std::chrono::duration<double>> time_budget;
  Initializer initializer = Initializer::kBestTree;
  std::uint64_t seed = 0;
  std::function<void(const PruneEvent&)> on_prune;  // optional trace hook

  static SearchConfig make(Pruning p, bool ordering, bool staging) {
    SearchConfig c;
    c.pruning = p;
    c.ordering = ordering;
    c.staging = staging;
    return c;
  }
  static SearchConfig mc() { return make(Pruning::kMarginal, false, false); }
  static SearchConfig fc() { return make(Pruning::kForward, false, false); }
  static SearchConfig fc_ordering() { return make(Pruning::kForward, true, false); }
  static SearchConfig fc_ordering_stage() { return make(Pruning::kForward, true, true); }
};

/// Keeps `space` only if its marginal S(space) strictly exceeds best_score.
inline PartialEvidence marginal_checking(const Spn& spn, PartialEvidence space, double best_score,
                                         std::vector<double>* scratch = nullptr) {
  std::vector<double> local;
  if (!(evaluate(spn, space, scratch ? *scratch : local) > best_score)) space.clear();
  return space;
}

/// Removes every value x whose subspace score D_x = S({x} x space[rest]) is
/// not above best_score, recomputing derivatives until nothing changes. On
/// return `table` (if given) holds the derivatives of the returned space when
/// it is nonempty.
inline PartialEvidence forward_checking(const Spn& spn, PartialEvidence space, double best_score,
                                        DerivativeTable* table = nullptr, DerivativeScratch* scratch = nullptr,
                                        std::uint64_t* removed_count = nullptr) {
  DerivativeTable local_table;
  DerivativeScratch local_scratch;
  DerivativeTable& d = table ? *table : local_table;
  DerivativeScratch& s = scratch ? *scratch : local_scratch;
  bool changed = true;
  while (changed) {
    changed = false;
    derivatives(spn, space, d, s);
    // Every D_x of an admitted value is at most S(space); checking the root
    // value too keeps that true under rounding.
    if (best_score >= d.root_value) {
      if (removed_count) ++*removed_count;
      space.clear();
      return space;
    }
    for (int v = 0; v < space.num_vars(); ++v) {
      for (std::uint64_t m = space.mask(v); m != 0; m &= m - 1) {
        const int x = std::countr_zero(m);
        if (best_score >= d.at(v, x)) {
          space.remove(v, x);
          changed = true;
          if (removed_count) ++*removed_count;
        }
      }
      if (space.mask(v) == 0) {
        space.clear();
        return space;
      }
    }
  }
  return space;
}

/// Undetermined variable with the fewest remaining values (lowest index on
/// ties), or -1 when every variable is determined.
inline int choose_variable(const PartialEvidence& space) {
  int best = -1;
  int best_count = std::numeric_limits<int>::max();
  for (int v = 0; v < space.num_vars(); ++v) {
    const int c = space.count(v);
    if (c > 1 && c < best_count) {
      best = v;
      best_count = c;
    }
  }
  return best;
}

/// Values of `var` by descending subspace score S({x} x space[rest]), lower
/// value first on ties. Uses `table` when supplied (it must belong to `space`).
inline std::vector<int> order_values(const Spn& spn, const PartialEvidence& space, int var,
                                     const DerivativeTable* table = nullptr) {
  DerivativeTable local;
  if (!table) {
    local = derivatives(spn, space);
    table = &local;
  }
  std::vector<int> vals = space.values(var);
  std::stable_sort(vals.begin(), vals.end(),
                   [&](int a, int b) { return table->at(var, a) > table->at(var, b); });
  return vals;
}

/// Conditions `spn` on the determined variables of `space` and drops them,
/// keeping the undetermined ones as query variables.
inline Spn stage_reduce(const Spn& spn, const PartialEvidence& space) {
  MapProblem p;
  for (int v = 0; v < space.num_vars(); ++v) {
    if (space.determined(v)) {
      p.evidence_vars.push_back(v);
      p.evidence_values.push_back(space.first_value(v));
    } else {
      p.query.push_back(v);
    }
  }
  if (p.evidence_vars.empty()) throw std::invalid_argument("stage_reduce needs at least one determined variable");
  return map_to_max(spn, p);
}

namespace detail {

class ExactSearch {
 public:
  ExactSearch(const Spn& spn, const SearchConfig& cfg, Deadline deadline)
      : spn_(spn), cfg_(cfg), deadline_(deadline) {}

  void run(Assignment init, SolveResult& r) {
    best_ = std::move(init);
    best_score_ = evaluate(spn_, best_);
    PartialEvidence space(spn_.variables());
    for (int v = 0; v < spn_.num_vars(); ++v)
      if (!spn_.root_covers(v)) space.set_value(v, 0);
    search(spn_, space, nullptr);
    r.assignment = best_;
    r.score = best_score_;
    r.status = timed_out_ ? SolveStatus::kTimeoutWithResult : SolveStatus::kFinished;
    r.stats = stats_;
  }

 private:
  void search(const Spn& spn, const PartialEvidence& space, const DerivativeTable* table) {
    if (timed_out_ || deadline_.expired()) {
      timed_out_ = true;
      return;
    }
    ++stats_.nodes_expanded;
    const int var = cfg_.ordering ? choose_variable(space) : first_undetermined(space);
    if (var < 0) {
      Assignment x = space.assignment();
      const double s = evaluate(spn_, x);
      if (s > best_score_) {
        best_ = std::move(x);
        best_score_ = s;
        ++stats_.incumbent_updates;
      }
      return;
    }
    std::vector<int> vals = cfg_.ordering ? order_values(spn, space, var, table) : space.values(var);

    DerivativeTable child_table;
    for (int x : vals) {
      PartialEvidence sub = space;
      sub.set_value(var, x);
      const bool emptied = prune(spn, sub, child_table);
      if (emptied) continue;
      const DerivativeTable* next_table = cfg_.pruning == Pruning::kForward ? &child_table : nullptr;
      if (cfg_.staging && should_stage(spn, sub)) {
        Spn staged = stage_reduce(spn, sub);
        ++stats_.stage_reductions;
        search(staged, sub, next_table);
      } else {
        search(spn, sub, next_table);
      }
      if (timed_out_) return;
    }
  }

  // Prunes `sub` in place; true when it became empty.
  bool prune(const Spn& spn, PartialEvidence& sub, DerivativeTable& table) {
    const double best = best_score_;
    PartialEvidence before = cfg_.on_prune ? sub : PartialEvidence{};
    if (cfg_.pruning == Pruning::kMarginal) {
      sub = marginal_checking(spn, std::move(sub), best, &values_);
      if (sub.empty()) ++stats_.mc_prunes;
    } else {
      sub = forward_checking(spn, std::move(sub), best, &table, &scratch_, &stats_.fc_values_removed);
      if (sub.empty()) ++stats_.fc_prunes;
    }
    const bool emptied = sub.empty();
    if (cfg_.on_prune) cfg_.on_prune(PruneEvent{spn, before, best, emptied});
    return emptied;
  }

  bool should_stage(const Spn& spn, const PartialEvidence& sub) const {
    int fresh = 0;
    bool open = false;
    for (int v = 0; v < sub.num_vars(); ++v) {
      if (!sub.determined(v)) open = true;
      else if (spn.root_covers(v)) ++fresh;
    }
    return open && fresh >= std::max(1, cfg_.stage_interval);
  }

  static int first_undetermined(const PartialEvidence& space) {
    for (int v = 0; v < space.num_vars(); ++v)
      if (space.count(v) > 1) return v;
    return -1;
  }

  const Spn& spn_;
  const SearchConfig& cfg_;
  Deadline deadline_;
  Assignment best_;
  double best_score_ = 0.0;
  bool timed_out_ = false;
  SearchStats stats_;
  std::vector<double> values_;
  DerivativeScratch scratch_;
};

}  // namespace detail

inline Assignment initial_assignment(const Spn& spn, Initializer init, std::uint64_t seed) {
  switch (init) {
    case Initializer::kBestTree:
      return best_tree(spn).assignment;
    case Initializer::kRandom: {
      std::mt19937_64 rng(seed);
      Assignment x(static_cast<std::size_t>(spn.num_vars()));
      for (int v = 0; v < spn.num_vars(); ++v)
        x[static_cast<std::size_t>(v)] =
            std::uniform_int_distribution<int>(0, spn.variables().cardinality(v) - 1)(rng);
      return x;
    }
    case Initializer::kFirstAssignment:
    default:
      return Assignment(static_cast<std::size_t>(spn.num_vars()), 0);
  }
}

/// Anytime depth-first branch and bound for MAX. The initial sample is
/// computed before the clock starts; the budget is checked on every search
/// node entry, so a zero budget returns the initial sample.
inline SolveResult max_exact(const Spn& spn, const SearchConfig& config = {}) {
  const auto start = std::chrono::steady_clock::now();
  Assignment init = initial_assignment(spn, config.initializer, config.seed);
  const Deadline deadline = Deadline::after(config.time_budget);
  SolveResult r;
  detail::ExactSearch search(spn, config, deadline);
  search.run(std::move(init), r);
  r.zero_mass = r.score == 0.0;
  r.elapsed = std::chrono::steady_clock::now() - start;
  return r;
}

}  // namespace spnmap
