#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "support.hpp"

using namespace spnmap;
using test::rel_err;
using test::spn_a;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::pair<const char*, SearchConfig>> all_configs() {
  return {{"mc", SearchConfig::mc()},
          {"fc", SearchConfig::fc()},
          {"fc+o", SearchConfig::fc_ordering()},
          {"fc+o+s", SearchConfig::fc_ordering_stage()}};
}

PartialEvidence space_of(const Spn& s, std::vector<std::uint64_t> masks) {
  PartialEvidence e(s.variables());
  for (int v = 0; v < s.num_vars(); ++v) e.set_mask(v, masks[static_cast<std::size_t>(v)]);
  return e;
}

}  // namespace

TEST(MaxExact, FixtureAllConfigs) {
  for (auto [name, cfg] : all_configs()) {
    for (auto init : {Initializer::kFirstAssignment, Initializer::kRandom, Initializer::kBestTree}) {
      cfg.initializer = init;
      const auto r = max_exact(spn_a(), cfg);
      EXPECT_EQ(r.status, SolveStatus::kFinished) << name;
      EXPECT_EQ(r.assignment, (Assignment{1, 0})) << name;
      EXPECT_NEAR(r.score, 0.378, 1e-15) << name;
      EXPECT_EQ(r.score, evaluate(spn_a(), r.assignment));
    }
  }
}

TEST(MaxExact, SingleIndicator) {
  const auto r = max_exact(test::single_indicator());
  EXPECT_EQ(r.assignment, Assignment{0});
  EXPECT_EQ(r.score, 1.0);
  EXPECT_EQ(r.status, SolveStatus::kFinished);
}

TEST(MaxExact, ZeroBudgetReturnsInitializer) {
  SearchConfig cfg;
  cfg.time_budget = std::chrono::duration<double>(0);
  const auto r = max_exact(spn_a(), cfg);
  EXPECT_EQ(r.status, SolveStatus::kTimeoutWithResult);
  EXPECT_EQ(r.assignment, (Assignment{1, 0}));
  EXPECT_NEAR(r.score, 0.378, 1e-15);
  EXPECT_EQ(r.stats.nodes_expanded, 0u);

  cfg.initializer = Initializer::kFirstAssignment;
  const auto f = max_exact(spn_a(), cfg);
  EXPECT_EQ(f.assignment, (Assignment{0, 0}));
  EXPECT_NEAR(f.score, 0.242, 1e-15);
}

TEST(MarginalChecking, Fixture) {
  const Spn s = spn_a();
  EXPECT_FALSE(marginal_checking(s, space_of(s, {0b01, 0b11}), 0.378).empty());
  EXPECT_TRUE(marginal_checking(s, space_of(s, {0b10, 0b10}), 0.378).empty());
  EXPECT_FALSE(marginal_checking(s, space_of(s, {0b10, 0b10}), kNegInf).empty());
  // strict: a marginal equal to the bound is pruned
  EXPECT_TRUE(marginal_checking(s, space_of(s, {0b10, 0b01}), evaluate(s, Assignment{1, 0})).empty());
}

TEST(ForwardChecking, Fixture) {
  const Spn s = spn_a();
  std::uint64_t removed = 0;
  EXPECT_TRUE(forward_checking(s, space_of(s, {0b01, 0b11}), 0.378, nullptr, nullptr, &removed).empty());
  EXPECT_GE(removed, 1u);
  const auto full = PartialEvidence(s.variables());
  EXPECT_EQ(forward_checking(s, full, 0.378), full);
  EXPECT_EQ(forward_checking(s, full, kNegInf), full);
  // With X1 fixed to 0 and bound 0.3, X0=0 (D = 0.242) goes and X0=1 (0.378) stays.
  const auto pruned = forward_checking(s, space_of(s, {0b11, 0b01}), 0.3);
  EXPECT_EQ(pruned.mask(0), 0b10u);
  EXPECT_EQ(pruned.mask(1), 0b01u);
  // Bound 0.39 removes X1=1 (0.38) first; the second pass then empties the space.
  EXPECT_TRUE(forward_checking(s, full, 0.39).empty());
}

TEST(ForwardChecking, TableMatchesReturnedSpace) {
  const Spn s = spn_a();
  DerivativeTable t;
  const auto out = forward_checking(s, PartialEvidence(s.variables()), 0.1, &t);
  const auto direct = derivatives(s, out);
  for (int v = 0; v < 2; ++v)
    for (int x = 0; x < 2; ++x) EXPECT_EQ(t.at(v, x), direct.at(v, x));
}

TEST(Ordering, ChooseVariableAndValues) {
  const Spn s = spn_a();
  EXPECT_EQ(choose_variable(space_of(s, {0b11, 0b01})), 0);
  EXPECT_EQ(choose_variable(space_of(s, {0b10, 0b01})), -1);
  EXPECT_EQ(order_values(s, PartialEvidence(s.variables()), 1), (std::vector<int>{0, 1}));
  EXPECT_EQ(order_values(s, PartialEvidence(s.variables()), 0), (std::vector<int>{1, 0}));

  VariableTable vars(3);
  vars.set_cardinality(0, 3);
  vars.set_cardinality(2, 4);
  PartialEvidence e(vars);
  EXPECT_EQ(choose_variable(e), 1);
  e.remove(2, 0);
  e.remove(2, 1);
  EXPECT_EQ(choose_variable(e), 1);  // tie with X2 goes to the lower index

  // Equal subspace scores keep declaration order.
  const Spn flat = parse_spn("SPN 1\nCARD 0 3\nL 0 0\nL 0 1\nL 0 2\nS 0 0.25 1 0.5 2 0.25");
  EXPECT_EQ(order_values(flat, PartialEvidence(flat.variables()), 0), (std::vector<int>{1, 0, 2}));
}

TEST(StageReduce, MatchesReduction) {
  const Spn s = spn_a();
  PartialEvidence e(s.variables());
  e.set_value(0, 1);
  const Spn staged = stage_reduce(s, e);
  EXPECT_EQ(staged, map_to_max(s, MapProblem{{1}, {0}, {1}, {}}));
  for (int x = 0; x < 2; ++x)
    EXPECT_DOUBLE_EQ(evaluate(staged, Assignment{0, x}), evaluate(s, Assignment{1, x}));
  EXPECT_THROW(stage_reduce(s, PartialEvidence(s.variables())), std::invalid_argument);
}

// Properties.

TEST(ExactProperty, AllConfigsMatchBruteForce) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    RandomSpnOptions o;
    o.num_vars = 4 + static_cast<int>(seed % 9);
    o.cardinality = seed % 5 == 4 ? 3 : 2;
    const Spn s = random_spn(o, seed);
    const double want = brute_force_max(s).score;
    for (auto [name, cfg] : all_configs()) {
      cfg.stage_interval = 1 + static_cast<int>(seed % 4);
      const auto r = max_exact(s, cfg);
      ASSERT_EQ(r.status, SolveStatus::kFinished);
      EXPECT_LE(rel_err(r.score, want), 1e-12) << name << " seed " << seed;
      EXPECT_EQ(r.score, evaluate(s, r.assignment));
    }
  }
}

TEST(ExactProperty, StagedAgreesWithUnstaged) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Spn s = random_spn(test::small_options(10), seed + 500);
    auto staged = SearchConfig::fc_ordering_stage();
    staged.stage_interval = 2;
    const auto a = max_exact(s, staged);
    const auto b = max_exact(s, SearchConfig::fc_ordering());
    EXPECT_EQ(a.score, b.score) << seed;
    EXPECT_GT(a.stats.stage_reductions, 0u);
    EXPECT_EQ(b.stats.stage_reductions, 0u);
  }
}

TEST(ExactProperty, ForwardDominatesMarginal) {
  int events = 0;
  int counterexamples = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Spn s = random_spn(test::small_options(8), seed);
    for (auto [name, cfg] : all_configs()) {
      cfg.initializer = Initializer::kRandom;
      cfg.seed = seed;
      cfg.on_prune = [&](const PruneEvent& ev) {
        ++events;
        const bool mc = marginal_checking(ev.spn, ev.space, ev.best_score).empty();
        const bool fc = forward_checking(ev.spn, ev.space, ev.best_score).empty();
        if (mc && !fc) ++counterexamples;
      };
      max_exact(s, cfg);
    }
  }
  EXPECT_GT(events, 1000);
  EXPECT_EQ(counterexamples, 0);
}

TEST(ExactProperty, ForwardCheckingIsSound) {
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    RandomSpnOptions o;
    o.num_vars = 5;
    o.cardinality = 3;
    const Spn s = random_spn(o, seed);
    std::mt19937_64 rng(seed);
    const PartialEvidence space = random_partial_evidence(s.variables(), rng);
    const double best = evaluate(s, random_assignment(s.variables(), rng));
    const PartialEvidence out = forward_checking(s, space, best);
    test::for_each_assignment(s.variables(), [&](const Assignment& x) {
      for (int v = 0; v < s.num_vars(); ++v)
        if (!space.allows(v, x[static_cast<std::size_t>(v)])) return;
      if (evaluate(s, x) <= best) return;
      for (int v = 0; v < s.num_vars(); ++v)
        ASSERT_TRUE(out.allows(v, x[static_cast<std::size_t>(v)])) << "seed " << seed;
    });
  }
}

TEST(ExactProperty, AnytimeMonotone) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Spn s = random_spn_sized(test::small_options(16), seed, 80, 400);
    for (auto init : {Initializer::kFirstAssignment, Initializer::kBestTree}) {
      SearchConfig cfg = SearchConfig::fc_ordering();
      cfg.initializer = init;
      const double init_score = evaluate(s, initial_assignment(s, init, 0));
      double prev = -1.0;
      for (double budget : {0.0, 0.01}) {
        cfg.time_budget = std::chrono::duration<double>(budget);
        const auto r = max_exact(s, cfg);
        EXPECT_TRUE(r.has_result());
        EXPECT_GE(r.score, init_score);
        if (budget == 0.0) {
          EXPECT_EQ(r.score, init_score);
        }
        // The search path is deterministic, so more time never lowers the incumbent.
        EXPECT_GE(r.score, prev);
        prev = r.score;
      }
      cfg.time_budget.reset();
      EXPECT_GE(max_exact(s, cfg).score, prev);
    }
  }
}

TEST(ExactProperty, Deterministic) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Spn s = random_spn(test::small_options(9), seed);
    for (auto [name, cfg] : all_configs()) {
      cfg.initializer = Initializer::kRandom;
      cfg.seed = seed;
      const auto a = max_exact(s, cfg);
      const auto b = max_exact(s, cfg);
      EXPECT_EQ(a.assignment, b.assignment);
      EXPECT_EQ(a.score, b.score);
      EXPECT_EQ(a.stats, b.stats) << name;
      EXPECT_EQ(a.status, b.status);
    }
  }
}

TEST(ExactProperty, PartialScopeAfterReduction) {
  // Out-of-scope variables are fixed to 0 and the search still finds the optimum.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Spn s = random_spn(test::small_options(7), seed);
    const Spn r = map_to_max(s, MapProblem{{0, 2, 4}, {1, 3}, {1, 0}, {5, 6}});
    const double want = brute_force_max(r).score;
    for (auto [name, cfg] : all_configs()) {
      const auto res = max_exact(r, cfg);
      EXPECT_LE(rel_err(res.score, want), 1e-12) << name;
      EXPECT_EQ(res.assignment[1], 0);
    }
  }
}
