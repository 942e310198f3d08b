#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace spnmap;
using test::rel_err;
using test::spn_a;

namespace {

Spn with_root_weights(double a, double b) {
  std::string text = test::kSpnA;
  text.replace(text.rfind("S 8 0.4 9 0.6"), 13, "S 8 " + format_score(a) + " 9 " + format_score(b));
  return parse_spn(text);
}

Spn random_selective(std::uint64_t seed) {
  return bn_to_spn(random_tree_bn(2 + static_cast<int>(seed % 7), 3, seed));
}

void expect_consistent(const Spn& s, const SolveResult& r, const char* name) {
  ASSERT_TRUE(r.has_result()) << name;
  EXPECT_EQ(r.score, evaluate(s, r.assignment)) << name;
}

}  // namespace

TEST(BestTree, Fixture) {
  const auto r = best_tree(spn_a());
  EXPECT_EQ(r.assignment, (Assignment{1, 0}));
  EXPECT_NEAR(r.stats.tree_value, 0.288, 1e-15);
  EXPECT_NEAR(r.score, 0.378, 1e-15);
  EXPECT_EQ(best_tree(test::single_indicator()).score, 1.0);
}

TEST(BestTree, ExactOnCompiledChain) {
  const Spn s = bn_to_spn(parse_bn("BN 2\nROOT 0 0.3 0.7\nEDGE 0 1\nCPT 1 | 0 : 0.1 0.9\nCPT 1 | 1 : 0.8 0.2\n"));
  EXPECT_EQ(best_tree(s).score, brute_force_max(s).score);
  EXPECT_EQ(argmax_product(s).score, brute_force_max(s).score);
}

TEST(NormalizedGreedy, Fixture) {
  const auto r = normalized_greedy(spn_a());
  EXPECT_EQ(r.assignment, (Assignment{0, 1}));
  EXPECT_NEAR(r.score, 0.218, 1e-15);
  EXPECT_EQ(normalized_greedy(test::single_indicator()).score, 1.0);

  const Spn swapped = with_root_weights(0.7, 0.3);
  const auto w = normalized_greedy(swapped);
  EXPECT_EQ(w.assignment, (Assignment{1, 0}));
  EXPECT_EQ(w.score, evaluate(swapped, Assignment{1, 0}));
}

TEST(NormalizedGreedy, FlagsAllZeroSums) {
  const Spn s = parse_spn("SPN 1\nL 0 0\nL 0 1\nS 0 0 1 0\nS 1 1 0 1\nS 2 1 3 1");
  const auto r = normalized_greedy(s);
  EXPECT_EQ(r.stats.zero_weight_sums, 1u);
  EXPECT_EQ(r.assignment, Assignment{0});
}

TEST(BeamSearch, FixtureSingleMember) {
  BeamOptions opt;
  opt.beam_size = 1;
  opt.initial = {{0, 0}};
  const auto r = beam_search(spn_a(), opt);
  EXPECT_EQ(r.assignment, (Assignment{1, 0}));
  EXPECT_NEAR(r.score, 0.378, 1e-15);
  EXPECT_EQ(r.stats.rounds, 2u);
  EXPECT_EQ(r.status, SolveStatus::kFinished);
}

TEST(BeamSearch, WideBeamAndOneVariable) {
  for (int k : {4, 10}) {
    const auto r = beam_search(spn_a(), k, 3);
    EXPECT_NEAR(r.score, 0.378, 1e-15);
  }
  const Spn one = parse_spn("SPN 1\nCARD 0 4\nL 0 0\nL 0 1\nL 0 2\nL 0 3\nS 0 0.1 1 0.2 2 0.6 3 0.1");
  for (int k : {1, 2, 7}) EXPECT_EQ(beam_search(one, k, 11).assignment, Assignment{2});
  EXPECT_THROW(beam_search(spn_a(), 0, 0), std::invalid_argument);
}

TEST(BeamSearch, GreedySeedAndRoundCap) {
  BeamOptions opt;
  opt.beam_size = 1;
  opt.seed_with_greedy = true;
  EXPECT_NEAR(beam_search(spn_a(), opt).score, 0.378, 1e-15);
  opt.initial = {{0, 0}};
  opt.max_rounds = 1;
  EXPECT_EQ(beam_search(spn_a(), opt).stats.rounds, 1u);
}

TEST(ArgmaxProduct, Fixture) {
  const auto r = argmax_product(spn_a());
  EXPECT_EQ(r.assignment, (Assignment{1, 0}));
  EXPECT_NEAR(r.score, 0.378, 1e-15);
  EXPECT_EQ(argmax_product(test::single_indicator()).score, 1.0);
}

TEST(ArgmaxProduct, DefaultsUncoveredVariables) {
  const Spn r = map_to_max(spn_a(), MapProblem{{1}, {0}, {1}, {}});
  const auto res = argmax_product(r);
  EXPECT_EQ(res.assignment, (Assignment{0, 0}));
  EXPECT_EQ(res.stats.defaulted_vars, 1u);
}

TEST(KBestTrees, FixtureK2) {
  const auto samples = k_best_tree_samples(spn_a(), 2);
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_NEAR(samples[0].tree_value, 0.288, 1e-15);
  EXPECT_NEAR(samples[1].tree_value, 0.21, 1e-15);
  EXPECT_EQ(samples[0].assignment, (Assignment{1, 0}));
  EXPECT_EQ(samples[1].assignment, (Assignment{0, 1}));
  const auto r = k_best_trees(spn_a(), 2);
  EXPECT_NEAR(r.score, 0.378, 1e-15);
  EXPECT_EQ(r.stats.candidates, 2u);
}

TEST(KBestTrees, SaturationAndDegeneracy) {
  EXPECT_EQ(k_best_trees(spn_a(), 8).score, brute_force_max(spn_a()).score);
  EXPECT_EQ(k_best_tree_samples(spn_a(), 100).size(), 8u);
  const auto one = k_best_trees(spn_a(), 1);
  const auto bt = best_tree(spn_a());
  EXPECT_EQ(one.assignment, bt.assignment);
  EXPECT_EQ(one.score, bt.score);
  EXPECT_THROW(k_best_trees(spn_a(), 0), std::invalid_argument);
}

TEST(KBestTrees, SamplesMatchEnumeratedTrees) {
  // The full sample list is the enumerated tree multiset sorted by value.
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Spn s = random_spn(test::small_options(2 + static_cast<int>(seed % 5)), seed);
    auto trees = enumerate_parse_trees(s);
    const auto samples = k_best_tree_samples(s, static_cast<int>(trees.size()));
    ASSERT_EQ(samples.size(), trees.size());
    std::vector<double> want;
    for (const auto& t : trees) want.push_back(t.value);
    std::sort(want.rbegin(), want.rend());
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_LE(rel_err(samples[i].tree_value, want[i]), 1e-12);
      // Each recovered sample has a tree of exactly that value.
      const bool found = std::any_of(trees.begin(), trees.end(), [&](const ParseTree& t) {
        return t.assignment == samples[i].assignment && rel_err(t.value, samples[i].tree_value) <= 1e-12;
      });
      EXPECT_TRUE(found) << "seed " << seed << " entry " << i;
    }
  }
}

TEST(TopK, SumMatchesNaiveSort) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = std::uniform_int_distribution<int>(1, 5)(rng);
    std::vector<std::vector<double>> lists(static_cast<std::size_t>(m));
    std::vector<double> w;
    std::vector<const std::vector<double>*> ptr;
    std::vector<double> all;
    for (auto& l : lists) {
      const int len = std::uniform_int_distribution<int>(0, 6)(rng);
      // Small integer grid so duplicates are common.
      for (int i = 0; i < len; ++i) l.push_back(std::uniform_int_distribution<int>(0, 4)(rng) / 4.0);
      std::sort(l.rbegin(), l.rend());
      w.push_back(std::uniform_int_distribution<int>(0, 2)(rng) / 2.0);
      ptr.push_back(&l);
      for (double v : l) all.push_back(w.back() * v);
    }
    std::sort(all.rbegin(), all.rend());
    const std::size_t k = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 12)(rng));
    const auto got = best_k_sum(ptr, w, k);
    all.resize(std::min(k, all.size()));
    EXPECT_EQ(got.values, all);
    for (std::size_t i = 0; i < got.size(); ++i) {
      auto [c, e] = got.from[i];
      EXPECT_EQ(got.values[i], w[static_cast<std::size_t>(c)] * lists[static_cast<std::size_t>(c)][static_cast<std::size_t>(e)]);
    }
  }
}

TEST(TopK, ProductMatchesNaiveSort) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> a, b;
    for (int i = std::uniform_int_distribution<int>(0, 7)(rng); i > 0; --i) a.push_back(std::uniform_int_distribution<int>(0, 5)(rng) / 5.0);
    for (int i = std::uniform_int_distribution<int>(0, 7)(rng); i > 0; --i) b.push_back(std::uniform_int_distribution<int>(0, 5)(rng) / 5.0);
    std::sort(a.rbegin(), a.rend());
    std::sort(b.rbegin(), b.rend());
    std::vector<double> all;
    for (double x : a)
      for (double y : b) all.push_back(x * y);
    std::sort(all.rbegin(), all.rend());
    const std::size_t k = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 60)(rng));
    const auto got = best_k_product(a, b, k);
    all.resize(std::min(k, all.size()));
    EXPECT_EQ(got.values, all);
    std::set<std::pair<int, int>> seen(got.from.begin(), got.from.end());
    EXPECT_EQ(seen.size(), got.size());
    for (std::size_t i = 0; i < got.size(); ++i)
      EXPECT_EQ(got.values[i], a[static_cast<std::size_t>(got.from[i].first)] * b[static_cast<std::size_t>(got.from[i].second)]);
  }
}

// Properties.

TEST(ApproxProperty, ScoresBoundedAndConsistent) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    RandomSpnOptions o;
    o.num_vars = 3 + static_cast<int>(seed % 8);
    o.cardinality = seed % 3 == 2 ? 3 : 2;
    const Spn s = random_spn(o, seed);
    const double best = brute_force_max(s).score;
    const std::pair<const char*, SolveResult> runs[] = {
        {"bt", best_tree(s)},          {"ng", normalized_greedy(s)},    {"bs", beam_search(s, 5, seed)},
        {"amap", argmax_product(s)}, {"kbt", k_best_trees(s, 10)},
    };
    for (const auto& [name, r] : runs) {
      expect_consistent(s, r, name);
      EXPECT_LE(r.score, best * (1 + 1e-12)) << name;
    }
  }
}

TEST(ApproxProperty, BestTreeIsTheTopTree) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Spn s = random_spn(test::small_options(2 + static_cast<int>(seed % 6)), seed);
    double top = 0.0;
    for (const auto& t : enumerate_parse_trees(s)) top = std::max(top, t.value);
    EXPECT_LE(rel_err(best_tree(s).stats.tree_value, top), 1e-12);
  }
}

TEST(ApproxProperty, KbtMonotoneAndSaturates) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Spn s = random_spn(test::small_options(2 + static_cast<int>(seed % 7)), seed + 77);
    const auto bt = best_tree(s);
    const auto k1 = k_best_trees(s, 1);
    EXPECT_EQ(k1.assignment, bt.assignment);
    double prev = k1.score;
    const int total = static_cast<int>(enumerate_parse_trees(s).size());
    for (int k = 2; k < 2 * total; k *= 2) {
      const double cur = k_best_trees(s, k).score;
      EXPECT_GE(cur, prev) << "seed " << seed << " K " << k;
      prev = cur;
    }
    EXPECT_EQ(k_best_trees(s, total).score, brute_force_max(s).score) << "seed " << seed;
  }
}

TEST(ApproxProperty, SelectiveExactness) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Spn s = random_selective(seed);
    const double best = brute_force_max(s).score;
    EXPECT_LE(rel_err(best_tree(s).score, best), 1e-12) << seed;
    EXPECT_LE(rel_err(argmax_product(s).score, best), 1e-12) << seed;
    EXPECT_LE(rel_err(k_best_trees(s, 1).score, best), 1e-12) << seed;
  }
}

TEST(ApproxProperty, BeamTermination) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Spn s = random_spn(test::small_options(3 + static_cast<int>(seed % 6)), seed);
    std::mt19937_64 rng(seed);
    for (int k : {1, 3}) {
      BeamOptions opt;
      opt.beam_size = k;
      double init_best = 0.0;
      for (int i = 0; i < k; ++i) {
        opt.initial.push_back(random_assignment(s.variables(), rng));
        init_best = std::max(init_best, evaluate(s, opt.initial.back()));
      }
      const auto r = beam_search(s, opt);
      EXPECT_EQ(r.status, SolveStatus::kFinished);
      EXPECT_GE(r.score, init_best);
      EXPECT_LE(r.stats.rounds, s.variables().assignment_count() + 1);
      if (k == 1) {
        // One member: every non-final round moves to a strictly better neighbour.
        Assignment x = opt.initial.front();
        double cur = evaluate(s, x);
        std::uint64_t moves = 0;
        while (true) {
          Assignment next = x;
          double best = cur;
          for (int v = 0; v < s.num_vars(); ++v) {
            Assignment y = x;
            for (int val = 0; val < s.variables().cardinality(v); ++val) {
              y[static_cast<std::size_t>(v)] = val;
              const double sy = evaluate(s, y);
              if (sy > best || (sy == best && y < next)) next = y, best = sy;
            }
          }
          if (next == x) break;
          x = next;
          cur = best;
          ++moves;
        }
        EXPECT_EQ(r.assignment, x) << seed;
        EXPECT_EQ(r.stats.rounds, moves + 1) << seed;
      }
    }
  }
}

TEST(ApproxProperty, ExpiredDeadline) {
  const Deadline past = Deadline::after(std::chrono::duration<double>(0));
  for (auto r : {best_tree(spn_a(), past), normalized_greedy(spn_a(), past), argmax_product(spn_a(), past),
                 k_best_trees(spn_a(), 4, past), beam_search(spn_a(), 2, 0, past)}) {
    EXPECT_EQ(r.status, SolveStatus::kTimeoutNoResult);
    EXPECT_FALSE(r.has_result());
  }
}
