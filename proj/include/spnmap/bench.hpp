#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "spnmap/approx.hpp"
#include "spnmap/evaluate.hpp"
#include "spnmap/exact.hpp"
#include "spnmap/io.hpp"
#include "spnmap/reduce.hpp"
#include "spnmap/solve_result.hpp"
#include "spnmap/spn.hpp"

namespace spnmap {

class BenchError : public SpnError {
 public:
  using SpnError::SpnError;
};

struct Proportion {
  double query = 1.0;
  double evidence = 0.0;
  double hidden = 0.0;
};

struct ProblemSuite {
  Proportion proportion;
  std::uint64_t seed = 0;
  std::vector<MapProblem> problems;
};

/// Part sizes for n variables: floors of n*p, leftovers to the largest
/// fractional remainders (Q, E, H order on ties), then |Q| >= 1 by taking one
/// variable from the larger of E and H.
inline std::array<int, 3> apportion(int n, const Proportion& p) {
  const std::array<double, 3> share{p.query, p.evidence, p.hidden};
  for (double s : share)
    if (!(s >= 0.0)) throw BenchError("proportions must be nonnegative");
  if (std::abs(share[0] + share[1] + share[2] - 1.0) > 1e-9) throw BenchError("proportions must sum to 1");
  if (n < 1) throw BenchError("no variables to assign");
  std::array<int, 3> size{};
  std::array<double, 3> rem{};
  int used = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = n * share[static_cast<std::size_t>(i)];
    size[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(exact + 1e-9));
    rem[static_cast<std::size_t>(i)] = exact - size[static_cast<std::size_t>(i)];
    used += size[static_cast<std::size_t>(i)];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[static_cast<std::size_t>(a)] > rem[static_cast<std::size_t>(b)]; });
  for (int i = 0; used < n; ++i, ++used) ++size[static_cast<std::size_t>(order[static_cast<std::size_t>(i % 3)])];
  if (size[0] == 0) {
    const std::size_t donor = size[1] >= size[2] ? 1 : 2;
    if (size[donor] == 0) throw BenchError("no part can give a variable to Q");
    --size[donor];
    ++size[0];
  }
  return size;
}

/// Random MAP problems: a seeded shuffle splits the variables into Q/E/H by
/// the apportioned sizes and evidence values are drawn uniformly.
inline ProblemSuite generate_problems(const VariableTable& vars, const Proportion& proportion, int count,
                                      std::uint64_t seed) {
  const auto sizes = apportion(vars.count(), proportion);
  ProblemSuite suite;
  suite.proportion = proportion;
  suite.seed = seed;
  std::mt19937_64 rng(seed);
  std::vector<int> perm(static_cast<std::size_t>(vars.count()));
  for (int i = 0; i < count; ++i) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    MapProblem p;
    auto q_end = perm.begin() + sizes[0];
    auto e_end = q_end + sizes[1];
    p.query.assign(perm.begin(), q_end);
    p.evidence_vars.assign(q_end, e_end);
    p.hidden.assign(e_end, perm.end());
    std::sort(p.query.begin(), p.query.end());
    std::sort(p.evidence_vars.begin(), p.evidence_vars.end());
    std::sort(p.hidden.begin(), p.hidden.end());
    for (int v : p.evidence_vars)
      p.evidence_values.push_back(std::uniform_int_distribution<int>(0, vars.cardinality(v) - 1)(rng));
    suite.problems.push_back(std::move(p));
  }
  return suite;
}

enum class SolverKind { kBestTree, kNormalizedGreedy, kBeam, kArgmaxProduct, kKBestTrees, kExact };

struct SolverSpec {
  SolverKind kind = SolverKind::kBestTree;
  int k = 1;  // beam size or K
  std::uint64_t seed = 0;
  SearchConfig search;  // exact only; its time_budget is overridden by the harness

  std::string name() const {
    switch (kind) {
      case SolverKind::kBestTree: return "bt";
      case SolverKind::kNormalizedGreedy: return "ng";
      case SolverKind::kBeam: return "bs" + std::to_string(k);
      case SolverKind::kArgmaxProduct: return "amap";
      case SolverKind::kKBestTrees: return "kbt" + std::to_string(k);
      case SolverKind::kExact: {
        std::string s = search.pruning == Pruning::kMarginal ? "mc" : "fc";
        if (search.ordering) s += "+o";
        if (search.staging) s += "+s";
        return s;
      }
    }
    return "?";
  }

  bool anytime() const { return kind == SolverKind::kExact || kind == SolverKind::kBeam; }
};

/// Parses one solver token: bt, ng, amap, bs<K>, kbt<K>, mc, fc, fc+o, fc+o+s
/// (also mc+o, mc+o+s, fc+s, ...).
inline SolverSpec parse_solver(std::string_view tok, std::uint64_t seed = 0) {
  SolverSpec s;
  s.seed = seed;
  auto number_after = [&](std::size_t prefix) {
    int k = 0;
    auto [p, ec] = std::from_chars(tok.data() + prefix, tok.data() + tok.size(), k);
    if (prefix == tok.size() || ec != std::errc{} || p != tok.data() + tok.size() || k < 1)
      throw BenchError("bad solver '" + std::string(tok) + "'");
    return k;
  };
  if (tok == "bt") {
    s.kind = SolverKind::kBestTree;
  } else if (tok == "ng") {
    s.kind = SolverKind::kNormalizedGreedy;
  } else if (tok == "amap") {
    s.kind = SolverKind::kArgmaxProduct;
  } else if (tok.starts_with("kbt")) {
    s.kind = SolverKind::kKBestTrees;
    s.k = number_after(3);
  } else if (tok.starts_with("bs")) {
    s.kind = SolverKind::kBeam;
    s.k = number_after(2);
  } else if (tok.starts_with("mc") || tok.starts_with("fc")) {
    s.kind = SolverKind::kExact;
    s.search.pruning = tok.starts_with("mc") ? Pruning::kMarginal : Pruning::kForward;
    s.search.seed = seed;
    std::string_view rest = tok.substr(2);
    while (!rest.empty()) {
      if (rest.starts_with("+o")) s.search.ordering = true;
      else if (rest.starts_with("+s")) s.search.staging = true;
      else throw BenchError("bad solver '" + std::string(tok) + "'");
      rest.remove_prefix(2);
    }
  } else {
    throw BenchError("unknown solver '" + std::string(tok) + "'");
  }
  return s;
}

inline std::vector<SolverSpec> parse_solver_list(std::string_view list, std::uint64_t seed = 0) {
  std::vector<SolverSpec> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    if (end > start) out.push_back(parse_solver(list.substr(start, end - start), seed));
    if (end == list.size()) break;
    start = end + 1;
  }
  if (out.empty()) throw BenchError("empty solver list");
  return out;
}

/// Runs one solver on a MAX problem under the budget.
inline SolveResult run_solver(const Spn& spn, const SolverSpec& s,
                              std::optional<std::chrono::duration<double>> budget) {
  const Deadline deadline = Deadline::after(budget);
  switch (s.kind) {
    case SolverKind::kBestTree: return best_tree(spn, deadline);
    case SolverKind::kNormalizedGreedy: return normalized_greedy(spn, deadline);
    case SolverKind::kBeam: return beam_search(spn, s.k, s.seed, deadline);
    case SolverKind::kArgmaxProduct: return argmax_product(spn, deadline);
    case SolverKind::kKBestTrees: return k_best_trees(spn, s.k, deadline);
    case SolverKind::kExact: {
      SearchConfig cfg = s.search;
      cfg.time_budget = budget;
      return max_exact(spn, cfg);
    }
  }
  return {};
}

struct BenchCell {
  double score = -std::numeric_limits<double>::infinity();
  double time_ms = 0.0;
  SolveStatus status = SolveStatus::kTimeoutNoResult;
  Assignment assignment;
};

struct SolverSummary {
  std::string solver;
  int wins = 0;
  int finished = 0;
  double mean_time_ms = 0.0;
};

struct BenchReport {
  std::vector<std::string> solvers;
  std::vector<std::vector<BenchCell>> cells;  // [problem][solver]
  std::vector<double> reduce_ms;              // per problem, outside the solver timings
  std::vector<SolverSummary> summary;

  std::size_t problem_count() const { return cells.size(); }
};

/// Winning counts (exact score equality with the per-problem best; no-result
/// cells never win), finishing counts and mean times.
inline void summarize(BenchReport& report) {
  report.summary.clear();
  for (const auto& name : report.solvers) report.summary.push_back({name});
  for (const auto& row : report.cells) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : row)
      if (c.status != SolveStatus::kTimeoutNoResult) best = std::max(best, c.score);
    for (std::size_t s = 0; s < row.size(); ++s) {
      const auto& c = row[s];
      auto& sum = report.summary[s];
      if (c.status != SolveStatus::kTimeoutNoResult && c.score == best) ++sum.wins;
      if (c.status == SolveStatus::kFinished) ++sum.finished;
      sum.mean_time_ms += c.time_ms;
    }
  }
  if (!report.cells.empty())
    for (auto& s : report.summary) s.mean_time_ms /= static_cast<double>(report.cells.size());
}

struct BenchOptions {
  std::optional<std::chrono::duration<double>> budget;
  int jobs = 1;
};

/// For each problem: reduce once (timed separately), then run every solver on
/// the reduced SPN under the shared per-solver budget. Problems are spread
/// over `jobs` worker threads; each cell runs sequentially.
inline BenchReport run_benchmark(const Spn& spn, const std::vector<MapProblem>& problems,
                                 const std::vector<SolverSpec>& solvers, const BenchOptions& opt = {}) {
  BenchReport report;
  for (const auto& s : solvers) report.solvers.push_back(s.name());
  report.cells.assign(problems.size(), std::vector<BenchCell>(solvers.size()));
  report.reduce_ms.assign(problems.size(), 0.0);

  auto run_problem = [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Spn reduced = map_to_max(spn, problems[i]);
    report.reduce_ms[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t s = 0; s < solvers.size(); ++s) {
      SolveResult r = run_solver(reduced, solvers[s], opt.budget);
      auto& cell = report.cells[i][s];
      cell.status = r.status;
      cell.time_ms = std::chrono::duration<double, std::milli>(r.elapsed).count();
      if (r.has_result()) {
        cell.score = r.score;
        cell.assignment = std::move(r.assignment);
      }
    }
  };

  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1 || problems.size() < 2) {
    for (std::size_t i = 0; i < problems.size(); ++i) run_problem(i);
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&, j] {
        for (std::size_t i = static_cast<std::size_t>(j); i < problems.size(); i += static_cast<std::size_t>(jobs))
          run_problem(i);
      });
    for (auto& t : pool) t.join();
  }
  summarize(report);
  return report;
}

inline const char* kCellHeader = "solver,problem,score,time_ms,status";
inline const char* kSummaryHeader = "solver,wins,finished,mean_time_ms";

inline void write_report(const BenchReport& report, std::ostream& out) {
  out << kCellHeader << '\n';
  for (std::size_t s = 0; s < report.solvers.size(); ++s) {
    for (std::size_t p = 0; p < report.cells.size(); ++p) {
      const auto& c = report.cells[p][s];
      out << report.solvers[s] << ',' << p << ',' << format_score(c.score) << ',' << format_score(c.time_ms, 6) << ','
          << to_string(c.status) << '\n';
    }
  }
  out << '\n' << kSummaryHeader << '\n';
  for (const auto& s : report.summary)
    out << s.solver << ',' << s.wins << ',' << s.finished << ',' << format_score(s.mean_time_ms, 6) << '\n';
}

inline void write_report(const BenchReport& report, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw BenchError("cannot write '" + path + "'");
  write_report(report, f);
  f.flush();
  if (!f) throw BenchError("write to '" + path + "' failed");
}

}  // namespace spnmap
