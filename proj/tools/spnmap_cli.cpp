// Command-line front end: validate, eval, reduce, bn2spn, max, map, bench.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "spnmap/spnmap.hpp"

namespace {

using namespace spnmap;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct SolverFlags {
  std::string solver = "kbt";
  int k = 10;
  std::uint64_t seed = 0;
  double budget = -1.0;
  std::string pruning = "fc";
  bool ordering = false;
  bool staging = false;
  int stage_interval = 4;
  std::string init = "bt";
  int digits = 17;
  bool verbose = false;

  void attach(CLI::App* app) {
    app->add_option("--solver", solver, "bt, ng, bs, amap, kbt or exact")
        ->check(CLI::IsMember({"bt", "ng", "bs", "amap", "kbt", "exact"}));
    app->add_option("--k", k, "beam size (bs) or number of trees (kbt)")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "random seed");
    app->add_option("--budget", budget, "time budget in seconds (default: none)")->check(CLI::NonNegativeNumber);
    app->add_option("--pruning", pruning, "exact solver pruning: mc or fc")->check(CLI::IsMember({"mc", "fc"}));
    app->add_flag("--ordering", ordering, "exact solver: fewest-values variable, best-score value ordering");
    app->add_flag("--staging", staging, "exact solver: periodically condition the SPN on determined variables");
    app->add_option("--stage-interval", stage_interval, "newly determined variables between stagings")
        ->check(CLI::PositiveNumber);
    app->add_option("--init", init, "exact solver initial sample: first, random or bt")
        ->check(CLI::IsMember({"first", "random", "bt"}));
    app->add_option("--digits", digits, "significant digits for scores")->check(CLI::Range(1, 17));
    app->add_flag("-v,--verbose", verbose, "print status and statistics to stderr");
  }

  std::optional<std::chrono::duration<double>> time_budget() const {
    if (budget < 0) return std::nullopt;
    return std::chrono::duration<double>(budget);
  }

  SolveResult run(const Spn& spn) const {
    const Deadline deadline = Deadline::after(time_budget());
    if (solver == "bt") return best_tree(spn, deadline);
    if (solver == "ng") return normalized_greedy(spn, deadline);
    if (solver == "amap") return argmax_product(spn, deadline);
    if (solver == "kbt") return k_best_trees(spn, k, deadline);
    if (solver == "bs") return beam_search(spn, k, seed, deadline);
    SearchConfig cfg;
    cfg.pruning = pruning == "mc" ? Pruning::kMarginal : Pruning::kForward;
    cfg.ordering = ordering;
    cfg.staging = staging;
    cfg.stage_interval = stage_interval;
    cfg.time_budget = time_budget();
    cfg.seed = seed;
    cfg.initializer = init == "first" ? Initializer::kFirstAssignment
                      : init == "random" ? Initializer::kRandom
                                         : Initializer::kBestTree;
    return max_exact(spn, cfg);
  }

  void report(const SolveResult& r) const {
    if (!verbose) return;
    const auto& s = r.stats;
    std::cerr << "status=" << to_string(r.status) << " elapsed_ms=" << format_score(r.elapsed.count() * 1e3, 6)
              << " expanded=" << s.nodes_expanded << " mc_prunes=" << s.mc_prunes << " fc_prunes=" << s.fc_prunes
              << " stage_reductions=" << s.stage_reductions << " rounds=" << s.rounds
              << " zero_mass=" << (r.zero_mass ? 1 : 0) << '\n';
  }
};

std::string assignment_text(const Assignment& x, const std::vector<int>& vars) {
  std::string out;
  for (int v : vars) out += "x" + std::to_string(v) + "=" + std::to_string(x[static_cast<std::size_t>(v)]) + " ";
  return out;
}

std::vector<int> all_vars(const Spn& spn) {
  std::vector<int> v(static_cast<std::size_t>(spn.num_vars()));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

int print_solution(const SolveResult& r, const std::vector<int>& vars, const SolverFlags& flags) {
  flags.report(r);
  if (!r.has_result()) {
    std::cerr << "error: no result within the time budget\n";
    return kExitFailure;
  }
  std::cout << assignment_text(r.assignment, vars) << "score=" << format_score(r.score, flags.digits) << '\n';
  return kExitOk;
}

std::vector<double> parse_proportions(const std::string& text) {
  std::vector<double> p;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) p.push_back(std::stod(item));
  if (p.size() != 3) throw BenchError("--proportions needs three comma-separated values q,e,h");
  const double total = p[0] + p[1] + p[2];
  if (!(total > 0) || p[0] < 0 || p[1] < 0 || p[2] < 0) throw BenchError("--proportions must be nonnegative with a positive sum");
  for (double& x : p) x /= total;
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MAP inference in sum-product networks"};
  app.require_subcommand(1);

  std::string spn_path;
  std::string bn_path;
  std::string problem_text;
  std::string at;
  std::string out_path;
  std::string problems_path;
  bool do_simplify = false;
  int digits = 17;

  auto* validate_cmd = app.add_subcommand("validate", "check an SPN file for structural validity");
  validate_cmd->add_option("--spn", spn_path, "SPN file")->required();

  auto* eval_cmd = app.add_subcommand("eval", "evaluate an SPN at (partial) evidence");
  eval_cmd->add_option("--spn", spn_path, "SPN file")->required();
  eval_cmd->add_option("--at", at, "evidence \"var=val,...\"; unlisted variables are summed out")->required();
  eval_cmd->add_option("--digits", digits, "significant digits")->check(CLI::Range(1, 17));

  auto* reduce_cmd = app.add_subcommand("reduce", "reduce a MAP problem to a MAX problem");
  reduce_cmd->add_option("--spn", spn_path, "SPN file")->required();
  reduce_cmd->add_option("--problem", problem_text, "\"q:<vars> e:<var=val,...> h:<vars>\"")->required();
  reduce_cmd->add_flag("--simplify", do_simplify, "splice unary nodes and drop zero-weight arcs");

  auto* bn_cmd = app.add_subcommand("bn2spn", "compile a tree Bayesian network into an SPN");
  bn_cmd->add_option("--bn", bn_path, "BN file")->required();

  SolverFlags max_flags;
  auto* max_cmd = app.add_subcommand("max", "solve MAX on an SPN");
  max_cmd->add_option("--spn", spn_path, "SPN file")->required();
  max_flags.attach(max_cmd);

  SolverFlags map_flags;
  auto* map_cmd = app.add_subcommand("map", "solve a MAP problem (reduce, then MAX)");
  map_cmd->add_option("--spn", spn_path, "SPN file")->required();
  map_cmd->add_option("--problem", problem_text, "\"q:<vars> e:<var=val,...> h:<vars>\"")->required();
  map_flags.attach(map_cmd);

  std::string proportions = "3,3,4";
  int count = 100;
  std::uint64_t bench_seed = 0;
  std::string solvers = "bt,ng,bs10,amap,kbt10,kbt100,fc+o+s";
  double bench_budget = 10.0;
  int jobs = 1;
  auto* bench_cmd = app.add_subcommand("bench", "run solvers on random or given MAP problems and write a CSV report");
  bench_cmd->add_option("--spn", spn_path, "SPN file")->required();
  bench_cmd->add_option("--proportions", proportions, "Q/E/H proportions, e.g. 3,3,4");
  bench_cmd->add_option("--count", count, "number of generated problems")->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--seed", bench_seed, "problem generation seed");
  bench_cmd->add_option("--solvers", solvers, "comma list: bt, ng, amap, bs<K>, kbt<K>, mc, fc, fc+o, fc+o+s");
  bench_cmd->add_option("--budget", bench_budget, "per-solver time budget in seconds")->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--problems", problems_path, "problem file (one problem per line) instead of generating");
  bench_cmd->add_option("--out", out_path, "CSV output path (default: stdout)");
  bench_cmd->add_option("--jobs", jobs, "worker threads over problems")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*validate_cmd) {
      const std::string text = read_file(spn_path);
      try {
        const Spn spn = parse_spn(text);
        std::cout << "valid: " << spn.num_vars() << " variables, " << spn.size() << " nodes, " << spn.arc_count()
                  << " arcs\n";
        return kExitOk;
      } catch (const ValidationError& e) {
        std::cerr << spn_path << ": " << e.what();
        return kExitFailure;
      }
    }

    if (*bn_cmd) {
      const TreeBn bn = parse_bn(read_file(bn_path));
      std::cout << serialize_spn(bn_to_spn(bn)) << '\n';
      return kExitOk;
    }

    const Spn spn = load_spn(spn_path);

    if (*eval_cmd) {
      PartialEvidence e(spn.variables());
      std::vector<int> vars, vals;
      parse_assignment_list(at, vars, vals, "--at");
      for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i] < 0 || vars[i] >= spn.num_vars()) throw ProblemError("--at: variable out of range");
        if (vals[i] < 0 || vals[i] >= spn.variables().cardinality(vars[i])) throw ProblemError("--at: value out of range");
        e.set_value(vars[i], vals[i]);
      }
      std::cout << format_score(evaluate(spn, e), digits) << '\n';
      return kExitOk;
    }

    if (*reduce_cmd) {
      const MapProblem p = parse_problem_line(problem_text, spn.variables());
      Spn reduced = map_to_max(spn, p);
      if (do_simplify) reduced = simplify(reduced);
      std::cout << serialize_spn(reduced) << '\n';
      return kExitOk;
    }

    if (*max_cmd) return print_solution(max_flags.run(spn), all_vars(spn), max_flags);

    if (*map_cmd) {
      const MapProblem p = parse_problem_line(problem_text, spn.variables());
      const Spn reduced = map_to_max(spn, p);
      return print_solution(map_flags.run(reduced), p.query, map_flags);
    }

    if (*bench_cmd) {
      std::vector<MapProblem> problems;
      if (!problems_path.empty()) {
        problems = parse_problems(read_file(problems_path), spn.variables());
      } else {
        const auto p = parse_proportions(proportions);
        problems = generate_problems(spn.variables(), {p[0], p[1], p[2]}, count, bench_seed).problems;
      }
      BenchOptions opt;
      opt.budget = std::chrono::duration<double>(bench_budget);
      opt.jobs = jobs;
      const BenchReport report = run_benchmark(spn, problems, parse_solver_list(solvers, bench_seed), opt);
      if (out_path.empty()) write_report(report, std::cout);
      else write_report(report, out_path);
      return kExitOk;
    }
  } catch (const ParseError& e) {
    std::cerr << (spn_path.empty() ? bn_path : spn_path) << ": " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
