// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
// Usage: acceptance [criterion...]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace mapfdp;

namespace {

struct Verdict
{
  bool pass = true;
  std::string detail;

  void fail(const std::string& why)
  {
    if (pass) {
      detail.clear();
    }
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
};

struct Solved
{
  Instance inst;
  Plan plan;
};

// 20 AME-solved 20x20 instances with 10 agents and p in (0, 1/2).
const std::vector<Solved>& desk_instances()
{
  static const std::vector<Solved> cache = [] {
    std::vector<Solved> out;
    SearchLimits limits;
    limits.time_limit_s = 30;
    for (std::uint64_t k = 0; out.size() < 20 && k < 60; ++k) {
      Instance inst = generate_random_instance(20, 20, 0.1, 10, {0.0, 0.5}, derive_seed(20240601, k));
      SolveResult r = solve_ame(inst, limits);
      if (r.outcome == SolveOutcome::Solved) {
        out.push_back({std::move(inst), std::move(r.plan)});
      }
    }
    return out;
  }();
  return cache;
}

std::string fmt(double v, int digits = 3)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Verdict robustness()
{
  Verdict v;
  const auto& cases = desk_instances();
  if (cases.size() < 20) {
    v.fail("only " + std::to_string(cases.size()) + " instances solved");
  }
  std::uint64_t collisions = 0;
  int deadlocks = 0;
  int incomplete = 0;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    for (Policy p : {Policy::Mcp, Policy::Fsp}) {
      const RunStats s = monte_carlo(cases[k].inst, cases[k].plan, p, 200, derive_seed(1, k));
      collisions += s.vertex_collisions + s.edge_collisions;
      deadlocks += s.deadlocks;
      incomplete += s.n_runs - s.completed;
    }
  }
  if (collisions != 0 || deadlocks != 0 || incomplete != 0) {
    v.fail(std::to_string(collisions) + " collisions, " + std::to_string(deadlocks) + " deadlocks, " +
           std::to_string(incomplete) + " unfinished runs");
  }
  if (v.pass) {
    v.detail = std::to_string(cases.size()) + " instances x 200 runs x {mcp, fsp}: no collisions or deadlocks";
  }
  return v;
}

Verdict validity()
{
  Verdict v;
  std::mt19937_64 rng(4242);
  int instances = 0;
  int plans = 0;
  SearchLimits limits;
  for (; instances < 500; ++instances) {
    const int n = 4 + static_cast<int>(rng() % 6);
    const int m = 1 + static_cast<int>(rng() % 3);
    const Instance inst = oracle::random_tiny_instance(n, m, static_cast<int>(rng() % 4), rng);
    limits.time_limit_s = brute_force_optimal_makespan(inst, 4 * n) ? 0.2 : 0.02;
    for (const SolveResult& r : {solve_ame(inst, limits), solve_adapted_cbs(inst, limits)}) {
      if (r.outcome != SolveOutcome::Solved) {
        continue;
      }
      ++plans;
      if (!validate_plan(inst, r.plan).valid() || !oracle::pairwise_conflicts(r.plan).empty()) {
        v.fail(r.report.solver + " emitted an invalid plan on tiny instance " + std::to_string(instances));
      }
    }
  }
  for (const auto& c : desk_instances()) {
    ++plans;
    if (!validate_plan(c.inst, c.plan).valid()) {
      v.fail("invalid AME plan on a desk-scale instance");
    }
  }
  if (v.pass) {
    v.detail = std::to_string(plans) + " plans from " + std::to_string(instances) + " tiny and " +
               std::to_string(desk_instances().size()) + " desk-scale instances all valid";
  }
  return v;
}

Verdict reduction()
{
  Verdict v;
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 11);
    const auto dag = oracle::random_dag(n, 0.1 + 0.05 * (trial % 12), rng);
    const auto red = transitive_reduction(dag);
    if (oracle::edge_set(red) != oracle::brute_force_reduction(dag)) {
      v.fail("DAG " + std::to_string(trial) + " differs from brute force");
    }
    if (transitive_reduction(red) != red) {
      v.fail("DAG " + std::to_string(trial) + " reduction not idempotent");
    }
  }
  int plans = 0;
  SearchLimits limits;
  limits.time_limit_s = 2;
  for (std::uint64_t k = 0; plans < 50 && k < 200; ++k) {
    const Instance inst = generate_random_instance(8, 8, 0.15, 2 + static_cast<int>(k % 4), {0.0, 0.5},
                                                   derive_seed(555, k));
    const SolveResult r = solve_ame(inst, limits);
    if (r.outcome != SolveOutcome::Solved) {
      continue;
    }
    ++plans;
    const DependencyGraph dg = build_partial_order(r.plan);
    const DependencyGraph red = transitive_reduction(dg);
    if (oracle::edge_set(red.adjacency()) != oracle::brute_force_reduction(dg.adjacency())) {
      v.fail("plan " + std::to_string(k) + " partial order reduction differs from brute force");
    }
    if (transitive_reduction(red).adjacency() != red.adjacency()) {
      v.fail("plan " + std::to_string(k) + " reduction not idempotent");
    }
  }
  if (plans < 50) {
    v.fail("only " + std::to_string(plans) + " plans");
  }
  if (v.pass) {
    v.detail = "200 random DAGs and 50 plan partial orders match brute force, idempotent";
  }
  return v;
}

Verdict labels_closed_form()
{
  Verdict v;
  const Plan moves = compute_labels(fixture::plan_of({Path{{0, 1, 2, 3}, {}}}), std::vector<double>{0.5});
  if (moves.paths[0].labels != std::vector<double>{0, 2, 4, 6}) {
    v.fail("3 moves at p=1/2 not labelled 0,2,4,6");
  }
  const Plan waiting = compute_labels(fixture::plan_of({Path{{0, 1, 1, 2}, {}}}), std::vector<double>{0.5});
  if (waiting.paths[0].labels != std::vector<double>{0, 2, 3, 5}) {
    v.fail("a wait does not add exactly 1");
  }
  const Instance inst = fixture::path_graph(4, {{0, 0, 3, 0.5}});
  const RunStats s = monte_carlo(inst, moves, Policy::Mcp, 10000, 2024);
  if (std::abs(s.mean_makespan - 6.0) > 0.15) {
    v.fail("simulated mean " + fmt(s.mean_makespan) + " outside 6 +- 0.15");
  }
  if (v.pass) {
    v.detail = "labels 0,2,4,6; wait +1; simulated mean " + fmt(s.mean_makespan) + " over 10000 runs";
  }
  return v;
}

Verdict approximation_quality()
{
  Verdict v;
  std::vector<double> ratios;
  for (std::size_t k = 0; k < desk_instances().size(); ++k) {
    const auto& c = desk_instances()[k];
    const double approx = approximate_average_makespan(compute_labels(c.plan, c.inst.delay_probs()));
    const RunStats s = monte_carlo(c.inst, c.plan, Policy::Mcp, 200, derive_seed(5, k));
    const double ratio = approx / s.mean_makespan;
    ratios.push_back(ratio);
    if (ratio < 0.70 || ratio > 1.05) {
      v.fail("instance " + std::to_string(k) + " ratio " + fmt(ratio));
    }
  }
  if (ratios.size() < 10) {
    v.fail("only " + std::to_string(ratios.size()) + " instances");
    return v;
  }
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  if (median < 0.85 || median > 1.00) {
    v.fail("median ratio " + fmt(median));
  }
  if (v.pass) {
    v.detail = std::to_string(n) + " instances, ratios in [" + fmt(sorted.front()) + ", " + fmt(sorted.back()) +
               "], median " + fmt(median);
  }
  return v;
}

Verdict policy_dominance()
{
  Verdict v;
  int separated = 0;
  const auto& cases = desk_instances();
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& [inst, plan] = cases[k];
    const RunStats mcp = monte_carlo(inst, plan, Policy::Mcp, 200, derive_seed(6, k));
    const RunStats fsp = monte_carlo(inst, plan, Policy::Fsp, 200, derive_seed(6, k));
    const RunStats dummy = monte_carlo(inst, plan, Policy::Dummy, 200, derive_seed(6, k));
    std::uint64_t sum_x = 0;
    for (const Path& p : plan.paths) {
      sum_x += static_cast<std::uint64_t>(p.last_index());
    }
    const std::string id = "instance " + std::to_string(k);
    if (fsp.messages != static_cast<std::uint64_t>(inst.num_agents() - 1) * sum_x) {
      v.fail(id + " fsp messages " + std::to_string(fsp.messages));
    }
    if (!(mcp.messages < fsp.messages)) {
      v.fail(id + " mcp messages not below fsp");
    }
    if (!(mcp.mean_makespan < fsp.mean_makespan)) {
      v.fail(id + " mcp makespan not below fsp");
    }
    separated += mcp.mean_makespan + mcp.ci95 < fsp.mean_makespan - fsp.ci95;
    if (dummy.mean_makespan > mcp.mean_makespan + mcp.ci95 + dummy.ci95) {
      v.fail(id + " dummy makespan above mcp");
    }
  }
  const double share = cases.empty() ? 0.0 : static_cast<double>(separated) / static_cast<double>(cases.size());
  if (share < 0.8) {
    v.fail("non-overlapping CIs on " + fmt(100 * share, 0) + "% of instances");
  }
  if (v.pass) {
    v.detail = "messages and makespans ordered on all " + std::to_string(cases.size()) +
               " instances, CIs separated on " + fmt(100 * share, 0) + "%";
  }
  return v;
}

Verdict cbs_optimality()
{
  Verdict v;
  std::mt19937_64 rng(31337);
  int matched = 0;
  int timeouts = 0;
  SearchLimits limits;
  for (int k = 0; k < 60 && matched < 40; ++k) {
    const int n = 4 + static_cast<int>(rng() % 5);
    const int m = 2 + static_cast<int>(rng() % 2);
    const Instance inst = oracle::random_tiny_instance(n, m, static_cast<int>(rng() % 3), rng);
    const auto best = brute_force_optimal_makespan(inst, 4 * n);
    limits.time_limit_s = best ? 2.0 : 0.1;
    const SolveResult r = solve_adapted_cbs(inst, limits);
    if (r.outcome == SolveOutcome::Timeout) {
      timeouts += best.has_value();
      continue;
    }
    if (!best) {
      if (r.outcome == SolveOutcome::Solved) {
        v.fail("instance " + std::to_string(k) + " solved although infeasible");
      }
      continue;
    }
    if (r.outcome != SolveOutcome::Solved || r.plan.max_last_index() != *best) {
      v.fail("instance " + std::to_string(k) + " makespan differs from " + std::to_string(*best));
      continue;
    }
    ++matched;
  }
  if (matched < 25) {
    v.fail("only " + std::to_string(matched) + " matches");
  }
  if (v.pass) {
    v.detail = std::to_string(matched) + " tiny instances match brute force (" + std::to_string(timeouts) +
               " feasible ones timed out)";
  }
  return v;
}

Verdict trends()
{
  Verdict v;
  BenchConfig two = bench_preset(2);
  two.instances = 8;
  two.n_runs = 200;
  two.seed = 8;
  two.time_limit_s = 30;
  const BenchResult r2 = run_bench(two);
  std::vector<double> means;
  for (double t : two.tmax_values) {
    double sum = 0.0;
    int n = 0;
    for (const BenchRow& r : r2.rows) {
      if (r.tmax == t && !r.policies.empty()) {
        sum += r.policies.front().stats.mean_makespan;
        ++n;
      }
    }
    means.push_back(n ? sum / n : 0.0);
  }
  for (std::size_t i = 1; i < means.size(); ++i) {
    if (!(means[i] > means[i - 1])) {
      v.fail("mean makespan not increasing at tmax " + fmt(two.tmax_values[i], 0));
    }
  }
  BenchConfig three = bench_preset(3);
  three.instances = 8;
  three.n_runs = 20;
  three.seed = 9;
  three.time_limit_s = 30;
  three.max_high_level_expansions = 2000;
  const BenchResult r3 = run_bench(three);
  std::vector<double> rates;
  for (int m : three.agent_counts) {
    int solved = 0;
    int total = 0;
    for (const BenchRow& r : r3.rows) {
      if (r.agents == m) {
        ++total;
        solved += r.outcome == SolveOutcome::Solved;
      }
    }
    rates.push_back(total ? static_cast<double>(solved) / total : 0.0);
  }
  for (std::size_t i = 1; i < rates.size(); ++i) {
    if (rates[i] > rates[i - 1]) {
      v.fail("success rate rises at " + std::to_string(three.agent_counts[i]) + " agents");
    }
  }
  std::string m2;
  for (double m : means) {
    m2 += (m2.empty() ? "" : " < ") + fmt(m, 2);
  }
  std::string s3;
  for (double r : rates) {
    s3 += (s3.empty() ? "" : " >= ") + fmt(100 * r, 0) + "%";
  }
  if (v.pass) {
    v.detail = "tmax {2,4,8} makespans " + m2 + "; success {5,10,15,20} " + s3;
  }
  return v;
}

int run_cli(const std::string& args)
{
  const int status = std::system((std::string(MAPFDP_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism()
{
  Verdict v;
  const auto& c = desk_instances().front();
  SearchLimits limits;
  limits.time_limit_s = 30;
  std::vector<std::string> plans;
  for (int k = 0; k < 2; ++k) {
    PlanFile pf;
    pf.plan = solve_ame(c.inst, limits).plan;
    pf.instance_checksum = instance_checksum(c.inst);
    pf.solver = "ame";
    plans.push_back(write_plan_json(pf));
  }
  if (plans[0] != plans[1]) {
    v.fail("plan files differ");
  }
  BenchConfig cfg = bench_preset(4);
  cfg.instances = 3;
  cfg.n_runs = 50;
  cfg.seed = 3;
  cfg.solvers = {"ame", "adapted-cbs"};
  cfg.max_high_level_expansions = 5000;
  const std::string a = bench_csv(run_bench(cfg));
  cfg.threads = 4;
  const std::string b = bench_csv(run_bench(cfg));
  if (a != b) {
    v.fail("bench CSVs differ");
  }

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mapfdp_acceptance";
  fs::remove_all(dir);
  for (const char* sub : {"r1", "r2"}) {
    const std::string out = (dir / sub).string();
    if (run_cli("--seed 7 --out " + out + " generate --width 12 --height 12 --agents 6") != 0 ||
        run_cli("--seed 7 --out " + out + " solve " + out + "/instance_0.map " + out + "/instance_0.agents") != 0 ||
        run_cli("--seed 7 --runs 30 --max-expansions 5000 --out " + out +
                " bench --experiment 1 --instances 2 --agents 5 --size 12") != 0) {
      v.fail("command line run failed");
    }
  }
  for (const char* file : {"instance_0.map", "instance_0.agents", "plan.json", "results.csv"}) {
    if (!fs::exists(dir / "r1" / file) || detail::read_file(dir / "r1" / file) != detail::read_file(dir / "r2" / file)) {
      v.fail(std::string(file) + " differs between runs");
    }
  }
  fs::remove_all(dir);
  if (v.pass) {
    v.detail = "plan JSON, in-process CSV (1 vs 4 threads) and command line outputs byte-identical";
  }
  return v;
}

}  // namespace

int main(int argc, char** argv)
{
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
    {"robustness: no collisions or deadlocks under MCP and FSP", robustness},
    {"validity: every emitted plan is valid", validity},
    {"transitive reduction equals brute force", reduction},
    {"label fixpoint and closed forms", labels_closed_form},
    {"approximation quality band", approximation_quality},
    {"policy dominance", policy_dominance},
    {"adapted CBS optimality", cbs_optimality},
    {"trend reproductions", trends},
    {"determinism", determinism},
  };
  std::vector<int> selected;
  for (int a = 1; a < argc; ++a) {
    selected.push_back(std::atoi(argv[a]));
  }
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << " " << criteria[i].first << " ("
              << v.detail << ", " << fmt(secs, 1) << " s)" << std::endl;
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
