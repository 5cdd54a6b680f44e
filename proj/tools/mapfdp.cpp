#include <algorithm>
#include <filesystem>
#include <iterator>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mapfdp/mapfdp.hpp"

namespace fs = std::filesystem;
using namespace mapfdp;

namespace {

enum Exit : int
{
  kOk = 0,
  kFailure = 1,
  kNoSolution = 2,
  kTimeout = 3,
  kInvalid = 4,
};

struct Globals
{
  std::uint64_t seed = 1;
  double time_limit = 60.0;
  int runs = 200;
  std::vector<std::string> policies;
  std::vector<std::string> solvers;
  bool emit_deps = false;
  bool recompute_labels = false;
  std::uint64_t max_expansions = SearchLimits{}.max_high_level_expansions;
  std::string out = ".";
  int threads = 1;
};

// Thrown for mismatched plan/instance pairs and invalid plans.
struct ValidationFailure : Error
{
  using Error::Error;
};

Plan load_plan_for(const Instance& inst, const std::string& plan_file, PlanFile* meta = nullptr)
{
  PlanFile pf = read_plan_json(detail::read_file(plan_file));
  const std::string expected = instance_checksum(inst);
  if (!pf.instance_checksum.empty() && pf.instance_checksum != expected) {
    throw ValidationFailure("plan was made for instance " + pf.instance_checksum + ", not " + expected);
  }
  if (meta != nullptr) {
    *meta = pf;
  }
  return pf.plan;
}

int exit_for(SolveOutcome o)
{
  switch (o) {
    case SolveOutcome::Solved:
      return kOk;
    case SolveOutcome::NoSolution:
      return kNoSolution;
    case SolveOutcome::Timeout:
      return kTimeout;
  }
  return kFailure;
}

std::vector<double> parse_tmax_list(const std::vector<std::string>& items)
{
  std::vector<double> out;
  for (const auto& s : items) {
    const auto dots = s.find("..");
    if (dots == std::string::npos) {
      out.push_back(std::stod(s));
      continue;
    }
    const int lo = std::stoi(s.substr(0, dots));
    const int hi = std::stoi(s.substr(dots + 2));
    for (int t = lo; t <= hi; ++t) {
      out.push_back(t);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Planning and robust execution for multi-agent path finding with delay probabilities"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master random seed");
  app.add_option("--time-limit", g.time_limit, "Seconds per solve")->check(CLI::PositiveNumber);
  app.add_option("--runs", g.runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
  app.add_option("--policy", g.policies, "mcp, fsp or dummy (comma separated for bench)")->delimiter(',');
  app.add_option("--solver", g.solvers, "ame or adapted-cbs (comma separated for bench)")->delimiter(',');
  app.add_option("--max-expansions", g.max_expansions, "High-level node budget per solve")
    ->check(CLI::PositiveNumber);
  app.add_flag("--emit-deps", g.emit_deps, "Print dependency-graph statistics");
  app.add_flag("--recompute-labels", g.recompute_labels, "Refresh every agent's labels after each replan (AME)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  // generate
  auto* gen = app.add_subcommand("generate", "Write random or warehouse instances");
  gen->fallthrough();
  std::string gen_type = "random";
  int gen_width = 20;
  int gen_height = 20;
  double gen_blocked = 0.10;
  int gen_agents = 10;
  int gen_count = 1;
  std::vector<std::string> gen_tmax{"2"};
  std::string gen_prefix = "instance";
  gen->add_option("--type", gen_type, "random or warehouse")->check(CLI::IsMember({"random", "warehouse"}));
  gen->add_option("--width", gen_width)->check(CLI::PositiveNumber);
  gen->add_option("--height", gen_height)->check(CLI::PositiveNumber);
  gen->add_option("--blocked", gen_blocked)->check(CLI::Range(0.0, 1.0));
  gen->add_option("--agents", gen_agents)->check(CLI::PositiveNumber);
  gen->add_option("--count", gen_count, "Number of layouts")->check(CLI::PositiveNumber);
  gen->add_option("--tmax", gen_tmax, "Expected-move-time bounds, e.g. 2 or 2..20; several values share a layout")
    ->delimiter(',');
  gen->add_option("--prefix", gen_prefix, "File name prefix");

  // solve
  auto* solve = app.add_subcommand("solve", "Plan an instance");
  solve->fallthrough();
  std::string map_file;
  std::string agents_file;
  std::string plan_file;
  solve->add_option("map", map_file)->required()->check(CLI::ExistingFile);
  solve->add_option("agents", agents_file)->required()->check(CLI::ExistingFile);
  std::string plan_name = "plan.json";
  solve->add_option("--plan-name", plan_name, "Plan file name inside --out");

  // validate
  auto* validate = app.add_subcommand("validate", "Check a plan against an instance");
  validate->fallthrough();
  validate->add_option("map", map_file)->required()->check(CLI::ExistingFile);
  validate->add_option("agents", agents_file)->required()->check(CLI::ExistingFile);
  validate->add_option("plan", plan_file)->required()->check(CLI::ExistingFile);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Execute a plan repeatedly under a policy");
  simulate->fallthrough();
  simulate->add_option("map", map_file)->required()->check(CLI::ExistingFile);
  simulate->add_option("agents", agents_file)->required()->check(CLI::ExistingFile);
  simulate->add_option("plan", plan_file)->required()->check(CLI::ExistingFile);
  std::string trace_file;
  int latency = 0;
  simulate->add_option("--trace", trace_file, "Write the first run's per-step log here");
  simulate->add_option("--latency", latency, "Message delivery delay in steps")->check(CLI::NonNegativeNumber);

  // bench
  auto* bench = app.add_subcommand("bench", "Run an experiment sweep");
  bench->fallthrough();
  int experiment = 1;
  int instances = 0;
  std::vector<int> agent_counts;
  std::vector<std::string> bench_tmax;
  int bench_size = 0;
  bench->add_option("--experiment", experiment)->check(CLI::Range(1, 4));
  bench->add_option("--instances", instances, "Instances per cell")->check(CLI::PositiveNumber);
  bench->add_option("--agents", agent_counts)->delimiter(',');
  bench->add_option("--tmax", bench_tmax)->delimiter(',');
  bench->add_option("--size", bench_size, "Grid side length for random layouts")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kFailure;
  }

  try {
    const fs::path out_dir(g.out);
    if (*gen) {
      fs::create_directories(out_dir);
      const std::vector<double> tmax = parse_tmax_list(gen_tmax);
      for (int k = 0; k < gen_count; ++k) {
        const std::uint64_t layout_seed = derive_seed(g.seed, static_cast<std::uint64_t>(k));
        const Instance base = gen_type == "random"
                                ? generate_random_instance(gen_width, gen_height, gen_blocked, gen_agents,
                                                           delay_range_for_tmax(tmax.front()), layout_seed)
                                : generate_warehouse_instance(WarehouseParams{}, gen_agents,
                                                              delay_range_for_tmax(tmax.front()), layout_seed);
        for (std::size_t q = 0; q < tmax.size(); ++q) {
          const Instance inst =
            q == 0 ? base : resample_delays(base, delay_range_for_tmax(tmax[q]), derive_seed(layout_seed, q));
          std::string stem = gen_prefix + "_" + std::to_string(k);
          if (tmax.size() > 1) {
            stem += "_t" + detail::fixed(tmax[q], 0);
          }
          save_instance(inst, out_dir / (stem + ".map"), out_dir / (stem + ".agents"));
          std::cout << stem << ' ' << instance_checksum(inst) << '\n';
        }
      }
      return kOk;
    }

    if (*solve) {
      const Instance inst = load_instance(map_file, agents_file);
      const std::string solver = g.solvers.empty() ? "ame" : g.solvers.front();
      if (g.solvers.size() > 1) {
        throw CLI::ValidationError("--solver", "solve takes a single solver");
      }
      SearchLimits limits;
      limits.time_limit_s = g.time_limit;
      limits.max_high_level_expansions = g.max_expansions;
      limits.recompute_labels = g.recompute_labels;
      const SolveResult res = solve_with(solver, inst, limits);
      nlohmann::ordered_json report{{"solver", res.report.solver},
                                    {"outcome", to_string(res.outcome)},
                                    {"high_level_expanded", res.report.high_level_expanded},
                                    {"high_level_generated", res.report.high_level_generated},
                                    {"low_level_searches", res.report.low_level_searches},
                                    {"low_level_expanded", res.report.low_level_expanded},
                                    {"key_decreases", res.report.key_decreases},
                                    {"wall_seconds", res.report.wall_seconds}};
      if (!res.report.detail.empty()) {
        report["detail"] = res.report.detail;
      }
      if (res.outcome == SolveOutcome::Solved) {
        const Plan labeled = compute_labels(res.plan, inst.delay_probs());
        report["max_x"] = res.plan.max_last_index();
        if (res.plan.has_labels()) {
          report["approx_makespan"] = approximate_average_makespan(res.plan);
        }
        report["approx_makespan_recomputed"] = approximate_average_makespan(labeled);
        fs::create_directories(out_dir);
        PlanFile pf;
        pf.plan = res.plan;
        pf.instance_checksum = instance_checksum(inst);
        pf.solver = solver;
        if (g.emit_deps) {
          pf.extra["dependencies"] = dependency_json(res.plan);
        }
        detail::write_file(out_dir / plan_name, write_plan_json(pf));
        report["plan"] = (out_dir / plan_name).string();
      }
      std::cout << report.dump(2) << '\n';
      return exit_for(res.outcome);
    }

    if (*validate) {
      const Instance inst = load_instance(map_file, agents_file);
      const Plan plan = load_plan_for(inst, plan_file);
      const ValidationReport vr = validate_plan(inst, plan);
      nlohmann::ordered_json out{{"valid", vr.valid()}};
      auto& defects = out["defects"] = nlohmann::ordered_json::array();
      for (const auto& d : vr.defects) {
        defects.push_back({{"agent", d.agent}, {"index", d.index}, {"reason", d.reason}});
      }
      auto& conflicts = out["conflicts"] = nlohmann::ordered_json::array();
      for (const auto& c : vr.conflicts) {
        conflicts.push_back(to_string(c));
      }
      if (g.emit_deps && vr.valid()) {
        const DependencyStats ds = dependency_stats(plan);
        out["dependencies"] = {{"edges", ds.edges},
                               {"inter_agent_edges", ds.inter_agent_edges},
                               {"reduced_edges", ds.reduced_edges},
                               {"reduced_inter_agent_edges", ds.reduced_inter_agent_edges},
                               {"mcp_messages", ds.mcp_messages},
                               {"fsp_messages", ds.fsp_messages}};
      }
      std::cout << out.dump(2) << '\n';
      return vr.valid() ? kOk : kInvalid;
    }

    if (*simulate) {
      const Instance inst = load_instance(map_file, agents_file);
      const Plan plan = load_plan_for(inst, plan_file);
      if (g.policies.size() > 1) {
        throw CLI::ValidationError("--policy", "simulate takes a single policy");
      }
      const Policy policy = parse_policy(g.policies.empty() ? "mcp" : g.policies.front());
      ExecutionOptions opts;
      opts.message_latency = latency;
      opts.require_valid_plan = policy != Policy::Dummy;
      if (!validate_plan(inst, plan).well_formed()) {
        throw ValidationFailure("plan is malformed");
      }
      if (opts.require_valid_plan && !validate_plan(inst, plan).valid()) {
        throw ValidationFailure("plan is not valid; only the dummy policy may execute it");
      }
      const RunStats s = monte_carlo(inst, plan, policy, g.runs, g.seed, opts, g.threads);
      nlohmann::ordered_json out{{"policy", to_string(policy)},
                                 {"n_runs", s.n_runs},
                                 {"completed", s.completed},
                                 {"mean_makespan", s.mean_makespan},
                                 {"ci95", s.ci95},
                                 {"messages", s.messages},
                                 {"mean_collisions", s.mean_collisions},
                                 {"vertex_collisions", s.vertex_collisions},
                                 {"edge_collisions", s.edge_collisions},
                                 {"timeouts", s.timeouts},
                                 {"deadlocks", s.deadlocks}};
      std::cout << out.dump(2) << '\n';
      if (!trace_file.empty()) {
        ExecutionOptions topts = opts;
        topts.record_steps = true;
        const ExecutionTrace tr = run_execution(inst, plan, policy, derive_seed(g.seed, 0), topts);
        std::ostringstream os;
        write_trace(os, plan, tr);
        detail::write_file(trace_file, os.str());
      }
      return kOk;
    }

    if (*bench) {
      BenchConfig cfg = bench_preset(experiment);
      cfg.seed = g.seed;
      cfg.n_runs = g.runs;
      cfg.time_limit_s = g.time_limit;
      cfg.max_high_level_expansions = g.max_expansions;
      cfg.recompute_labels = g.recompute_labels;
      cfg.threads = g.threads;
      if (app.count("--solver") > 0) {
        cfg.solvers.clear();
        std::copy_if(g.solvers.begin(), g.solvers.end(), std::back_inserter(cfg.solvers),
                     [](const std::string& s) { return !s.empty(); });
      }
      if (!g.policies.empty()) {
        cfg.policies.clear();
        for (const auto& p : g.policies) {
          cfg.policies.push_back(parse_policy(p));
        }
      }
      if (instances > 0) {
        cfg.instances = instances;
      }
      if (!agent_counts.empty()) {
        cfg.agent_counts = agent_counts;
      }
      if (!bench_tmax.empty()) {
        cfg.tmax_values = parse_tmax_list(bench_tmax);
      }
      if (bench_size > 0) {
        cfg.width = cfg.height = bench_size;
      }
      const BenchResult res = run_bench(cfg);
      fs::create_directories(out_dir);
      detail::write_file(out_dir / "results.csv", bench_csv(res));
      detail::write_file(out_dir / "timings.csv", bench_timings_csv(res));
      const std::string text = bench_text(res);
      detail::write_file(out_dir / "report.txt", text);
      std::cout << text;
      return kOk;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const ValidationFailure& e) {
    std::cerr << "validation failure: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
