#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "adapted_cbs.hpp"
#include "ame.hpp"
#include "dependency.hpp"
#include "execution.hpp"
#include "generate.hpp"
#include "io.hpp"

namespace mapfdp {

enum class Family : std::uint8_t
{
  Random,
  Warehouse,
};

inline std::string_view to_string(Family f)
{
  return f == Family::Random ? "random" : "warehouse";
}

struct BenchConfig
{
  int experiment = 1;
  std::vector<Family> families{Family::Random};
  int width = 20;
  int height = 20;
  double blocked_fraction = 0.10;
  WarehouseParams warehouse;
  std::vector<int> agent_counts{10};
  std::vector<double> tmax_values{2.0};
  bool shared_layout = false; //!< one layout per instance index, delays redrawn per tmax
  int instances = 10;         //!< per (family, agent count, tmax) cell
  std::vector<std::string> solvers{"ame"};
  std::vector<Policy> policies{Policy::Mcp};
  int n_runs = 200;
  std::uint64_t seed = 1;
  double time_limit_s = 60.0;
  std::uint64_t max_high_level_expansions = SearchLimits{}.max_high_level_expansions; //!< reproducible budget
  bool recompute_labels = false;
  int threads = 1;
};

//! Desk-scale analogues of the four experiments.
inline BenchConfig bench_preset(int experiment)
{
  BenchConfig c;
  c.experiment = experiment;
  switch (experiment) {
    case 1:
      c.families = {Family::Random, Family::Warehouse};
      c.solvers = {"ame", "adapted-cbs"};
      break;
    case 2:
      c.tmax_values = {2.0, 4.0, 8.0};
      c.shared_layout = true;
      break;
    case 3:
      c.agent_counts = {5, 10, 15, 20};
      break;
    case 4:
      c.policies = {Policy::Mcp, Policy::Fsp, Policy::Dummy};
      break;
    default:
      throw Error("bench: experiment must be 1, 2, 3 or 4");
  }
  return c;
}

inline void check_bench_config(const BenchConfig& c)
{
  if (c.solvers.empty()) {
    throw Error("bench: at least one solver is required");
  }
  for (const auto& s : c.solvers) {
    if (s != "ame" && s != "adapted-cbs") {
      throw Error("bench: unknown solver '" + s + "'");
    }
  }
  if (c.policies.empty()) {
    throw Error("bench: at least one policy is required");
  }
  if (c.families.empty() || c.agent_counts.empty() || c.tmax_values.empty()) {
    throw Error("bench: families, agent counts and tmax values must be non-empty");
  }
  if (c.instances < 1 || c.n_runs < 1 || c.width < 1 || c.height < 1 || c.threads < 1 ||
      c.max_high_level_expansions < 1) {
    throw Error("bench: counts must be positive");
  }
  for (int m : c.agent_counts) {
    if (m < 1) {
      throw Error("bench: agent counts must be positive");
    }
  }
  for (double t : c.tmax_values) {
    if (!(t > 1.0)) {
      throw Error("bench: tmax values must exceed 1");
    }
  }
}

inline SolveResult solve_with(const std::string& solver, const Instance& inst, const SearchLimits& limits)
{
  if (solver == "ame") {
    return solve_ame(inst, limits);
  }
  if (solver == "adapted-cbs") {
    return solve_adapted_cbs(inst, limits);
  }
  throw Error("unknown solver '" + solver + "'");
}

struct PolicyResult
{
  Policy policy = Policy::Mcp;
  RunStats stats;
};

struct BenchRow
{
  Family family = Family::Random;
  int instance = 0;
  int agents = 0;
  double tmax = 0.0;
  std::string checksum;
  std::string solver;
  SolveOutcome outcome = SolveOutcome::NoSolution;
  std::uint64_t high_level_expanded = 0;
  double wall_seconds = 0.0;
  double approx_makespan = 0.0;            //!< stored key (AME)
  double approx_makespan_recomputed = 0.0; //!< labels recomputed on the final plan
  int max_x = 0;
  std::int64_t sum_x = 0;
  std::vector<PolicyResult> policies;      //!< empty unless solved
};

struct BenchResult
{
  BenchConfig config;
  std::vector<BenchRow> rows;
  std::vector<std::string> warnings;
};

namespace detail {

struct BenchCell
{
  Family family;
  int agents;
  double tmax;
  int instance;
};

inline Instance bench_instance(const BenchConfig& c, const BenchCell& cell)
{
  const std::uint64_t family_tag = static_cast<std::uint64_t>(cell.family) + 1;
  const std::uint64_t layout_seed = derive_seed(
    derive_seed(derive_seed(c.seed, family_tag), static_cast<std::uint64_t>(cell.agents)),
    static_cast<std::uint64_t>(cell.instance));
  const DelayRange range = delay_range_for_tmax(cell.tmax);
  auto make = [&](DelayRange r, std::uint64_t s) {
    return cell.family == Family::Random
             ? generate_random_instance(c.width, c.height, c.blocked_fraction, cell.agents, r, s)
             : generate_warehouse_instance(c.warehouse, cell.agents, r, s);
  };
  if (c.shared_layout) {
    const Instance base = make(delay_range_for_tmax(2.0), layout_seed);
    return resample_delays(base, range, derive_seed(layout_seed, static_cast<std::uint64_t>(cell.tmax * 1000.0)));
  }
  return make(range, derive_seed(layout_seed, static_cast<std::uint64_t>(cell.tmax * 1000.0)));
}

inline std::string fixed(double v, int digits)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/*! Generate, solve, validate and simulate every cell of the sweep.

Solved plans are re-validated before simulation; an invalid plan aborts the
benchmark with an Error. Instances may be processed concurrently; rows are
assembled in cell order.
*/
inline BenchResult run_bench(const BenchConfig& config)
{
  check_bench_config(config);
  std::vector<detail::BenchCell> cells;
  for (Family f : config.families) {
    for (int m : config.agent_counts) {
      for (double t : config.tmax_values) {
        for (int k = 0; k < config.instances; ++k) {
          cells.push_back({f, m, t, k});
        }
      }
    }
  }
  SearchLimits limits;
  limits.time_limit_s = config.time_limit_s;
  limits.max_high_level_expansions = config.max_high_level_expansions;
  limits.recompute_labels = config.recompute_labels;

  std::vector<std::vector<BenchRow>> per_cell(cells.size());
  std::vector<std::string> errors(cells.size());
  auto process = [&](std::size_t idx) {
    const detail::BenchCell& cell = cells[idx];
    const Instance inst = detail::bench_instance(config, cell);
    const std::string checksum = instance_checksum(inst);
    const std::vector<double> probs = inst.delay_probs();
    for (std::size_t s = 0; s < config.solvers.size(); ++s) {
      BenchRow row;
      row.family = cell.family;
      row.instance = cell.instance;
      row.agents = cell.agents;
      row.tmax = cell.tmax;
      row.checksum = checksum;
      row.solver = config.solvers[s];
      const SolveResult res = solve_with(row.solver, inst, limits);
      row.outcome = res.outcome;
      row.high_level_expanded = res.report.high_level_expanded;
      row.wall_seconds = res.report.wall_seconds;
      if (res.outcome == SolveOutcome::Solved) {
        const ValidationReport vr = validate_plan(inst, res.plan);
        if (!vr.valid()) {
          throw Error("bench: " + row.solver + " returned an invalid plan for " + std::string(to_string(cell.family)) +
                      " instance " + std::to_string(cell.instance) + " (" + std::to_string(cell.agents) + " agents)");
        }
        const Plan labeled = compute_labels(res.plan, probs);
        row.approx_makespan = res.plan.has_labels() ? approximate_average_makespan(res.plan) : 0.0;
        row.approx_makespan_recomputed = approximate_average_makespan(labeled);
        row.max_x = res.plan.max_last_index();
        for (const Path& p : res.plan.paths) {
          row.sum_x += p.last_index();
        }
        for (std::size_t q = 0; q < config.policies.size(); ++q) {
          const std::uint64_t mc_seed = derive_seed(derive_seed(config.seed, idx), q);
          row.policies.push_back({config.policies[q], monte_carlo(inst, res.plan, config.policies[q], config.n_runs, mc_seed)});
        }
      }
      per_cell[idx].push_back(std::move(row));
    }
  };

  const int threads = std::min<int>(config.threads, static_cast<int>(cells.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      process(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          try {
            process(i);
          } catch (const std::exception& e) {
            errors[i] = e.what();
          }
        }
      });
    }
    pool.clear();
    for (const auto& e : errors) {
      if (!e.empty()) {
        throw Error(e);
      }
    }
  }

  BenchResult out;
  out.config = config;
  for (auto& rows : per_cell) {
    for (auto& r : rows) {
      out.rows.push_back(std::move(r));
    }
  }

  // soft trend checks
  for (Family f : config.families) {
    for (const auto& solver : config.solvers) {
      if (config.agent_counts.size() > 1) {
        std::optional<double> prev;
        for (double t : config.tmax_values) {
          for (int m : config.agent_counts) {
            int solved = 0;
            int total = 0;
            for (const auto& r : out.rows) {
              if (r.family == f && r.solver == solver && r.agents == m && r.tmax == t) {
                ++total;
                solved += r.outcome == SolveOutcome::Solved;
              }
            }
            const double rate = total ? static_cast<double>(solved) / total : 0.0;
            if (prev && rate > *prev + 1e-12) {
              out.warnings.push_back("success rate of " + solver + " on " + std::string(to_string(f)) +
                                     " rises to " + detail::fixed(100 * rate, 1) + "% at " + std::to_string(m) +
                                     " agents");
            }
            prev = rate;
          }
          prev.reset();
        }
      }
      if (config.tmax_values.size() > 1) {
        for (int m : config.agent_counts) {
          std::optional<double> prev;
          for (double t : config.tmax_values) {
            double sum = 0.0;
            int n = 0;
            for (const auto& r : out.rows) {
              if (r.family == f && r.solver == solver && r.agents == m && r.tmax == t && !r.policies.empty()) {
                sum += r.policies.front().stats.mean_makespan;
                ++n;
              }
            }
            if (n == 0) {
              continue;
            }
            const double mean = sum / n;
            if (prev && !(mean > *prev)) {
              out.warnings.push_back("mean makespan of " + solver + " on " + std::string(to_string(f)) +
                                     " does not increase at tmax " + detail::fixed(t, 1));
            }
            prev = mean;
          }
        }
      }
    }
  }
  return out;
}

inline constexpr std::string_view kBenchCsvHeader =
  "experiment,family,instance,agents,tmax,checksum,solver,outcome,high_level_expanded,approx_makespan,"
  "approx_makespan_recomputed,max_x,sum_x,policy,runs,completed,mean_makespan,ci95,messages,mean_collisions,"
  "timeouts,deadlocks";

//! One line per (instance, solver, policy); unsolved instances get one line with empty statistics.
inline std::string bench_csv(const BenchResult& res)
{
  std::ostringstream os;
  os << kBenchCsvHeader << '\n';
  for (const BenchRow& r : res.rows) {
    std::ostringstream prefix;
    prefix << res.config.experiment << ',' << to_string(r.family) << ',' << r.instance << ',' << r.agents << ','
           << detail::fixed(r.tmax, 2) << ',' << r.checksum << ',' << r.solver << ',' << to_string(r.outcome) << ','
           << r.high_level_expanded << ',';
    if (r.outcome != SolveOutcome::Solved) {
      os << prefix.str() << ",,,,,,,,,,,,\n";
      continue;
    }
    prefix << detail::fixed(r.approx_makespan, 6) << ',' << detail::fixed(r.approx_makespan_recomputed, 6) << ','
           << r.max_x << ',' << r.sum_x << ',';
    for (const PolicyResult& p : r.policies) {
      const RunStats& s = p.stats;
      os << prefix.str() << to_string(p.policy) << ',' << s.n_runs << ',' << s.completed << ','
         << detail::fixed(s.mean_makespan, 4) << ',' << detail::fixed(s.ci95, 4) << ',' << s.messages << ','
         << detail::fixed(s.mean_collisions, 4) << ',' << s.timeouts << ',' << s.deadlocks << '\n';
    }
  }
  return os.str();
}

//! Wall-clock solve times, kept apart from the reproducible CSV.
inline std::string bench_timings_csv(const BenchResult& res)
{
  std::ostringstream os;
  os << "experiment,family,instance,agents,tmax,solver,outcome,wall_seconds\n";
  for (const BenchRow& r : res.rows) {
    os << res.config.experiment << ',' << to_string(r.family) << ',' << r.instance << ',' << r.agents << ','
       << detail::fixed(r.tmax, 2) << ',' << r.solver << ',' << to_string(r.outcome) << ','
       << detail::fixed(r.wall_seconds, 4) << '\n';
  }
  return os.str();
}

//! Human-readable tables: per-instance results, then success rate per cell.
inline std::string bench_text(const BenchResult& res)
{
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %4s %3s %5s %-12s %-11s %9s %9s %-6s %16s %9s %8s\n", "family", "inst",
                "m", "tmax", "solver", "outcome", "runtime", "approx", "policy", "makespan", "messages", "coll");
  os << line;
  for (const BenchRow& r : res.rows) {
    const std::string approx = r.outcome == SolveOutcome::Solved ? detail::fixed(r.approx_makespan_recomputed, 2) : "-";
    if (r.policies.empty()) {
      std::snprintf(line, sizeof line, "%-10s %4d %3d %5.1f %-12s %-11s %9.3f %9s\n",
                    std::string(to_string(r.family)).c_str(), r.instance, r.agents, r.tmax, r.solver.c_str(),
                    std::string(to_string(r.outcome)).c_str(), r.wall_seconds, approx.c_str());
      os << line;
      continue;
    }
    for (const PolicyResult& p : r.policies) {
      const std::string ms = detail::fixed(p.stats.mean_makespan, 2) + " +- " + detail::fixed(p.stats.ci95, 2);
      std::snprintf(line, sizeof line, "%-10s %4d %3d %5.1f %-12s %-11s %9.3f %9s %-6s %16s %9llu %8.3f\n",
                    std::string(to_string(r.family)).c_str(), r.instance, r.agents, r.tmax, r.solver.c_str(),
                    std::string(to_string(r.outcome)).c_str(), r.wall_seconds, approx.c_str(),
                    std::string(to_string(p.policy)).c_str(), ms.c_str(),
                    static_cast<unsigned long long>(p.stats.messages), p.stats.mean_collisions);
      os << line;
    }
  }
  os << "\nsolved (%)\n";
  std::map<std::tuple<std::string, int, double, std::string>, std::pair<int, int>> cells;
  for (const BenchRow& r : res.rows) {
    auto& [solved, total] = cells[{std::string(to_string(r.family)), r.agents, r.tmax, r.solver}];
    ++total;
    solved += r.outcome == SolveOutcome::Solved;
  }
  for (const auto& [k, v] : cells) {
    const auto& [family, agents, tmax, solver] = k;
    std::snprintf(line, sizeof line, "%-10s m=%-3d tmax=%-5.1f %-12s %6.1f\n", family.c_str(), agents, tmax,
                  solver.c_str(), 100.0 * v.first / v.second);
    os << line;
  }
  for (const auto& w : res.warnings) {
    os << "warning: " << w << '\n';
  }
  return os.str();
}

}  // namespace mapfdp
