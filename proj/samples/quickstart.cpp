// Plan a small random instance with AME and compare execution policies.
#include <cstdio>

#include "mapfdp/mapfdp.hpp"

int main()
{
  using namespace mapfdp;
  const Instance inst = generate_random_instance(12, 12, 0.1, 6, {0.0, 0.5}, 2024);

  SearchLimits limits;
  limits.time_limit_s = 10;
  const SolveResult res = solve_ame(inst, limits);
  if (res.outcome != SolveOutcome::Solved) {
    std::printf("no plan: %s\n", res.report.detail.c_str());
    return 1;
  }
  const Plan labeled = compute_labels(res.plan, inst.delay_probs());
  std::printf("plan for %d agents, max X = %d, approximate average makespan %.2f\n", inst.num_agents(),
              res.plan.max_last_index(), approximate_average_makespan(labeled));

  for (Policy p : {Policy::Mcp, Policy::Fsp, Policy::Dummy}) {
    const RunStats s = monte_carlo(inst, res.plan, p, 500, 7);
    std::printf("%-5s makespan %6.2f +- %4.2f  messages %6llu  collisions/run %.3f\n",
                std::string(to_string(p)).c_str(), s.mean_makespan, s.ci95,
                static_cast<unsigned long long>(s.messages), s.mean_collisions);
  }
}
