#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "conflict_tree.hpp"
#include "dependency.hpp"
#include "low_level.hpp"

namespace mapfdp {

namespace detail {

inline std::vector<std::vector<std::int32_t>> goal_distances(const Instance& inst)
{
  std::vector<std::vector<std::int32_t>> out;
  out.reserve(inst.agents.size());
  for (const AgentSpec& a : inst.agents) {
    out.push_back(shortest_path_distances(inst.graph, a.goal));
  }
  return out;
}

class AmePolicy
{
public:
  AmePolicy(const Instance& inst, bool recompute_labels)
    : inst_(inst), recompute_(recompute_labels), dist_(goal_distances(inst)), probs_(inst.delay_probs())
  {}

  std::string name() const { return "ame"; }

  LowLevelResult plan_agent(AgentId agent, const Plan& plan, const AgentConstraints& c, double key,
                            const LowLevelOptions& opts) const
  {
    const std::vector<const Path*> others = other_paths(plan, agent);
    return ame_low_level_search(inst_, agent, others, c, key, dist_[static_cast<std::size_t>(agent)], opts);
  }

  void finish(TreeNode& node, Plan& plan) const
  {
    if (recompute_) {
      plan = compute_labels(plan, probs_);
    }
    node.key = approximate_average_makespan(plan);
    node.primary = std::llround(node.key * 1e6);
    node.secondary = node.conflict_count;
  }

private:
  const Instance& inst_;
  bool recompute_;
  std::vector<std::vector<std::int32_t>> dist_;
  std::vector<double> probs_;
};

}  // namespace detail

/*! Two-level search minimising the approximate average makespan.

Nodes are ordered by key (compared at 1e-6 resolution), then by number of
plan conflicts, then by age. Only the constrained agent is replanned in a
child; other agents keep their stored labels unless `recompute_labels` is set.
*/
inline SolveResult solve_ame(const Instance& inst, const SearchLimits& limits = {})
{
  check_instance(inst);
  detail::AmePolicy policy(inst, limits.recompute_labels);
  return conflict_tree_search(inst, limits, policy);
}

}  // namespace mapfdp
