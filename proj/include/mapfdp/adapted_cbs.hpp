#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ame.hpp"
#include "conflict_tree.hpp"
#include "low_level.hpp"

namespace mapfdp {

namespace detail {

class CbsPolicy
{
public:
  explicit CbsPolicy(const Instance& inst) : inst_(inst), dist_(goal_distances(inst)) {}

  std::string name() const { return "adapted-cbs"; }

  LowLevelResult plan_agent(AgentId agent, const Plan&, const AgentConstraints& c, double,
                            const LowLevelOptions& opts) const
  {
    return shortest_constrained_path(inst_, agent, c, dist_[static_cast<std::size_t>(agent)], opts);
  }

  void finish(TreeNode& node, Plan& plan) const
  {
    std::int64_t total = 0;
    for (const Path& p : plan.paths) {
      total += p.last_index();
    }
    node.primary = plan.max_last_index();
    node.secondary = total;
    node.key = static_cast<double>(node.primary);
  }

private:
  const Instance& inst_;
  std::vector<std::vector<std::int32_t>> dist_;
};

}  // namespace detail

/*! Conflict-based search for a valid plan with the fewest steps max_i X_i,
ties toward smaller sum of X_i. Delay probabilities are ignored and paths
carry no labels.
*/
inline SolveResult solve_adapted_cbs(const Instance& inst, const SearchLimits& limits = {})
{
  check_instance(inst);
  detail::CbsPolicy policy(inst);
  return conflict_tree_search(inst, limits, policy);
}

/*! Smallest max_i X_i over all valid plans whose paths end by `horizon`,
found by breadth-first search over joint configurations. Empty if none.
*/
inline std::optional<int> brute_force_optimal_makespan(const Instance& inst, int horizon)
{
  check_instance(inst);
  const int m = inst.num_agents();
  const auto n = static_cast<std::uint64_t>(inst.graph.num_vertices());
  using Config = std::vector<VertexId>;
  auto encode = [&](const Config& c) {
    std::uint64_t code = 0;
    for (VertexId v : c) {
      code = code * n + static_cast<std::uint64_t>(v);
    }
    return code;
  };
  if (static_cast<double>(m) * std::log2(static_cast<double>(std::max<std::uint64_t>(n, 2))) > 62.0) {
    throw Error("brute_force_optimal_makespan: instance too large");
  }

  Config start(static_cast<std::size_t>(m));
  Config goal(static_cast<std::size_t>(m));
  for (AgentId i = 0; i < m; ++i) {
    start[static_cast<std::size_t>(i)] = inst.agents[static_cast<std::size_t>(i)].start;
    goal[static_cast<std::size_t>(i)] = inst.agents[static_cast<std::size_t>(i)].goal;
  }
  const std::uint64_t goal_code = encode(goal);
  std::unordered_map<std::uint64_t, int> seen{{encode(start), 0}};
  std::vector<Config> frontier{start};
  for (int depth = 0; depth <= horizon; ++depth) {
    std::vector<Config> next;
    for (const Config& c : frontier) {
      if (encode(c) == goal_code) {
        return depth;
      }
      if (depth == horizon) {
        continue;
      }
      // enumerate successor configurations agent by agent
      Config succ(static_cast<std::size_t>(m));
      auto extend = [&](auto&& self, int i) -> void {
        if (i == m) {
          if (seen.try_emplace(encode(succ), depth + 1).second) {
            next.push_back(succ);
          }
          return;
        }
        const VertexId here = c[static_cast<std::size_t>(i)];
        auto try_vertex = [&](VertexId w) {
          for (int j = 0; j < m; ++j) {
            // Property 2: not onto anyone's current vertex; Property 1: not onto a chosen one
            if ((j != i && c[static_cast<std::size_t>(j)] == w) || (j < i && succ[static_cast<std::size_t>(j)] == w)) {
              return;
            }
          }
          succ[static_cast<std::size_t>(i)] = w;
          self(self, i + 1);
        };
        try_vertex(here);
        for (VertexId w : inst.graph.neighbors(here)) {
          try_vertex(w);
        }
      };
      extend(extend, 0);
    }
    frontier = std::move(next);
  }
  return std::nullopt;
}

}  // namespace mapfdp
