#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "constraints.hpp"
#include "core.hpp"
#include "low_level.hpp"

namespace mapfdp {

//! A conflict-tree node. Paths are shared with the parent except the replanned one.
struct TreeNode
{
  ConstraintChain constraints;
  std::vector<std::shared_ptr<const Path>> paths;
  double key = 0.0;
  double parent_key = 0.0;
  int conflict_count = 0;
  std::uint64_t seq = 0;
  std::int64_t primary = 0;
  std::int64_t secondary = 0;

  Plan plan() const
  {
    Plan out;
    out.paths.reserve(paths.size());
    for (const auto& p : paths) {
      out.paths.push_back(*p);
    }
    return out;
  }
};

/*! Best-first conflict-tree search parameterised by a solver policy.

The policy supplies:
  - `std::string name() const`
  - `LowLevelResult plan_agent(AgentId, const Plan& others, const AgentConstraints&, double key,
                               const LowLevelOptions&)`
  - `void finish(TreeNode&, Plan&)`: fill key, primary and secondary (may rewrite the plan)
Nodes pop in (primary, secondary, seq) order.
*/
template <typename Policy>
SolveResult conflict_tree_search(const Instance& inst, const SearchLimits& limits, Policy& policy)
{
  const auto started = Clock::now();
  const auto deadline = started + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(std::max(0.0, limits.time_limit_s)));
  SolveResult result;
  SolveReport& report = result.report;
  report.solver = policy.name();
  const int m = inst.num_agents();

  auto finish = [&](SolveOutcome outcome, std::string detail) {
    result.outcome = outcome;
    report.outcome = outcome;
    report.detail = std::move(detail);
    report.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
    return result;
  };
  auto options_for = [&](const AgentConstraints& c) {
    LowLevelOptions o;
    o.max_index = max_path_index(inst, limits, c);
    o.max_expansions = limits.max_low_level_expansions;
    o.deadline = deadline;
    return o;
  };
  auto run_low_level = [&](AgentId agent, const Plan& others, const AgentConstraints& c, double key) {
    LowLevelResult r = policy.plan_agent(agent, others, c, key, options_for(c));
    ++report.low_level_searches;
    report.low_level_expanded += r.expansions;
    return r;
  };

  std::uint64_t seq = 0;
  auto stamp = [&](TreeNode& node, Plan& plan) {
    node.seq = seq++;
    node.conflict_count = static_cast<int>(find_conflicts(plan).size());
    policy.finish(node, plan);
    node.paths.clear();
    for (auto& p : plan.paths) {
      node.paths.push_back(std::make_shared<const Path>(std::move(p)));
    }
  };

  // Root: agents planned in id order, each seeing the paths planned before it.
  TreeNode root;
  {
    Plan partial;
    partial.paths.resize(static_cast<std::size_t>(m));
    for (AgentId i = 0; i < m; ++i) {
      const AgentConstraints none;
      LowLevelResult r = run_low_level(i, partial, none, 0.0);
      if (r.status == LowLevelStatus::TimeLimit) {
        return finish(SolveOutcome::Timeout, "time limit during root planning");
      }
      if (r.status != LowLevelStatus::Found) {
        return finish(SolveOutcome::NoSolution,
                      "root path for agent " + std::to_string(i) + ": " + std::string(to_string(r.status)));
      }
      partial.paths[static_cast<std::size_t>(i)] = std::move(r.path);
    }
    stamp(root, partial);
    root.parent_key = root.key;
  }

  using Entry = std::tuple<std::int64_t, std::int64_t, std::uint64_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::vector<TreeNode> nodes;
  auto enqueue = [&](TreeNode node) {
    queue.emplace(node.primary, node.secondary, node.seq);
    nodes.push_back(std::move(node));
    ++report.high_level_generated;
  };
  enqueue(std::move(root));

  while (!queue.empty()) {
    if (Clock::now() > deadline) {
      return finish(SolveOutcome::Timeout, "time limit");
    }
    if (report.high_level_expanded >= limits.max_high_level_expansions) {
      return finish(SolveOutcome::Timeout, "high-level expansion limit");
    }
    const auto [p, s, id] = queue.top();
    queue.pop();
    TreeNode node = std::move(nodes[static_cast<std::size_t>(id)]);
    nodes[static_cast<std::size_t>(id)] = TreeNode{};
    ++report.high_level_expanded;

    Plan plan = node.plan();
    const std::optional<Conflict> conflict = find_earliest_conflict(plan);
    if (!conflict) {
      result.plan = std::move(plan);
      report.key = node.key;
      return finish(SolveOutcome::Solved, {});
    }

    const auto [first, second] = branch_constraints(*conflict);
    for (const Constraint& c : {first, second}) {
      ConstraintChain chain = extend(node.constraints, c);
      const AgentSpec& spec = inst.agents[static_cast<std::size_t>(c.agent)];
      const AgentConstraints agent_constraints(chain, c.agent, spec.goal);
      LowLevelResult r = run_low_level(c.agent, plan, agent_constraints, node.key);
      if (r.status == LowLevelStatus::TimeLimit) {
        return finish(SolveOutcome::Timeout, "time limit");
      }
      if (r.status != LowLevelStatus::Found) {
        continue;
      }
      Plan child_plan = plan;
      child_plan.paths[static_cast<std::size_t>(c.agent)] = std::move(r.path);
      TreeNode child;
      child.constraints = std::move(chain);
      child.parent_key = node.key;
      stamp(child, child_plan);
      if (child.key < node.key - 1e-9) {
        ++report.key_decreases;
      }
      enqueue(std::move(child));
    }
  }
  return finish(SolveOutcome::NoSolution, "conflict tree exhausted");
}

}  // namespace mapfdp
