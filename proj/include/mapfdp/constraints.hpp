#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>

#include "core.hpp"

namespace mapfdp {

//! "The vertex of `agent` in local state `index` must differ from `vertex`."
struct Constraint
{
  AgentId agent = 0;
  VertexId vertex = 0;
  int index = 0;

  bool operator==(const Constraint&) const = default;
};

/*! Child constraints resolving a conflict.

Same-index conflicts ban the shared vertex at x for either agent. Follow
conflicts ban it for the entering agent at x+1, or for the other agent at x.
*/
inline std::pair<Constraint, Constraint> branch_constraints(const Conflict& c)
{
  if (c.kind == ConflictKind::VertexSameIndex) {
    return {{c.i, c.vertex, c.index}, {c.j, c.vertex, c.index}};
  }
  return {{c.i, c.vertex, c.index + 1}, {c.j, c.vertex, c.index}};
}

//! Constraint sets shared between tree nodes as a persistent linked list.
struct ConstraintLink
{
  Constraint constraint;
  std::shared_ptr<const ConstraintLink> parent;
};
using ConstraintChain = std::shared_ptr<const ConstraintLink>;

inline ConstraintChain extend(ConstraintChain chain, const Constraint& c)
{
  return std::make_shared<const ConstraintLink>(ConstraintLink{c, std::move(chain)});
}

//! One agent's constraints, hashed for O(1) exclusion tests.
class AgentConstraints
{
public:
  AgentConstraints() = default;

  AgentConstraints(const ConstraintChain& chain, AgentId agent, VertexId goal)
  {
    for (const ConstraintLink* link = chain.get(); link != nullptr; link = link->parent.get()) {
      if (link->constraint.agent == agent) {
        add(link->constraint.vertex, link->constraint.index, goal);
      }
    }
  }

  void add(VertexId v, int index, VertexId goal)
  {
    banned_.insert(key(v, index));
    max_index_ = std::max(max_index_, index);
    if (v == goal) {
      max_goal_index_ = std::max(max_goal_index_, index);
    }
  }

  bool banned(VertexId v, int index) const { return !banned_.empty() && banned_.contains(key(v, index)); }
  int max_index() const { return max_index_; }          //!< -1 when empty
  int max_goal_index() const { return max_goal_index_; } //!< -1 when no goal constraint
  std::size_t size() const { return banned_.size(); }

  //! The goal may be kept from index x on only if no goal constraint lies beyond x.
  bool goal_final_at(int index) const { return index > max_goal_index_ || max_goal_index_ < 0; }

private:
  static std::uint64_t key(VertexId v, int index)
  {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(index)) << 32) |
           static_cast<std::uint32_t>(v);
  }

  std::unordered_set<std::uint64_t> banned_;
  int max_index_ = -1;
  int max_goal_index_ = -1;
};

using Clock = std::chrono::steady_clock;

struct SearchLimits
{
  double time_limit_s = 60.0;
  std::uint64_t max_high_level_expansions = 1'000'000;
  std::uint64_t max_low_level_expansions = 200'000; //!< per low-level search
  int max_index = 0;                                //!< 0: automatic, see max_path_index()
  bool recompute_labels = false;                    //!< AME only
};

/*! Number of joint configurations of m agents on n vertices with all agents
apart, saturating. A shortest valid plan never repeats a configuration, so
no path needs an index at or beyond it.
*/
inline std::int64_t joint_configuration_bound(int num_vertices, int num_agents)
{
  constexpr std::int64_t cap = std::numeric_limits<std::int32_t>::max() / 2;
  std::int64_t count = 1;
  for (int k = 0; k < num_agents; ++k) {
    count *= std::max(0, num_vertices - k);
    if (count >= cap) {
      return cap;
    }
  }
  return count;
}

//! Largest local-state index a low-level search may use.
inline int max_path_index(const Instance& inst, const SearchLimits& limits, const AgentConstraints& constraints)
{
  if (limits.max_index > 0) {
    return limits.max_index;
  }
  const std::int64_t relative = 4LL * inst.graph.num_vertices() + std::max(0, constraints.max_index());
  const std::int64_t absolute = joint_configuration_bound(inst.graph.num_vertices(), inst.num_agents()) - 1;
  return static_cast<int>(std::max<std::int64_t>(1, std::min(relative, absolute)));
}

enum class SolveOutcome : std::uint8_t
{
  Solved,
  NoSolution,
  Timeout,
};

inline std::string_view to_string(SolveOutcome o)
{
  switch (o) {
    case SolveOutcome::Solved:
      return "solved";
    case SolveOutcome::NoSolution:
      return "no-solution";
    case SolveOutcome::Timeout:
      return "timeout";
  }
  return "?";
}

enum class LowLevelStatus : std::uint8_t
{
  Found,
  Exhausted,      //!< open list emptied without touching any budget
  IndexLimit,     //!< open list emptied, but successors beyond the index cap were cut
  ExpansionLimit,
  TimeLimit,
};

inline std::string_view to_string(LowLevelStatus s)
{
  switch (s) {
    case LowLevelStatus::Found:
      return "found";
    case LowLevelStatus::Exhausted:
      return "exhausted";
    case LowLevelStatus::IndexLimit:
      return "index-limit";
    case LowLevelStatus::ExpansionLimit:
      return "expansion-limit";
    case LowLevelStatus::TimeLimit:
      return "time-limit";
  }
  return "?";
}

struct LowLevelOptions
{
  int max_index = 1000;
  std::uint64_t max_expansions = 200'000;
  std::optional<Clock::time_point> deadline;
};

struct LowLevelResult
{
  LowLevelStatus status = LowLevelStatus::Exhausted;
  Path path;
  std::uint64_t expansions = 0;
};

struct SolveReport
{
  std::string solver;
  SolveOutcome outcome = SolveOutcome::NoSolution;
  std::uint64_t high_level_expanded = 0;
  std::uint64_t high_level_generated = 0;
  std::uint64_t low_level_searches = 0;
  std::uint64_t low_level_expanded = 0;
  std::uint64_t key_decreases = 0; //!< children whose key fell below their parent's
  double wall_seconds = 0.0;
  double key = 0.0;                //!< key of the returned node
  std::string detail;
};

struct SolveResult
{
  SolveOutcome outcome = SolveOutcome::NoSolution;
  Plan plan;
  SolveReport report;
};

}  // namespace mapfdp
