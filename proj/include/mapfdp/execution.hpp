#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "core.hpp"
#include "dependency.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace mapfdp {

enum class Command : std::uint8_t
{
  Stop,
  Go,
};

enum class Policy : std::uint8_t
{
  Mcp,   //!< minimal communication
  Fsp,   //!< fully synchronized
  Dummy, //!< always GO, not robust
};

inline std::string_view to_string(Policy p)
{
  switch (p) {
    case Policy::Mcp:
      return "mcp";
    case Policy::Fsp:
      return "fsp";
    case Policy::Dummy:
      return "dummy";
  }
  return "?";
}

inline Policy parse_policy(std::string_view name)
{
  if (name == "mcp") {
    return Policy::Mcp;
  }
  if (name == "fsp") {
    return Policy::Fsp;
  }
  if (name == "dummy") {
    return Policy::Dummy;
  }
  throw Error("unknown policy '" + std::string(name) + "' (expected mcp, fsp or dummy)");
}

//! Local states at one time step plus the messages each agent has received.
struct ExecState
{
  int t = 0;
  std::vector<int> local;                 // x_i^t
  std::vector<std::vector<int>> received; // [recipient][sender]

  static ExecState initial(int num_agents)
  {
    ExecState s;
    s.local.assign(static_cast<std::size_t>(num_agents), 0);
    s.received.assign(static_cast<std::size_t>(num_agents), std::vector<int>(static_cast<std::size_t>(num_agents), 0));
    return s;
  }

  bool done(const Plan& plan, AgentId i) const
  {
    return local[static_cast<std::size_t>(i)] >= plan.paths[static_cast<std::size_t>(i)].last_index();
  }

  bool all_done(const Plan& plan) const
  {
    for (AgentId i = 0; i < plan.num_agents(); ++i) {
      if (!done(plan, i)) {
        return false;
      }
    }
    return true;
  }
};

/*! Advance one time step. STOP, or GO at the last index, leaves an agent in
place; GO on a wait always advances; GO on a move advances with probability
1 - p_i. Coins are drawn only for attempted moves, in agent-id order.
*/
inline ExecState step(ExecState state, std::span<const Command> commands, const Plan& plan,
                      std::span<const double> delay_probs, Rng& rng)
{
  for (AgentId i = 0; i < plan.num_agents(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (commands[k] != Command::Go || state.done(plan, i)) {
      continue;
    }
    const auto& vs = plan.paths[k].vertices;
    const int x = state.local[k];
    const bool wait = vs[static_cast<std::size_t>(x)] == vs[static_cast<std::size_t>(x + 1)];
    if (wait || uniform01(rng) >= delay_probs[k]) {
      state.local[k] = x + 1;
    }
  }
  ++state.t;
  return state;
}

inline std::vector<Command> commands_dummy(const ExecState& state, const Plan& plan)
{
  std::vector<Command> cmd(plan.paths.size(), Command::Stop);
  for (AgentId i = 0; i < plan.num_agents(); ++i) {
    if (!state.done(plan, i)) {
      cmd[static_cast<std::size_t>(i)] = Command::Go;
    }
  }
  return cmd;
}

/*! GO at local state x once every other agent has either finished or sent x
messages (one per state entered), i.e. has left every state before x.
*/
inline std::vector<Command> commands_fsp(const ExecState& state, const Plan& plan)
{
  const int m = plan.num_agents();
  std::vector<Command> cmd(static_cast<std::size_t>(m), Command::Stop);
  for (AgentId i = 0; i < m; ++i) {
    if (state.done(plan, i)) {
      continue;
    }
    const int x = state.local[static_cast<std::size_t>(i)];
    bool go = true;
    for (AgentId j = 0; j < m && go; ++j) {
      if (j == i) {
        continue;
      }
      const int got = state.received[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      const bool finished = got >= plan.paths[static_cast<std::size_t>(j)].last_index();
      go = finished || got >= x;
    }
    if (go) {
      cmd[static_cast<std::size_t>(i)] = Command::Go;
    }
  }
  return cmd;
}

namespace detail {

inline std::vector<Command> mcp_commands(const ExecState& state, const MessageSchedule& schedule, const Plan& plan)
{
  const int m = plan.num_agents();
  std::vector<Command> cmd(static_cast<std::size_t>(m), Command::Stop);
  for (AgentId i = 0; i < m; ++i) {
    if (state.done(plan, i)) {
      continue;
    }
    const int x = state.local[static_cast<std::size_t>(i)];
    bool go = true;
    for (AgentId j = 0; j < m && go; ++j) {
      go = state.received[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] >= schedule.threshold(i, x, j);
    }
    if (go) {
      cmd[static_cast<std::size_t>(i)] = Command::Go;
    }
  }
  return cmd;
}

}  // namespace detail

//! GO at x once, from every sender, the cumulative threshold of the schedule is met.
inline std::vector<Command> commands_mcp(const ExecState& state, const MessageSchedule& schedule, const Plan& plan)
{
  if (schedule.plan_fingerprint != plan_fingerprint(plan) || schedule.num_agents() != plan.num_agents()) {
    throw Error("commands_mcp: message schedule was built for a different plan");
  }
  return detail::mcp_commands(state, schedule, plan);
}

enum class CollisionKind : std::uint8_t
{
  Vertex,
  Edge,
};

struct CollisionEvent
{
  int t = 0; //!< step during which it happened (state at t+1)
  CollisionKind kind = CollisionKind::Vertex;
  AgentId a = 0;
  AgentId b = 0;
  VertexId u = 0; //!< shared vertex, or a's source for edge collisions
  VertexId v = 0; //!< a's target for edge collisions
};

enum class RunOutcome : std::uint8_t
{
  Completed,
  Timeout,
  Deadlock,
};

struct StepRecord
{
  int t = 0;
  std::vector<int> local;
  std::vector<Command> commands;
};

struct ExecutionTrace
{
  RunOutcome outcome = RunOutcome::Completed;
  int makespan = 0; //!< earliest t with all agents at their last index (valid when Completed)
  std::uint64_t messages_sent = 0;
  std::vector<CollisionEvent> collisions;
  std::vector<StepRecord> steps; //!< only with ExecutionOptions::record_steps
  int stall_steps = 0;           //!< steps where no unfinished agent got GO
};

struct ExecutionOptions
{
  int horizon_cap = 0;         //!< 0: max(1000, 50 * longest path)
  int message_latency = 0;     //!< extra steps before a message becomes readable
  bool record_steps = false;
  bool require_valid_plan = true; //!< checked for MCP/FSP
};

namespace detail {

inline void detect_collisions(int t, const Plan& plan, const std::vector<int>& before, const std::vector<int>& after,
                              std::vector<CollisionEvent>& out)
{
  const int m = plan.num_agents();
  std::vector<std::pair<VertexId, AgentId>> at;
  at.reserve(static_cast<std::size_t>(m));
  for (AgentId i = 0; i < m; ++i) {
    at.emplace_back(plan.paths[static_cast<std::size_t>(i)].vertices[static_cast<std::size_t>(after[static_cast<std::size_t>(i)])], i);
  }
  std::sort(at.begin(), at.end());
  for (std::size_t a = 0; a < at.size(); ++a) {
    for (std::size_t b = a + 1; b < at.size() && at[b].first == at[a].first; ++b) {
      out.push_back({t, CollisionKind::Vertex, at[a].second, at[b].second, at[a].first, at[a].first});
    }
  }
  // moves this step as (from, to, agent), matched against reversed moves
  std::vector<std::tuple<VertexId, VertexId, AgentId>> moves;
  for (AgentId i = 0; i < m; ++i) {
    const auto& vs = plan.paths[static_cast<std::size_t>(i)].vertices;
    const VertexId from = vs[static_cast<std::size_t>(before[static_cast<std::size_t>(i)])];
    const VertexId to = vs[static_cast<std::size_t>(after[static_cast<std::size_t>(i)])];
    if (from != to) {
      moves.emplace_back(from, to, i);
    }
  }
  std::sort(moves.begin(), moves.end());
  for (const auto& [from, to, i] : moves) {
    auto it = std::lower_bound(moves.begin(), moves.end(), std::tuple<VertexId, VertexId, AgentId>{to, from, -1});
    for (; it != moves.end() && std::get<0>(*it) == to && std::get<1>(*it) == from; ++it) {
      const AgentId j = std::get<2>(*it);
      if (i < j) {
        out.push_back({t, CollisionKind::Edge, i, j, from, to});
      }
    }
  }
}

struct InFlight
{
  int readable_at = 0;
  AgentId recipient = 0;
  AgentId sender = 0;
};

}  // namespace detail

inline int default_horizon_cap(const Plan& plan)
{
  return std::max(1000, 50 * plan.max_last_index());
}

namespace detail {

// The execution loop proper; callers have checked the plan.
inline ExecutionTrace execute(const Plan& plan, std::span<const double> probs, Policy policy,
                              const MessageSchedule& schedule, std::uint64_t seed, const ExecutionOptions& options)
{
  const int m = plan.num_agents();
  const int cap = options.horizon_cap > 0 ? options.horizon_cap : default_horizon_cap(plan);
  Rng rng(seed);
  ExecutionTrace trace;
  ExecState state = ExecState::initial(m);
  std::deque<InFlight> in_flight;

  while (!state.all_done(plan)) {
    if (state.t >= cap) {
      trace.outcome = RunOutcome::Timeout;
      return trace;
    }
    while (!in_flight.empty() && in_flight.front().readable_at <= state.t) {
      const auto& msg = in_flight.front();
      ++state.received[static_cast<std::size_t>(msg.recipient)][static_cast<std::size_t>(msg.sender)];
      in_flight.pop_front();
    }
    std::vector<Command> cmd;
    switch (policy) {
      case Policy::Mcp:
        cmd = mcp_commands(state, schedule, plan);
        break;
      case Policy::Fsp:
        cmd = commands_fsp(state, plan);
        break;
      case Policy::Dummy:
        cmd = commands_dummy(state, plan);
        break;
    }
    bool any_go = false;
    for (AgentId i = 0; i < m; ++i) {
      any_go = any_go || (cmd[static_cast<std::size_t>(i)] == Command::Go && !state.done(plan, i));
    }
    if (!any_go) {
      ++trace.stall_steps;
      if (in_flight.empty()) {
        trace.outcome = RunOutcome::Deadlock;
        return trace;
      }
    }
    if (options.record_steps) {
      trace.steps.push_back({state.t, state.local, cmd});
    }
    const std::vector<int> before = state.local;
    const int t = state.t;
    state = step(std::move(state), cmd, plan, probs, rng);
    detect_collisions(t, plan, before, state.local, trace.collisions);

    if (policy == Policy::Dummy) {
      continue;
    }
    for (AgentId j = 0; j < m; ++j) {
      const int y = state.local[static_cast<std::size_t>(j)];
      if (y == before[static_cast<std::size_t>(j)]) {
        continue;
      }
      if (policy == Policy::Fsp) {
        for (AgentId i = 0; i < m; ++i) {
          if (i != j) {
            in_flight.push_back({state.t + options.message_latency, i, j});
            ++trace.messages_sent;
          }
        }
      } else {
        for (AgentId i : schedule.recipients[static_cast<std::size_t>(j)][static_cast<std::size_t>(y)]) {
          in_flight.push_back({state.t + options.message_latency, i, j});
          ++trace.messages_sent;
        }
      }
    }
  }
  if (options.record_steps) {
    trace.steps.push_back({state.t, state.local, std::vector<Command>(static_cast<std::size_t>(m), Command::Stop)});
  }
  trace.makespan = state.t;
  return trace;
}

// Shared argument checks; returns the MCP schedule (empty for other policies).
inline MessageSchedule prepare_execution(const Instance& inst, const Plan& plan, Policy policy,
                                         const ExecutionOptions& options)
{
  if (plan.num_agents() != inst.num_agents()) {
    throw Error("execution: plan and instance disagree on the agent count");
  }
  const auto defects = check_paths(inst, plan);
  if (!defects.empty()) {
    throw Error("execution: malformed plan (" + defects.front().reason + ")");
  }
  if (policy != Policy::Dummy && options.require_valid_plan && !find_conflicts(plan).empty()) {
    throw Error("execution: robust policies need a valid plan");
  }
  if (policy == Policy::Mcp) {
    return message_schedule(transitive_reduction(build_partial_order(plan)));
  }
  return {};
}

}  // namespace detail

/*! One stochastic execution in synchronous rounds: commands from the state
at the start of step t, the step itself, collision checks, then messages
from every agent that entered a new local state. With zero latency those
messages are readable when step t+1 computes its commands.
*/
inline ExecutionTrace run_execution(const Instance& inst, const Plan& plan, Policy policy, std::uint64_t seed,
                                    const ExecutionOptions& options = {})
{
  const MessageSchedule schedule = detail::prepare_execution(inst, plan, policy, options);
  const std::vector<double> probs = inst.delay_probs();
  return detail::execute(plan, probs, policy, schedule, seed, options);
}

//! `t, agent, x, vertex, command` per agent per recorded step.
inline void write_trace(std::ostream& os, const Plan& plan, const ExecutionTrace& trace)
{
  os << "t,agent,x,vertex,command\n";
  for (const StepRecord& rec : trace.steps) {
    for (std::size_t i = 0; i < rec.local.size(); ++i) {
      const int x = rec.local[i];
      os << rec.t << "," << i << "," << x << "," << plan.paths[i].vertices[static_cast<std::size_t>(x)] << ","
         << (rec.commands[i] == Command::Go ? "GO" : "STOP") << "\n";
    }
  }
}

struct RunStats
{
  int n_runs = 0;
  int completed = 0;
  double mean_makespan = 0.0; //!< over completed runs
  double ci95 = 0.0;
  double mean_collisions = 0.0; //!< over all runs
  std::uint64_t messages = 0;   //!< from run 0
  bool messages_consistent = true;
  int timeouts = 0;
  int deadlocks = 0;
  std::uint64_t vertex_collisions = 0;
  std::uint64_t edge_collisions = 0;
};

/*! n_runs independent executions with per-run seeds derive_seed(seed, r).
Runs may be spread over `threads` workers; aggregation is in run order.
*/
inline RunStats monte_carlo(const Instance& inst, const Plan& plan, Policy policy, int n_runs, std::uint64_t seed,
                            const ExecutionOptions& options = {}, int threads = 1)
{
  if (n_runs < 1) {
    throw Error("monte_carlo: n_runs must be at least 1");
  }
  struct Summary
  {
    RunOutcome outcome;
    int makespan;
    std::uint64_t messages;
    std::uint64_t vertex;
    std::uint64_t edge;
  };
  ExecutionOptions opts = options;
  opts.record_steps = false;
  const MessageSchedule schedule = detail::prepare_execution(inst, plan, policy, opts);
  const std::vector<double> probs = inst.delay_probs();

  std::vector<Summary> runs(static_cast<std::size_t>(n_runs));
  auto work = [&](int first, int stride) {
    for (int r = first; r < n_runs; r += stride) {
      const ExecutionTrace tr =
        detail::execute(plan, probs, policy, schedule, derive_seed(seed, static_cast<std::uint64_t>(r)), opts);
      Summary s{tr.outcome, tr.makespan, tr.messages_sent, 0, 0};
      for (const auto& c : tr.collisions) {
        (c.kind == CollisionKind::Vertex ? s.vertex : s.edge) += 1;
      }
      runs[static_cast<std::size_t>(r)] = s;
    }
  };
  threads = std::max(1, std::min(threads, n_runs));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back(work, w, threads);
    }
  }

  RunStats stats;
  stats.n_runs = n_runs;
  stats.messages = runs.front().messages;
  std::vector<double> makespans;
  std::uint64_t collisions = 0;
  for (const Summary& s : runs) {
    stats.messages_consistent = stats.messages_consistent && s.messages == stats.messages;
    stats.vertex_collisions += s.vertex;
    stats.edge_collisions += s.edge;
    collisions += s.vertex + s.edge;
    switch (s.outcome) {
      case RunOutcome::Completed:
        makespans.push_back(static_cast<double>(s.makespan));
        break;
      case RunOutcome::Timeout:
        ++stats.timeouts;
        break;
      case RunOutcome::Deadlock:
        ++stats.deadlocks;
        break;
    }
  }
  stats.completed = static_cast<int>(makespans.size());
  const MeanCi ci = stats_ci(makespans);
  stats.mean_makespan = ci.mean;
  stats.ci95 = ci.half_width;
  stats.mean_collisions = static_cast<double>(collisions) / n_runs;
  return stats;
}

}  // namespace mapfdp
