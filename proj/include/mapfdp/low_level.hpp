#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "constraints.hpp"
#include "core.hpp"

namespace mapfdp {

namespace detail {

// Others' paths as seen by one agent's search; empty paths are ignored.
inline std::vector<const Path*> other_paths(const Plan& plan, AgentId self)
{
  std::vector<const Path*> out;
  for (AgentId j = 0; j < plan.num_agents(); ++j) {
    const Path& p = plan.paths[static_cast<std::size_t>(j)];
    if (j != self && !p.vertices.empty()) {
      out.push_back(&p);
    }
  }
  return out;
}

// Violations created by placing the searching agent on v at index x.
inline int conflicts_at(std::span<const Path* const> others, VertexId v, int x)
{
  int n = 0;
  for (const Path* p : others) {
    n += p->at_padded(x) == v;
    n += x >= 1 && p->at_padded(x - 1) == v;
    n += p->at_padded(x + 1) == v;
  }
  return n;
}

/*! Per vertex, the other agents' visits (x'', label of x''+1), sorted by x''
with running maxima, so the largest label over x'' < bound is one binary
search away.
*/
class PredecessorLabels
{
public:
  explicit PredecessorLabels(std::span<const Path* const> others)
  {
    for (const Path* p : others) {
      if (!p->has_labels()) {
        continue;
      }
      for (int x = 0; x < p->last_index(); ++x) {
        by_vertex_[p->vertices[static_cast<std::size_t>(x)]].emplace_back(x, p->labels[static_cast<std::size_t>(x + 1)]);
      }
    }
    for (auto& [v, entries] : by_vertex_) {
      std::sort(entries.begin(), entries.end());
      for (std::size_t k = 1; k < entries.size(); ++k) {
        entries[k].second = std::max(entries[k].second, entries[k - 1].second);
      }
    }
  }

  //! Max label of a state (j, x''+1) with l_j(x'') == v and x'' < bound; 0 if none.
  double max_before(VertexId v, int bound) const
  {
    auto it = by_vertex_.find(v);
    if (it == by_vertex_.end()) {
      return 0.0;
    }
    const auto& entries = it->second;
    auto pos = std::lower_bound(entries.begin(), entries.end(), std::pair<int, double>{bound, -1.0});
    return pos == entries.begin() ? 0.0 : std::prev(pos)->second;
  }

private:
  std::unordered_map<VertexId, std::vector<std::pair<int, double>>> by_vertex_;
};

inline bool out_of_time(const LowLevelOptions& opts, std::uint64_t expansions)
{
  return opts.deadline && (expansions & 1023u) == 0 && Clock::now() > *opts.deadline;
}

inline std::uint64_t state_key(VertexId v, int x)
{
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) | static_cast<std::uint32_t>(v);
}

}  // namespace detail

//! Property 1/2 violations between a path prefix and the other agents' padded paths.
inline int count_path_conflicts(std::span<const VertexId> prefix, std::span<const Path* const> others)
{
  int n = 0;
  for (std::size_t x = 0; x < prefix.size(); ++x) {
    n += detail::conflicts_at(others, prefix[x], static_cast<int>(x));
  }
  return n;
}

/*! Label recurrence along one agent's path against the other agents' stored
labels: label(x) = max(label(x-1), latest predecessor label) + action cost.
*/
inline std::vector<double> relabel_path(const Path& path, double delay_prob, const detail::PredecessorLabels& preds)
{
  std::vector<double> labels(path.vertices.size(), 0.0);
  const double move = 1.0 / (1.0 - delay_prob);
  for (std::size_t x = 1; x < path.vertices.size(); ++x) {
    const VertexId v = path.vertices[x];
    const double ready = std::max(labels[x - 1], preds.max_before(v, static_cast<int>(x) - 1));
    labels[x] = ready + (v == path.vertices[x - 1] ? 1.0 : move);
  }
  return labels;
}

/*! Focal search with re-expansions over (vertex, index) states for one agent.

g approximates the agent's label at a state; h is the hop distance to the
goal times 1/(1-p). Phase 1 expands, among open states with f <= key, one with
the fewest conflicts along its best-known path; once no open state qualifies
the search moves to Phase 2 for good and expands by smallest f. Success when
about to expand the goal at an index beyond every goal constraint. Emitted
labels are the recurrence re-evaluated along the returned path, which agrees
with the g-values whenever those are current.
*/
inline LowLevelResult ame_low_level_search(const Instance& inst, AgentId agent, std::span<const Path* const> others,
                                           const AgentConstraints& constraints, double key,
                                           std::span<const std::int32_t> goal_distance, const LowLevelOptions& opts)
{
  constexpr double eps = 1e-9;
  const AgentSpec& spec = inst.agents[static_cast<std::size_t>(agent)];
  const double move = spec.move_cost();
  const detail::PredecessorLabels preds(others);
  const auto h = [&](VertexId v) { return goal_distance[static_cast<std::size_t>(v)] * move; };

  struct Record
  {
    double g;
    double f;
    int conflicts;
    VertexId parent;
    bool open;
  };
  using OpenKey = std::tuple<double, int, VertexId>;       // f, -x, v
  using FocalKey = std::tuple<int, double, int, VertexId>; // conflicts, f, -x, v
  std::unordered_map<std::uint64_t, Record> records;
  std::set<OpenKey> open;
  std::set<FocalKey> focal;
  bool phase_one = true;
  bool index_cut = false;

  LowLevelResult result;
  if (constraints.banned(spec.start, 0) || goal_distance[static_cast<std::size_t>(spec.start)] == kUnreachable) {
    return result;
  }

  auto push = [&](VertexId v, int x, const Record& r) {
    open.emplace(r.f, -x, v);
    if (phase_one && r.f <= key + eps) {
      focal.emplace(r.conflicts, r.f, -x, v);
    }
  };
  auto erase = [&](VertexId v, int x, const Record& r) {
    open.erase({r.f, -x, v});
    if (phase_one) {
      focal.erase({r.conflicts, r.f, -x, v});
    }
  };

  const Record start{0.0, h(spec.start), detail::conflicts_at(others, spec.start, 0), -1, true};
  records.emplace(detail::state_key(spec.start, 0), start);
  push(spec.start, 0, start);

  while (!open.empty()) {
    VertexId v;
    int x;
    if (phase_one && focal.empty()) {
      phase_one = false;
    }
    if (phase_one) {
      const auto [c, f, negx, vv] = *focal.begin();
      focal.erase(focal.begin());
      open.erase({f, negx, vv});
      v = vv;
      x = -negx;
    } else {
      const auto [f, negx, vv] = *open.begin();
      open.erase(open.begin());
      v = vv;
      x = -negx;
    }
    Record& rec = records.at(detail::state_key(v, x));
    rec.open = false;

    if (v == spec.goal && constraints.goal_final_at(x)) {
      result.status = LowLevelStatus::Found;
      result.path.vertices.assign(static_cast<std::size_t>(x) + 1, 0);
      VertexId cur = v;
      for (int k = x; k >= 0; --k) {
        result.path.vertices[static_cast<std::size_t>(k)] = cur;
        cur = records.at(detail::state_key(cur, k)).parent;
      }
      result.path.labels = relabel_path(result.path, spec.delay_prob, preds);
      return result;
    }
    if (++result.expansions > opts.max_expansions) {
      result.status = LowLevelStatus::ExpansionLimit;
      return result;
    }
    if (detail::out_of_time(opts, result.expansions)) {
      result.status = LowLevelStatus::TimeLimit;
      return result;
    }
    if (x + 1 > opts.max_index) {
      index_cut = true;
      continue;
    }
    const double g = rec.g;
    const int conflicts = rec.conflicts;
    const int nx = x + 1;
    auto relax = [&](VertexId w) {
      if (constraints.banned(w, nx) || goal_distance[static_cast<std::size_t>(w)] == kUnreachable) {
        return;
      }
      const double ng = std::max(g, preds.max_before(w, nx - 1)) + (w == v ? 1.0 : move);
      const int nc = conflicts + detail::conflicts_at(others, w, nx);
      auto [it, fresh] = records.try_emplace(detail::state_key(w, nx), Record{ng, ng + h(w), nc, v, true});
      if (fresh) {
        push(w, nx, it->second);
        return;
      }
      Record& old = it->second;
      const bool better = ng < old.g - eps || (ng <= old.g + eps && nc < old.conflicts);
      if (!better) {
        return;
      }
      if (old.open) {
        erase(w, nx, old);
      }
      old = Record{std::min(ng, old.g), std::min(ng, old.g) + h(w), nc, v, true};
      push(w, nx, old);
    };
    relax(v);
    for (VertexId w : inst.graph.neighbors(v)) {
      relax(w);
    }
  }
  result.status = index_cut ? LowLevelStatus::IndexLimit : LowLevelStatus::Exhausted;
  return result;
}

/*! Shortest path (fewest actions) in the time-expanded graph under
constraints; A* on (vertex, index) with hop-distance heuristic, ties toward
smaller f, then larger index, then smaller vertex id.
*/
inline LowLevelResult shortest_constrained_path(const Instance& inst, AgentId agent,
                                                const AgentConstraints& constraints,
                                                std::span<const std::int32_t> goal_distance,
                                                const LowLevelOptions& opts)
{
  const AgentSpec& spec = inst.agents[static_cast<std::size_t>(agent)];
  LowLevelResult result;
  if (constraints.banned(spec.start, 0) || goal_distance[static_cast<std::size_t>(spec.start)] == kUnreachable) {
    return result;
  }
  using OpenKey = std::tuple<int, int, VertexId>; // f, -x, v
  std::set<OpenKey> open;
  std::unordered_map<std::uint64_t, VertexId> parent;
  bool index_cut = false;
  parent.emplace(detail::state_key(spec.start, 0), -1);
  open.emplace(goal_distance[static_cast<std::size_t>(spec.start)], 0, spec.start);

  while (!open.empty()) {
    const auto [f, negx, v] = *open.begin();
    open.erase(open.begin());
    const int x = -negx;
    if (v == spec.goal && constraints.goal_final_at(x)) {
      result.status = LowLevelStatus::Found;
      result.path.vertices.assign(static_cast<std::size_t>(x) + 1, 0);
      VertexId cur = v;
      for (int k = x; k >= 0; --k) {
        result.path.vertices[static_cast<std::size_t>(k)] = cur;
        cur = parent.at(detail::state_key(cur, k));
      }
      return result;
    }
    if (++result.expansions > opts.max_expansions) {
      result.status = LowLevelStatus::ExpansionLimit;
      return result;
    }
    if (detail::out_of_time(opts, result.expansions)) {
      result.status = LowLevelStatus::TimeLimit;
      return result;
    }
    if (x + 1 > opts.max_index) {
      index_cut = true;
      continue;
    }
    auto relax = [&](VertexId w) {
      if (constraints.banned(w, x + 1) || goal_distance[static_cast<std::size_t>(w)] == kUnreachable) {
        return;
      }
      // unit costs and a consistent heuristic: the first visit is optimal
      if (parent.try_emplace(detail::state_key(w, x + 1), v).second) {
        open.emplace(x + 1 + goal_distance[static_cast<std::size_t>(w)], -(x + 1), w);
      }
    };
    relax(v);
    for (VertexId w : inst.graph.neighbors(v)) {
      relax(w);
    }
  }
  result.status = index_cut ? LowLevelStatus::IndexLimit : LowLevelStatus::Exhausted;
  return result;
}

}  // namespace mapfdp
