#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "core.hpp"

namespace mapfdp {

//! Vertex-sequence fingerprint of a plan (labels excluded).
inline std::uint64_t plan_fingerprint(const Plan& plan)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFFu;
      h *= 0x100000001b3ULL;
    }
  };
  mix(plan.paths.size());
  for (const Path& p : plan.paths) {
    mix(p.vertices.size());
    for (VertexId v : p.vertices) {
      mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)));
    }
  }
  return h;
}

struct LocalState
{
  AgentId agent = 0;
  int index = 0;

  auto operator<=>(const LocalState&) const = default;
};

/*! Directed graph over the local states (agent, index) of a plan.

Node ids are dense: all states of agent 0, then agent 1, and so on. Every edge
goes from a smaller index to a larger one, so index order is a topological
order.
*/
class DependencyGraph
{
public:
  DependencyGraph() = default;

  explicit DependencyGraph(const std::vector<int>& last_indices, std::uint64_t fingerprint = 0)
    : fingerprint_(fingerprint)
  {
    offsets_.push_back(0);
    for (int last : last_indices) {
      offsets_.push_back(offsets_.back() + last + 1);
    }
    out_.assign(static_cast<std::size_t>(offsets_.back()), {});
  }

  int num_agents() const { return static_cast<int>(offsets_.size()) - 1; }
  int num_nodes() const { return offsets_.empty() ? 0 : offsets_.back(); }
  int last_index(AgentId i) const
  {
    return offsets_[static_cast<std::size_t>(i) + 1] - offsets_[static_cast<std::size_t>(i)] - 1;
  }

  int node(AgentId agent, int index) const { return offsets_[static_cast<std::size_t>(agent)] + index; }

  LocalState state(int node) const
  {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), node);
    const auto agent = static_cast<AgentId>(std::distance(offsets_.begin(), it) - 1);
    return {agent, node - offsets_[static_cast<std::size_t>(agent)]};
  }

  std::span<const int> successors(int node) const { return out_[static_cast<std::size_t>(node)]; }
  const std::vector<std::vector<int>>& adjacency() const { return out_; }

  std::size_t num_edges() const
  {
    std::size_t n = 0;
    for (const auto& s : out_) {
      n += s.size();
    }
    return n;
  }

  std::size_t num_inter_agent_edges() const { return inter_agent_edges().size(); }

  std::vector<std::pair<LocalState, LocalState>> inter_agent_edges() const
  {
    std::vector<std::pair<LocalState, LocalState>> edges;
    for (int u = 0; u < num_nodes(); ++u) {
      const LocalState from = state(u);
      for (int v : out_[static_cast<std::size_t>(u)]) {
        const LocalState to = state(v);
        if (to.agent != from.agent) {
          edges.emplace_back(from, to);
        }
      }
    }
    return edges;
  }

  bool has_edge(LocalState from, LocalState to) const
  {
    const auto& s = out_[static_cast<std::size_t>(node(from.agent, from.index))];
    return std::binary_search(s.begin(), s.end(), node(to.agent, to.index));
  }

  bool reduced() const { return reduced_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  //! Replaces the edge set; lists are sorted and deduplicated.
  void set_adjacency(std::vector<std::vector<int>> adjacency, bool reduced)
  {
    for (auto& s : adjacency) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }
    out_ = std::move(adjacency);
    reduced_ = reduced;
  }

private:
  std::vector<int> offsets_;
  std::vector<std::vector<int>> out_;
  bool reduced_ = false;
  std::uint64_t fingerprint_ = 0;
};

/*! Partial order of a valid plan: each agent's chain, plus an edge
(j, x'+1) -> (i, x+1) whenever l_j(x') == l_i(x+1) with x' < x.
*/
inline DependencyGraph build_partial_order(const Plan& plan)
{
  std::vector<int> last;
  for (const Path& p : plan.paths) {
    if (p.vertices.empty()) {
      throw Error("build_partial_order: empty path");
    }
    last.push_back(p.last_index());
  }
  DependencyGraph dg(last, plan_fingerprint(plan));
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(dg.num_nodes()));

  // (vertex, agent, index) for every state that has a successor state.
  std::vector<std::tuple<VertexId, AgentId, int>> visits;
  for (AgentId j = 0; j < plan.num_agents(); ++j) {
    const auto& vs = plan.paths[static_cast<std::size_t>(j)].vertices;
    for (int x = 0; x + 1 < static_cast<int>(vs.size()); ++x) {
      visits.emplace_back(vs[static_cast<std::size_t>(x)], j, x);
    }
  }
  std::sort(visits.begin(), visits.end());

  for (AgentId i = 0; i < plan.num_agents(); ++i) {
    const auto& vs = plan.paths[static_cast<std::size_t>(i)].vertices;
    for (int x = 0; x < dg.last_index(i); ++x) {
      adj[static_cast<std::size_t>(dg.node(i, x))].push_back(dg.node(i, x + 1));
    }
    for (int target = 1; target < static_cast<int>(vs.size()); ++target) {
      const VertexId v = vs[static_cast<std::size_t>(target)];
      auto it = std::lower_bound(visits.begin(), visits.end(), std::tuple<VertexId, AgentId, int>{v, -1, -1});
      for (; it != visits.end() && std::get<0>(*it) == v; ++it) {
        const auto [vertex, j, xp] = *it;
        if (j == i || xp >= target - 1) {
          continue;
        }
        if (!(xp + 1 < target)) {
          throw Error("build_partial_order: edge does not increase the index (invalid plan?)");
        }
        adj[static_cast<std::size_t>(dg.node(j, xp + 1))].push_back(dg.node(i, target));
      }
    }
  }
  dg.set_adjacency(std::move(adj), false);
  return dg;
}

/*! Transitive reduction of a DAG given as successor lists.

Reachability sets are kept as bitsets and filled in reverse topological
order; a successor is dropped when an earlier (in topological order)
successor already reaches it. O(|V| |E| / 64) time, O(|V|^2 / 64) memory.
Throws Error on a cycle.
*/
inline std::vector<std::vector<int>> transitive_reduction(const std::vector<std::vector<int>>& adjacency)
{
  const std::size_t n = adjacency.size();
  std::vector<int> indegree(n, 0);
  for (const auto& succ : adjacency) {
    for (int v : succ) {
      if (v < 0 || static_cast<std::size_t>(v) >= n) {
        throw Error("transitive_reduction: edge target out of range");
      }
      ++indegree[static_cast<std::size_t>(v)];
    }
  }
  std::vector<int> order;
  order.reserve(n);
  for (std::size_t u = 0; u < n; ++u) {
    if (indegree[u] == 0) {
      order.push_back(static_cast<int>(u));
    }
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (int v : adjacency[static_cast<std::size_t>(order[k])]) {
      if (--indegree[static_cast<std::size_t>(v)] == 0) {
        order.push_back(v);
      }
    }
  }
  if (order.size() != n) {
    throw Error("transitive_reduction: graph has a cycle");
  }
  std::vector<int> position(n);
  for (std::size_t k = 0; k < n; ++k) {
    position[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
  }

  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> reach(n * words, 0);
  auto bit = [&](std::size_t row, std::size_t col) -> bool {
    return (reach[row * words + col / 64] >> (col % 64)) & 1u;
  };

  std::vector<std::vector<int>> reduced(n);
  std::vector<int> succ;
  for (std::size_t k = n; k-- > 0;) {
    const auto u = static_cast<std::size_t>(order[k]);
    succ = adjacency[u];
    std::sort(succ.begin(), succ.end(), [&](int a, int b) {
      return position[static_cast<std::size_t>(a)] < position[static_cast<std::size_t>(b)];
    });
    succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
    std::uint64_t* row = &reach[u * words];
    for (int v : succ) {
      const auto vv = static_cast<std::size_t>(v);
      if (bit(u, vv)) {
        continue;
      }
      reduced[u].push_back(v);
      row[vv / 64] |= std::uint64_t{1} << (vv % 64);
      const std::uint64_t* other = &reach[vv * words];
      for (std::size_t w = 0; w < words; ++w) {
        row[w] |= other[w];
      }
    }
    std::sort(reduced[u].begin(), reduced[u].end());
  }
  return reduced;
}

inline DependencyGraph transitive_reduction(const DependencyGraph& dg)
{
  DependencyGraph out = dg;
  out.set_adjacency(transitive_reduction(dg.adjacency()), true);
  return out;
}

/*! Who messages whom, and how many messages each agent needs before it may
leave each local state.

When agent j enters state y it messages every agent in recipients[j][y].
Agent i may leave state x once, for every j, it holds at least
threshold(i, x, j) messages from j.
*/
struct MessageSchedule
{
  std::uint64_t plan_fingerprint = 0;
  std::vector<std::vector<std::vector<AgentId>>> recipients; // [sender][index]
  std::vector<std::vector<std::vector<int>>> thresholds;     // [recipient][index][sender]
  std::uint64_t total_messages = 0;

  int num_agents() const { return static_cast<int>(recipients.size()); }

  int threshold(AgentId recipient, int index, AgentId sender) const
  {
    return thresholds[static_cast<std::size_t>(recipient)][static_cast<std::size_t>(index)]
                     [static_cast<std::size_t>(sender)];
  }
};

//! Requires a reduced graph. One message per (sender state, recipient) pair.
inline MessageSchedule message_schedule(const DependencyGraph& reduced)
{
  if (!reduced.reduced()) {
    throw Error("message_schedule: dependency graph is not reduced");
  }
  const int m = reduced.num_agents();
  MessageSchedule sched;
  sched.plan_fingerprint = reduced.fingerprint();
  sched.recipients.resize(static_cast<std::size_t>(m));
  sched.thresholds.resize(static_cast<std::size_t>(m));
  std::vector<std::vector<std::vector<int>>> arrivals(static_cast<std::size_t>(m)); // [i][x][j] edges into (i, x)
  for (AgentId a = 0; a < m; ++a) {
    const auto len = static_cast<std::size_t>(reduced.last_index(a) + 1);
    sched.recipients[static_cast<std::size_t>(a)].resize(len);
    arrivals[static_cast<std::size_t>(a)].assign(len, std::vector<int>(static_cast<std::size_t>(m), 0));
  }
  for (const auto& [from, to] : reduced.inter_agent_edges()) {
    auto& rec = sched.recipients[static_cast<std::size_t>(from.agent)][static_cast<std::size_t>(from.index)];
    if (std::find(rec.begin(), rec.end(), to.agent) != rec.end()) {
      // A second reduced edge from one sender state into one recipient would be implied by the
      // recipient's own chain, so a reduced graph never has one.
      throw Error("message_schedule: sender state has two reduced edges into one recipient");
    }
    rec.push_back(to.agent);
    ++arrivals[static_cast<std::size_t>(to.agent)][static_cast<std::size_t>(to.index)]
              [static_cast<std::size_t>(from.agent)];
    ++sched.total_messages;
  }
  for (AgentId j = 0; j < m; ++j) {
    for (auto& rec : sched.recipients[static_cast<std::size_t>(j)]) {
      std::sort(rec.begin(), rec.end());
    }
  }
  for (AgentId i = 0; i < m; ++i) {
    const int last = reduced.last_index(i);
    auto& th = sched.thresholds[static_cast<std::size_t>(i)];
    th.assign(static_cast<std::size_t>(last + 1), std::vector<int>(static_cast<std::size_t>(m), 0));
    std::vector<int> running(static_cast<std::size_t>(m), 0);
    // threshold at x counts arrivals into states 0..x+1
    for (int x = 0; x <= last; ++x) {
      if (x == 0) {
        for (AgentId j = 0; j < m; ++j) {
          running[static_cast<std::size_t>(j)] += arrivals[static_cast<std::size_t>(i)][0][static_cast<std::size_t>(j)];
        }
      }
      if (x + 1 <= last) {
        for (AgentId j = 0; j < m; ++j) {
          running[static_cast<std::size_t>(j)] +=
            arrivals[static_cast<std::size_t>(i)][static_cast<std::size_t>(x + 1)][static_cast<std::size_t>(j)];
        }
      }
      th[static_cast<std::size_t>(x)] = running;
    }
  }
  return sched;
}

//! Expected steps for the action from index x-1 to x of `path`.
inline double action_cost(const Path& path, int x, double delay_prob)
{
  const auto& vs = path.vertices;
  return vs[static_cast<std::size_t>(x - 1)] == vs[static_cast<std::size_t>(x)] ? 1.0 : 1.0 / (1.0 - delay_prob);
}

/*! Approximate entry times of every local state.

label_i(0) = 0 and label_i(x) = max over partial-order predecessors (j, y) of
label_j(y), plus the expected action time (1 for a wait, 1/(1-p_i) for a
move). For each other agent only its latest earlier visit of l_i(x) matters,
since labels grow along each chain.
*/
inline Plan compute_labels(const Plan& plan, std::span<const double> delay_probs)
{
  if (delay_probs.size() != plan.paths.size()) {
    throw Error("compute_labels: one delay probability per agent required");
  }
  Plan out = plan;
  const int m = plan.num_agents();
  // visits[j] = sorted (vertex, index) for states with a successor
  std::vector<std::vector<std::pair<VertexId, int>>> visits(static_cast<std::size_t>(m));
  int xmax = 0;
  for (AgentId j = 0; j < m; ++j) {
    Path& p = out.paths[static_cast<std::size_t>(j)];
    if (p.vertices.empty()) {
      throw Error("compute_labels: empty path");
    }
    p.labels.assign(p.vertices.size(), 0.0);
    for (int x = 0; x < p.last_index(); ++x) {
      visits[static_cast<std::size_t>(j)].emplace_back(p.vertices[static_cast<std::size_t>(x)], x);
    }
    std::sort(visits[static_cast<std::size_t>(j)].begin(), visits[static_cast<std::size_t>(j)].end());
    xmax = std::max(xmax, p.last_index());
  }
  for (int x = 1; x <= xmax; ++x) {
    for (AgentId i = 0; i < m; ++i) {
      Path& p = out.paths[static_cast<std::size_t>(i)];
      if (x > p.last_index()) {
        continue;
      }
      const VertexId v = p.vertices[static_cast<std::size_t>(x)];
      double ready = p.labels[static_cast<std::size_t>(x - 1)];
      for (AgentId j = 0; j < m; ++j) {
        if (j == i) {
          continue;
        }
        const auto& vj = visits[static_cast<std::size_t>(j)];
        // latest x' < x - 1 with l_j(x') == v
        auto it = std::lower_bound(vj.begin(), vj.end(), std::pair<VertexId, int>{v, x - 1});
        if (it != vj.begin() && std::prev(it)->first == v) {
          const int xp = std::prev(it)->second;
          ready = std::max(ready, out.paths[static_cast<std::size_t>(j)].labels[static_cast<std::size_t>(xp + 1)]);
        }
      }
      p.labels[static_cast<std::size_t>(x)] = ready + action_cost(p, x, delay_probs[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

//! Same recurrence evaluated over the predecessors of an explicit dependency graph.
inline Plan compute_labels(const Plan& plan, std::span<const double> delay_probs, const DependencyGraph& dg)
{
  if (dg.num_agents() != plan.num_agents() || dg.fingerprint() != plan_fingerprint(plan)) {
    throw Error("compute_labels: dependency graph does not belong to this plan");
  }
  std::vector<std::vector<int>> preds(static_cast<std::size_t>(dg.num_nodes()));
  for (int u = 0; u < dg.num_nodes(); ++u) {
    for (int v : dg.successors(u)) {
      preds[static_cast<std::size_t>(v)].push_back(u);
    }
  }
  Plan out = plan;
  std::vector<double> label(static_cast<std::size_t>(dg.num_nodes()), 0.0);
  const int xmax = plan.max_last_index();
  for (int x = 1; x <= xmax; ++x) {
    for (AgentId i = 0; i < plan.num_agents(); ++i) {
      if (x > dg.last_index(i)) {
        continue;
      }
      const int node = dg.node(i, x);
      double ready = 0.0;
      for (int u : preds[static_cast<std::size_t>(node)]) {
        ready = std::max(ready, label[static_cast<std::size_t>(u)]);
      }
      label[static_cast<std::size_t>(node)] =
        ready + action_cost(plan.paths[static_cast<std::size_t>(i)], x, delay_probs[static_cast<std::size_t>(i)]);
    }
  }
  for (AgentId i = 0; i < plan.num_agents(); ++i) {
    Path& p = out.paths[static_cast<std::size_t>(i)];
    p.labels.resize(p.vertices.size());
    for (int x = 0; x <= p.last_index(); ++x) {
      p.labels[static_cast<std::size_t>(x)] = label[static_cast<std::size_t>(dg.node(i, x))];
    }
  }
  return out;
}

//! max_i label_i(X_i) over the stored labels.
inline double approximate_average_makespan(const Plan& plan)
{
  double best = 0.0;
  for (const Path& p : plan.paths) {
    if (!p.has_labels()) {
      throw Error("approximate_average_makespan: plan has no labels");
    }
    best = std::max(best, p.labels.back());
  }
  return best;
}

struct DependencyStats
{
  std::size_t edges = 0;
  std::size_t inter_agent_edges = 0;
  std::size_t reduced_edges = 0;
  std::size_t reduced_inter_agent_edges = 0;
  std::uint64_t mcp_messages = 0;
  std::uint64_t fsp_messages = 0;
};

inline DependencyStats dependency_stats(const Plan& plan)
{
  const DependencyGraph dg = build_partial_order(plan);
  const DependencyGraph red = transitive_reduction(dg);
  DependencyStats s;
  s.edges = dg.num_edges();
  s.inter_agent_edges = dg.num_inter_agent_edges();
  s.reduced_edges = red.num_edges();
  s.reduced_inter_agent_edges = red.num_inter_agent_edges();
  s.mcp_messages = message_schedule(red).total_messages;
  std::uint64_t steps = 0;
  for (const Path& p : plan.paths) {
    steps += static_cast<std::uint64_t>(p.last_index());
  }
  s.fsp_messages = plan.paths.empty() ? 0 : static_cast<std::uint64_t>(plan.num_agents() - 1) * steps;
  return s;
}

//! Structured dump of the reduced order and message counts, for plan files.
inline nlohmann::ordered_json dependency_json(const Plan& plan)
{
  const DependencyGraph dg = build_partial_order(plan);
  const DependencyGraph red = transitive_reduction(dg);
  const MessageSchedule sched = message_schedule(red);
  const DependencyStats s = dependency_stats(plan);
  nlohmann::ordered_json j;
  j["edges"] = s.edges;
  j["inter_agent_edges"] = s.inter_agent_edges;
  j["reduced_edges"] = s.reduced_edges;
  j["reduced_inter_agent_edges"] = s.reduced_inter_agent_edges;
  j["mcp_messages"] = s.mcp_messages;
  j["fsp_messages"] = s.fsp_messages;
  auto edges = nlohmann::ordered_json::array();
  for (const auto& [from, to] : red.inter_agent_edges()) {
    edges.push_back({from.agent, from.index, to.agent, to.index});
  }
  j["reduced_inter_agent_edge_list"] = std::move(edges);
  return j;
}

}  // namespace mapfdp
