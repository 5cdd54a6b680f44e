#pragma once

#include <algorithm>
#include <initializer_list>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace mapfdp {

using VertexId = std::int32_t;
using AgentId = std::int32_t;

inline constexpr std::int32_t kUnreachable = std::numeric_limits<std::int32_t>::max();

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Grid bookkeeping kept when a graph was built from a 4-neighbor grid.
struct GridInfo
{
  int width = 0;
  int height = 0;
  std::vector<bool> blocked;            // row-major, width * height
  std::vector<VertexId> vertex_of_cell; // -1 for blocked cells
  std::vector<int> cell_of_vertex;

  std::optional<VertexId> vertex_at(int x, int y) const
  {
    if (x < 0 || y < 0 || x >= width || y >= height) {
      return std::nullopt;
    }
    const VertexId v = vertex_of_cell[static_cast<std::size_t>(y * width + x)];
    if (v < 0) {
      return std::nullopt;
    }
    return v;
  }

  std::pair<int, int> coords(VertexId v) const
  {
    const int cell = cell_of_vertex[static_cast<std::size_t>(v)];
    return {cell % width, cell / width};
  }
};

//! Undirected simple graph with dense vertex ids and sorted adjacency lists.
class Graph
{
public:
  Graph() = default;

  static Graph from_edges(int num_vertices, std::span<const std::pair<VertexId, VertexId>> edges)
  {
    if (num_vertices < 0) {
      throw Error("graph: negative vertex count");
    }
    Graph g;
    g.adjacency_.assign(static_cast<std::size_t>(num_vertices), {});
    for (auto [u, v] : edges) {
      if (u < 0 || v < 0 || u >= num_vertices || v >= num_vertices) {
        throw Error("graph: edge endpoint out of range");
      }
      if (u == v) {
        throw Error("graph: self-loop on vertex " + std::to_string(u));
      }
      g.adjacency_[static_cast<std::size_t>(u)].push_back(v);
      g.adjacency_[static_cast<std::size_t>(v)].push_back(u);
    }
    for (auto& nbrs : g.adjacency_) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
      g.num_edges_ += nbrs.size();
    }
    g.num_edges_ /= 2;
    return g;
  }

  static Graph from_edges(int num_vertices, std::initializer_list<std::pair<VertexId, VertexId>> edges)
  {
    return from_edges(num_vertices, std::span<const std::pair<VertexId, VertexId>>(edges.begin(), edges.size()));
  }

  //! 4-neighbor graph over free cells; vertex ids assigned row-major.
  static Graph from_grid(int width, int height, const std::vector<bool>& blocked)
  {
    if (width <= 0 || height <= 0) {
      throw Error("grid: non-positive dimensions");
    }
    if (blocked.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw Error("grid: blocked mask has wrong size");
    }
    GridInfo info;
    info.width = width;
    info.height = height;
    info.blocked = blocked;
    info.vertex_of_cell.assign(blocked.size(), -1);
    for (int cell = 0; cell < width * height; ++cell) {
      if (!blocked[static_cast<std::size_t>(cell)]) {
        info.vertex_of_cell[static_cast<std::size_t>(cell)] = static_cast<VertexId>(info.cell_of_vertex.size());
        info.cell_of_vertex.push_back(cell);
      }
    }
    if (info.cell_of_vertex.empty()) {
      throw Error("grid: no free cells");
    }
    std::vector<std::pair<VertexId, VertexId>> edges;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        auto here = info.vertex_at(x, y);
        if (!here) {
          continue;
        }
        if (auto right = info.vertex_at(x + 1, y)) {
          edges.emplace_back(*here, *right);
        }
        if (auto down = info.vertex_at(x, y + 1)) {
          edges.emplace_back(*here, *down);
        }
      }
    }
    Graph g = from_edges(static_cast<int>(info.cell_of_vertex.size()), edges);
    g.grid_ = std::move(info);
    return g;
  }

  int num_vertices() const { return static_cast<int>(adjacency_.size()); }
  std::size_t num_edges() const { return num_edges_; }
  bool contains(VertexId v) const { return v >= 0 && v < num_vertices(); }

  std::span<const VertexId> neighbors(VertexId v) const
  {
    return adjacency_[static_cast<std::size_t>(v)];
  }

  bool adjacent(VertexId u, VertexId v) const
  {
    const auto& nbrs = adjacency_[static_cast<std::size_t>(u)];
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
  }

  const std::optional<GridInfo>& grid() const { return grid_; }

  //! Human-readable vertex name: "(x,y)" on grids, "v<id>" otherwise.
  std::string vertex_name(VertexId v) const
  {
    if (grid_) {
      auto [x, y] = grid_->coords(v);
      return "(" + std::to_string(x) + "," + std::to_string(y) + ")";
    }
    return "v" + std::to_string(v);
  }

private:
  std::vector<std::vector<VertexId>> adjacency_;
  std::size_t num_edges_ = 0;
  std::optional<GridInfo> grid_;
};

struct AgentSpec
{
  AgentId id = 0;
  VertexId start = 0;
  VertexId goal = 0;
  double delay_prob = 0.0;

  //! Expected steps for one successful move, 1/(1-p).
  double move_cost() const { return 1.0 / (1.0 - delay_prob); }
};

struct Instance
{
  Graph graph;
  std::vector<AgentSpec> agents;

  int num_agents() const { return static_cast<int>(agents.size()); }

  std::vector<double> delay_probs() const
  {
    std::vector<double> probs;
    probs.reserve(agents.size());
    for (const auto& a : agents) {
      probs.push_back(a.delay_prob);
    }
    return probs;
  }
};

//! BFS hop counts to `goal`; kUnreachable where no path exists.
inline std::vector<std::int32_t> shortest_path_distances(const Graph& graph, VertexId goal)
{
  std::vector<std::int32_t> dist(static_cast<std::size_t>(graph.num_vertices()), kUnreachable);
  if (!graph.contains(goal)) {
    throw Error("shortest_path_distances: goal not in graph");
  }
  std::queue<VertexId> frontier;
  dist[static_cast<std::size_t>(goal)] = 0;
  frontier.push(goal);
  while (!frontier.empty()) {
    const VertexId u = frontier.front();
    frontier.pop();
    for (VertexId v : graph.neighbors(u)) {
      if (dist[static_cast<std::size_t>(v)] == kUnreachable) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        frontier.push(v);
      }
    }
  }
  return dist;
}

//! Throws Error describing the first violated instance invariant.
inline void check_instance(const Instance& inst)
{
  const int n = inst.graph.num_vertices();
  std::vector<bool> start_used(static_cast<std::size_t>(n), false);
  std::vector<bool> goal_used(static_cast<std::size_t>(n), false);
  for (std::size_t k = 0; k < inst.agents.size(); ++k) {
    const AgentSpec& a = inst.agents[k];
    const std::string who = "agent " + std::to_string(k);
    if (a.id != static_cast<AgentId>(k)) {
      throw Error(who + ": ids must be dense and 0-based");
    }
    if (!inst.graph.contains(a.start) || !inst.graph.contains(a.goal)) {
      throw Error(who + ": start or goal outside the graph");
    }
    if (!(a.delay_prob > 0.0 && a.delay_prob < 1.0)) {
      throw Error(who + ": delay probability must lie in (0, 1)");
    }
    if (start_used[static_cast<std::size_t>(a.start)]) {
      throw Error(who + ": start vertex shared with another agent");
    }
    if (goal_used[static_cast<std::size_t>(a.goal)]) {
      throw Error(who + ": goal vertex shared with another agent");
    }
    start_used[static_cast<std::size_t>(a.start)] = true;
    goal_used[static_cast<std::size_t>(a.goal)] = true;
    if (shortest_path_distances(inst.graph, a.goal)[static_cast<std::size_t>(a.start)] == kUnreachable) {
      throw Error(who + ": goal unreachable from start");
    }
  }
}

//! A path l(0..X) plus optional approximate entry-time labels.
struct Path
{
  std::vector<VertexId> vertices;
  std::vector<double> labels;

  int last_index() const { return static_cast<int>(vertices.size()) - 1; }
  bool has_labels() const { return !vertices.empty() && labels.size() == vertices.size(); }

  //! Vertex at `x`, holding the final vertex for x past the end.
  VertexId at_padded(int x) const
  {
    return x < static_cast<int>(vertices.size()) ? vertices[static_cast<std::size_t>(x)] : vertices.back();
  }

  bool operator==(const Path&) const = default;
};

struct Plan
{
  std::vector<Path> paths;

  int num_agents() const { return static_cast<int>(paths.size()); }

  int max_last_index() const
  {
    int xmax = 0;
    for (const auto& p : paths) {
      xmax = std::max(xmax, p.last_index());
    }
    return xmax;
  }

  bool has_labels() const
  {
    return std::all_of(paths.begin(), paths.end(), [](const Path& p) { return p.has_labels(); });
  }

  bool operator==(const Plan&) const = default;
};

enum class ConflictKind : std::uint8_t
{
  VertexSameIndex, //!< l_i(x) == l_j(x)
  FollowIndex,     //!< l_i(x+1) == l_j(x)
};

/*! A violated validity property.

For VertexSameIndex, i < j and both agents sit on `vertex` at `index`.
For FollowIndex, agent i is on `vertex` at index + 1 and agent j at `index`.
*/
struct Conflict
{
  ConflictKind kind = ConflictKind::VertexSameIndex;
  AgentId i = 0;
  AgentId j = 0;
  VertexId vertex = 0;
  int index = 0;

  //! The larger local-state index involved; earliest conflicts minimize it.
  int depth() const { return kind == ConflictKind::VertexSameIndex ? index : index + 1; }

  bool operator==(const Conflict&) const = default;
};

//! Order used to pick the earliest conflict.
inline bool earlier_conflict(const Conflict& a, const Conflict& b)
{
  auto key = [](const Conflict& c) {
    return std::tuple(c.depth(), static_cast<int>(c.kind), c.i, c.j, c.vertex);
  };
  return key(a) < key(b);
}

inline std::string to_string(const Conflict& c)
{
  std::ostringstream os;
  if (c.kind == ConflictKind::VertexSameIndex) {
    os << "vertex conflict: agents " << c.i << " and " << c.j << " at vertex " << c.vertex << " index " << c.index;
  } else {
    os << "follow conflict: agent " << c.i << " at index " << c.index + 1 << " enters vertex " << c.vertex
       << " held by agent " << c.j << " at index " << c.index;
  }
  return os.str();
}

struct PathDefect
{
  AgentId agent = 0;
  int index = 0;
  std::string reason;
};

struct ValidationReport
{
  std::vector<PathDefect> defects;
  std::vector<Conflict> conflicts;

  bool well_formed() const { return defects.empty(); }
  bool valid() const { return defects.empty() && conflicts.empty(); }
};

//! Structural checks of each path against the instance (not inter-agent).
inline std::vector<PathDefect> check_paths(const Instance& inst, const Plan& plan)
{
  std::vector<PathDefect> defects;
  if (plan.num_agents() != inst.num_agents()) {
    defects.push_back({-1, 0, "plan has " + std::to_string(plan.num_agents()) + " paths for " +
                                  std::to_string(inst.num_agents()) + " agents"});
    return defects;
  }
  for (AgentId i = 0; i < plan.num_agents(); ++i) {
    const Path& p = plan.paths[static_cast<std::size_t>(i)];
    const AgentSpec& a = inst.agents[static_cast<std::size_t>(i)];
    if (p.vertices.empty()) {
      defects.push_back({i, 0, "empty path"});
      continue;
    }
    bool ids_ok = true;
    for (std::size_t x = 0; x < p.vertices.size(); ++x) {
      if (!inst.graph.contains(p.vertices[x])) {
        defects.push_back({i, static_cast<int>(x), "vertex id out of range"});
        ids_ok = false;
      }
    }
    if (!ids_ok) {
      continue;
    }
    if (p.vertices.front() != a.start) {
      defects.push_back({i, 0, "path does not begin at the start vertex"});
    }
    if (p.vertices.back() != a.goal) {
      defects.push_back({i, p.last_index(), "path does not end at the goal vertex"});
    }
    for (std::size_t x = 0; x + 1 < p.vertices.size(); ++x) {
      const VertexId u = p.vertices[x];
      const VertexId v = p.vertices[x + 1];
      if (u != v && !inst.graph.adjacent(u, v)) {
        defects.push_back({i, static_cast<int>(x + 1), "consecutive vertices are not adjacent"});
      }
    }
    if (!p.labels.empty()) {
      if (p.labels.size() != p.vertices.size()) {
        defects.push_back({i, 0, "label count differs from vertex count"});
      } else {
        if (std::abs(p.labels.front()) > 1e-9) {
          defects.push_back({i, 0, "first label must be 0"});
        }
        for (std::size_t x = 1; x < p.labels.size(); ++x) {
          if (p.labels[x] < p.labels[x - 1] + 1.0 - 1e-9) {
            defects.push_back({i, static_cast<int>(x), "labels must grow by at least 1 per index"});
          }
        }
      }
    }
  }
  return defects;
}

namespace detail {

// Agents sorted by the (padded) vertex they occupy at one index.
inline void occupancy_at(const Plan& plan, int x, std::vector<std::pair<VertexId, AgentId>>& out)
{
  out.clear();
  for (AgentId i = 0; i < plan.num_agents(); ++i) {
    out.emplace_back(plan.paths[static_cast<std::size_t>(i)].at_padded(x), i);
  }
  std::sort(out.begin(), out.end());
}

// Appends every conflict whose depth() equals `depth`.
inline void conflicts_at_depth(const Plan& plan, int depth, std::vector<std::pair<VertexId, AgentId>>& cur,
                               std::vector<std::pair<VertexId, AgentId>>& prev, std::vector<Conflict>& out)
{
  occupancy_at(plan, depth, cur);
  for (std::size_t a = 0; a < cur.size();) {
    std::size_t b = a;
    while (b < cur.size() && cur[b].first == cur[a].first) {
      ++b;
    }
    for (std::size_t s = a; s < b; ++s) {
      for (std::size_t t = s + 1; t < b; ++t) {
        out.push_back({ConflictKind::VertexSameIndex, cur[s].second, cur[t].second, cur[s].first, depth});
      }
    }
    a = b;
  }
  if (depth == 0) {
    return;
  }
  occupancy_at(plan, depth - 1, prev);
  for (auto [v, i] : cur) {
    auto lo = std::lower_bound(prev.begin(), prev.end(), std::pair<VertexId, AgentId>{v, -1});
    for (auto it = lo; it != prev.end() && it->first == v; ++it) {
      if (it->second != i) {
        out.push_back({ConflictKind::FollowIndex, i, it->second, v, depth - 1});
      }
    }
  }
}

inline bool paths_scannable(const Plan& plan)
{
  return std::none_of(plan.paths.begin(), plan.paths.end(), [](const Path& p) { return p.vertices.empty(); });
}

}  // namespace detail

/*! All violations of the two validity properties, over paths padded with
their goal vertex up to the longest path. Structural defects are reported
separately; the conflict scan runs whenever every path is non-empty.
*/
inline ValidationReport validate_plan(const Instance& inst, const Plan& plan)
{
  ValidationReport report;
  report.defects = check_paths(inst, plan);
  if (!detail::paths_scannable(plan)) {
    return report;
  }
  std::vector<std::pair<VertexId, AgentId>> cur, prev;
  const int xmax = plan.max_last_index();
  for (int depth = 0; depth <= xmax; ++depth) {
    detail::conflicts_at_depth(plan, depth, cur, prev, report.conflicts);
  }
  return report;
}

//! Conflict scan only, without instance checks.
inline std::vector<Conflict> find_conflicts(const Plan& plan)
{
  std::vector<Conflict> out;
  if (!detail::paths_scannable(plan)) {
    return out;
  }
  std::vector<std::pair<VertexId, AgentId>> cur, prev;
  const int xmax = plan.max_last_index();
  for (int depth = 0; depth <= xmax; ++depth) {
    detail::conflicts_at_depth(plan, depth, cur, prev, out);
  }
  return out;
}

//! The conflict with the smallest depth(); ties by kind, i, j, vertex.
inline std::optional<Conflict> find_earliest_conflict(const Plan& plan)
{
  if (!detail::paths_scannable(plan)) {
    return std::nullopt;
  }
  std::vector<std::pair<VertexId, AgentId>> cur, prev;
  std::vector<Conflict> found;
  const int xmax = plan.max_last_index();
  for (int depth = 0; depth <= xmax; ++depth) {
    detail::conflicts_at_depth(plan, depth, cur, prev, found);
    if (!found.empty()) {
      return *std::min_element(found.begin(), found.end(), earlier_conflict);
    }
  }
  return std::nullopt;
}

inline std::optional<Conflict> find_earliest_conflict(const Instance&, const Plan& plan)
{
  return find_earliest_conflict(plan);
}

}  // namespace mapfdp
