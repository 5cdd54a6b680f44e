#pragma once

#include <vector>

#include "mapfdp/mapfdp.hpp"

namespace fixture {

using namespace mapfdp;

// Corridor v2-v3-v4-v5 with v1 attached north of v3; ids are names minus one.
inline Instance corridor(double p1 = 0.5, double p2 = 0.5)
{
  Instance inst;
  inst.graph = Graph::from_edges(5, {{0, 2}, {1, 2}, {2, 3}, {3, 4}});
  inst.agents = {{0, 2, 3, p1}, {1, 1, 4, p2}};
  return inst;
}

// Vertex lists written with the 1-based names used in the corridor drawing.
inline Path named_path(std::initializer_list<int> names)
{
  Path p;
  for (int n : names) {
    p.vertices.push_back(n - 1);
  }
  return p;
}

inline Plan plan_of(std::initializer_list<Path> paths)
{
  return Plan{std::vector<Path>(paths)};
}

// The plan used for the partial-order drawings.
inline Plan dependency_example()
{
  return plan_of({named_path({3, 1, 3, 1, 1, 1, 3, 4}), named_path({2, 2, 2, 2, 3, 4, 5})});
}

inline Instance path_graph(int n, std::vector<AgentSpec> agents)
{
  std::vector<std::pair<VertexId, VertexId>> edges;
  for (int v = 0; v + 1 < n; ++v) {
    edges.emplace_back(v, v + 1);
  }
  Instance inst;
  inst.graph = Graph::from_edges(n, edges);
  inst.agents = std::move(agents);
  return inst;
}

}  // namespace fixture
