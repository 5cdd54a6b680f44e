#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace mapfdp {

//! Open interval (lo, hi) of delay probabilities.
struct DelayRange
{
  double lo = 0.0;
  double hi = 0.5;
};

//! The range whose expected move time runs up to `tmax` steps.
inline DelayRange delay_range_for_tmax(double tmax)
{
  return {0.0, 1.0 - 1.0 / tmax};
}

/*! Draw an expected move time uniformly from (1/(1-lo), 1/(1-hi)) and map it
back to a probability, p = 1 - 1/t.
*/
inline double sample_delay_prob(const DelayRange& range, Rng& rng)
{
  if (!(range.lo >= 0.0 && range.lo < range.hi && range.hi < 1.0)) {
    throw Error("delay range must satisfy 0 <= lo < hi < 1");
  }
  const double t_min = 1.0 / (1.0 - range.lo);
  const double t_max = 1.0 / (1.0 - range.hi);
  while (true) {
    const double u = uniform01(rng);
    if (u == 0.0) {
      continue;
    }
    const double p = 1.0 - 1.0 / (t_min + u * (t_max - t_min));
    if (p > range.lo && p < range.hi && p > 0.0) {
      return p;
    }
  }
}

//! Vertices of the largest connected component (ties: the one holding the smaller vertex id).
inline std::vector<VertexId> largest_component(const Graph& graph)
{
  std::vector<int> comp(static_cast<std::size_t>(graph.num_vertices()), -1);
  std::vector<VertexId> best;
  std::vector<VertexId> current;
  int label = 0;
  for (VertexId root = 0; root < graph.num_vertices(); ++root) {
    if (comp[static_cast<std::size_t>(root)] >= 0) {
      continue;
    }
    current.clear();
    current.push_back(root);
    comp[static_cast<std::size_t>(root)] = label;
    for (std::size_t k = 0; k < current.size(); ++k) {
      for (VertexId w : graph.neighbors(current[k])) {
        if (comp[static_cast<std::size_t>(w)] < 0) {
          comp[static_cast<std::size_t>(w)] = label;
          current.push_back(w);
        }
      }
    }
    if (current.size() > best.size()) {
      best = current;
    }
    ++label;
  }
  std::sort(best.begin(), best.end());
  return best;
}

inline Instance generate_random_instance(int width, int height, double blocked_fraction, int num_agents,
                                         DelayRange delays, std::uint64_t seed)
{
  if (width <= 0 || height <= 0 || num_agents <= 0) {
    throw Error("random instance: dimensions and agent count must be positive");
  }
  if (!(blocked_fraction >= 0.0 && blocked_fraction < 1.0)) {
    throw Error("random instance: blocked fraction must lie in [0, 1)");
  }
  Rng rng(seed);
  const int cells = width * height;
  const int n_blocked = static_cast<int>(std::lround(blocked_fraction * cells));
  std::vector<int> order(static_cast<std::size_t>(cells));
  for (int c = 0; c < cells; ++c) {
    order[static_cast<std::size_t>(c)] = c;
  }
  shuffle(order, rng);
  std::vector<bool> blocked(static_cast<std::size_t>(cells), false);
  for (int k = 0; k < n_blocked; ++k) {
    blocked[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
  }
  if (n_blocked >= cells) {
    throw Error("random instance: no free cells");
  }

  Instance inst;
  inst.graph = Graph::from_grid(width, height, blocked);
  auto pool = largest_component(inst.graph);
  if (pool.size() < 2 * static_cast<std::size_t>(num_agents)) {
    throw Error("random instance: " + std::to_string(num_agents) + " agents need " +
                std::to_string(2 * num_agents) + " distinct cells but the largest component has " +
                std::to_string(pool.size()));
  }
  shuffle(pool, rng);
  for (int i = 0; i < num_agents; ++i) {
    inst.agents.push_back({i, pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(num_agents + i)], 0.0});
  }
  for (auto& a : inst.agents) {
    a.delay_prob = sample_delay_prob(delays, rng);
  }
  return inst;
}

//! Same layout, starts and goals; delay probabilities redrawn.
inline Instance resample_delays(const Instance& base, DelayRange delays, std::uint64_t seed)
{
  Instance inst = base;
  Rng rng(seed);
  for (auto& a : inst.agents) {
    a.delay_prob = sample_delay_prob(delays, rng);
  }
  return inst;
}

//! Rectangular shelf blocks separated by aisles, with open corridors on the left and right.
struct WarehouseParams
{
  int block_rows = 4;
  int block_cols = 3;
  int block_width = 6;
  int block_height = 2;
  int aisle_width = 1;
  int side_width = 3;
};

inline std::pair<int, int> warehouse_size(const WarehouseParams& p)
{
  const int inner_w = p.block_cols > 0 ? p.block_cols * p.block_width + (p.block_cols - 1) * p.aisle_width : 0;
  const int inner_h = p.block_rows > 0 ? p.block_rows * p.block_height + (p.block_rows - 1) * p.aisle_width : 0;
  return {2 * p.side_width + inner_w, 2 * p.aisle_width + inner_h};
}

/*! Starts and goals sit in the side corridors; each agent crosses from one
side to the other, the direction chosen per agent.
*/
inline Instance generate_warehouse_instance(const WarehouseParams& params, int num_agents, DelayRange delays,
                                            std::uint64_t seed)
{
  if (params.block_rows < 0 || params.block_cols < 0 || params.block_width <= 0 || params.block_height <= 0 ||
      params.aisle_width < 0 || params.side_width <= 0 || num_agents <= 0) {
    throw Error("warehouse: invalid layout parameters");
  }
  const auto [width, height] = warehouse_size(params);
  if (height <= 0) {
    throw Error("warehouse: layout has zero height");
  }
  std::vector<bool> blocked(static_cast<std::size_t>(width * height), false);
  if (params.block_rows > 0 && params.block_cols > 0) {
    for (int r = 0; r < params.block_rows; ++r) {
      for (int c = 0; c < params.block_cols; ++c) {
        const int x0 = params.side_width + c * (params.block_width + params.aisle_width);
        const int y0 = params.aisle_width + r * (params.block_height + params.aisle_width);
        for (int y = y0; y < y0 + params.block_height; ++y) {
          for (int x = x0; x < x0 + params.block_width; ++x) {
            blocked[static_cast<std::size_t>(y * width + x)] = true;
          }
        }
      }
    }
  }
  Instance inst;
  inst.graph = Graph::from_grid(width, height, blocked);
  const GridInfo& grid = *inst.graph.grid();

  std::vector<VertexId> left;
  std::vector<VertexId> right;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < params.side_width; ++x) {
      left.push_back(*grid.vertex_at(x, y));
      right.push_back(*grid.vertex_at(width - 1 - x, y));
    }
  }
  std::sort(right.begin(), right.end());
  if (static_cast<std::size_t>(num_agents) > left.size()) {
    throw Error("warehouse: " + std::to_string(num_agents) + " agents exceed the " + std::to_string(left.size()) +
                " cells per side");
  }
  if (params.aisle_width == 0 && params.block_rows > 0 && params.block_cols > 0) {
    throw Error("warehouse: zero-width aisles disconnect the sides");
  }
  Rng rng(seed);
  shuffle(left, rng);
  shuffle(right, rng);
  for (int i = 0; i < num_agents; ++i) {
    const VertexId l = left[static_cast<std::size_t>(i)];
    const VertexId r = right[static_cast<std::size_t>(i)];
    const bool left_to_right = (rng() >> 63) == 0;
    inst.agents.push_back({i, left_to_right ? l : r, left_to_right ? r : l, 0.0});
  }
  for (auto& a : inst.agents) {
    a.delay_prob = sample_delay_prob(delays, rng);
  }
  return inst;
}

}  // namespace mapfdp
