#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace mapfdp;
using fixture::named_path;
using fixture::plan_of;

namespace {

SearchLimits quick(double seconds = 1.0)
{
  SearchLimits l;
  l.time_limit_s = seconds;
  return l;
}

LowLevelResult plan_alone(const Instance& inst, AgentId a, const AgentConstraints& cons = {}, double key = 0.0)
{
  const auto dist = shortest_path_distances(inst.graph, inst.agents[static_cast<std::size_t>(a)].goal);
  return ame_low_level_search(inst, a, {}, cons, key, dist, LowLevelOptions{});
}

}  // namespace

TEST(Branching, ConstraintsForVertexAndFollowConflicts)
{
  const auto [a, b] = branch_constraints(Conflict{ConflictKind::VertexSameIndex, 0, 1, 7, 3});
  EXPECT_EQ(a, (Constraint{0, 7, 3}));
  EXPECT_EQ(b, (Constraint{1, 7, 3}));
  const auto [c, d] = branch_constraints(Conflict{ConflictKind::FollowIndex, 2, 0, 5, 1});
  EXPECT_EQ(c, (Constraint{2, 5, 2}));
  EXPECT_EQ(d, (Constraint{0, 5, 1}));
}

TEST(Branching, ChainCollectsOnlyOwnAgent)
{
  ConstraintChain chain;
  chain = extend(chain, {0, 4, 2});
  chain = extend(chain, {1, 4, 3});
  chain = extend(chain, {0, 6, 5});
  const AgentConstraints c0(chain, 0, 6);
  EXPECT_EQ(c0.size(), 2u);
  EXPECT_TRUE(c0.banned(4, 2));
  EXPECT_FALSE(c0.banned(4, 3));
  EXPECT_EQ(c0.max_index(), 5);
  EXPECT_EQ(c0.max_goal_index(), 5);
  EXPECT_FALSE(c0.goal_final_at(5));
  EXPECT_TRUE(c0.goal_final_at(6));
  const AgentConstraints c2(chain, 2, 0);
  EXPECT_EQ(c2.size(), 0u);
  EXPECT_TRUE(c2.goal_final_at(0));
}

TEST(Conflicts, CountsEachViolation)
{
  const Path other{{5, 6, 7}, {}};
  const std::vector<const Path*> others{&other};
  // same vertex at equal index
  EXPECT_EQ(count_path_conflicts(std::vector<VertexId>{5}, others), 1);
  // stepping onto the vertex the other one just left
  EXPECT_EQ(count_path_conflicts(std::vector<VertexId>{1, 5}, others), 1);
  // the other one arriving where we just were
  EXPECT_EQ(count_path_conflicts(std::vector<VertexId>{6, 1}, others), 1);
  // arriving on a parked goal breaks both properties against the padded path
  EXPECT_EQ(count_path_conflicts(std::vector<VertexId>{1, 2, 3, 4, 7}, others), 3);
  EXPECT_EQ(count_path_conflicts(std::vector<VertexId>{1, 2, 3}, others), 0);
}

TEST(LowLevel, AloneFindsShortestPathWithExpectedLabels)
{
  const Instance inst = fixture::path_graph(5, {{0, 0, 4, 0.75}});
  const LowLevelResult r = plan_alone(inst, 0);
  ASSERT_EQ(r.status, LowLevelStatus::Found);
  EXPECT_EQ(r.path.vertices, (std::vector<VertexId>{0, 1, 2, 3, 4}));
  EXPECT_EQ(r.path.labels, (std::vector<double>{0, 4, 8, 12, 16}));
}

TEST(LowLevel, GoalConstraintDelaysArrival)
{
  const Instance inst = fixture::path_graph(3, {{0, 0, 2, 0.5}});
  AgentConstraints cons;
  cons.add(2, 4, 2);
  const LowLevelResult r = plan_alone(inst, 0, cons);
  ASSERT_EQ(r.status, LowLevelStatus::Found);
  EXPECT_GE(r.path.last_index(), 5);
  EXPECT_NE(r.path.at_padded(4), 2);
  EXPECT_EQ(r.path.vertices.back(), 2);
}

TEST(LowLevel, VertexConstraintForcesDetourOrWait)
{
  const Instance inst = fixture::path_graph(3, {{0, 0, 2, 0.5}});
  AgentConstraints cons;
  cons.add(1, 1, 2);
  const LowLevelResult r = plan_alone(inst, 0, cons);
  ASSERT_EQ(r.status, LowLevelStatus::Found);
  EXPECT_EQ(r.path.vertices, (std::vector<VertexId>{0, 0, 1, 2}));
  EXPECT_EQ(r.path.labels, (std::vector<double>{0, 1, 3, 5}));
}

TEST(LowLevel, UnreachableGoalIsExhausted)
{
  Instance inst;
  inst.graph = Graph::from_edges(4, {{0, 1}, {2, 3}});
  inst.agents = {{0, 0, 3, 0.1}};
  LowLevelOptions opts;
  opts.max_index = 20;
  const auto dist = shortest_path_distances(inst.graph, 3);
  const LowLevelResult r = ame_low_level_search(inst, 0, {}, {}, 0.0, dist, opts);
  EXPECT_NE(r.status, LowLevelStatus::Found);
}

TEST(LowLevel, LabelsFollowPredecessors)
{
  // the other agent leaves vertex 1 late, so entering 1 has to wait for its label
  const Instance inst = fixture::path_graph(4, {{0, 1, 3, 0.9}, {1, 0, 2, 0.5}});
  Path other{{1, 2, 3}, {0, 10, 20}};
  const std::vector<const Path*> others{&other};
  const auto dist = shortest_path_distances(inst.graph, 2);
  const LowLevelResult r = ame_low_level_search(inst, 1, others, {}, 0.0, dist, LowLevelOptions{});
  ASSERT_EQ(r.status, LowLevelStatus::Found);
  const Plan plan = plan_of({other, r.path});
  const Plan relabeled = compute_labels(plan, std::vector<double>{0.9, 0.5});
  ASSERT_EQ(relabeled.paths[1].labels.size(), r.path.labels.size());
  for (std::size_t x = 0; x < r.path.labels.size(); ++x) {
    EXPECT_NEAR(relabeled.paths[1].labels[x], r.path.labels[x], 1e-9);
  }
}

TEST(Ame, CorridorSolves)
{
  const Instance inst = fixture::corridor();
  const SolveResult r = solve_ame(inst, quick());
  ASSERT_EQ(r.outcome, SolveOutcome::Solved);
  EXPECT_TRUE(validate_plan(inst, r.plan).valid());
  EXPECT_NEAR(approximate_average_makespan(r.plan), r.report.key, 1e-9);
  EXPECT_EQ(r.report.solver, "ame");
  SearchLimits l = quick();
  l.recompute_labels = true;
  const SolveResult fresh = solve_ame(inst, l);
  ASSERT_EQ(fresh.outcome, SolveOutcome::Solved);
  const Plan labeled = compute_labels(fresh.plan, inst.delay_probs());
  EXPECT_NEAR(approximate_average_makespan(labeled), fresh.report.key, 1e-9);
}

TEST(Ame, SingleAgentKeyIsScaledDistance)
{
  const Instance inst = fixture::path_graph(6, {{0, 0, 5, 0.2}});
  const SolveResult r = solve_ame(inst, quick());
  ASSERT_EQ(r.outcome, SolveOutcome::Solved);
  EXPECT_NEAR(r.report.key, 5 / 0.8, 1e-9);
  EXPECT_EQ(r.plan.paths[0].last_index(), 5);
}

TEST(Ame, SwapIsInfeasible)
{
  const Instance inst = fixture::path_graph(3, {{0, 0, 2, 0.3}, {1, 2, 0, 0.3}});
  const SolveResult r = solve_ame(inst, quick(10));
  EXPECT_EQ(r.outcome, SolveOutcome::NoSolution);
}

TEST(Ame, RecomputedLabelsAreTheFixpoint)
{
  std::mt19937_64 rng(31);
  int solved = 0;
  SearchLimits l = quick(0.3);
  l.recompute_labels = true;
  for (int k = 0; k < 60; ++k) {
    const Instance inst = oracle::random_tiny_instance(7, 3, 3, rng);
    const SolveResult r = solve_ame(inst, l);
    if (r.outcome != SolveOutcome::Solved) {
      continue;
    }
    ++solved;
    ASSERT_TRUE(validate_plan(inst, r.plan).valid());
    const Plan labeled = compute_labels(r.plan, inst.delay_probs());
    for (std::size_t i = 0; i < labeled.paths.size(); ++i) {
      for (std::size_t x = 0; x < labeled.paths[i].labels.size(); ++x) {
        EXPECT_NEAR(labeled.paths[i].labels[x], r.plan.paths[i].labels[x], 1e-9);
      }
    }
    EXPECT_NEAR(approximate_average_makespan(labeled), r.report.key, 1e-9);
  }
  EXPECT_GE(solved, 30);
}

TEST(Ame, CloseToBestApproximateMakespan)
{
  std::mt19937_64 rng(77);
  int compared = 0;
  double worst = 1.0;
  SearchLimits l = quick();
  l.recompute_labels = true;
  for (int k = 0; k < 40; ++k) {
    const Instance inst = oracle::random_tiny_instance(6, 2, 2, rng);
    const SolveResult r = solve_ame(inst, l);
    if (r.outcome != SolveOutcome::Solved) {
      continue;
    }
    int horizon = 0;
    for (const Path& p : r.plan.paths) {
      horizon = std::max(horizon, p.last_index());
    }
    const auto best = oracle::best_approximate_makespan(inst, horizon, r.report.key + 1e-9);
    ASSERT_TRUE(best.has_value());
    EXPECT_LE(*best, r.report.key + 1e-9);
    worst = std::max(worst, r.report.key / *best);
    ++compared;
  }
  EXPECT_GE(compared, 20);
  EXPECT_LE(worst, 1.25);
}

TEST(Ame, RandomGridsMostlySolve)
{
  int solved = 0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const Instance inst = generate_random_instance(20, 20, 0.1, 10, {0.0, 0.5}, derive_seed(2024, k));
    const SolveResult r = solve_ame(inst, quick(3));
    if (r.outcome == SolveOutcome::Solved) {
      ++solved;
      EXPECT_TRUE(validate_plan(inst, r.plan).valid());
    }
  }
  EXPECT_GE(solved, 9);
}

TEST(Ame, DefaultKeyIsLargestStoredFinalLabel)
{
  const Instance inst = generate_random_instance(10, 10, 0.1, 5, {0.0, 0.5}, 9);
  const SolveResult r = solve_ame(inst, quick(3));
  ASSERT_EQ(r.outcome, SolveOutcome::Solved);
  double top = 0.0;
  for (const Path& p : r.plan.paths) {
    ASSERT_TRUE(p.has_labels());
    top = std::max(top, p.labels.back());
    // each label at least the agent's own action costs so far
    EXPECT_LE(relabel_path(p, 0.0, detail::PredecessorLabels({})).back(), p.labels.back() + 1e-9);
  }
  EXPECT_DOUBLE_EQ(top, r.report.key);
}

TEST(Ame, SameSeedSamePlan)
{
  const Instance inst = generate_random_instance(12, 12, 0.1, 6, {0.0, 0.5}, 3);
  const SolveResult a = solve_ame(inst, quick(3));
  const SolveResult b = solve_ame(inst, quick(3));
  ASSERT_EQ(a.outcome, SolveOutcome::Solved);
  EXPECT_EQ(a.plan, b.plan);
  EXPECT_EQ(a.report.high_level_expanded, b.report.high_level_expanded);
}

TEST(Ame, TinyExpansionBudgetStops)
{
  const Instance inst = generate_random_instance(12, 12, 0.1, 8, {0.0, 0.5}, 5);
  SearchLimits l = quick(3);
  l.max_high_level_expansions = 1;
  const SolveResult r = solve_ame(inst, l);
  if (r.outcome != SolveOutcome::Solved) {
    EXPECT_EQ(r.report.detail, "high-level expansion limit");
  }
}
