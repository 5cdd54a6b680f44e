#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "fixtures.hpp"

using namespace mapfdp;
namespace fs = std::filesystem;

namespace {

struct Cli : ::testing::Test
{
  fs::path dir;

  void SetUp() override
  {
    dir = fs::temp_directory_path() /
          ("mapfdp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }

  void TearDown() override { fs::remove_all(dir); }

  int run(const std::string& args, std::string* out = nullptr) const
  {
    const fs::path log = dir / "stdout.txt";
    const std::string cmd = std::string(MAPFDP_CLI) + " " + args + " > " + log.string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    if (out != nullptr) {
      *out = detail::read_file(log);
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string save_text(const std::string& map, const std::string& agents, const std::string& stem) const
  {
    detail::write_file(dir / (stem + ".map"), map);
    detail::write_file(dir / (stem + ".agents"), agents);
    return (dir / (stem + ".map")).string() + " " + (dir / (stem + ".agents")).string();
  }

  std::string save(const Instance& inst, const std::string& stem) const
  {
    save_instance(inst, dir / (stem + ".map"), dir / (stem + ".agents"));
    return (dir / (stem + ".map")).string() + " " + (dir / (stem + ".agents")).string();
  }
};

Instance grid_instance()
{
  return generate_random_instance(8, 8, 0.1, 4, {0.0, 0.5}, 42);
}

}  // namespace

TEST_F(Cli, SolveValidateSimulateRoundTrip)
{
  const std::string files = save(grid_instance(), "g");
  std::string out;
  ASSERT_EQ(run("--out " + dir.string() + " solve " + files, &out), 0);
  const auto report = nlohmann::json::parse(out);
  EXPECT_EQ(report["outcome"], "solved");
  const std::string plan = (dir / "plan.json").string();
  ASSERT_TRUE(fs::exists(plan));
  ASSERT_EQ(run("--emit-deps validate " + files + " " + plan, &out), 0);
  const auto v = nlohmann::json::parse(out);
  EXPECT_TRUE(v["valid"].get<bool>());
  EXPECT_TRUE(v.contains("dependencies"));
  ASSERT_EQ(run("--runs 50 --policy fsp simulate " + files + " " + plan + " --trace " + (dir / "t.csv").string(), &out),
            0);
  const auto s = nlohmann::json::parse(out);
  EXPECT_EQ(s["completed"], 50);
  EXPECT_EQ(s["vertex_collisions"], 0);
  EXPECT_TRUE(fs::exists(dir / "t.csv"));
}

TEST_F(Cli, SolveIsReproducible)
{
  const std::string files = save(grid_instance(), "g");
  ASSERT_EQ(run("--out " + dir.string() + " solve " + files + " --plan-name a.json"), 0);
  ASSERT_EQ(run("--out " + dir.string() + " solve " + files + " --plan-name b.json"), 0);
  EXPECT_EQ(detail::read_file(dir / "a.json"), detail::read_file(dir / "b.json"));
}

TEST_F(Cli, NoSolutionExitCode)
{
  const std::string files = save_text("...\n", "0,0,0,2,0,0.3\n1,2,0,0,0,0.3\n", "swap");
  EXPECT_EQ(run("--out " + dir.string() + " solve " + files), 2);
  EXPECT_EQ(run("--out " + dir.string() + " --solver adapted-cbs solve " + files), 2);
}

TEST_F(Cli, InvalidPlanExitCode)
{
  // the corridor fixture laid out on a grid: a stub above the second cell of a 4-cell row
  const std::string files = save_text("@.@@\n....\n", "0,1,1,2,1,0.5\n1,0,1,3,1,0.5\n", "c");
  const Instance inst = load_instance(dir / "c.map", dir / "c.agents");
  ASSERT_EQ(inst.graph.num_vertices(), 5);
  PlanFile pf;
  pf.plan = fixture::plan_of({fixture::named_path({3, 1, 1, 3, 4}), fixture::named_path({2, 3, 4, 5})});
  pf.instance_checksum = instance_checksum(inst);
  detail::write_file(dir / "bad.json", write_plan_json(pf));
  std::string out;
  EXPECT_EQ(run("validate " + files + " " + (dir / "bad.json").string(), &out), 4);
  EXPECT_FALSE(nlohmann::json::parse(out)["conflicts"].empty());
  EXPECT_EQ(run("simulate " + files + " " + (dir / "bad.json").string()), 4);
  EXPECT_EQ(run("--policy dummy --runs 20 simulate " + files + " " + (dir / "bad.json").string()), 0);
}

TEST_F(Cli, ChecksumMismatchExitCode)
{
  const std::string a = save(grid_instance(), "a");
  const std::string b = save(generate_random_instance(8, 8, 0.1, 4, {0.0, 0.5}, 43), "b");
  ASSERT_EQ(run("--out " + dir.string() + " solve " + a), 0);
  EXPECT_EQ(run("validate " + b + " " + (dir / "plan.json").string()), 4);
}

TEST_F(Cli, UsageErrors)
{
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("solve /nonexistent.map /nonexistent.agents"), 1);
  EXPECT_EQ(run("--policy lockstep bench --experiment 4"), 1);
  EXPECT_EQ(run("bench --experiment 7"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, GenerateAndBench)
{
  std::string out;
  ASSERT_EQ(run("--out " + dir.string() + " generate --width 6 --height 6 --agents 3 --count 2 --tmax 4", &out),
            0);
  EXPECT_TRUE(fs::exists(dir / "instance_0.map"));
  EXPECT_NE(out.find("instance_1 "), std::string::npos);
  ASSERT_EQ(run("--out " + (dir / "b1").string() +
                " --runs 20 --seed 5 bench --experiment 4 --instances 2 --agents 3 --size 8"),
            0);
  ASSERT_EQ(run("--out " + (dir / "b2").string() +
                " --runs 20 --seed 5 --threads 2 bench --experiment 4 --instances 2 --agents 3 --size 8"),
            0);
  EXPECT_EQ(detail::read_file(dir / "b1" / "results.csv"), detail::read_file(dir / "b2" / "results.csv"));
  EXPECT_TRUE(fs::exists(dir / "b1" / "timings.csv"));
  EXPECT_TRUE(fs::exists(dir / "b1" / "report.txt"));
}
