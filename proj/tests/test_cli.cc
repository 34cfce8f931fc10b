#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "moba/common/error.h"
#include "plot.h"
#include "run_config.h"

namespace fs = std::filesystem;
using namespace moba;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mobarl_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  std::string cmd = std::string(MOBARL_BINARY) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(RunConfig, DefaultsValidate) {
  cli::RunConfig c = cli::RunConfig::from_kv(KvConfig::parse(""));
  EXPECT_EQ(c.runtime.actors, 4);
  EXPECT_EQ(c.runtime.shards, 1);
  EXPECT_EQ(c.ablation.arms.front().name, "Base");
  EXPECT_EQ(c.net.move_bins, c.env.move_bins);
}

TEST(RunConfig, FieldLevelErrors) {
  auto field_of = [](const std::string& text) {
    try {
      cli::RunConfig::from_kv(KvConfig::parse(text));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  EXPECT_EQ(field_of("[env]\nmap = /no/such/map.txt\n"), "env.map");
  EXPECT_EQ(field_of("[runtime]\nactors = 0\n"), "runtime.actors");
  EXPECT_EQ(field_of("[runtime]\nendpoint = udp:1\n"), "runtime.endpoint");
  EXPECT_EQ(field_of("[ppo]\nclip_eps = -1\n"), "ppo.clip_eps");
  EXPECT_EQ(field_of("[ablation]\narms = Base,Full+XYZ\n"), "ablation.arms");
  EXPECT_EQ(field_of("[runtime]\npool_capacity = 8\nwarmup_segments = 16\n"), "runtime.pool_capacity");
}

TEST(Ablation, ArmParsing) {
  auto full = eval::AblationArm::parse("Full");
  EXPECT_TRUE(full.mask && full.attention && full.lstm);
  auto am = eval::AblationArm::parse("Base+AM");
  EXPECT_TRUE(am.mask);
  EXPECT_FALSE(am.attention || am.lstm);
  auto pr = eval::AblationArm::parse("Full+PR1000+RIF");
  EXPECT_EQ(pr.rollout_ticks, 1000);
  EXPECT_EQ(pr.start_mode, env::StartMode::kRandomInitialFrame);
  EXPECT_THROW(eval::AblationArm::parse("Full+PR"), ConfigError);
  EXPECT_THROW(eval::AblationArm::parse("AM"), ConfigError);
}

TEST(Plot, RunningMean) {
  auto m = cli::running_mean({1, 2, 3, 4, 5}, 2);
  EXPECT_EQ(m, (std::vector<double>{1, 1.5, 2.5, 3.5, 4.5}));
}

TEST(Plot, MonotoneMetricsGiveMonotoneSeries) {
  fs::path dir = scratch("plot");
  std::string metrics = "wall_s,update,clip_button,clip_move_x\n";
  std::string probes = "wall_s,update,version,games,win_rate_vs_scripted,elo_vs_scripted\n";
  for (int i = 1; i <= 10; ++i) {
    metrics += std::to_string(360 * i) + "," + std::to_string(i) + "," + std::to_string(0.01 * i) + ",0.5\n";
    probes += std::to_string(720 * i) + "," + std::to_string(i) + ",0,20,0.5," + std::to_string(1000 + 25 * i) + "\n";
  }
  write(dir / "metrics.csv", metrics);
  write(dir / "probes.csv", probes);
  write(dir / "episodes_0.csv", "wall_s,reward_0,reward_1\n3600,1,-1\n7200,3,-3\n");
  auto names = cli::plot_run(dir, dir / "plots");
  EXPECT_EQ(names, (std::vector<std::string>{"clip_fraction", "elo", "reward"}));

  cli::Table elo = cli::Table::read(dir / "plots" / "elo.tsv");
  ASSERT_EQ(elo.rows.size(), 10u);
  for (size_t i = 0; i < elo.rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(elo.rows[i][1], 0.2 * static_cast<double>(i + 1));  // hours
    EXPECT_DOUBLE_EQ(elo.rows[i][2], 1000 + 25.0 * static_cast<double>(i + 1));
  }
  EXPECT_NE(elo.column("training time (hours)"), -1);

  std::ifstream svg(dir / "plots" / "elo.svg");
  std::string text((std::istreambuf_iterator<char>(svg)), {});
  EXPECT_NE(text.find("<polyline"), std::string::npos);
  EXPECT_NE(text.find("hours"), std::string::npos);

  cli::Table reward = cli::Table::read(dir / "plots" / "reward.tsv");
  EXPECT_EQ(reward.rows.size(), 4u);
  fs::remove_all(dir);
}

TEST(Plot, EmptyMetricsRejected) {
  fs::path dir = scratch("empty");
  write(dir / "metrics.csv", "wall_s,update\n");
  EXPECT_THROW(cli::plot_run(dir, dir / "plots"), ConfigError);
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  fs::path dir = scratch("exit");
  write(dir / "empty_metrics.csv", "");
  fs::create_directories(dir / "run");
  write(dir / "run" / "metrics.csv", "wall_s,update\n");
  EXPECT_EQ(run("plot --run " + (dir / "run").string()), 2);
  write(dir / "bad.cfg", "[env]\nmap = /no/such/map.txt\n");
  EXPECT_EQ(run("train --config " + (dir / "bad.cfg").string() + " --out " + (dir / "r").string()), 2);
  EXPECT_EQ(run("train --config /no/such.cfg --out " + (dir / "r").string()), 2);
  EXPECT_EQ(run("bogus"), 2);
  EXPECT_EQ(run("--help"), 0);
  fs::remove_all(dir);
}

TEST(Cli, EvalReportTotalsMatchRequest) {
  fs::path dir = scratch("eval");
  write(dir / "c.cfg", "[net]\npreset = small\n[env]\ntick_cap = 300\n");
  // A snapshot from a fresh network via the learner-independent path.
  cli::RunConfig cfg = cli::RunConfig::load(dir / "c.cfg");
  net::Network network(cfg.net);
  net::save_params_file((dir / "a.bin").string(), network.init(3), network.layout());
  std::string snap = (dir / "a.bin").string();
  ASSERT_EQ(run("eval --config " + (dir / "c.cfg").string() + " -s " + snap + " -s " + snap +
                " --baseline none -n 6 -o " + (dir / "out").string()),
            0);
  std::ifstream in(dir / "out" / "summary.json");
  auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["games"], 6);
  EXPECT_EQ(j["wins"].get<int>() + j["losses"].get<int>() + j["draws"].get<int>(), 6);
  fs::remove_all(dir);
}
