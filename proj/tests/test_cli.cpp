#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gapbridge/cli/config.hpp"
#include "gapbridge/cli/pipeline.hpp"
#include "gapbridge/nn/checkpoint.hpp"

using namespace gapbridge;
namespace fs = std::filesystem;

namespace {

fs::path fresh(const std::string& name) {
  auto p = fs::temp_directory_path() / ("gapbridge_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kSmallHeat = R"(
[experiment]
system = heat1d
output = run
seed = 3

[heat]
points = 20
spacing_mm = 0.01
dt = 1.2e-5
frames = 40
scheme = implicit

[dataset]
training_frames = 20

[network]
stage1 = 4
stage2 = 4
stage3 = 1

[train]
epochs = 2
batch_size = 16

[evaluate]
horizon = true
horizon_interval = 8
fft = true
)";

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  std::ofstream(dir / name) << text;
  return dir / name;
}

int run(const std::string& args) {
  const std::string cmd = std::string(GAPBRIDGE_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

nlohmann::json record(const fs::path& dir, const std::string& command) {
  std::ifstream is(dir / ("run_" + command + ".json"));
  return nlohmann::json::parse(is);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, DefaultsAndSeeds) {
  const auto c = cli::parse_config("[experiment]\nseed = 10\n");
  EXPECT_EQ(c.system, cli::SystemId::heat1d);
  EXPECT_EQ(c.split_seed, 10u);
  EXPECT_EQ(c.init_seed, 11u);
  EXPECT_EQ(c.shuffle_seed, 12u);
  EXPECT_EQ(c.training_frames, 150u);
  EXPECT_EQ(c.epochs, 50u);
  EXPECT_EQ(c.batch_size, 64u);
  EXPECT_EQ(c.network.stage2, (std::vector<std::size_t>{64, 32, 32}));
  const auto cav = cli::parse_config("[experiment]\nsystem = lidcavity2d\nseed = 1\n");
  EXPECT_EQ(cav.training_frames, 1000u);
  EXPECT_EQ(cav.network.stage1.size(), 2u);
}

TEST(Config, Rejections) {
  EXPECT_THROW(cli::parse_config("[experiment]\nsystem = heat1d\n"), ConfigError);
  EXPECT_THROW(cli::parse_config("[experiment]\nseed = 1\ncolour = red\n"), ConfigError);
  EXPECT_THROW(cli::parse_config("[experiment]\nseed = 1\n[heat]\npoints = many\n"), ConfigError);
  EXPECT_THROW(cli::parse_config("[experiment]\nseed = 1\nsystem = pendulum\n"), ConfigError);
  EXPECT_THROW(cli::parse_config("[experiment]\nseed = 1\nsystem = external\n"), ConfigError);
  EXPECT_THROW(cli::parse_config("[experiment]\nseed = 1\n[network]\nstage3 = 4,1\nstage3_activations = relu,sigmoid\n"),
               ConfigError);
}

TEST(Config, NetworkOverride) {
  const auto c = cli::parse_config("[experiment]\nseed = 1\n[network]\nstage1 = 5,6\nstage2 = 7\nstage3 = 3,1\n");
  ASSERT_EQ(c.network.stage1.size(), 2u);
  EXPECT_EQ(c.network.stage1[1].width, 6u);
  EXPECT_EQ(c.network.stage1[1].activation, nn::Activation::relu);
  EXPECT_EQ(c.network.stage3.back().activation, nn::Activation::linear);
}

TEST(Cli, HeatPipelineEndToEnd) {
  const auto dir = fresh("heat");
  const auto cfg = write(dir, "exp.ini", kSmallHeat);
  for (auto cmd : {"generate", "train", "evaluate", "pod", "horizon", "fft"}) {
    ASSERT_EQ(run(std::string(cmd) + " --config " + cfg.string()), 0) << cmd;
    const auto r = record(dir / "run", cmd);
    EXPECT_EQ(r["status"], "ok") << cmd;
    for (auto& [k, v] : r["artifacts"].items()) EXPECT_TRUE(fs::exists(v.get<std::string>())) << cmd << " " << k;
  }
  for (auto f : {"act.traj", "curr.traj", "checkpoint.ckpt", "history.csv", "metrics.csv", "pod.csv", "horizon.csv",
                 "fft.csv", "split/split_map.csv", "norm_stats.csv"})
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  std::ifstream h(dir / "run/history.csv");
  std::string line;
  int rows = -1;
  while (std::getline(h, line)) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST(Cli, GenerateIsDeterministic) {
  const auto dir = fresh("det");
  const auto cfg = write(dir, "exp.ini", kSmallHeat);
  ASSERT_EQ(run("generate --config " + cfg.string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run("generate --config " + cfg.string() + " --out " + (dir / "b").string()), 0);
  EXPECT_EQ(slurp(dir / "a/act.traj.bin"), slurp(dir / "b/act.traj.bin"));
  EXPECT_EQ(slurp(dir / "a/curr.traj.bin"), slurp(dir / "b/curr.traj.bin"));
}

TEST(Cli, IdenticalConfigGivesIdenticalMetrics) {
  const auto dir = fresh("metrics_det");
  const auto cfg = write(dir, "exp.ini", kSmallHeat);
  for (auto out : {"a", "b"}) {
    const auto o = " --out " + (dir / out).string();
    ASSERT_EQ(run("generate --config " + cfg.string() + o), 0);
    ASSERT_EQ(run("train --config " + cfg.string() + o), 0);
    ASSERT_EQ(run("evaluate --config " + cfg.string() + o), 0);
  }
  EXPECT_EQ(slurp(dir / "a/metrics.csv"), slurp(dir / "b/metrics.csv"));
  EXPECT_EQ(slurp(dir / "a/checkpoint.ckpt.bin"), slurp(dir / "b/checkpoint.ckpt.bin"));
}

TEST(Cli, EvaluateLeavesInputsUntouched) {
  const auto dir = fresh("readonly");
  const auto cfg = write(dir, "exp.ini", kSmallHeat);
  ASSERT_EQ(run("generate --config " + cfg.string()), 0);
  ASSERT_EQ(run("train --config " + cfg.string()), 0);
  const auto before = slurp(dir / "run/checkpoint.ckpt.bin") + slurp(dir / "run/act.traj.bin") + slurp(dir / "run/checkpoint.ckpt");
  const auto t0 = fs::last_write_time(dir / "run/checkpoint.ckpt.bin");
  ASSERT_EQ(run("evaluate --config " + cfg.string()), 0);
  EXPECT_EQ(before, slurp(dir / "run/checkpoint.ckpt.bin") + slurp(dir / "run/act.traj.bin") + slurp(dir / "run/checkpoint.ckpt"));
  EXPECT_EQ(t0, fs::last_write_time(dir / "run/checkpoint.ckpt.bin"));
}

TEST(Cli, SelfTestGivesIdentityMetrics) {
  const auto dir = fresh("selftest");
  const auto cfg = write(dir, "exp.ini", std::string(kSmallHeat) + "self_test = true\n");
  ASSERT_EQ(run("generate --config " + cfg.string()), 0);
  cli::RunOptions o;
  o.log = nullptr;
  metrics::MetricReport rep;
  const auto rec = cli::cmd_evaluate(cli::load_config(cfg), o, &rep);
  ASSERT_TRUE(rec.ok()) << rec.error;
  for (auto& r : rep.rows) EXPECT_EQ(r.mse_nn, 0.0) << r.label;
  for (double c : rep.cs_pod_nn) EXPECT_NEAR(c, 1.0, 1e-12);
  EXPECT_EQ(rep.freq_diff_nn.value(), 0.0);
}

TEST(Cli, ZeroEpochsCheckpointEqualsInitialisation) {
  const auto dir = fresh("zero");
  std::string text = kSmallHeat;
  text.replace(text.find("epochs = 2"), 10, "epochs = 0");
  const auto cfg = write(dir, "exp.ini", text);
  ASSERT_EQ(run("generate --config " + cfg.string()), 0);
  ASSERT_EQ(run("train --config " + cfg.string()), 0);
  const auto ck = nn::load_checkpoint(dir / "run/checkpoint.ckpt");
  const auto init = nn::init_network(ck.network.spec(), 4);  // seed 3 + 1
  EXPECT_TRUE(std::equal(init.parameters().begin(), init.parameters().end(), ck.network.parameters().begin()));
  EXPECT_EQ(ck.info.epochs, 0u);
}

TEST(Cli, SeedFlagOverridesConfig) {
  const auto dir = fresh("seedflag");
  const auto cfg = write(dir, "exp.ini", kSmallHeat);
  ASSERT_EQ(run("generate --config " + cfg.string()), 0);
  ASSERT_EQ(run("train --config " + cfg.string() + " --seed 40"), 0);
  EXPECT_EQ(record(dir / "run", "train")["seed"], 40);
  EXPECT_EQ(nn::load_checkpoint(dir / "run/checkpoint.ckpt").info.init_seed, 41u);
}

TEST(Cli, ExitCodes) {
  const auto dir = fresh("codes");
  const auto bad = write(dir, "bad.ini", "[experiment]\nseed = 1\nbogus = 2\n");
  EXPECT_EQ(run("generate --config " + bad.string() + " --out " + (dir / "o").string()), 2);
  EXPECT_EQ(record(dir / "o", "generate")["status"], "failed");
  EXPECT_EQ(run("generate --config " + (dir / "missing.ini").string()), 2);
  EXPECT_EQ(run("bogus"), 2);

  const auto cfg = write(dir, "exp.ini", kSmallHeat);
  EXPECT_EQ(run("train --config " + cfg.string()), 4);
  const auto r = record(dir / "run", "train");
  EXPECT_EQ(r["status"], "failed");
  EXPECT_EQ(r["stages"].back()["name"], "load");

  std::string unstable = kSmallHeat;
  unstable.replace(unstable.find("scheme = implicit"), 17, "scheme = explicit");
  const auto ucfg = write(dir, "unstable.ini", unstable);
  EXPECT_EQ(run("generate --config " + ucfg.string()), 3);
  EXPECT_EQ(record(dir / "run", "generate")["stages"].back()["name"], "solve_act");

  ASSERT_EQ(run("generate --config " + cfg.string()), 0);
  EXPECT_EQ(run("evaluate --config " + cfg.string()), 4);
  EXPECT_EQ(run("evaluate --config " + cfg.string() + " --checkpoint " + (dir / "nope.ckpt").string()), 4);
}

TEST(Cli, ExternalIngestion) {
  const auto dir = fresh("external");
  const auto g = Grid::plane(8, 7, 0.1, 0.1);
  Trajectory act(g, 0.5, 2, {"u", "v"}, "ext"), curr(g, 0.5, 2, {"u", "v"}, "ext");
  std::vector<std::vector<double>> pos;
  for (int f = 0; f < 30; ++f) {
    std::vector<double> a(g.point_count() * 2), c(a.size());
    for (std::size_t p = 0; p < g.point_count(); ++p) {
      a[2 * p] = std::sin(0.4 * f - 0.3 * double(p % 8));
      a[2 * p + 1] = std::cos(0.4 * f);
      c[2 * p] = std::sin(0.35 * f - 0.3 * double(p % 8));
      c[2 * p + 1] = std::cos(0.35 * f);
    }
    act.push_frame(a);
    curr.push_frame(c);
    pos.push_back({std::sin(0.4 * f)});
  }
  save_trajectory(act, dir / "act.traj");
  save_trajectory(curr, dir / "curr.traj");
  save_trajectory(dataset::uniform_channel(g, 0.5, pos, {"pos"}), dir / "aux.traj");
  std::string mask;
  for (std::size_t p = 0; p < g.point_count(); ++p) mask += (p == g.index(3, 3) ? "0\n" : "1\n");
  write(dir, "mask.txt", mask);
  const auto cfg = write(dir, "exp.ini", R"(
[experiment]
system = external
output = run
seed = 5
[external]
act = act.traj
curr = curr.traj
aux = aux.traj
mask = mask.txt
[dataset]
training_frames = 20
[network]
stage1 = 4,4
stage2 = 3
stage3 = 2
[train]
epochs = 1
[evaluate]
fft = true
)");
  EXPECT_EQ(run("generate --config " + cfg.string()), 2);
  ASSERT_EQ(run("train --config " + cfg.string()), 0);
  ASSERT_EQ(run("evaluate --config " + cfg.string()), 0);
  // 6 x 5 interior points minus the masked one.
  std::ifstream split(dir / "run/split/split_map.csv");
  std::string line;
  int n = -1;
  while (std::getline(split, line)) ++n;
  EXPECT_EQ(n, 29);
  const auto ck = nn::load_checkpoint(dir / "run/checkpoint.ckpt");
  EXPECT_EQ(ck.network.spec().input_features, (2u + 1u) * 9 + 2 + 1);
  EXPECT_EQ(ck.network.spec().output_width(), 2u);
}

TEST(Cli, CavityGenerateWritesForcingChannel) {
  const auto dir = fresh("cavity");
  const auto cfg = write(dir, "exp.ini", R"(
[experiment]
system = lidcavity2d
output = run
seed = 1
[cavity]
frames = 6
)");
  ASSERT_EQ(run("generate --config " + cfg.string()), 0);
  const auto aux = load_trajectory(dir / "run/aux.traj");
  EXPECT_EQ(aux.component_names(), (std::vector<std::string>{"F_x", "F_y"}));
  EXPECT_EQ(aux.frame_count(), 6u);
  const auto act = load_trajectory(dir / "run/act.traj");
  const auto curr = load_trajectory(dir / "run/curr.traj");
  EXPECT_EQ(act.grid().point_count(), 900u);
  bool differs = false;
  for (std::size_t i = 0; i < act.values().size(); ++i) differs |= act.values()[i] != curr.values()[i];
  EXPECT_TRUE(differs);
}
