// gapbridge generate|train|evaluate|pod|horizon|fft --config <path> [--out <dir>] [--checkpoint <path>] [--seed <u64>]
#include <CLI11.hpp>

#include <iostream>

#include "gapbridge/cli/pipeline.hpp"

using namespace gapbridge;

int main(int argc, char** argv) {
  CLI::App app{"gapbridge: learn a correction from an inaccurate model to the true system"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out, checkpoint;
  std::optional<std::uint64_t> seed;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"generate", "solve U_act, U_curr and auxiliary trajectories"},
      {"train", "build windows and splits, train, write checkpoint"},
      {"evaluate", "per-split metrics, CS-POD, optional horizon/FFT"},
      {"pod", "POD spectra and CS-POD"},
      {"horizon", "per-interval metrics over the future frames"},
      {"fft", "dominant-frequency comparison"},
  };
  for (auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment INI file")->required();
    sub->add_option("--out", out, "output directory (overrides [experiment] output)");
    sub->add_option("--checkpoint", checkpoint, "checkpoint manifest");
    sub->add_option("--seed", seed, "base seed (split = s, init = s+1, shuffle = s+2)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const auto command = app.get_subcommands().front()->get_name();

  cli::RunOptions opt;
  if (out) opt.out = *out;
  if (checkpoint) opt.checkpoint = *checkpoint;
  opt.seed = seed;

  cli::ExperimentConfig cfg;
  try {
    cfg = cli::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "gapbridge " << command << ": " << e.what() << '\n';
    if (out) {
      cli::RunRecord r;
      r.command = command;
      r.status = "failed";
      r.error = e.what();
      r.exit_code = cli::exit_code(e);
      r.stages.push_back({"config", "failed", 0.0, e.what()});
      r.started = r.finished = cli::utc_now();
      r.write(*out);
    }
    return cli::exit_code(e);
  }

  cli::RunRecord rec;
  if (command == "generate") rec = cli::cmd_generate(cfg, opt);
  else if (command == "train") rec = cli::cmd_train(cfg, opt);
  else if (command == "evaluate") rec = cli::cmd_evaluate(cfg, opt);
  else if (command == "pod") rec = cli::cmd_pod(cfg, opt);
  else if (command == "horizon") rec = cli::cmd_horizon(cfg, opt);
  else rec = cli::cmd_fft(cfg, opt);

  if (!rec.ok()) {
    std::cerr << "gapbridge " << command << ": " << rec.error << '\n';
    return rec.exit_code;
  }
  return 0;
}
