// snakelab: experiment front-end. One subcommand per pipeline; every run
// writes its resolved config.ini next to the artifacts it produces.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "snakecpg/error.hpp"
#include "snakecpg/lab.hpp"

namespace {

using namespace snakecpg;

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kConfig = 2,
  kNumeric = 3,
  kPersistence = 4,
  kContract = 5,
};

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return kConfig;
    case ErrorCategory::domain:
    case ErrorCategory::numeric: return kNumeric;
    case ErrorCategory::persistence: return kPersistence;
    case ErrorCategory::contract: return kContract;
  }
  return kOther;
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::string checkpoint;
};

config::ExperimentConfig resolve(const Flags& f) {
  config::ExperimentConfig c = f.config.empty() ? config::ExperimentConfig{} : config::load(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.workers) {
    c.workers = *f.workers;
    c.trainer.workers = *f.workers;
    c.gp.evolve.workers = *f.workers;
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matsuoka CPG snake locomotion lab"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub, bool with_checkpoint) {
    sub->add_option("--config", flags.config, "INI experiment config (defaults if omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "root RNG seed");
    sub->add_option("--out", flags.out, "artifact directory");
    sub->add_option("--workers", flags.workers,
                    "worker threads; for train also the number of parallel rollouts")
        ->check(CLI::PositiveNumber);
    if (with_checkpoint) {
      sub->add_option("--checkpoint", flags.checkpoint, "checkpoint.json to load");
    }
  };

  auto* bias = app.add_subcommand("characterize-bias", "oscillation bias versus tonic asymmetry");
  auto* vmap = app.add_subcommand("velocity-map", "mean speed over sampled (u, K_f)");
  auto* gps = app.add_subcommand("gp-search", "evolve CPG parameters for straight locomotion");
  auto* train = app.add_subcommand("train", "PPOC training with curriculum (--checkpoint resumes)");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on sampled goals");
  auto* roll = app.add_subcommand("rollout", "replay a checkpoint on the configured goal sequence");
  add_common(bias, false);
  add_common(vmap, false);
  add_common(gps, false);
  add_common(train, true);
  add_common(eval, true);
  add_common(roll, true);
  eval->get_option("--checkpoint")->required();
  roll->get_option("--checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    const config::ExperimentConfig c = resolve(flags);
    std::string summary;
    if (*bias) summary = lab::cmd_characterize_bias(c);
    else if (*vmap) summary = lab::cmd_velocity_map(c);
    else if (*gps) summary = lab::cmd_gp_search(c);
    else if (*train) summary = lab::cmd_train(c, flags.checkpoint);
    else if (*eval) summary = lab::cmd_eval(c, flags.checkpoint);
    else if (*roll) summary = lab::cmd_rollout(c, flags.checkpoint);
    std::cout << summary << "\n" << "artifacts: " << c.out << "\n";
    return kOk;
  } catch (const Error& e) {
    std::cerr << "snakelab: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "snakelab: " << e.what() << "\n";
    return kOther;
  }
}
