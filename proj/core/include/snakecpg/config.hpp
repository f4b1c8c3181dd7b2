#pragma once

// Experiment configuration: one INI file with a section per module. Unknown
// sections or keys are rejected so typos cannot silently fall back to
// defaults.

#include <cstdint>
#include <string>
#include <vector>

#include "snakecpg/cpg.hpp"
#include "snakecpg/gp.hpp"
#include "snakecpg/ppoc.hpp"
#include "snakecpg/snake.hpp"
#include "snakecpg/task.hpp"
#include "snakecpg/trainer.hpp"

namespace snakecpg::config {

struct BiasSweepConfig {
  double step = 0.025;
  double u_max = 0.5;
  double settle = 20.0;  // s
  double window = 10.0;  // s
};

struct VelocityMapConfig {
  std::size_t samples = 2500;
  double u_lo = 0.4;
  double u_hi = 0.8;
  double k_f_lo = 0.45;
  double k_f_hi = 1.05;
  double warmup = 10.0;    // CPG-only pre-roll, s
  double duration = 10.0;  // body rollout, s
};

struct GpConfig {
  gp::EvolveConfig evolve;
  double box_lo = 0.25;  // search box as factors of the [cpg] values
  double box_hi = 4.0;
  gp::FitnessWeights fitness;
};

struct EvalSettings {
  std::size_t episodes = 100;
  int level = -1;  // -1: the checkpoint's curriculum level
  ppoc::ActMode mode = ppoc::ActMode::stochastic;
};

struct RolloutSettings {
  std::vector<snake::Vec2> goals{{0.6, 0.05}, {1.0, 0.4}, {1.2, 1.0}, {0.6, 1.5}};
  int level = -1;
  ppoc::ActMode mode = ppoc::ActMode::deterministic;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out = "runs/default";
  std::size_t workers = 4;
  std::size_t checkpoint_every = 10;  // updates between checkpoints

  task::EnvConfig env;  // env.cpg holds the oscillator constants
  task::Curriculum curriculum = task::Curriculum::default_table();
  ppoc::TrainerConfig trainer;
  BiasSweepConfig bias;
  VelocityMapConfig velocity;
  GpConfig gp;
  EvalSettings eval;
  RolloutSettings rollout;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
};

/// Throws ConfigError naming the file, section and key on any problem.
ExperimentConfig load(const std::string& path);
ExperimentConfig parse(const std::string& text, const std::string& source = "<string>");

/// Full resolved configuration; parse(to_ini(c)) reproduces c exactly.
std::string to_ini(const ExperimentConfig& config);

/// A [cpg] section alone, loadable as a config file.
std::string cpg_ini(const cpg::MatsuokaParams& params);

const char* to_string(ppoc::ActMode mode);

}  // namespace snakecpg::config
