#pragma once

// Experiment pipelines behind the snakelab subcommands. The compute
// functions return plain data; the cmd_* functions also write artifacts
// (always including the resolved config.ini) into config.out.

#include <string>
#include <vector>

#include "snakecpg/config.hpp"

namespace snakecpg::lab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares. Throws ParameterDomainError below two points or
/// for constant x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct BiasRow {
  double u_e = 0.0;
  double u_f = 0.0;
  double bias = 0.0;
  double amplitude = 0.0;
  bool oscillating = false;
};

struct BiasSweep {
  std::vector<BiasRow> rows;
  LinearFit fit;  // over oscillating rows only
};

/// Single primitive oscillator, u_e on [0, u_max] in `step` increments and
/// u_f = 1 - u_e.
BiasSweep characterize_bias(const cpg::MatsuokaParams& params,
                            const config::BiasSweepConfig& sweep);

struct VelocityRow {
  double u = 0.0;
  double k_f = 0.0;
  double mean_speed = 0.0;
  bool diverged = false;
};

struct VelocityMap {
  std::vector<VelocityRow> rows;
  double spearman_k_f_speed = 0.0;  // over non-diverged rows
  std::size_t diverged = 0;
};

/// One shared tonic level for all eight neurons per sample; mean speed is
/// the COM displacement over the rollout divided by its duration.
VelocityMap velocity_map(const cpg::MatsuokaParams& params, const snake::SnakeParams& body,
                         const config::VelocityMapConfig& map, Rng& rng, std::size_t workers);

/// Each returns a one-line human summary.
std::string cmd_characterize_bias(const config::ExperimentConfig& config);
std::string cmd_velocity_map(const config::ExperimentConfig& config);
std::string cmd_gp_search(const config::ExperimentConfig& config);
/// Resumes from `checkpoint` when non-empty, appending to the episode log.
std::string cmd_train(const config::ExperimentConfig& config, const std::string& checkpoint);
std::string cmd_eval(const config::ExperimentConfig& config, const std::string& checkpoint);
std::string cmd_rollout(const config::ExperimentConfig& config, const std::string& checkpoint);

}  // namespace snakecpg::lab
