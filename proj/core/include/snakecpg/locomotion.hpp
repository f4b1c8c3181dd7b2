#pragma once

// Open-loop CPG -> body rollouts shared by the GP fitness, the steering
// experiments and the velocity map.

#include <functional>
#include <vector>

#include "snakecpg/cpg.hpp"
#include "snakecpg/cpg_analysis.hpp"
#include "snakecpg/snake.hpp"

namespace snakecpg::locomotion {

/// Tonic input as a function of time.
using Schedule = std::function<cpg::TonicVector(double t)>;

Schedule constant(const cpg::TonicVector& u);

/// `on` for the first `duty` fraction of every `period`, `off` for the rest.
Schedule duty_cycle(const cpg::TonicVector& on, const cpg::TonicVector& off, double period,
                    double duty);

struct OpenLoopOptions {
  double duration = 10.0;
  double k_f = 1.0;
  /// CPG-only pre-roll with schedule(0) before the body starts moving.
  double warmup = 0.0;
  cpg::CpgState initial_cpg = cpg::CpgState::seeded();
  double dt = cpg::kSubstepDt;
  /// Samples are taken every `substeps_per_sample` integration steps.
  int substeps_per_sample = cpg::kSubsteps;
};

struct Sample {
  double t = 0.0;
  snake::Vec2 head;
  snake::Vec2 com;
  snake::Vec2 com_velocity;
  double heading = 0.0;
  std::array<double, snake::kLinks> kappa{};
  cpg::CpgOutput psi{};
};

struct OpenLoopRun {
  std::vector<Sample> samples;  // includes t = 0
  snake::SnakeState final_state;
  cpg::CpgState final_cpg;
};

/// Starts the body straight and motionless at the origin facing +x.
OpenLoopRun run_open_loop(const cpg::MatsuokaParams& cpg_params,
                          const snake::SnakeParams& body, const Schedule& schedule,
                          const OpenLoopOptions& options);

/// Gain for which u = all ones at K_f = 1 yields the requested mean steady
/// joint amplitude (half peak-to-peak of delta, averaged over links).
double calibrate_curvature_gain(const cpg::MatsuokaParams& cpg_params,
                                const snake::SnakeParams& body, double target_amplitude,
                                double settle = 25.0, double window = 15.0);

}  // namespace snakecpg::locomotion
