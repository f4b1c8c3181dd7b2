#include "snakecpg/locomotion.hpp"

#include <algorithm>
#include <cmath>

#include "snakecpg/error.hpp"

namespace snakecpg::locomotion {

Schedule constant(const cpg::TonicVector& u) {
  return [u](double) { return u; };
}

Schedule duty_cycle(const cpg::TonicVector& on, const cpg::TonicVector& off, double period,
                    double duty) {
  if (!(period > 0.0) || duty < 0.0 || duty > 1.0) {
    throw ParameterDomainError("duty cycle needs period > 0 and duty in [0, 1]");
  }
  return [=](double t) {
    const double phase = std::fmod(t, period) / period;
    return phase < duty ? on : off;
  };
}

namespace {

Sample sample_of(const snake::SnakeState& s, const snake::SnakeParams& body,
                 const cpg::CpgOutput& psi) {
  Sample out;
  out.t = s.t;
  out.head = snake::head_position(s, body);
  out.com = s.com;
  out.com_velocity = snake::com_velocity(s, body);
  out.heading = snake::heading(s, body);
  out.kappa = snake::curvature(s, body);
  out.psi = psi;
  return out;
}

}  // namespace

OpenLoopRun run_open_loop(const cpg::MatsuokaParams& cpg_params,
                          const snake::SnakeParams& body, const Schedule& schedule,
                          const OpenLoopOptions& options) {
  body.validate();
  cpg::Network net(cpg_params, options.initial_cpg);
  const auto warmup_steps = static_cast<long>(std::llround(options.warmup / options.dt));
  const cpg::TonicVector warm_u = schedule(0.0);
  for (long k = 0; k < warmup_steps; ++k) net.advance(warm_u, options.k_f, options.dt);

  OpenLoopRun run;
  snake::SnakeState state = snake::SnakeState::at_rest(body);
  const auto steps = static_cast<long>(std::llround(options.duration / options.dt));
  const int every = std::max(1, options.substeps_per_sample);
  run.samples.reserve(static_cast<std::size_t>(steps / every + 2));
  run.samples.push_back(sample_of(state, body, net.output()));

  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * options.dt;
    const cpg::CpgOutput psi = net.output();
    state = snake::substep(state, psi, body, options.dt);
    net.advance(schedule(t), options.k_f, options.dt);
    // keep time on the integer grid
    state.t = static_cast<double>(k + 1) * options.dt;
    if ((k + 1) % every == 0) run.samples.push_back(sample_of(state, body, net.output()));
  }
  run.final_state = state;
  run.final_cpg = net.state();
  return run;
}

double calibrate_curvature_gain(const cpg::MatsuokaParams& cpg_params,
                                const snake::SnakeParams& body, double target_amplitude,
                                double settle, double window) {
  // Bending is linear in the gain, so measure at unit gain and rescale.
  snake::SnakeParams unit = body;
  unit.curvature_gain = 1.0;
  cpg::Network net(cpg_params);
  snake::SnakeState state = snake::SnakeState::at_rest(unit);
  const auto u = cpg::TonicVector::uniform(1.0);
  const double dt = cpg::kSubstepDt;
  const auto steps = static_cast<long>(std::llround((settle + window) / dt));
  const auto first = static_cast<long>(std::llround(settle / dt));
  std::array<double, snake::kLinks> lo, hi;
  lo.fill(INFINITY);
  hi.fill(-INFINITY);
  for (long k = 0; k < steps; ++k) {
    state = snake::actuate(state, net.output(), unit, dt);
    net.advance(u, 1.0, dt);
    if (k >= first) {
      for (std::size_t i = 0; i < snake::kLinks; ++i) {
        lo[i] = std::min(lo[i], state.delta[i]);
        hi[i] = std::max(hi[i], state.delta[i]);
      }
    }
  }
  double mean_amplitude = 0.0;
  for (std::size_t i = 0; i < snake::kLinks; ++i) mean_amplitude += 0.5 * (hi[i] - lo[i]);
  mean_amplitude /= static_cast<double>(snake::kLinks);
  if (!(mean_amplitude > 0.0)) {
    throw NoOscillationError("CPG produced no bending during gain calibration");
  }
  return target_amplitude / mean_amplitude;
}

}  // namespace snakecpg::locomotion
