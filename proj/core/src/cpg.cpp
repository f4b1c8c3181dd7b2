#include "snakecpg/cpg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "snakecpg/error.hpp"

namespace snakecpg::cpg {
namespace {

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << name << " must be positive and finite, got " << value;
    throw ParameterDomainError(msg.str());
  }
}

void require_non_negative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << name << " must be non-negative and finite, got " << value;
    throw ParameterDomainError(msg.str());
  }
}

CpgState axpy(const CpgState& s, double h, const CpgState& d, std::size_t n) {
  CpgState out = s;
  for (std::size_t k = 0; k < n; ++k) {
    out.x[k] += h * d.x[k];
    out.y[k] += h * d.y[k];
  }
  return out;
}

}  // namespace

void MatsuokaParams::validate() const {
  require_positive(tau_r, "tau_r");
  require_positive(tau_a, "tau_a");
  require_positive(b, "b");
  require_positive(A, "A");
  require_non_negative(a, "a");
  require_non_negative(w_down, "w_down");
  require_non_negative(w_up, "w_up");
  if (n_osc < 1 || n_osc > kMaxOscillators) {
    throw ParameterDomainError("n_osc must be in [1, " + std::to_string(kMaxOscillators) +
                               "], got " + std::to_string(n_osc));
  }
}

MatsuokaParams MatsuokaParams::primitive() const {
  MatsuokaParams p = *this;
  p.n_osc = 1;
  return p;
}

CpgState CpgState::seeded() {
  CpgState s;
  s.x[neuron_index(0, kExtensor)] = 0.01;
  return s;
}

CpgState CpgState::mirrored() const {
  CpgState m;
  for (std::size_t i = 0; i < kMaxOscillators; ++i) {
    m.x[2 * i] = x[2 * i + 1];
    m.x[2 * i + 1] = x[2 * i];
    m.y[2 * i] = y[2 * i + 1];
    m.y[2 * i + 1] = y[2 * i];
  }
  return m;
}

TonicVector TonicVector::uniform(double value) {
  TonicVector t;
  t.u.fill(value);
  return t;
}

TonicVector TonicVector::mirrored() const {
  TonicVector m;
  for (std::size_t i = 0; i < kMaxOscillators; ++i) {
    m.u[2 * i] = u[2 * i + 1];
    m.u[2 * i + 1] = u[2 * i];
  }
  return m;
}

CpgState derivatives(const MatsuokaParams& params, const CpgState& state,
                     const TonicVector& u, double k_f) {
  require_positive(k_f, "k_f");
  require_positive(params.tau_r, "tau_r");
  require_positive(params.tau_a, "tau_a");

  const std::size_t n = params.n_osc;
  const double rate_x = 1.0 / (k_f * params.tau_r);
  const double rate_y = 1.0 / (k_f * params.tau_a);

  CpgState d;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < 2; ++q) {
      const std::size_t k = neuron_index(i, q);
      const std::size_t opposite = neuron_index(i, 1 - q);
      // Same-side self-inhibition states of the chain neighbours.
      double coupling = 0.0;
      if (i > 0) coupling += params.w_down * state.y[neuron_index(i - 1, q)];
      if (i + 1 < n) coupling += params.w_up * state.y[neuron_index(i + 1, q)];

      const double drive = -state.x[k] - params.a * relu(state.x[opposite]) -
                           params.b * state.y[k] - coupling + u.u[k];
      d.x[k] = rate_x * drive;
      d.y[k] = rate_y * (relu(state.x[k]) - state.y[k]);
    }
  }
  return d;
}

CpgState step(const MatsuokaParams& params, const CpgState& state,
              const TonicVector& u, double k_f, double dt) {
  require_positive(dt, "dt");
  const std::size_t n = 2 * params.n_osc;

  const CpgState k1 = derivatives(params, state, u, k_f);
  const CpgState k2 = derivatives(params, axpy(state, 0.5 * dt, k1, n), u, k_f);
  const CpgState k3 = derivatives(params, axpy(state, 0.5 * dt, k2, n), u, k_f);
  const CpgState k4 = derivatives(params, axpy(state, dt, k3, n), u, k_f);

  CpgState next = state;
  const double h6 = dt / 6.0;
  for (std::size_t k = 0; k < n; ++k) {
    next.x[k] += h6 * (k1.x[k] + 2.0 * k2.x[k] + 2.0 * k3.x[k] + k4.x[k]);
    next.y[k] += h6 * (k1.y[k] + 2.0 * k2.y[k] + 2.0 * k3.y[k] + k4.y[k]);
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(next.x[k])) {
      throw NumericalBlowupError("CPG state diverged at neuron " + neuron_label('x', k));
    }
    if (!std::isfinite(next.y[k])) {
      throw NumericalBlowupError("CPG state diverged at neuron " + neuron_label('y', k));
    }
  }
  return next;
}

CpgOutput raw_output(const MatsuokaParams& params, const CpgState& state) {
  CpgOutput psi{};
  for (std::size_t i = 0; i < params.n_osc; ++i) {
    psi[i] = params.A * (relu(state.x[neuron_index(i, kExtensor)]) -
                         relu(state.x[neuron_index(i, kFlexor)]));
  }
  return psi;
}

CpgOutput output(const MatsuokaParams& params, const CpgState& state) {
  CpgOutput psi = raw_output(params, state);
  for (double& v : psi) v = std::clamp(v, -1.0, 1.0);
  return psi;
}

bool check_stability_condition(const MatsuokaParams& params) {
  require_positive(params.tau_r, "tau_r");
  require_positive(params.tau_a, "tau_a");
  require_positive(params.b, "b");
  const double diff = params.tau_a - params.tau_r;
  return diff * diff < 4.0 * params.tau_r * params.tau_a * params.b;
}

std::string neuron_label(char var, std::size_t neuron) {
  std::string label;
  label += var;
  label += '_';
  label += std::to_string(neuron / 2 + 1);
  label += (neuron % 2 == kExtensor) ? "_e" : "_f";
  return label;
}

Network::Network(MatsuokaParams params, CpgState initial)
    : params_(params), state_(initial) {
  params_.validate();
}

void Network::advance(const TonicVector& u, double k_f, double dt) {
  state_ = cpg::step(params_, state_, u, k_f, dt);
}

}  // namespace snakecpg::cpg
