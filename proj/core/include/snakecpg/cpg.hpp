#pragma once

// Matsuoka CPG network: four primitive extensor/flexor oscillators chained
// head to tail, integrated with fixed-step RK4.

#include <array>
#include <cstddef>
#include <string>

namespace snakecpg::cpg {

inline constexpr std::size_t kMaxOscillators = 4;
inline constexpr std::size_t kMaxNeurons = 2 * kMaxOscillators;

/// Neuron index within the flat 8-entry layout [1e, 1f, 2e, 2f, ...].
constexpr std::size_t neuron_index(std::size_t oscillator, std::size_t side) {
  return 2 * oscillator + side;
}
inline constexpr std::size_t kExtensor = 0;
inline constexpr std::size_t kFlexor = 1;

/// Oscillator constants. Defaults are the GP-tuned configuration for the
/// four-link snake. `w_down` weights inhibition from the head-side neighbour
/// (i-1 -> i), `w_up` from the tail-side neighbour (i+1 -> i).
struct MatsuokaParams {
  double tau_r = 0.2888;
  double tau_a = 0.6639;
  double a = 2.0935;
  double b = 10.0355;
  double A = 4.6062;
  double w_down = 0.7844;
  double w_up = 8.8669;
  std::size_t n_osc = 4;

  /// Throws ParameterDomainError if any invariant fails.
  void validate() const;

  /// Single primitive oscillator (no inter-oscillator coupling).
  MatsuokaParams primitive() const;
};

/// Activation (x) and self-inhibition (y) states of all neurons. Also used as
/// the derivative type.
struct CpgState {
  std::array<double, kMaxNeurons> x{};
  std::array<double, kMaxNeurons> y{};

  /// Symmetry-breaking seed used by every analysis: x_1e = 0.01, rest 0.
  static CpgState seeded();

  /// Swaps extensor and flexor labels.
  CpgState mirrored() const;

  bool operator==(const CpgState&) const = default;
};

/// Tonic inputs ordered [u1e, u1f, u2e, u2f, u3e, u3f, u4e, u4f].
struct TonicVector {
  std::array<double, kMaxNeurons> u{};

  static TonicVector uniform(double value);
  static TonicVector from(std::array<double, kMaxNeurons> values) { return TonicVector{values}; }
  TonicVector mirrored() const;

  double& operator[](std::size_t i) { return u[i]; }
  double operator[](std::size_t i) const { return u[i]; }
  bool operator==(const TonicVector&) const = default;
};

/// Per-link output psi_i, clamped into [-1, 1].
using CpgOutput = std::array<double, kMaxOscillators>;

CpgState derivatives(const MatsuokaParams& params, const CpgState& state,
                     const TonicVector& u, double k_f);

/// One classical RK4 step with u held constant. Throws NumericalBlowupError
/// naming the first non-finite neuron.
CpgState step(const MatsuokaParams& params, const CpgState& state,
              const TonicVector& u, double k_f, double dt);

/// psi_i = clamp(A * (max(0, x_ie) - max(0, x_if)), -1, 1).
CpgOutput output(const MatsuokaParams& params, const CpgState& state);

/// Same as output() without the clamp.
CpgOutput raw_output(const MatsuokaParams& params, const CpgState& state);

/// (tau_a - tau_r)^2 < 4 tau_r tau_a b. Throws ParameterDomainError for
/// non-positive time constants or b.
bool check_stability_condition(const MatsuokaParams& params);

/// Human-readable neuron label, e.g. "x_2_f".
std::string neuron_label(char var, std::size_t neuron);

/// Stateful convenience wrapper used by the simulators.
class Network {
 public:
  explicit Network(MatsuokaParams params, CpgState initial = CpgState::seeded());

  void advance(const TonicVector& u, double k_f, double dt);
  CpgOutput output() const { return cpg::output(params_, state_); }
  CpgOutput raw_output() const { return cpg::raw_output(params_, state_); }

  const MatsuokaParams& params() const { return params_; }
  const CpgState& state() const { return state_; }
  void reset(const CpgState& state) { state_ = state; }

 private:
  MatsuokaParams params_;
  CpgState state_;
};

}  // namespace snakecpg::cpg
