#pragma once

#include <vector>

#include "snakecpg/cpg.hpp"

namespace snakecpg::cpg {

/// Control-loop timing: the policy acts at 60 Hz and each control period is
/// split into 17 RK4 substeps (~1 ms).
inline constexpr double kControlRate = 60.0;
inline constexpr int kSubsteps = 17;
inline constexpr double kControlPeriod = 1.0 / kControlRate;
inline constexpr double kSubstepDt = kControlPeriod / kSubsteps;

struct AnalysisWindow {
  double settle_time = 20.0;
  double window = 10.0;
  double dt = kSubstepDt;
};

enum class OutputMode { clamped, raw };

/// Per-link output samples on a uniform time grid.
struct OutputTrace {
  double t0 = 0.0;
  double dt = 0.0;
  std::size_t n_links = 0;
  std::vector<CpgOutput> samples;

  std::vector<double> link(std::size_t i) const;
};

/// Integrates from `initial` and records outputs for t in [record_from, t_end).
OutputTrace simulate_outputs(const MatsuokaParams& params, const CpgState& initial,
                             const TonicVector& u, double k_f, double t_end,
                             double record_from, double dt, OutputMode mode);

/// Steady-state oscillation bias (constant Fourier term) of every link,
/// estimated as the time average over [settle, settle + window]. When the
/// signal oscillates the average is taken over the whole periods contained
/// in the window.
std::vector<double> estimate_bias(const MatsuokaParams& params, const TonicVector& u,
                                  double k_f, const AnalysisWindow& window = {});

/// Average of a sampled signal over its whole periods (mean-crossing to
/// mean-crossing); plain mean if fewer than two crossings exist.
double periodic_mean(const std::vector<double>& signal);

struct Oscillation {
  double frequency_hz = 0.0;
  double amplitude = 0.0;  // half of mean peak-to-trough
  std::size_t peak_count = 0;
};

/// Frequency from the mean inter-peak interval and amplitude from half the
/// peak-to-trough span. Throws NoOscillationError with fewer than 3 peaks.
Oscillation measure_oscillation(const std::vector<double>& signal, double dt);

std::vector<Oscillation> estimate_frequency_amplitude(const MatsuokaParams& params,
                                                      const TonicVector& u, double k_f,
                                                      const AnalysisWindow& window = {},
                                                      OutputMode mode = OutputMode::clamped);

/// Half peak-to-trough of a signal with no peak requirement (0 for a constant).
double span_amplitude(const std::vector<double>& signal);

}  // namespace snakecpg::cpg
