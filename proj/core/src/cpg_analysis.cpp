#include "snakecpg/cpg_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "snakecpg/error.hpp"

namespace snakecpg::cpg {
namespace {

double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  if (end <= begin) return 0.0;
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += v[i];
  return s / static_cast<double>(end - begin);
}

// Indices k where the signal crosses `level` upwards between k-1 and k.
std::vector<std::size_t> upward_crossings(const std::vector<double>& v, double level) {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k - 1] < level && v[k] >= level) out.push_back(k);
  }
  return out;
}

// Relative span below which a signal is treated as constant.
constexpr double kFlatTolerance = 1e-6;

bool is_flat(const std::vector<double>& v) {
  if (v.empty()) return true;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double scale = std::max({1.0, std::fabs(*lo), std::fabs(*hi)});
  return (*hi - *lo) <= kFlatTolerance * scale;
}

}  // namespace

std::vector<double> OutputTrace::link(std::size_t i) const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s[i]);
  return out;
}

OutputTrace simulate_outputs(const MatsuokaParams& params, const CpgState& initial,
                             const TonicVector& u, double k_f, double t_end,
                             double record_from, double dt, OutputMode mode) {
  params.validate();
  OutputTrace trace;
  trace.dt = dt;
  trace.n_links = params.n_osc;
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  const auto first = static_cast<std::size_t>(std::llround(record_from / dt));
  trace.t0 = static_cast<double>(first) * dt;
  trace.samples.reserve(steps > first ? steps - first : 0);

  CpgState state = initial;
  for (std::size_t k = 0; k < steps; ++k) {
    if (k >= first) {
      trace.samples.push_back(mode == OutputMode::clamped ? output(params, state)
                                                          : raw_output(params, state));
    }
    state = step(params, state, u, k_f, dt);
  }
  return trace;
}

double periodic_mean(const std::vector<double>& signal) {
  if (signal.empty()) return 0.0;
  if (is_flat(signal)) return mean_of(signal, 0, signal.size());
  const double level = mean_of(signal, 0, signal.size());
  const auto crossings = upward_crossings(signal, level);
  if (crossings.size() < 2) return level;
  return mean_of(signal, crossings.front(), crossings.back());
}

std::vector<double> estimate_bias(const MatsuokaParams& params, const TonicVector& u,
                                  double k_f, const AnalysisWindow& window) {
  const OutputTrace trace =
      simulate_outputs(params, CpgState::seeded(), u, k_f, window.settle_time + window.window,
                       window.settle_time, window.dt, OutputMode::clamped);
  std::vector<double> bias(trace.n_links);
  for (std::size_t i = 0; i < trace.n_links; ++i) bias[i] = periodic_mean(trace.link(i));
  return bias;
}

double span_amplitude(const std::vector<double>& signal) {
  if (signal.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(signal.begin(), signal.end());
  return 0.5 * (*hi - *lo);
}

Oscillation measure_oscillation(const std::vector<double>& signal, double dt) {
  if (is_flat(signal)) {
    throw NoOscillationError("output is constant over the analysis window");
  }
  const double level = mean_of(signal, 0, signal.size());
  const auto crossings = upward_crossings(signal, level);
  // Each span between consecutive upward mean-crossings holds one peak and
  // one trough.
  std::vector<double> peak_times;
  std::vector<double> peaks;
  std::vector<double> troughs;
  for (std::size_t c = 0; c + 1 < crossings.size(); ++c) {
    const auto begin = signal.begin() + static_cast<std::ptrdiff_t>(crossings[c]);
    const auto end = signal.begin() + static_cast<std::ptrdiff_t>(crossings[c + 1]);
    const auto peak = std::max_element(begin, end);
    peaks.push_back(*peak);
    peak_times.push_back(static_cast<double>(peak - signal.begin()) * dt);
    troughs.push_back(*std::min_element(begin, end));
  }
  if (peaks.size() < 3) {
    throw NoOscillationError("fewer than 3 peaks detected in the analysis window (found " +
                             std::to_string(peaks.size()) + ")");
  }
  Oscillation osc;
  const double mean_interval =
      (peak_times.back() - peak_times.front()) / static_cast<double>(peak_times.size() - 1);
  osc.frequency_hz = 1.0 / mean_interval;
  const double mean_peak = std::accumulate(peaks.begin(), peaks.end(), 0.0) /
                           static_cast<double>(peaks.size());
  const double mean_trough = std::accumulate(troughs.begin(), troughs.end(), 0.0) /
                             static_cast<double>(troughs.size());
  osc.amplitude = 0.5 * (mean_peak - mean_trough);
  osc.peak_count = peaks.size();
  return osc;
}

std::vector<Oscillation> estimate_frequency_amplitude(const MatsuokaParams& params,
                                                      const TonicVector& u, double k_f,
                                                      const AnalysisWindow& window,
                                                      OutputMode mode) {
  const OutputTrace trace =
      simulate_outputs(params, CpgState::seeded(), u, k_f, window.settle_time + window.window,
                       window.settle_time, window.dt, mode);
  std::vector<Oscillation> out;
  out.reserve(trace.n_links);
  for (std::size_t i = 0; i < trace.n_links; ++i) {
    out.push_back(measure_oscillation(trace.link(i), trace.dt));
  }
  return out;
}

}  // namespace snakecpg::cpg
