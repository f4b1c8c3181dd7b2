#pragma once

// Option-critic PPO: intra-option Gaussian policies over the tonic action,
// an option policy over frequency ratios and per-option termination heads.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "snakecpg/autodiff.hpp"
#include "snakecpg/cpg.hpp"
#include "snakecpg/rng.hpp"

namespace snakecpg::ppoc {

inline constexpr std::size_t kObsDim = 8;
inline constexpr std::size_t kActionDim = 4;
/// Observation, previous action and previous frequency ratio.
inline constexpr std::size_t kInputDim = kObsDim + kActionDim + 1;

using Action = std::array<double, kActionDim>;
using Vector = Eigen::VectorXd;

/// u_ie = sigmoid(a_i), u_if = 1 - u_ie.
cpg::TonicVector decode_action(const Action& a);

struct OptionSet {
  std::vector<double> values{0.5, 0.75, 1.0};

  /// Throws ConfigError unless values are distinct, sorted and in [0.45, 1.05].
  void validate() const;
  std::size_t size() const { return values.size(); }
  /// Index of the exact value; throws ConfigError when absent.
  std::size_t index_of(double k_f) const;
};

struct PolicySpec {
  std::size_t input_dim = kInputDim;
  std::size_t hidden = 128;
  std::size_t n_options = 3;
  double init_log_std = 0.0;
  double init_termination_bias = -3.0;
};

/// Actor (shared trunk with per-option action means, option logits and
/// termination logits) and critic (Q per option); both 2 tanh layers.
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(const PolicySpec& spec, Rng& rng);

  const PolicySpec& spec() const { return spec_; }
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

  /// Plain forward pass without gradient bookkeeping.
  struct Heads {
    ad::Matrix mean;         // B x (n_options * 4), option k in columns [4k, 4k+4)
    ad::Matrix log_std;      // n_options x 4
    ad::Matrix option_logp;  // B x n_options
    ad::Matrix beta;         // B x n_options
    ad::Matrix q;            // B x n_options
  };
  Heads evaluate(const ad::Matrix& input) const;

  /// Same heads recorded on a tape.
  struct TapeHeads {
    ad::Var mean, log_std, option_logp, beta, q;
  };
  TapeHeads forward(ad::Tape& tape, const ad::Matrix& input);

  /// Copies option `from`'s action mean, log-std and Q head over every other
  /// option.
  void clone_option(int from);

  // Actor
  ad::Parameter w1, b1, w2, b2, w_mean, b_mean, w_option, b_option, w_term, b_term, log_std;
  // Critic
  ad::Parameter c1, d1, c2, d2, w_q, b_q;

 private:
  PolicySpec spec_;
};

/// Gaussian log-density of `a` under mean/log-std rows.
double gaussian_log_prob(const Action& a, const Action& mean, const Action& log_std);

enum class ActMode { stochastic, deterministic };

/// Phase-1 freeze: option pinned, termination never sampled.
struct OptionControl {
  bool frozen = true;
  int fixed_option = 2;
};

struct Decision {
  Action action{};
  Action mean{};
  int option = 0;
  bool terminated = false;  // true when the option was (re)drawn this step
  double beta = 0.0;        // termination probability of the incoming option
  double log_prob = 0.0;    // action log-density under the active option
  double q = 0.0;           // Q(s, option)
  double v = 0.0;           // sum_o pi(o|s) Q(s, o)
};

/// `current_option` < 0 means none yet (episode start). In stochastic mode
/// the Bernoulli termination draw is skipped when beta is exactly 0 or 1.
Decision act(const PolicyNet& net, const Vector& input, int current_option,
             const OptionControl& control, ActMode mode, Rng& rng);

struct Transition {
  Vector input;
  Action action{};
  int option = 0;
  int prev_option = -1;  // -1 at the first step of an episode
  double reward = 0.0;
  double q = 0.0;
  double log_prob = 0.0;
  bool done = false;
};

/// Contiguous transitions from one worker. Closed when the last step is
/// terminal or a bootstrap value is set.
struct Segment {
  std::vector<Transition> steps;
  std::optional<double> bootstrap;

  bool closed() const { return steps.empty() || steps.back().done || bootstrap.has_value(); }
};

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// GAE(gamma, lambda) with Q(s_t, o_t) as the baseline. Throws
/// ContractViolation on an unclosed segment.
Advantages compute_advantages(const Segment& segment, double gamma, double lambda);

struct LossConfig {
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double xi = 0.01;  // termination regulariser
  bool train_options = false;
  bool normalize_advantages = true;
};

struct Batch {
  ad::Matrix input;  // B x input_dim
  ad::Matrix action;  // B x 4
  std::vector<int> option;
  std::vector<int> prev_option;
  Vector log_prob_old;
  Vector advantages;
  Vector returns;
  /// Q(s, .) and V(s) held constant by the option and termination terms.
  /// When empty they are read off the current forward pass.
  std::optional<ad::Matrix> held_q;
  std::optional<Vector> held_v;

  std::size_t size() const { return option.size(); }
  Batch subset(const std::vector<std::size_t>& rows) const;
};

/// Fills held_q / held_v from the current network.
void hold_critic(Batch& batch, const PolicyNet& net);

Batch make_batch(const std::vector<const Transition*>& steps, const std::vector<double>& adv,
                 const std::vector<double>& ret);

struct LossReport {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double option = 0.0;
  double termination = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Clipped surrogate + value regression - entropy bonus, plus the option
/// policy and termination terms when `train_options` is set.
ad::Var ppoc_loss(ad::Tape& tape, PolicyNet& net, const Batch& batch, const LossConfig& config,
                  LossReport* report = nullptr);

class Adam {
 public:
  Adam() = default;
  Adam(std::vector<ad::Parameter*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step(const std::vector<ad::Parameter*>& params);
  double lr() const { return lr_; }
  std::size_t t() const { return t_; }

  std::vector<ad::Matrix>& m() { return m_; }
  std::vector<ad::Matrix>& v() { return v_; }
  const std::vector<ad::Matrix>& m() const { return m_; }
  const std::vector<ad::Matrix>& v() const { return v_; }
  void set_t(std::size_t t) { t_ = t; }

 private:
  double lr_ = 5e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::size_t t_ = 0;
  std::vector<ad::Matrix> m_, v_;
};

/// Scales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(const std::vector<ad::Parameter*>& params, double max_norm);

struct UpdateConfig {
  LossConfig loss;
  std::size_t epochs = 4;
  std::size_t minibatch = 256;
  double max_grad_norm = 0.5;
};

/// Minibatch epochs over `batch`, with critic values for the option terms
/// held at their pre-update values. Throws NumericalBlowupError (leaving the
/// weights untouched since the last good step) on a non-finite loss or
/// gradient. Returns the mean report over minibatches.
LossReport update(PolicyNet& net, Adam& optimizer, const Batch& batch,
                  const UpdateConfig& config, Rng& rng);

/// Welford running mean and variance per input feature.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(std::size_t dim, double clip = 10.0);

  void observe(const Vector& x);
  Vector normalize(const Vector& x) const;

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  double count() const { return count_; }
  const Vector& mean() const { return mean_; }
  const Vector& m2() const { return m2_; }
  double clip() const { return clip_; }
  void restore(double count, Vector mean, Vector m2);

 private:
  double count_ = 0.0;
  Vector mean_;
  Vector m2_;
  double clip_ = 10.0;
};

}  // namespace snakecpg::ppoc
