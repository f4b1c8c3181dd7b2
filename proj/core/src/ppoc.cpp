#include "snakecpg/ppoc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "snakecpg/error.hpp"

namespace snakecpg::ppoc {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

ad::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, double gain, Rng& rng) {
  const double s = gain / std::sqrt(static_cast<double>(rows));
  ad::Matrix m(rows, cols);
  // Fill in a fixed order so initialisation does not depend on Eigen internals.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = s * standard_normal(rng);
  }
  return m;
}

ad::Matrix dense(const ad::Matrix& x, const ad::Parameter& w, const ad::Parameter& b) {
  ad::Matrix y = x * w.value;
  y.rowwise() += b.value.row(0);
  return y;
}

ad::Matrix row_log_softmax(const ad::Matrix& x) {
  ad::Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const double lse = m + std::log((x.row(r).array() - m).exp().sum());
    y.row(r) = x.row(r).array() - lse;
  }
  return y;
}

int sample_categorical(const ad::Matrix& logp_row, Rng& rng) {
  const double draw = uniform(rng, 0.0, 1.0);
  double acc = 0.0;
  const auto n = logp_row.cols();
  for (Eigen::Index k = 0; k < n; ++k) {
    acc += std::exp(logp_row(0, k));
    if (draw < acc) return static_cast<int>(k);
  }
  return static_cast<int>(n - 1);
}

int argmax(const ad::Matrix& row) {
  Eigen::Index best = 0;
  row.row(0).maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace

cpg::TonicVector decode_action(const Action& a) {
  cpg::TonicVector u;
  for (std::size_t i = 0; i < kActionDim; ++i) {
    const double e = sigmoid(a[i]);
    u[2 * i] = e;
    u[2 * i + 1] = 1.0 - e;
  }
  return u;
}

void OptionSet::validate() const {
  if (values.empty()) throw ConfigError("option set is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.45 && values[i] <= 1.05)) {
      throw ConfigError("option K_f = " + std::to_string(values[i]) +
                        " lies outside [0.45, 1.05]");
    }
    if (i > 0 && !(values[i] > values[i - 1])) {
      throw ConfigError("option set must be strictly increasing");
    }
  }
}

std::size_t OptionSet::index_of(double k_f) const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == k_f) return i;
  }
  throw ConfigError("K_f = " + std::to_string(k_f) + " is not in the option set");
}

PolicyNet::PolicyNet(const PolicySpec& spec, Rng& rng) : spec_(spec) {
  if (spec.input_dim == 0 || spec.hidden == 0 || spec.n_options == 0) {
    throw ParameterDomainError("policy dimensions must be positive");
  }
  const auto in = static_cast<Eigen::Index>(spec.input_dim);
  const auto h = static_cast<Eigen::Index>(spec.hidden);
  const auto n = static_cast<Eigen::Index>(spec.n_options);
  const auto na = static_cast<Eigen::Index>(kActionDim);
  w1 = {"actor.w1", random_matrix(in, h, 1.0, rng)};
  b1 = {"actor.b1", ad::Matrix::Zero(1, h)};
  w2 = {"actor.w2", random_matrix(h, h, 1.0, rng)};
  b2 = {"actor.b2", ad::Matrix::Zero(1, h)};
  w_mean = {"actor.w_mean", random_matrix(h, n * na, 0.01, rng)};
  b_mean = {"actor.b_mean", ad::Matrix::Zero(1, n * na)};
  w_option = {"actor.w_option", random_matrix(h, n, 0.01, rng)};
  b_option = {"actor.b_option", ad::Matrix::Zero(1, n)};
  w_term = {"actor.w_term", random_matrix(h, n, 0.01, rng)};
  b_term = {"actor.b_term", ad::Matrix::Constant(1, n, spec.init_termination_bias)};
  log_std = {"actor.log_std", ad::Matrix::Constant(n, na, spec.init_log_std)};
  c1 = {"critic.w1", random_matrix(in, h, 1.0, rng)};
  d1 = {"critic.b1", ad::Matrix::Zero(1, h)};
  c2 = {"critic.w2", random_matrix(h, h, 1.0, rng)};
  d2 = {"critic.b2", ad::Matrix::Zero(1, h)};
  w_q = {"critic.w_q", random_matrix(h, n, 1.0, rng)};
  b_q = {"critic.b_q", ad::Matrix::Zero(1, n)};
}

std::vector<ad::Parameter*> PolicyNet::parameters() {
  return {&w1, &b1, &w2, &b2, &w_mean, &b_mean, &w_option, &b_option, &w_term,
          &b_term, &log_std, &c1, &d1, &c2, &d2, &w_q, &b_q};
}

std::vector<const ad::Parameter*> PolicyNet::parameters() const {
  return {&w1, &b1, &w2, &b2, &w_mean, &b_mean, &w_option, &b_option, &w_term,
          &b_term, &log_std, &c1, &d1, &c2, &d2, &w_q, &b_q};
}

PolicyNet::Heads PolicyNet::evaluate(const ad::Matrix& input) const {
  if (input.cols() != static_cast<Eigen::Index>(spec_.input_dim)) {
    throw ContractViolation("policy input has the wrong width");
  }
  Heads out;
  const ad::Matrix h1 = dense(input, w1, b1).array().tanh();
  const ad::Matrix h2 = dense(h1, w2, b2).array().tanh();
  out.mean = dense(h2, w_mean, b_mean);
  out.log_std = log_std.value;
  out.option_logp = row_log_softmax(dense(h2, w_option, b_option));
  out.beta = dense(h2, w_term, b_term).unaryExpr([](double v) { return sigmoid(v); });
  const ad::Matrix g1 = dense(input, c1, d1).array().tanh();
  const ad::Matrix g2 = dense(g1, c2, d2).array().tanh();
  out.q = dense(g2, w_q, b_q);
  return out;
}

PolicyNet::TapeHeads PolicyNet::forward(ad::Tape& tape, const ad::Matrix& input) {
  if (input.cols() != static_cast<Eigen::Index>(spec_.input_dim)) {
    throw ContractViolation("policy input has the wrong width");
  }
  auto layer = [&](ad::Var x, ad::Parameter& w, ad::Parameter& b) {
    return ad::add_row(ad::matmul(x, tape.param(w)), tape.param(b));
  };
  const ad::Var x = tape.constant(input);
  const ad::Var h1 = ad::tanh(layer(x, w1, b1));
  const ad::Var h2 = ad::tanh(layer(h1, w2, b2));
  TapeHeads out;
  out.mean = layer(h2, w_mean, b_mean);
  out.log_std = tape.param(log_std);
  out.option_logp = ad::log_softmax(layer(h2, w_option, b_option));
  out.beta = ad::sigmoid(layer(h2, w_term, b_term));
  const ad::Var g1 = ad::tanh(layer(x, c1, d1));
  const ad::Var g2 = ad::tanh(layer(g1, c2, d2));
  out.q = layer(g2, w_q, b_q);
  return out;
}

void PolicyNet::clone_option(int from) {
  const auto n = static_cast<Eigen::Index>(spec_.n_options);
  const auto na = static_cast<Eigen::Index>(kActionDim);
  if (from < 0 || from >= n) throw ContractViolation("clone_option: option out of range");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k == from) continue;
    w_mean.value.middleCols(k * na, na) = w_mean.value.middleCols(from * na, na);
    b_mean.value.middleCols(k * na, na) = b_mean.value.middleCols(from * na, na);
    log_std.value.row(k) = log_std.value.row(from);
    w_q.value.col(k) = w_q.value.col(from);
    b_q.value.col(k) = b_q.value.col(from);
  }
}

double gaussian_log_prob(const Action& a, const Action& mean, const Action& log_std) {
  double lp = 0.0;
  for (std::size_t i = 0; i < kActionDim; ++i) {
    const double z = (a[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
  }
  return lp;
}

Decision act(const PolicyNet& net, const Vector& input, int current_option,
             const OptionControl& control, ActMode mode, Rng& rng) {
  const auto heads = net.evaluate(input.transpose());
  const int n = static_cast<int>(net.spec().n_options);
  if (current_option >= n) throw ContractViolation("current option out of range");
  Decision d;
  if (control.frozen) {
    if (control.fixed_option < 0 || control.fixed_option >= n) {
      throw ContractViolation("frozen option out of range");
    }
    d.option = control.fixed_option;
    d.terminated = current_option < 0;
  } else if (current_option < 0) {
    d.option = mode == ActMode::stochastic ? sample_categorical(heads.option_logp, rng)
                                           : argmax(heads.option_logp);
    d.terminated = true;
    d.beta = 1.0;
  } else {
    d.beta = heads.beta(0, current_option);
    bool stop = false;
    if (mode == ActMode::deterministic) {
      stop = d.beta > 0.5;
    } else if (d.beta >= 1.0) {
      stop = true;
    } else if (d.beta > 0.0) {
      stop = uniform(rng, 0.0, 1.0) < d.beta;
    }
    d.terminated = stop;
    d.option = current_option;
    if (stop) {
      d.option = mode == ActMode::stochastic ? sample_categorical(heads.option_logp, rng)
                                             : argmax(heads.option_logp);
    }
  }

  Action log_std{};
  for (std::size_t i = 0; i < kActionDim; ++i) {
    const auto col = static_cast<Eigen::Index>(static_cast<std::size_t>(d.option) * kActionDim + i);
    d.mean[i] = heads.mean(0, col);
    log_std[i] = heads.log_std(d.option, static_cast<Eigen::Index>(i));
  }
  for (std::size_t i = 0; i < kActionDim; ++i) {
    d.action[i] = mode == ActMode::stochastic
                      ? d.mean[i] + std::exp(log_std[i]) * standard_normal(rng)
                      : d.mean[i];
  }
  d.log_prob = gaussian_log_prob(d.action, d.mean, log_std);
  d.q = heads.q(0, d.option);
  for (int k = 0; k < n; ++k) d.v += std::exp(heads.option_logp(0, k)) * heads.q(0, k);
  return d;
}

Advantages compute_advantages(const Segment& segment, double gamma, double lambda) {
  if (!segment.closed()) {
    throw ContractViolation("advantage estimation needs a closed segment "
                            "(terminal last step or bootstrap value)");
  }
  const auto& s = segment.steps;
  Advantages out;
  out.advantages.assign(s.size(), 0.0);
  out.returns.assign(s.size(), 0.0);
  double gae = 0.0;
  for (std::size_t k = s.size(); k-- > 0;) {
    const bool last = k + 1 == s.size();
    const double next_value =
        s[k].done ? 0.0 : (last ? segment.bootstrap.value_or(0.0) : s[k + 1].q);
    const double nonterminal = s[k].done ? 0.0 : 1.0;
    const double delta = s[k].reward + gamma * next_value - s[k].q;
    gae = delta + gamma * lambda * nonterminal * gae;
    out.advantages[k] = gae;
    out.returns[k] = gae + s[k].q;
  }
  return out;
}

Batch Batch::subset(const std::vector<std::size_t>& rows) const {
  Batch b;
  const auto n = static_cast<Eigen::Index>(rows.size());
  b.input.resize(n, input.cols());
  b.action.resize(n, action.cols());
  b.log_prob_old.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
    b.input.row(r) = input.row(src);
    b.action.row(r) = action.row(src);
    b.option.push_back(option[static_cast<std::size_t>(src)]);
    b.prev_option.push_back(prev_option[static_cast<std::size_t>(src)]);
    b.log_prob_old(r) = log_prob_old(src);
    b.advantages(r) = advantages(src);
    b.returns(r) = returns(src);
  }
  if (held_q) {
    b.held_q = ad::Matrix(n, held_q->cols());
    for (Eigen::Index r = 0; r < n; ++r) {
      b.held_q->row(r) = held_q->row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]));
    }
  }
  if (held_v) {
    b.held_v = Vector(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      (*b.held_v)(r) = (*held_v)(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]));
    }
  }
  return b;
}

void hold_critic(Batch& batch, const PolicyNet& net) {
  const auto heads = net.evaluate(batch.input);
  batch.held_q = heads.q;
  batch.held_v = (heads.option_logp.array().exp() * heads.q.array()).rowwise().sum().matrix();
}

Batch make_batch(const std::vector<const Transition*>& steps, const std::vector<double>& adv,
                 const std::vector<double>& ret) {
  if (steps.empty() || adv.size() != steps.size() || ret.size() != steps.size()) {
    throw ContractViolation("batch needs one advantage and return per transition");
  }
  Batch b;
  const auto n = static_cast<Eigen::Index>(steps.size());
  const auto d = steps.front()->input.size();
  b.input.resize(n, d);
  b.action.resize(n, static_cast<Eigen::Index>(kActionDim));
  b.log_prob_old.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Transition& t = *steps[static_cast<std::size_t>(r)];
    b.input.row(r) = t.input.transpose();
    for (std::size_t i = 0; i < kActionDim; ++i) {
      b.action(r, static_cast<Eigen::Index>(i)) = t.action[i];
    }
    b.option.push_back(t.option);
    b.prev_option.push_back(t.prev_option);
    b.log_prob_old(r) = t.log_prob;
    b.advantages(r) = adv[static_cast<std::size_t>(r)];
    b.returns(r) = ret[static_cast<std::size_t>(r)];
  }
  return b;
}

ad::Var ppoc_loss(ad::Tape& tape, PolicyNet& net, const Batch& batch, const LossConfig& config,
                  LossReport* report) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  const auto n = static_cast<Eigen::Index>(net.spec().n_options);
  const auto na = static_cast<Eigen::Index>(kActionDim);
  if (B == 0) throw ContractViolation("loss needs a non-empty batch");
  const auto heads = net.forward(tape, batch.input);

  // Per-row selection of the active option's action mean.
  ad::Var mu;
  for (Eigen::Index k = 0; k < n; ++k) {
    ad::Matrix mask(B, 1);
    for (Eigen::Index r = 0; r < B; ++r) {
      mask(r, 0) = batch.option[static_cast<std::size_t>(r)] == k ? 1.0 : 0.0;
    }
    const ad::Var part = ad::mul_col(ad::slice_cols(heads.mean, k * na, na), tape.constant(mask));
    mu = k == 0 ? part : ad::add(mu, part);
  }
  const ad::Var ls = ad::gather_rows(heads.log_std, batch.option);
  const ad::Var z = ad::mul(ad::sub(tape.constant(batch.action), mu), ad::exp(ad::scale(ls, -1.0)));
  const ad::Var log_prob = ad::add_scalar(
      ad::sub(ad::scale(ad::row_sum(ad::square(z)), -0.5), ad::row_sum(ls)),
      -0.5 * kLog2Pi * static_cast<double>(na));

  ad::Matrix adv = batch.advantages;
  if (config.normalize_advantages && B > 1) {
    const double m = adv.mean();
    const double sd = std::sqrt((adv.array() - m).square().mean());
    adv = (adv.array() - m) / (sd + 1e-8);
  }
  const ad::Var adv_c = tape.constant(adv);
  const ad::Var ratio = ad::exp(ad::sub(log_prob, tape.constant(batch.log_prob_old)));
  const ad::Var surr1 = ad::mul(ratio, adv_c);
  const ad::Var surr2 = ad::mul(ad::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip), adv_c);
  const ad::Var policy = ad::scale(ad::mean(ad::minimum(surr1, surr2)), -1.0);

  const ad::Var q_taken = ad::gather(heads.q, batch.option);
  const ad::Var value = ad::mean(ad::square(ad::sub(q_taken, tape.constant(batch.returns))));
  const ad::Var entropy = ad::add_scalar(ad::mean(ad::row_sum(ls)),
                                         0.5 * (1.0 + kLog2Pi) * static_cast<double>(na));

  ad::Var total = ad::add(policy, ad::scale(value, config.value_coef));
  total = ad::sub(total, ad::scale(entropy, config.entropy_coef));

  double option_value = 0.0, termination_value = 0.0;
  if (config.train_options) {
    // Option advantages are put on the scale of the normalised action
    // advantages so the entropy bonus and xi keep their meaning.
    const ad::Matrix q_hat = batch.held_q ? *batch.held_q : heads.q.value();
    const ad::Matrix pi_hat = heads.option_logp.value().array().exp();
    double scale = 1.0;
    if (config.normalize_advantages && B > 1) {
      const double m = batch.returns.mean();
      scale = std::sqrt((batch.returns.array() - m).square().mean()) + 1e-8;
    }
    ad::Matrix option_adv(B, n);
    std::vector<int> prev(static_cast<std::size_t>(B));
    ad::Matrix coef(B, 1);
    for (Eigen::Index r = 0; r < B; ++r) {
      const double v = batch.held_v ? (*batch.held_v)(r) : pi_hat.row(r).dot(q_hat.row(r));
      option_adv.row(r) = (q_hat.row(r).array() - v) / scale;
      const int p = batch.prev_option[static_cast<std::size_t>(r)];
      prev[static_cast<std::size_t>(r)] = std::max(p, 0);
      // beta(s_t, o_{t-1}) * (A(s_t, o_{t-1}) + xi); zero at episode starts.
      coef(r, 0) = p < 0 ? 0.0 : option_adv(r, p) + config.xi;
    }
    const ad::Var pi = ad::exp(heads.option_logp);
    const ad::Var expected_adv = ad::mean(ad::row_sum(ad::mul(pi, tape.constant(option_adv))));
    const ad::Var option_entropy =
        ad::scale(ad::mean(ad::row_sum(ad::mul(pi, heads.option_logp))), -1.0);
    const ad::Var option_loss = ad::sub(ad::scale(expected_adv, -1.0),
                                        ad::scale(option_entropy, config.entropy_coef));
    const ad::Var termination =
        ad::mean(ad::mul(ad::gather(heads.beta, prev), tape.constant(coef)));
    total = ad::add(total, ad::add(option_loss, termination));
    option_value = option_loss.value()(0, 0);
    termination_value = termination.value()(0, 0);
  }

  if (report != nullptr) {
    report->total = total.value()(0, 0);
    report->policy = policy.value()(0, 0);
    report->value = value.value()(0, 0);
    report->entropy = entropy.value()(0, 0);
    report->option = option_value;
    report->termination = termination_value;
    const ad::Matrix& r = ratio.value();
    double clipped = 0.0, kl = 0.0;
    for (Eigen::Index i = 0; i < B; ++i) {
      if (std::abs(r(i, 0) - 1.0) > config.clip) clipped += 1.0;
      kl += batch.log_prob_old(i) - log_prob.value()(i, 0);
    }
    report->clip_fraction = clipped / static_cast<double>(B);
    report->approx_kl = kl / static_cast<double>(B);
  }
  return total;
}

Adam::Adam(std::vector<ad::Parameter*> params, double lr, double beta1, double beta2,
           double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto* p : params) {
    m_.push_back(ad::Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(ad::Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step(const std::vector<ad::Parameter*>& params) {
  if (params.size() != m_.size()) throw ContractViolation("optimizer/parameter count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& g = params[i]->grad;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    params[i]->value.array() -=
        lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

double clip_grad_norm(const std::vector<ad::Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (auto* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto* p : params) p->grad *= s;
  }
  return norm;
}

LossReport update(PolicyNet& net, Adam& optimizer, const Batch& input_batch,
                  const UpdateConfig& config, Rng& rng) {
  if (input_batch.size() == 0) throw ContractViolation("update needs a non-empty batch");
  Batch batch = input_batch;
  if (config.loss.train_options && !batch.held_q) hold_critic(batch, net);
  const auto params = net.parameters();
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  LossReport mean_report;
  std::size_t count = 0;
  const std::size_t mb = std::max<std::size_t>(1, config.minibatch);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with our own draws keeps the order library-independent.
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::vector<std::size_t> rows(
          order.begin() + static_cast<std::ptrdiff_t>(start),
          order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + mb)));
      const Batch sub = batch.subset(rows);
      for (auto* p : params) p->zero_grad();
      ad::Tape tape;
      LossReport r;
      const ad::Var loss = ppoc_loss(tape, net, sub, config.loss, &r);
      if (!std::isfinite(r.total)) {
        throw NumericalBlowupError("non-finite PPOC loss (policy " + std::to_string(r.policy) +
                                   ", value " + std::to_string(r.value) + ")");
      }
      tape.backward(loss);
      for (auto* p : params) {
        if (!p->grad.allFinite()) {
          throw NumericalBlowupError("non-finite gradient in " + p->name);
        }
      }
      clip_grad_norm(params, config.max_grad_norm);
      optimizer.step(params);
      for (auto* p : params) {
        if (!p->value.allFinite()) throw NumericalBlowupError("non-finite weight in " + p->name);
      }
      mean_report.total += r.total;
      mean_report.policy += r.policy;
      mean_report.value += r.value;
      mean_report.entropy += r.entropy;
      mean_report.option += r.option;
      mean_report.termination += r.termination;
      mean_report.clip_fraction += r.clip_fraction;
      mean_report.approx_kl += r.approx_kl;
      ++count;
    }
  }
  const double c = static_cast<double>(std::max<std::size_t>(1, count));
  mean_report.total /= c;
  mean_report.policy /= c;
  mean_report.value /= c;
  mean_report.entropy /= c;
  mean_report.option /= c;
  mean_report.termination /= c;
  mean_report.clip_fraction /= c;
  mean_report.approx_kl /= c;
  return mean_report;
}

RunningNormalizer::RunningNormalizer(std::size_t dim, double clip)
    : mean_(Vector::Zero(static_cast<Eigen::Index>(dim))),
      m2_(Vector::Zero(static_cast<Eigen::Index>(dim))),
      clip_(clip) {}

void RunningNormalizer::observe(const Vector& x) {
  if (x.size() != mean_.size()) throw ContractViolation("normalizer input has the wrong width");
  count_ += 1.0;
  const Vector delta = x - mean_;
  mean_ += delta / count_;
  m2_ += delta.cwiseProduct(x - mean_);
}

Vector RunningNormalizer::normalize(const Vector& x) const {
  if (x.size() != mean_.size()) throw ContractViolation("normalizer input has the wrong width");
  if (count_ < 2.0) return x.cwiseMax(-clip_).cwiseMin(clip_);
  const Vector var = m2_ / count_;
  Vector z = (x - mean_).array() / (var.array() + 1e-8).sqrt();
  return z.cwiseMax(-clip_).cwiseMin(clip_);
}

void RunningNormalizer::restore(double count, Vector mean, Vector m2) {
  if (mean.size() != m2.size()) throw PersistenceError("normalizer moments have mismatched sizes");
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

}  // namespace snakecpg::ppoc
