#include <doctest.h>

#include <cmath>

#include "snakecpg/error.hpp"
#include "snakecpg/ppoc.hpp"
#include "snakecpg/task.hpp"

using namespace snakecpg;
using namespace snakecpg::ppoc;

namespace {

PolicyNet tiny_net(Rng& rng, std::size_t hidden = 2) {
  PolicySpec spec;
  spec.hidden = hidden;
  spec.init_log_std = -0.3;
  spec.init_termination_bias = 0.0;
  PolicyNet net(spec, rng);
  for (auto* p : net.parameters()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value(i) += 0.5 * standard_normal(rng);
  }
  return net;
}

Batch random_batch(Rng& rng, Eigen::Index rows, std::size_t n_options) {
  Batch b;
  b.input = ad::Matrix::Zero(rows, kInputDim);
  b.action = ad::Matrix::Zero(rows, kActionDim);
  for (Eigen::Index i = 0; i < b.input.size(); ++i) b.input(i) = uniform(rng, -1, 1);
  for (Eigen::Index i = 0; i < b.action.size(); ++i) b.action(i) = uniform(rng, -1, 1);
  b.log_prob_old.resize(rows);
  b.advantages.resize(rows);
  b.returns.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    b.option.push_back(static_cast<int>(r % static_cast<Eigen::Index>(n_options)));
    b.prev_option.push_back(r == 0 ? -1 : static_cast<int>((r + 1) % static_cast<Eigen::Index>(n_options)));
    b.log_prob_old(r) = -4.0 + 0.2 * standard_normal(rng);
    b.advantages(r) = standard_normal(rng);
    b.returns(r) = standard_normal(rng);
  }
  return b;
}

// Naive O(n^2) GAE: A_t = sum_l (gamma lambda)^l delta_{t+l}, cut at episode ends.
std::vector<double> oracle_gae(const Segment& s, double gamma, double lambda) {
  const std::size_t n = s.steps.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    double next = 0.0;
    if (!s.steps[t].done) next = t + 1 < n ? s.steps[t + 1].q : s.bootstrap.value_or(0.0);
    delta[t] = s.steps[t].reward + gamma * next - s.steps[t].q;
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1.0;
    for (std::size_t l = t; l < n; ++l) {
      adv[t] += w * delta[l];
      if (s.steps[l].done) break;
      w *= gamma * lambda;
    }
  }
  return adv;
}

Transition step_with(double reward, double q, bool done) {
  Transition t;
  t.input = Vector::Zero(kInputDim);
  t.reward = reward;
  t.q = q;
  t.done = done;
  return t;
}

}  // namespace

TEST_SUITE("ppoc") {

TEST_CASE("decode_action examples") {
  const auto zero = decode_action({0, 0, 0, 0});
  for (double u : zero.u) CHECK(u == 0.5);
  const auto big = decode_action({40.0, 0, 0, 0});
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] == doctest::Approx(0.0));
  const auto third = decode_action({std::log(3.0), 0, 0, 0});
  CHECK(third[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(third[1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("decoded pairs sum to one and stay in the open unit interval") {
  Rng rng = make_stream(61, "decode");
  for (int trial = 0; trial < 10000; ++trial) {
    Action a;
    for (double& v : a) v = uniform(rng, -30.0, 30.0);
    const auto u = decode_action(a);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(u[2 * i] + u[2 * i + 1] == 1.0);
      CHECK(u[2 * i] > 0.0);
      CHECK(u[2 * i] < 1.0);
    }
  }
}

TEST_CASE("option set validation") {
  OptionSet o;
  CHECK_NOTHROW(o.validate());
  CHECK(o.index_of(0.75) == 1);
  CHECK_THROWS_AS(o.index_of(0.8), ConfigError);
  o.values = {0.5, 1.2};
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o.values = {0.75, 0.5};
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o.values = {0.6, 0.6};
  CHECK_THROWS_AS(o.validate(), ConfigError);
}

TEST_CASE("policy heads are well formed") {
  Rng rng = make_stream(62, "net");
  PolicyNet net(PolicySpec{}, rng);
  ad::Matrix in = ad::Matrix::Random(7, kInputDim) * 3.0;
  const auto h = net.evaluate(in);
  CHECK(h.mean.rows() == 7);
  CHECK(h.mean.cols() == 12);
  CHECK(h.log_std.rows() == 3);
  CHECK(h.beta.cols() == 3);
  CHECK(h.q.cols() == 3);
  CHECK(h.mean.allFinite());
  for (Eigen::Index r = 0; r < 7; ++r) {
    CHECK(h.option_logp.row(r).array().exp().sum() == doctest::Approx(1.0));
    for (Eigen::Index k = 0; k < 3; ++k) {
      CHECK(h.beta(r, k) >= 0.0);
      CHECK(h.beta(r, k) <= 1.0);
    }
  }
  // Hidden width 128 in two layers.
  CHECK(net.w1.value.rows() == kInputDim);
  CHECK(net.w1.value.cols() == 128);
  CHECK(net.w2.value.rows() == 128);
  CHECK(net.w2.value.cols() == 128);
}

TEST_CASE("tape forward matches the plain forward pass") {
  Rng rng = make_stream(63, "net");
  PolicyNet net = tiny_net(rng, 5);
  const ad::Matrix in = ad::Matrix::Random(4, kInputDim);
  const auto plain = net.evaluate(in);
  ad::Tape tape;
  const auto taped = net.forward(tape, in);
  CHECK(plain.mean.isApprox(taped.mean.value(), 1e-14));
  CHECK(plain.option_logp.isApprox(taped.option_logp.value(), 1e-14));
  CHECK(plain.beta.isApprox(taped.beta.value(), 1e-14));
  CHECK(plain.q.isApprox(taped.q.value(), 1e-14));
}

TEST_CASE("gaussian log density") {
  const Action zero{0, 0, 0, 0};
  CHECK(gaussian_log_prob(zero, zero, zero) == doctest::Approx(-2.0 * std::log(2 * M_PI)));
  const Action a{1, 0, 0, 0}, ls{std::log(2.0), 0, 0, 0};
  CHECK(gaussian_log_prob(a, zero, ls) ==
        doctest::Approx(-0.125 - std::log(2.0) - 2.0 * std::log(2 * M_PI)));
}

TEST_CASE("termination never fires while frozen or with beta = 0") {
  Rng rng = make_stream(64, "act");
  PolicyNet net(PolicySpec{}, rng);
  net.b_term.value.setConstant(-1e4);  // beta underflows to exactly 0
  net.w_term.value.setZero();
  const OptionControl open{false, 0};
  int option = 1;
  for (int i = 0; i < 500; ++i) {
    const Vector in = Vector::Random(kInputDim);
    const Decision d = act(net, in, option, open, ActMode::stochastic, rng);
    CHECK(d.beta == 0.0);
    CHECK_FALSE(d.terminated);
    CHECK(d.option == 1);
    option = d.option;
  }
  const Decision frozen = act(net, Vector::Zero(kInputDim), -1, OptionControl{}, ActMode::stochastic, rng);
  CHECK(frozen.option == 2);
}

TEST_CASE("beta = 1 redraws the option every step") {
  Rng rng = make_stream(65, "act");
  PolicyNet net(PolicySpec{}, rng);
  net.b_term.value.setConstant(1e4);
  net.w_term.value.setZero();
  std::vector<int> seen(3, 0);
  int option = 0;
  for (int i = 0; i < 300; ++i) {
    const Decision d = act(net, Vector::Random(kInputDim), option, {false, 0},
                           ActMode::stochastic, rng);
    CHECK(d.terminated);
    seen[static_cast<std::size_t>(d.option)]++;
    option = d.option;
  }
  for (int n : seen) CHECK(n > 50);
}

TEST_CASE("deterministic mode is repeatable and uses the mean") {
  Rng init = make_stream(66, "net");
  PolicyNet net(PolicySpec{}, init);
  Rng a = make_stream(1, "x"), b = make_stream(2, "y");
  const Vector in = Vector::Random(kInputDim);
  const Decision da = act(net, in, -1, {false, 0}, ActMode::deterministic, a);
  const Decision db = act(net, in, -1, {false, 0}, ActMode::deterministic, b);
  CHECK(da.action == db.action);
  CHECK(da.action == da.mean);
  CHECK(da.option == db.option);
  const auto heads = net.evaluate(in.transpose());
  Eigen::Index best = 0;
  heads.option_logp.row(0).maxCoeff(&best);
  CHECK(da.option == static_cast<int>(best));
}

TEST_CASE("with beta = 0 the option agent is exactly the single-policy agent") {
  // Reference agent: a plain Gaussian policy reading option 2's head.
  Rng init = make_stream(67, "net");
  PolicyNet net(PolicySpec{}, init);
  net.b_term.value.setConstant(-1e4);
  net.w_term.value.setZero();
  auto run = [&](bool reference) {
    task::GoalReachingEnv env(task::EnvConfig{}, task::Curriculum::default_table(),
                              make_stream(68, "env"));
    Rng rng = make_stream(68, "policy");
    snake::Observation obs = env.reset(1);
    Action prev{};
    int option = 2;
    std::vector<snake::SnakeState> states;
    for (int i = 0; i < 120 && env.status() == task::EpisodeStatus::running; ++i) {
      Vector in(kInputDim);
      for (std::size_t k = 0; k < 8; ++k) in(static_cast<Eigen::Index>(k)) = obs[k];
      for (std::size_t k = 0; k < 4; ++k) in(static_cast<Eigen::Index>(8 + k)) = prev[k];
      in(12) = 1.0;
      Action a{};
      if (reference) {
        const auto h = net.evaluate(in.transpose());
        for (std::size_t k = 0; k < 4; ++k) {
          const auto kk = static_cast<Eigen::Index>(k);
          a[k] = h.mean(0, 8 + kk) + std::exp(h.log_std(2, kk)) * standard_normal(rng);
        }
      } else {
        const Decision d = act(net, in, option, {false, 2}, ActMode::stochastic, rng);
        a = d.action;
        option = d.option;
      }
      obs = env.step(decode_action(a), 1.0).observation;
      prev = a;
      states.push_back(env.body_state());
    }
    return states;
  };
  const auto with_options = run(false);
  const auto plain = run(true);
  REQUIRE(with_options.size() == plain.size());
  CHECK(with_options.size() > 10);
  for (std::size_t i = 0; i < plain.size(); ++i) CHECK(with_options[i] == plain[i]);
}

TEST_CASE("GAE examples") {
  Segment zero;
  for (int i = 0; i < 5; ++i) zero.steps.push_back(step_with(0.0, 0.0, i == 4));
  for (double a : compute_advantages(zero, 0.99, 0.95).advantages) CHECK(a == 0.0);

  Segment single;
  single.steps.push_back(step_with(2.5, 0.0, true));
  CHECK(compute_advantages(single, 0.99, 0.95).advantages[0] == 2.5);

  Segment tele;
  const double rewards[] = {1.0, -2.0, 0.5, 3.0};
  for (int i = 0; i < 4; ++i) tele.steps.push_back(step_with(rewards[i], 0.0, i == 3));
  const auto adv = compute_advantages(tele, 1.0, 1.0).advantages;
  CHECK(adv[0] == doctest::Approx(2.5));
  CHECK(adv[1] == doctest::Approx(1.5));
  CHECK(adv[2] == doctest::Approx(3.5));
  CHECK(adv[3] == doctest::Approx(3.0));
}

TEST_CASE("GAE matches the direct sum with episode cuts and bootstrap") {
  Rng rng = make_stream(69, "gae");
  for (int trial = 0; trial < 50; ++trial) {
    Segment s;
    const int n = 3 + trial % 20;
    for (int i = 0; i < n; ++i) {
      s.steps.push_back(step_with(standard_normal(rng), standard_normal(rng),
                                  uniform(rng, 0, 1) < 0.15));
    }
    if (!s.steps.back().done) s.bootstrap = standard_normal(rng);
    const auto got = compute_advantages(s, 0.97, 0.9);
    const auto want = oracle_gae(s, 0.97, 0.9);
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      CHECK(got.advantages[k] == doctest::Approx(want[k]).epsilon(1e-12));
      CHECK(got.returns[k] == doctest::Approx(want[k] + s.steps[k].q).epsilon(1e-12));
    }
  }
}

TEST_CASE("open segments are a contract violation") {
  Segment s;
  s.steps.push_back(step_with(1.0, 0.0, false));
  CHECK_THROWS_AS(compute_advantages(s, 0.99, 0.95), ContractViolation);
}

TEST_CASE("loss gradient matches central differences on a 2-unit net") {
  Rng rng = make_stream(70, "gradcheck");
  double worst = 0.0;
  for (int point = 0; point < 20; ++point) {
    PolicyNet net = tiny_net(rng);
    Batch b = random_batch(rng, 5, 3);
    hold_critic(b, net);
    LossConfig lc;
    lc.train_options = true;
    auto params = net.parameters();
    for (auto* p : params) p->zero_grad();
    {
      ad::Tape tape;
      tape.backward(ppoc_loss(tape, net, b, lc));
    }
    double num = 0.0, den = 0.0;
    for (auto* p : params) {
      for (Eigen::Index i = 0; i < p->value.size(); ++i) {
        const double h = 1e-6, orig = p->value(i);
        p->value(i) = orig + h;
        ad::Tape t1;
        const double up = ppoc_loss(t1, net, b, lc).value()(0, 0);
        p->value(i) = orig - h;
        ad::Tape t2;
        const double down = ppoc_loss(t2, net, b, lc).value()(0, 0);
        p->value(i) = orig;
        const double fd = (up - down) / (2 * h);
        num = std::max(num, std::abs(fd - p->grad(i)));
        den = std::max({den, std::abs(fd), std::abs(p->grad(i))});
      }
    }
    worst = std::max(worst, num / den);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("zero advantages leave no surrogate gradient") {
  Rng rng = make_stream(71, "zeroadv");
  PolicyNet net = tiny_net(rng, 4);
  Batch b = random_batch(rng, 6, 3);
  b.advantages.setZero();
  LossConfig lc;
  lc.entropy_coef = 0.0;
  lc.value_coef = 0.0;
  lc.normalize_advantages = false;
  for (auto* p : net.parameters()) p->zero_grad();
  ad::Tape tape;
  LossReport rep;
  tape.backward(ppoc_loss(tape, net, b, lc, &rep));
  CHECK(rep.policy == 0.0);
  CHECK(net.w_mean.grad.norm() == 0.0);
  CHECK(net.log_std.grad.norm() == 0.0);
}

TEST_CASE("clipping bounds the surrogate ratio") {
  Rng rng = make_stream(72, "clip");
  PolicyNet net = tiny_net(rng, 4);
  Batch b = random_batch(rng, 8, 3);
  // Old log-probabilities far below the current ones push every ratio above 1 + eps.
  b.advantages.setOnes();
  LossConfig lc;
  lc.normalize_advantages = false;
  lc.entropy_coef = 0.0;
  lc.value_coef = 0.0;
  b.log_prob_old.setConstant(-1e3);
  LossReport rep;
  ad::Tape tape;
  const double loss = ppoc_loss(tape, net, b, lc, &rep).value()(0, 0);
  CHECK(rep.clip_fraction == 1.0);
  CHECK(loss == doctest::Approx(-(1.0 + lc.clip)));
}

TEST_CASE("update changes weights and keeps them finite") {
  Rng rng = make_stream(73, "update");
  PolicyNet net = tiny_net(rng, 8);
  const Batch b = random_batch(rng, 64, 3);
  Adam adam(net.parameters(), 5e-4);
  const ad::Matrix before = net.w1.value;
  UpdateConfig cfg;
  cfg.minibatch = 16;
  const LossReport rep = update(net, adam, b, cfg, rng);
  CHECK(std::isfinite(rep.total));
  CHECK((net.w1.value - before).norm() > 0.0);
  for (auto* p : net.parameters()) CHECK(p->value.allFinite());
  CHECK(adam.t() == 4 * 4);
}

TEST_CASE("a non-finite loss aborts the update without touching the weights") {
  Rng rng = make_stream(74, "blowup");
  PolicyNet net = tiny_net(rng, 4);
  Batch b = random_batch(rng, 8, 3);
  b.returns(3) = std::numeric_limits<double>::quiet_NaN();
  Adam adam(net.parameters(), 5e-4);
  const ad::Matrix before = net.w1.value;
  CHECK_THROWS_AS(update(net, adam, b, UpdateConfig{}, rng), NumericalBlowupError);
  CHECK(net.w1.value == before);
}

TEST_CASE("gradient clipping") {
  ad::Parameter p("p", ad::Matrix::Zero(1, 2));
  p.grad << 3.0, 4.0;
  std::vector<ad::Parameter*> ps{&p};
  CHECK(clip_grad_norm(ps, 1.0) == doctest::Approx(5.0));
  CHECK(p.grad.norm() == doctest::Approx(1.0));
  CHECK(clip_grad_norm(ps, 10.0) == doctest::Approx(1.0));
  CHECK(p.grad.norm() == doctest::Approx(1.0));
}

TEST_CASE("Adam first step moves each weight by the step size") {
  ad::Parameter p("p", ad::Matrix::Zero(1, 3));
  p.grad << 0.3, -2.0, 1e-3;
  std::vector<ad::Parameter*> ps{&p};
  Adam adam(ps, 5e-4);
  adam.step(ps);
  CHECK(p.value(0) == doctest::Approx(-5e-4).epsilon(1e-6));
  CHECK(p.value(1) == doctest::Approx(5e-4).epsilon(1e-6));
  CHECK(p.value(2) == doctest::Approx(-5e-4).epsilon(1e-4));
}

TEST_CASE("running normaliser") {
  RunningNormalizer n(2);
  Rng rng = make_stream(75, "norm");
  for (int i = 0; i < 20000; ++i) {
    Vector x(2);
    x << 3.0 + 2.0 * standard_normal(rng), -1.0 + 0.5 * standard_normal(rng);
    n.observe(x);
  }
  CHECK(n.mean()(0) == doctest::Approx(3.0).epsilon(0.02));
  CHECK(n.mean()(1) == doctest::Approx(-1.0).epsilon(0.02));
  Vector probe(2);
  probe << 5.0, 1e6;
  const Vector z = n.normalize(probe);
  CHECK(z(0) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(z(1) == 10.0);
}

TEST_CASE("clone_option copies the source option's heads") {
  Rng rng = make_stream(76, "clone");
  PolicyNet net = tiny_net(rng, 6);
  net.clone_option(2);
  const ad::Matrix in = ad::Matrix::Random(3, kInputDim);
  const auto h = net.evaluate(in);
  for (int k = 0; k < 2; ++k) {
    CHECK(h.mean.middleCols(4 * k, 4) == h.mean.middleCols(8, 4));
    CHECK(h.log_std.row(k) == h.log_std.row(2));
    CHECK(h.q.col(k) == h.q.col(2));
  }
}

}  // TEST_SUITE
