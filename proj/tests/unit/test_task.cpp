#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "snakecpg/error.hpp"
#include "snakecpg/task.hpp"

using namespace snakecpg;
using namespace snakecpg::task;

namespace {

constexpr double kDeg = M_PI / 180.0;

TerminationHistory history_of(std::size_t steps, double v_g, double l_g, double step_len) {
  TerminationHistory h(1e-3, {0.0, 0.0});
  for (std::size_t i = 1; i <= steps; ++i) {
    h.record(v_g, l_g, {step_len * static_cast<double>(i), 0.0});
  }
  return h;
}

}  // namespace

TEST_SUITE("task") {

TEST_CASE("default curriculum table") {
  const Curriculum c = Curriculum::default_table();
  REQUIRE(c.size() == 6);
  const double r[] = {0.40, 0.35, 0.30, 0.25, 0.20, 0.15};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(c.level(i).r == doctest::Approx(r[i]));
    CHECK(c.level(i).theta == doctest::Approx((10.0 + 10.0 * i) * kDeg));
    CHECK(c.level(i).sigma == 0.9);
    CHECK(c.level(i).n_window == 100);
  }
  CHECK(c.level(0).rho_u == doctest::Approx(0.5));
  CHECK(c.level(5).rho_u == doctest::Approx(1.5));
  CHECK_THROWS_AS(c.level(6), ParameterDomainError);
}

TEST_CASE("monotonicity rules are enforced at construction") {
  auto levels = Curriculum::default_table().levels();
  auto broken = [&](auto mutate) {
    auto copy = levels;
    mutate(copy);
    return copy;
  };
  CHECK_NOTHROW(Curriculum{levels});
  CHECK_THROWS_AS(Curriculum{broken([](auto& l) { l[2].r = l[1].r; })}, ConfigError);
  CHECK_THROWS_AS(Curriculum{broken([](auto& l) { l[3].theta = l[2].theta; })}, ConfigError);
  CHECK_THROWS_AS(Curriculum{broken([](auto& l) { l[4].rho_u = l[3].rho_u; })}, ConfigError);
  CHECK_THROWS_AS(Curriculum{broken([](auto& l) { l[1].rho_l = l[0].rho_l; })}, ConfigError);
  CHECK_THROWS_AS(Curriculum{broken([](auto& l) { l[0].rho_l = l[0].rho_u + 0.1; })},
                  ConfigError);
  CHECK_THROWS_AS(Curriculum{std::vector<CurriculumLevel>{}}, ConfigError);
}

TEST_CASE("degenerate fan puts the goal dead ahead") {
  CurriculumLevel l;
  l.theta = 0.0;
  l.rho_l = 0.5;
  l.rho_u = 0.8;
  Rng rng = make_stream(31, "goals");
  for (int i = 0; i < 100; ++i) {
    const GoalSpec g = sample_goal(l, 0, {1.0, 2.0}, M_PI / 2, rng);
    CHECK(g.position.x == doctest::Approx(1.0));
    CHECK(g.position.y - 2.0 >= 0.5 - 1e-12);
    CHECK(g.position.y - 2.0 <= 0.8 + 1e-12);
    CHECK(g.origin == snake::Vec2{1.0, 2.0});
  }
}

TEST_CASE("goals stay inside the fan and are area uniform") {
  const Curriculum c = Curriculum::default_table();
  Rng rng = make_stream(32, "goals");
  for (std::size_t level = 0; level < c.size(); ++level) {
    const CurriculumLevel& l = c.level(level);
    const snake::Vec2 head{0.3, -0.4};
    const double heading = 0.8;
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const GoalSpec g = sample_goal(l, level, head, heading, rng);
      const snake::Vec2 d = g.position - head;
      const double rho = snake::norm(d);
      const double angle = snake::wrap_angle(std::atan2(d.y, d.x) - heading);
      CHECK(rho >= l.rho_l - 1e-12);
      CHECK(rho <= l.rho_u + 1e-12);
      CHECK(std::abs(angle) <= l.theta + 1e-12);
      CHECK(g.level == level);
      sum += rho;
    }
    const double expected = 2.0 / 3.0 * (std::pow(l.rho_u, 3) - std::pow(l.rho_l, 3)) /
                            (l.rho_u * l.rho_u - l.rho_l * l.rho_l);
    CHECK(std::abs(sum / n / expected - 1.0) < 0.02);
  }
}

TEST_CASE("reward examples") {
  const Curriculum c = Curriculum::default_table();
  CHECK(reward(0.0, 0.3, 0.5, c, 3) == 0.0);
  CHECK(reward(0.0, 0.0, 0.38, c, 0) == doctest::Approx(1.0 / 0.40));
  // 0.05 + 1/0.40 + 1/0.35 + 1/0.30, evaluated by hand.
  CHECK(reward(0.05, 0.0, 0.29, c, 2) == doctest::Approx(8.740476190476).epsilon(1e-12));
  CHECK(reward(-0.05, 0.0, 0.29, c, 2) == doctest::Approx(8.740476190476).epsilon(1e-12));
  RewardWeights w;
  w.c_v = 2.0;
  w.c_g = 0.5;
  CHECK(reward(0.1, M_PI / 3, 0.2, c, 1, w) ==
        doctest::Approx(0.2 + 0.5 * 0.5 * (1.0 / 0.40 + 1.0 / 0.35)).epsilon(1e-12));
}

TEST_CASE("reward is monotone in heading error and ring depth") {
  const Curriculum c = Curriculum::default_table();
  double prev = reward(0.03, 0.0, 0.1, c, 5);
  for (int i = 1; i <= 90; ++i) {
    const double r = reward(0.03, i * kDeg, 0.1, c, 5);
    CHECK(r <= prev);
    prev = r;
  }
  prev = reward(0.03, 0.2, 1.0, c, 5);
  for (double l = 1.0; l > 0.0; l -= 0.01) {
    const double r = reward(0.03, 0.2, l, c, 5);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("termination examples") {
  const double r = 0.3;
  TerminationHistory h;
  h.record(0.01, 0.29, {0.0, 0.0});
  CHECK(check_termination(h, r) == EpisodeStatus::success);

  CHECK(check_termination(history_of(31, -0.01, 1.0, 0.01), r) == EpisodeStatus::missed_goal);
  CHECK(check_termination(history_of(30, -0.01, 1.0, 0.01), r) == EpisodeStatus::running);

  TerminationHistory still = history_of(59, 0.01, 1.0, 0.0);
  CHECK(check_termination(still, r) == EpisodeStatus::running);
  still.record(0.01, 1.0, {0.01, 0.0});
  CHECK(check_termination(still, r) == EpisodeStatus::running);
  CHECK(check_termination(history_of(60, 0.01, 1.0, 0.0), r) == EpisodeStatus::starved);

  CHECK(check_termination(history_of(2000, 0.01, 1.0, 0.01), r) == EpisodeStatus::timeout);
  CHECK(check_termination(history_of(1999, 0.01, 1.0, 0.01), r) == EpisodeStatus::running);
}

TEST_CASE("slow creep below the motion threshold still starves") {
  // 0.01 mm per step stays inside the 1 mm neighbourhood of the start.
  TerminationHistory h(1e-3, {0.0, 0.0});
  for (int i = 1; i <= 60; ++i) h.record(0.0, 1.0, {0.0, 1e-5 * i});
  CHECK(check_termination(h, 0.3) == EpisodeStatus::starved);
}

TEST_CASE("status names round-trip") {
  for (auto s : {EpisodeStatus::running, EpisodeStatus::success, EpisodeStatus::starved,
                 EpisodeStatus::missed_goal, EpisodeStatus::timeout}) {
    CHECK(status_from_string(to_string(s)) == s);
  }
  CHECK_THROWS(status_from_string("bogus"));
  CHECK_FALSE(is_terminal(EpisodeStatus::running));
  CHECK(is_terminal(EpisodeStatus::timeout));
}

TEST_CASE("promotion needs a full window at the success rate") {
  const Curriculum c = Curriculum::default_table();
  auto run = [&](int successes, int total) {
    CurriculumTracker t;
    bool promoted = false;
    for (int i = 0; i < total; ++i) {
      const auto outcome = i < total - successes ? EpisodeStatus::starved : EpisodeStatus::success;
      promoted = t.record(outcome, c) || promoted;
    }
    return std::make_pair(t, promoted);
  };
  auto [t90, p90] = run(90, 100);
  CHECK(p90);
  CHECK(t90.level() == 1);
  CHECK(t90.window().empty());

  auto [t89, p89] = run(89, 100);
  CHECK_FALSE(p89);
  CHECK(t89.level() == 0);

  auto [t99, p99] = run(99, 99);
  CHECK_FALSE(p99);
  CHECK(t99.window().size() == 99);
}

TEST_CASE("the window slides and the top level is never left") {
  const Curriculum c = Curriculum::default_table();
  CurriculumTracker t;
  for (int i = 0; i < 100; ++i) t.record(EpisodeStatus::missed_goal, c);
  CHECK(t.level() == 0);
  CHECK(t.window().size() == 100);
  for (int i = 0; i < 89; ++i) t.record(EpisodeStatus::success, c);
  CHECK(t.level() == 0);
  t.record(EpisodeStatus::success, c);
  CHECK(t.level() == 1);

  CurriculumTracker top(5, {});
  for (int i = 0; i < 300; ++i) CHECK_FALSE(top.record(EpisodeStatus::success, c));
  CHECK(top.level() == 5);

  CHECK_THROWS_AS(t.record(EpisodeStatus::running, c), ContractViolation);
  auto [next, promoted] = update_curriculum(CurriculumTracker{}, EpisodeStatus::success, c);
  CHECK_FALSE(promoted);
  CHECK(next.successes() == 1);
}

TEST_CASE("episode records serialise with the documented keys") {
  const auto j = nlohmann::json::parse(
      episode_json({2, EpisodeStatus::missed_goal, 140, -1.25}));
  CHECK(j.at("level") == 2);
  CHECK(j.at("outcome") == "missed_goal");
  CHECK(j.at("steps") == 140);
  CHECK(j.at("return") == -1.25);
}

TEST_CASE("environment episode contract") {
  EnvConfig cfg;
  GoalReachingEnv env(cfg, Curriculum::default_table(), make_stream(33, "env"));
  CHECK_THROWS_AS(env.step(cpg::TonicVector::uniform(0.5), 1.0), ContractViolation);

  const auto obs = env.reset(0);
  CHECK(obs[0] == doctest::Approx(env.frame().rho_g));
  CHECK(env.status() == EpisodeStatus::running);
  const snake::Vec2 first_goal = env.goal().position;

  StepResult r;
  std::size_t steps = 0;
  do {
    r = env.step(cpg::TonicVector::uniform(0.5), 1.0);
    ++steps;
    for (double v : r.psi) CHECK(std::abs(v) <= 1.0);
  } while (r.status == EpisodeStatus::running);
  CHECK(env.episode_steps() == steps);
  CHECK(is_terminal(env.status()));
  CHECK_THROWS_AS(env.step(cpg::TonicVector::uniform(0.5), 1.0), ContractViolation);

  const snake::Vec2 head = snake::head_position(env.body_state(), env.body_params());
  const bool succeeded = r.status == EpisodeStatus::success;
  env.begin_episode(0);
  CHECK(env.status() == EpisodeStatus::running);
  CHECK_FALSE(env.goal().position == first_goal);
  if (succeeded) {
    // The body carries on from where it reached the goal.
    CHECK(env.goal().origin == head);
  }
  CHECK(env.episode_return() == 0.0);
}

TEST_CASE("environment runs are reproducible from the stream") {
  auto run = [] {
    GoalReachingEnv env(EnvConfig{}, Curriculum::default_table(), make_stream(34, "env"));
    env.reset(1);
    double ret = 0.0;
    for (int i = 0; i < 200 && env.status() == EpisodeStatus::running; ++i) {
      ret += env.step(cpg::TonicVector::uniform(0.6), 0.75).reward;
    }
    return std::make_pair(ret, env.body_state());
  };
  const auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("domain randomisation can be switched off") {
  EnvConfig cfg;
  cfg.domain_randomization = false;
  GoalReachingEnv env(cfg, Curriculum::default_table(), make_stream(35, "env"));
  env.reset(0);
  CHECK(env.body_params().ground_mu == cfg.body.ground_mu);
  CHECK(env.body_params().max_pressure == cfg.body.max_pressure);
}

}  // TEST_SUITE
