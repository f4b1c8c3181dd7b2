#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "snakecpg/error.hpp"
#include "snakecpg/trainer.hpp"

using namespace snakecpg;
using namespace snakecpg::ppoc;

namespace {

TrainerConfig small_config() {
  TrainerConfig c;
  c.workers = 2;
  c.steps_per_worker = 96;
  c.episodes = 24;
  c.policy.hidden = 16;
  c.update.minibatch = 64;
  c.update.epochs = 2;
  return c;
}

task::EnvConfig fast_env() {
  task::EnvConfig e;
  e.cpg_warmup = 5.0;
  return e;
}

std::vector<EpisodeLog> train_logged(Trainer& t) {
  std::vector<EpisodeLog> logs;
  t.run([&](const EpisodeLog& e) { logs.push_back(e); });
  return logs;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("config validation") {
  TrainerConfig c;
  CHECK(c.learning_rate == 5e-4);
  CHECK(c.workers == 4);
  CHECK_NOTHROW(c.validate());
  c.workers = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainerConfig{};
  c.options.values = {0.5, 0.75};  // phase-1 value must be an option
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("phase one uses a single frequency ratio and levels never drop") {
  Trainer t(small_config(), fast_env(), task::Curriculum::default_table(), 5);
  const auto logs = train_logged(t);
  REQUIRE(logs.size() >= 24);
  std::size_t level = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto& e = logs[i];
    CHECK(e.episode == i + 1);
    CHECK(e.phase == 1);
    CHECK(e.option_steps[0] == 0);
    CHECK(e.option_steps[1] == 0);
    CHECK(e.option_steps[2] == e.steps);
    CHECK(e.level >= level);
    CHECK(task::is_terminal(e.outcome));
    level = e.level;
  }
}

TEST_CASE("training is reproducible from the seed") {
  Trainer a(small_config(), fast_env(), task::Curriculum::default_table(), 9);
  Trainer b(small_config(), fast_env(), task::Curriculum::default_table(), 9);
  const auto la = train_logged(a), lb = train_logged(b);
  REQUIRE(la.size() == lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) {
    CHECK(la[i].ret == lb[i].ret);
    CHECK(la[i].steps == lb[i].steps);
  }
  CHECK(a.checkpoint() == b.checkpoint());
}

TEST_CASE("checkpoint round-trip keeps the action distribution bit for bit") {
  Trainer t(small_config(), fast_env(), task::Curriculum::default_table(), 3);
  t.train_batch();
  const std::string text = t.checkpoint();
  const Trainer back = Trainer::from_checkpoint_text(text, fast_env());
  CHECK(back.checkpoint() == text);
  CHECK(back.episodes() == t.episodes());
  CHECK(back.updates() == t.updates());

  Rng rng = make_stream(81, "probe");
  for (int i = 0; i < 100; ++i) {
    snake::Observation obs;
    for (double& v : obs) v = uniform(rng, -2, 2);
    Action prev;
    for (double& v : prev) v = uniform(rng, -2, 2);
    const Vector in_a = t.agent().input(obs, prev, 0.75);
    const Vector in_b = back.agent().input(obs, prev, 0.75);
    REQUIRE(in_a == in_b);
    const auto ha = t.agent().net.evaluate(in_a.transpose());
    const auto hb = back.agent().net.evaluate(in_b.transpose());
    CHECK(ha.mean == hb.mean);
    CHECK(ha.log_std == hb.log_std);
    CHECK(ha.option_logp == hb.option_logp);
    CHECK(ha.beta == hb.beta);
  }
}

TEST_CASE("corrupt or foreign checkpoints are persistence errors") {
  CHECK_THROWS_AS(Trainer::from_checkpoint_text("{nope", fast_env(), "x.json"), PersistenceError);
  auto j = nlohmann::json::parse(
      Trainer(small_config(), fast_env(), task::Curriculum::default_table(), 1).checkpoint());
  j["version"] = 99;
  try {
    (void)Trainer::from_checkpoint_text(j.dump(), fast_env(), "ck.json");
    FAIL("expected a version error");
  } catch (const PersistenceError& e) {
    const std::string what = e.what();
    CHECK(what.find("ck.json") != std::string::npos);
    CHECK(what.find("99") != std::string::npos);
  }
  CHECK_THROWS_AS(Trainer::resume("/nonexistent/ck.json", fast_env()), PersistenceError);
}

TEST_CASE("resume continues the episode counter") {
  const auto dir = std::filesystem::temp_directory_path() / "snakecpg_trainer_resume";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "ck.json").string();
  Trainer t(small_config(), fast_env(), task::Curriculum::default_table(), 4);
  const auto first = train_logged(t);
  t.save(path);
  Trainer back = Trainer::resume(path, fast_env());
  back.set_episode_budget(48);
  const auto more = train_logged(back);
  REQUIRE_FALSE(more.empty());
  CHECK(more.front().episode == first.back().episode + 1);
  for (std::size_t i = 1; i < more.size(); ++i) CHECK(more[i].episode == more[i - 1].episode + 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("episode log JSON") {
  EpisodeLog e;
  e.episode = 7;
  e.worker = 1;
  e.level = 2;
  e.outcome = task::EpisodeStatus::success;
  e.steps = 30;
  e.ret = 4.5;
  e.phase = 2;
  e.option_steps = {10, 0, 20};
  const auto j = nlohmann::json::parse(e.json(OptionSet{}));
  CHECK(j.at("episode") == 7);
  CHECK(j.at("level") == 2);
  CHECK(j.at("outcome") == "success");
  CHECK(j.at("return") == 4.5);
  CHECK(j.at("phase") == 2);
  CHECK(j.at("option_usage").at("0.5") == 10);
  CHECK(j.at("option_usage").at("1") == 20);
}

TEST_CASE("evaluation aggregates episodes") {
  Trainer t(small_config(), fast_env(), task::Curriculum::default_table(), 6);
  task::GoalReachingEnv env(fast_env(), task::Curriculum::default_table(), make_stream(6, "e"));
  EvalConfig cfg;
  cfg.episodes = 6;
  Rng rng = make_stream(6, "eval");
  const EvalReport r = evaluate(t.agent(), env, cfg, rng);
  CHECK(r.episodes == 6);
  CHECK(r.rows.size() == 6);
  std::size_t successes = 0, steps = 0;
  for (const auto& row : r.rows) {
    successes += row.outcome == task::EpisodeStatus::success ? 1 : 0;
    steps += row.steps;
  }
  CHECK(r.successes == successes);
  CHECK(r.success_rate == doctest::Approx(successes / 6.0));
  std::size_t usage = 0;
  for (auto n : r.option_steps) usage += n;
  CHECK(usage == steps);
  CHECK(r.distinct_options() == 1);
  if (successes == 0) CHECK(std::isnan(r.mean_time_to_goal));
}

TEST_CASE("deterministic rollouts repeat exactly") {
  Trainer t(small_config(), fast_env(), task::Curriculum::default_table(), 8);
  auto run = [&] {
    task::EnvConfig e = fast_env();
    e.domain_randomization = false;
    task::GoalReachingEnv env(e, task::Curriculum::default_table(), make_stream(8, "r"));
    Rng rng = make_stream(8, "roll");
    return rollout(t.agent(), env, {{0.5, 0.0}, {0.9, 0.3}}, 0, ActMode::deterministic, rng);
  };
  const auto a = run(), b = run();
  REQUIRE(a.size() == b.size());
  REQUIRE_FALSE(a.empty());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].row.psi == b[i].row.psi);
    CHECK(a[i].k_f == 1.0);
  }
  CHECK(task::is_terminal(a.back().status));
}

}  // TEST_SUITE
