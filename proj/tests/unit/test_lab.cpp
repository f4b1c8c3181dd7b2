#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "snakecpg/error.hpp"
#include "snakecpg/lab.hpp"

using namespace snakecpg;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

config::ExperimentConfig small_experiment(const fs::path& out) {
  config::ExperimentConfig c;
  c.out = out.string();
  c.workers = 2;
  c.trainer.workers = 2;
  c.velocity.samples = 12;
  c.velocity.warmup = 2.0;
  c.velocity.duration = 2.0;
  c.gp.evolve.population = 6;
  c.gp.evolve.generations = 2;
  c.gp.evolve.workers = 2;
  c.trainer.episodes = 12;
  c.trainer.steps_per_worker = 96;
  c.trainer.policy.hidden = 16;
  c.trainer.update.minibatch = 64;
  c.env.cpg_warmup = 5.0;
  c.eval.episodes = 4;
  c.checkpoint_every = 1;
  return c;
}

fs::path fresh_dir(const char* name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

std::string header_of(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_SUITE("lab") {

TEST_CASE("linear fit recovers an exact line") {
  const auto f = lab::linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.n == 4);
  CHECK_THROWS_AS(lab::linear_fit({1}, {1}), ParameterDomainError);
  CHECK_THROWS_AS(lab::linear_fit({2, 2}, {1, 3}), ParameterDomainError);
}

TEST_CASE("rank correlation with ties") {
  // Reference values from an established statistics package.
  CHECK(lab::spearman({1, 2, 2, 3, 5}, {1, 3, 2, 4, 4}) ==
        doctest::Approx(0.9473684210526317).epsilon(1e-12));
  CHECK(lab::spearman({0.1, 0.4, 0.4, 0.9, 0.2, 0.7}, {3, 1, 2, 2, 5, 0}) ==
        doctest::Approx(-0.6617647058823529).epsilon(1e-12));
  CHECK(lab::spearman({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
}

TEST_CASE("bias sweep grid, symmetry and linearity") {
  for (double step : {0.025, 0.05, 0.1, 0.3}) {
    config::BiasSweepConfig cfg;
    cfg.step = step;
    const auto sweep = lab::characterize_bias(cpg::MatsuokaParams{}, cfg);
    CHECK(sweep.rows.size() == static_cast<std::size_t>(std::floor(0.5 / step + 1e-9)) + 1);
    for (const auto& r : sweep.rows) CHECK(r.u_e + r.u_f == doctest::Approx(1.0));
  }
  const auto sweep = lab::characterize_bias(cpg::MatsuokaParams{}, {});
  CHECK(sweep.rows.back().u_e == doctest::Approx(0.5));
  CHECK(std::abs(sweep.rows.back().bias) <= 0.01);
  CHECK(sweep.fit.r2 >= 0.98);
  // Frozen from the reference sweep.
  CHECK(sweep.fit.slope == doctest::Approx(1.03944).epsilon(1e-4));
  std::size_t used = 0;
  for (const auto& r : sweep.rows) used += r.oscillating ? 1 : 0;
  CHECK(sweep.fit.n == used);
  CHECK_FALSE(sweep.rows.front().oscillating);
}

TEST_CASE("velocity map samples stay in the box and ignore the worker count") {
  config::VelocityMapConfig cfg;
  cfg.samples = 16;
  cfg.warmup = 1.0;
  cfg.duration = 2.0;
  Rng a = make_stream(91, "vm"), b = make_stream(91, "vm");
  const auto one = lab::velocity_map({}, {}, cfg, a, 1);
  const auto three = lab::velocity_map({}, {}, cfg, b, 3);
  REQUIRE(one.rows.size() == 16);
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    const auto& r = one.rows[i];
    CHECK(r.u >= 0.4);
    CHECK(r.u <= 0.8);
    CHECK(r.k_f >= 0.45);
    CHECK(r.k_f <= 1.05);
    CHECK_FALSE(r.diverged);
    CHECK(r.mean_speed >= 0.0);
    CHECK(r.mean_speed == three.rows[i].mean_speed);
  }
  CHECK(one.spearman_k_f_speed == three.spearman_k_f_speed);
}

TEST_CASE("every pipeline writes its config and reproduces its artifacts") {
  const auto root = fresh_dir("snakecpg_lab_repro");
  auto run_all = [&](const fs::path& out) {
    auto c = small_experiment(out);
    c.out = (out / "bias").string();
    lab::cmd_characterize_bias(c);
    c.out = (out / "vm").string();
    lab::cmd_velocity_map(c);
    c.out = (out / "gp").string();
    lab::cmd_gp_search(c);
    c.out = (out / "train").string();
    lab::cmd_train(c, "");
    const std::string ck = (out / "train" / "checkpoint.json").string();
    c.out = (out / "eval").string();
    lab::cmd_eval(c, ck);
    c.out = (out / "rollout").string();
    lab::cmd_rollout(c, ck);
  };
  run_all(root / "a");
  run_all(root / "b");
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "a");
    const auto other = root / "b" / rel;
    REQUIRE(fs::exists(other));
    const std::string name = rel.filename().string();
    if (name == "config.ini") {
      // Identical apart from the out path.
      CHECK(slurp(entry.path()).size() == slurp(other).size());
    } else if (name == "eval.json") {
      auto ja = nlohmann::json::parse(slurp(entry.path()));
      auto jb = nlohmann::json::parse(slurp(other));
      ja.erase("checkpoint");
      jb.erase("checkpoint");
      CHECK(ja == jb);
    } else {
      CAPTURE(rel.string());
      CHECK(slurp(entry.path()) == slurp(other));
    }
    ++compared;
  }
  CHECK(compared >= 17);
  for (const char* d : {"bias", "vm", "gp", "train", "eval", "rollout"}) {
    CHECK(fs::exists(root / "a" / d / "config.ini"));
  }
  const auto resolved = config::load((root / "a" / "gp" / "config.ini").string());
  CHECK(resolved.gp.evolve.population == 6);
  CHECK(resolved.seed == 1);

  const std::string traj = header_of(root / "a" / "rollout" / "trajectory.csv");
  CHECK(traj.find("psi_1") != std::string::npos);
  CHECK(traj.find(",k_f,") != std::string::npos);
  const auto eval = nlohmann::json::parse(slurp(root / "a" / "eval" / "eval.json"));
  for (const char* key : {"success_rate", "mean_speed", "mean_time_to_goal"}) {
    CHECK(eval.contains(key));
  }
  fs::remove_all(root);
}

TEST_CASE("resumed training appends with a continuing episode counter") {
  const auto root = fresh_dir("snakecpg_lab_resume");
  auto c = small_experiment(root);
  lab::cmd_train(c, "");
  const std::string ck = (root / "checkpoint.json").string();
  c.trainer.episodes = 30;
  lab::cmd_train(c, ck);
  std::ifstream in(root / "episodes.jsonl");
  std::string line;
  std::size_t expected = 1;
  while (std::getline(in, line)) {
    CHECK(nlohmann::json::parse(line).at("episode") == expected);
    ++expected;
  }
  CHECK(expected > 30);
  fs::remove_all(root);
}

TEST_CASE("eval and rollout need a checkpoint") {
  const auto c = small_experiment(fresh_dir("snakecpg_lab_nock"));
  CHECK_THROWS_AS(lab::cmd_eval(c, ""), ConfigError);
  CHECK_THROWS_AS(lab::cmd_rollout(c, "/nonexistent.json"), PersistenceError);
}

}  // TEST_SUITE
