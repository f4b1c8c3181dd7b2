#include "snakecpg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "snakecpg/cpg_analysis.hpp"
#include "snakecpg/error.hpp"

namespace snakecpg::ppoc {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kCheckpointFormat = "snakecpg-ppoc-checkpoint";
constexpr int kCheckpointVersion = 1;
constexpr std::size_t kReturnWindow = 100;

std::string option_label(double k_f) {
  std::ostringstream os;
  os << k_f;
  return os.str();
}

}  // namespace

void TrainerConfig::validate() const {
  options.validate();
  if (!(learning_rate > 0.0)) throw ConfigError("trainer: learning_rate must be positive");
  if (workers == 0) throw ConfigError("trainer: workers must be positive");
  if (steps_per_worker == 0) throw ConfigError("trainer: steps_per_worker must be positive");
  if (update.minibatch == 0 || update.epochs == 0) {
    throw ConfigError("trainer: minibatch and epochs must be positive");
  }
  if (!(gamma > 0.0 && gamma <= 1.0) || !(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("trainer: gamma must lie in (0, 1] and lambda in [0, 1]");
  }
  if (!(update.loss.clip > 0.0)) throw ConfigError("trainer: clip must be positive");
  if (policy.n_options != options.size()) {
    throw ConfigError("trainer: policy option count differs from the option set");
  }
  options.index_of(phase1_k_f);
}

OptionControl Agent::control() const {
  OptionControl c;
  c.frozen = phase == 1;
  c.fixed_option = static_cast<int>(options.index_of(phase1_k_f));
  return c;
}

Vector Agent::raw_input(const snake::Observation& obs, const Action& prev_action,
                        double prev_k_f) {
  Vector x(static_cast<Eigen::Index>(kInputDim));
  for (std::size_t i = 0; i < kObsDim; ++i) x(static_cast<Eigen::Index>(i)) = obs[i];
  for (std::size_t i = 0; i < kActionDim; ++i) {
    x(static_cast<Eigen::Index>(kObsDim + i)) = prev_action[i];
  }
  x(static_cast<Eigen::Index>(kInputDim - 1)) = prev_k_f;
  return x;
}

Vector Agent::input(const snake::Observation& obs, const Action& prev_action,
                    double prev_k_f) const {
  return normalizer.normalize(raw_input(obs, prev_action, prev_k_f));
}

std::string EpisodeLog::json(const OptionSet& options) const {
  nlohmann::ordered_json j;
  j["episode"] = episode;
  j["level"] = level;
  j["outcome"] = task::to_string(outcome);
  j["steps"] = steps;
  j["return"] = ret;
  j["phase"] = phase;
  j["worker"] = worker;
  nlohmann::ordered_json usage = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < options.size(); ++k) {
    usage[option_label(options.values[k])] = k < option_steps.size() ? option_steps[k] : 0;
  }
  j["option_usage"] = usage;
  return j.dump();
}

Trainer::Trainer(TrainerConfig config, task::EnvConfig env, task::Curriculum curriculum,
                 std::uint64_t seed)
    : config_(std::move(config)),
      env_config_(std::move(env)),
      curriculum_(std::move(curriculum)),
      seed_(seed),
      update_rng_(make_stream(seed, "update")) {
  config_.policy.n_options = config_.options.size();
  config_.policy.input_dim = kInputDim;
  config_.validate();
  Rng init = make_stream(seed, "policy-init");
  agent_.net = PolicyNet(config_.policy, init);
  agent_.normalizer = RunningNormalizer(kInputDim);
  agent_.options = config_.options;
  agent_.phase1_k_f = config_.phase1_k_f;
  adam_ = Adam(agent_.net.parameters(), config_.learning_rate);
  make_workers();
}

void Trainer::make_workers() {
  workers_.clear();
  for (std::size_t w = 0; w < config_.workers; ++w) {
    workers_.push_back(Worker{
        task::GoalReachingEnv(env_config_, curriculum_, make_stream(seed_, "env", w)),
        make_stream(seed_, "policy", w), -1, Action{}, config_.phase1_k_f, true,
        snake::Observation{}, std::vector<std::size_t>(config_.options.size(), 0)});
  }
}

Trainer::WorkerBatch Trainer::collect(Worker& w, std::size_t index, std::size_t level) const {
  WorkerBatch out;
  const OptionControl control = agent_.control();
  auto& env = w.env;
  for (std::size_t s = 0; s < config_.steps_per_worker; ++s) {
    if (w.need_begin) {
      w.obs = env.begin_episode(level);
      w.option = -1;
      w.prev_action = Action{};
      w.prev_k_f = config_.phase1_k_f;
      std::fill(w.usage.begin(), w.usage.end(), 0);
      w.need_begin = false;
    }
    const Vector raw = Agent::raw_input(w.obs, w.prev_action, w.prev_k_f);
    const Vector input = agent_.normalizer.normalize(raw);
    const Decision d = act(agent_.net, input, w.option, control, ActMode::stochastic, w.rng);
    const double k_f = config_.options.values[static_cast<std::size_t>(d.option)];
    const task::StepResult r = env.step(decode_action(d.action), k_f);

    Transition t;
    t.input = input;
    t.action = d.action;
    t.option = d.option;
    t.prev_option = w.option;
    t.reward = r.reward;
    t.q = d.q;
    t.log_prob = d.log_prob;
    t.done = task::is_terminal(r.status);
    out.segment.steps.push_back(std::move(t));
    out.raw_inputs.push_back(raw);
    ++w.usage[static_cast<std::size_t>(d.option)];

    w.option = d.option;
    w.prev_action = d.action;
    w.prev_k_f = k_f;
    w.obs = r.observation;
    if (task::is_terminal(r.status)) {
      EpisodeLog log;
      log.worker = index;
      log.level = env.goal().level;
      log.outcome = r.status;
      log.steps = env.episode_steps();
      log.ret = env.episode_return();
      log.phase = agent_.phase;
      log.option_steps = w.usage;
      out.episodes.push_back(std::move(log));
      w.need_begin = true;
    }
  }
  if (!out.segment.closed()) {
    // Value of continuing: stay in the option with probability 1 - beta.
    const Vector input = agent_.input(w.obs, w.prev_action, w.prev_k_f);
    const auto heads = agent_.net.evaluate(input.transpose());
    const auto o = static_cast<Eigen::Index>(w.option);
    const double beta = control.frozen ? 0.0 : heads.beta(0, o);
    double v = 0.0;
    for (Eigen::Index k = 0; k < heads.q.cols(); ++k) {
      v += std::exp(heads.option_logp(0, k)) * heads.q(0, k);
    }
    out.segment.bootstrap = (1.0 - beta) * heads.q(0, o) + beta * v;
  }
  return out;
}

void Trainer::absorb_episode(EpisodeLog log, const EpisodeSink& sink) {
  log.episode = ++episodes_;
  const auto [next, promoted] = task::update_curriculum(tracker_, log.outcome, curriculum_);
  tracker_ = next;
  recent_returns_.push_back(log.ret);
  while (recent_returns_.size() > kReturnWindow) recent_returns_.pop_front();
  const double mean = std::accumulate(recent_returns_.begin(), recent_returns_.end(), 0.0) /
                      static_cast<double>(recent_returns_.size());
  const bool full = recent_returns_.size() == kReturnWindow;
  if (promoted ||
      (full && mean > best_recent_mean_ + config_.plateau_tolerance * std::abs(best_recent_mean_))) {
    stall_ = 0;
  } else {
    ++stall_;
  }
  if (full) best_recent_mean_ = std::max(best_recent_mean_, mean);
  if (promoted) {
    // Promotion moves the return scale; measure the plateau afresh.
    recent_returns_.clear();
    best_recent_mean_ = -1e300;
  }
  if (sink) sink(log);
}

bool Trainer::train_batch(const EpisodeSink& on_episode, const UpdateSink& on_update) {
  if (episodes_ >= config_.episodes) return false;
  const std::size_t level = tracker_.level();
  std::vector<WorkerBatch> batches(workers_.size());
  if (workers_.size() == 1) {
    batches[0] = collect(workers_[0], 0, level);
  } else {
    // Workers only read the agent; the learner waits for all of them.
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers_.size());
    for (std::size_t w = 0; w < workers_.size(); ++w) {
      pool.emplace_back([&, w] {
        try {
          batches[w] = collect(workers_[w], w, level);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<const Transition*> steps;
  std::vector<double> adv, ret;
  for (auto& b : batches) {
    const Advantages a = compute_advantages(b.segment, config_.gamma, config_.lambda);
    for (std::size_t i = 0; i < b.segment.steps.size(); ++i) {
      steps.push_back(&b.segment.steps[i]);
      adv.push_back(a.advantages[i]);
      ret.push_back(a.returns[i]);
    }
  }
  const Batch batch = make_batch(steps, adv, ret);
  UpdateConfig uc = config_.update;
  uc.loss.train_options = agent_.phase == 2;

  const PolicyNet before_net = agent_.net;
  const Adam before_adam = adam_;
  try {
    UpdateLog log;
    log.loss = update(agent_.net, adam_, batch, uc, update_rng_);
    ++updates_;
    for (auto& b : batches) {
      for (const auto& x : b.raw_inputs) agent_.normalizer.observe(x);
    }
    for (auto& b : batches) {
      for (auto& e : b.episodes) absorb_episode(std::move(e), on_episode);
    }
    log.update = updates_;
    log.episodes = episodes_;
    log.level = tracker_.level();
    log.phase = agent_.phase;
    if (on_update) on_update(log);
  } catch (const NumericalBlowupError&) {
    agent_.net = before_net;
    adam_ = before_adam;
    throw;
  }

  if (agent_.phase == 1 &&
      (stall_ >= config_.plateau_window || episodes_ >= config_.phase1_max_episodes)) {
    // Options start phase 2 as equals of the phase-1 policy.
    agent_.phase = 2;
    agent_.net.clone_option(agent_.control().fixed_option);
    for (auto& w : workers_) w.option = -1;
  }
  return true;
}

void Trainer::run(const EpisodeSink& on_episode, const UpdateSink& on_update,
                  const std::function<void(const Trainer&)>& on_batch) {
  while (train_batch(on_episode, on_update)) {
    if (on_batch) on_batch(*this);
  }
}

namespace {

json matrix_json(const ad::Matrix& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = data;
  return j;
}

ad::Matrix matrix_from(const json& j, const std::string& what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw PersistenceError("checkpoint matrix '" + what + "' has inconsistent shape");
  }
  ad::Matrix m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++];
  }
  return m;
}

json vector_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vector_from(const json& j) {
  const auto d = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
}

}  // namespace

std::string Trainer::checkpoint() const {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["seed"] = seed_;
  json c;
  c["learning_rate"] = config_.learning_rate;
  c["clip"] = config_.update.loss.clip;
  c["value_coef"] = config_.update.loss.value_coef;
  c["entropy_coef"] = config_.update.loss.entropy_coef;
  c["xi"] = config_.update.loss.xi;
  c["epochs"] = config_.update.epochs;
  c["minibatch"] = config_.update.minibatch;
  c["max_grad_norm"] = config_.update.max_grad_norm;
  c["gamma"] = config_.gamma;
  c["lambda"] = config_.lambda;
  c["workers"] = config_.workers;
  c["steps_per_worker"] = config_.steps_per_worker;
  c["episodes"] = config_.episodes;
  c["plateau_window"] = config_.plateau_window;
  c["plateau_tolerance"] = config_.plateau_tolerance;
  c["phase1_max_episodes"] = config_.phase1_max_episodes;
  c["phase1_k_f"] = config_.phase1_k_f;
  c["hidden"] = config_.policy.hidden;
  c["init_log_std"] = config_.policy.init_log_std;
  c["init_termination_bias"] = config_.policy.init_termination_bias;
  c["options"] = config_.options.values;
  j["trainer"] = c;

  json levels = json::array();
  for (const auto& l : curriculum_.levels()) {
    levels.push_back({{"r", l.r}, {"theta", l.theta}, {"rho_l", l.rho_l}, {"rho_u", l.rho_u},
                      {"sigma", l.sigma}, {"n_window", l.n_window}});
  }
  j["curriculum"] = levels;
  j["tracker"] = {{"level", tracker_.level()},
                  {"window", std::vector<bool>(tracker_.window().begin(),
                                               tracker_.window().end())}};
  j["progress"] = {{"episodes", episodes_},
                   {"updates", updates_},
                   {"phase", agent_.phase},
                   {"stall", stall_},
                   {"best_recent_mean", best_recent_mean_},
                   {"recent_returns",
                    std::vector<double>(recent_returns_.begin(), recent_returns_.end())}};

  json params = json::object();
  for (const auto* p : agent_.net.parameters()) params[p->name] = matrix_json(p->value);
  j["parameters"] = params;
  json adam;
  adam["t"] = adam_.t();
  json m = json::array(), v = json::array();
  for (const auto& x : adam_.m()) m.push_back(matrix_json(x));
  for (const auto& x : adam_.v()) v.push_back(matrix_json(x));
  adam["m"] = m;
  adam["v"] = v;
  j["adam"] = adam;
  j["normalizer"] = {{"count", agent_.normalizer.count()},
                     {"mean", vector_json(agent_.normalizer.mean())},
                     {"m2", vector_json(agent_.normalizer.m2())},
                     {"clip", agent_.normalizer.clip()}};
  json rng;
  rng["update"] = serialize_rng(update_rng_);
  json env = json::array(), policy = json::array();
  for (const auto& w : workers_) {
    env.push_back(serialize_rng(w.env.rng()));
    policy.push_back(serialize_rng(w.rng));
  }
  rng["env"] = env;
  rng["policy"] = policy;
  j["rng"] = rng;
  return j.dump();
}

void Trainer::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError("cannot write checkpoint '" + tmp + "'");
    out << checkpoint() << '\n';
    if (!out) throw PersistenceError("short write to checkpoint '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw PersistenceError("cannot move checkpoint into place at '" + path + "'");
  }
}

Trainer Trainer::resume(const std::string& path, task::EnvConfig env) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PersistenceError("cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_checkpoint_text(ss.str(), std::move(env), path);
}

Trainer Trainer::from_checkpoint_text(const std::string& text, task::EnvConfig env,
                                      const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw PersistenceError("checkpoint '" + source + "' is not valid JSON: " + e.what());
  }
  const std::string format = j.value("format", std::string());
  const int version = j.value("version", -1);
  if (format != kCheckpointFormat || version != kCheckpointVersion) {
    throw PersistenceError("checkpoint '" + source + "' has format '" + format + "' version " +
                           std::to_string(version) + "; expected '" + kCheckpointFormat +
                           "' version " + std::to_string(kCheckpointVersion));
  }
  try {
    const json& c = j.at("trainer");
    TrainerConfig config;
    config.learning_rate = c.at("learning_rate").get<double>();
    config.update.loss.clip = c.at("clip").get<double>();
    config.update.loss.value_coef = c.at("value_coef").get<double>();
    config.update.loss.entropy_coef = c.at("entropy_coef").get<double>();
    config.update.loss.xi = c.at("xi").get<double>();
    config.update.epochs = c.at("epochs").get<std::size_t>();
    config.update.minibatch = c.at("minibatch").get<std::size_t>();
    config.update.max_grad_norm = c.at("max_grad_norm").get<double>();
    config.gamma = c.at("gamma").get<double>();
    config.lambda = c.at("lambda").get<double>();
    config.workers = c.at("workers").get<std::size_t>();
    config.steps_per_worker = c.at("steps_per_worker").get<std::size_t>();
    config.episodes = c.at("episodes").get<std::size_t>();
    config.plateau_window = c.at("plateau_window").get<std::size_t>();
    config.plateau_tolerance = c.at("plateau_tolerance").get<double>();
    config.phase1_max_episodes = c.at("phase1_max_episodes").get<std::size_t>();
    config.phase1_k_f = c.at("phase1_k_f").get<double>();
    config.policy.hidden = c.at("hidden").get<std::size_t>();
    config.policy.init_log_std = c.at("init_log_std").get<double>();
    config.policy.init_termination_bias = c.at("init_termination_bias").get<double>();
    config.options.values = c.at("options").get<std::vector<double>>();

    std::vector<task::CurriculumLevel> levels;
    for (const auto& l : j.at("curriculum")) {
      levels.push_back({l.at("r").get<double>(), l.at("theta").get<double>(),
                        l.at("rho_l").get<double>(), l.at("rho_u").get<double>(),
                        l.at("sigma").get<double>(), l.at("n_window").get<std::size_t>()});
    }
    Trainer t(config, std::move(env), task::Curriculum(std::move(levels)),
              j.at("seed").get<std::uint64_t>());

    const auto window = j.at("tracker").at("window").get<std::vector<bool>>();
    t.tracker_ = task::CurriculumTracker(j.at("tracker").at("level").get<std::size_t>(),
                                         std::deque<bool>(window.begin(), window.end()));
    const json& p = j.at("progress");
    t.episodes_ = p.at("episodes").get<std::size_t>();
    t.updates_ = p.at("updates").get<std::size_t>();
    t.agent_.phase = p.at("phase").get<int>();
    t.stall_ = p.at("stall").get<std::size_t>();
    t.best_recent_mean_ = p.at("best_recent_mean").get<double>();
    const auto recent = p.at("recent_returns").get<std::vector<double>>();
    t.recent_returns_.assign(recent.begin(), recent.end());

    const json& params = j.at("parameters");
    for (auto* prm : t.agent_.net.parameters()) {
      ad::Matrix m = matrix_from(params.at(prm->name), prm->name);
      if (m.rows() != prm->value.rows() || m.cols() != prm->value.cols()) {
        throw PersistenceError("checkpoint '" + source + "': parameter " + prm->name +
                               " has the wrong shape");
      }
      prm->value = std::move(m);
      prm->zero_grad();
    }
    const json& adam = j.at("adam");
    if (adam.at("m").size() != t.adam_.m().size() || adam.at("v").size() != t.adam_.v().size()) {
      throw PersistenceError("checkpoint '" + source + "': optimizer state size mismatch");
    }
    for (std::size_t i = 0; i < t.adam_.m().size(); ++i) {
      t.adam_.m()[i] = matrix_from(adam.at("m")[i], "adam.m");
      t.adam_.v()[i] = matrix_from(adam.at("v")[i], "adam.v");
    }
    t.adam_.set_t(adam.at("t").get<std::size_t>());
    const json& n = j.at("normalizer");
    t.agent_.normalizer =
        RunningNormalizer(kInputDim, n.at("clip").get<double>());
    t.agent_.normalizer.restore(n.at("count").get<double>(), vector_from(n.at("mean")),
                                vector_from(n.at("m2")));
    if (t.agent_.normalizer.dim() != kInputDim) {
      throw PersistenceError("checkpoint '" + source + "': normalizer width mismatch");
    }

    const json& rng = j.at("rng");
    t.update_rng_ = deserialize_rng(rng.at("update").get<std::string>());
    const auto& envs = rng.at("env");
    const auto& pols = rng.at("policy");
    if (envs.size() != t.workers_.size() || pols.size() != t.workers_.size()) {
      throw PersistenceError("checkpoint '" + source + "': worker count mismatch");
    }
    t.workers_.clear();
    for (std::size_t w = 0; w < config.workers; ++w) {
      t.workers_.push_back(Worker{
          task::GoalReachingEnv(t.env_config_, t.curriculum_,
                                deserialize_rng(envs[w].get<std::string>())),
          deserialize_rng(pols[w].get<std::string>()), -1, Action{}, config.phase1_k_f, true,
          snake::Observation{}, std::vector<std::size_t>(config.options.size(), 0)});
    }
    return t;
  } catch (const json::exception& e) {
    throw PersistenceError("checkpoint '" + source + "' (version " + std::to_string(version) +
                           ") is missing or has malformed fields: " + e.what());
  }
}

std::size_t EvalReport::distinct_options() const {
  return static_cast<std::size_t>(
      std::count_if(option_steps.begin(), option_steps.end(), [](std::size_t n) { return n > 0; }));
}

EvalReport evaluate(const Agent& agent, task::GoalReachingEnv& env, const EvalConfig& config,
                    Rng& rng) {
  EvalReport report;
  report.option_steps.assign(agent.options.size(), 0);
  const OptionControl control = agent.control();
  double speed_sum = 0.0, time_sum = 0.0;
  for (std::size_t e = 0; e < config.episodes; ++e) {
    snake::Observation obs = env.reset(config.level);
    EvalEpisode row;
    row.option_steps.assign(agent.options.size(), 0);
    row.start_distance = env.frame().l_g;
    int option = -1;
    Action prev{};
    double prev_k_f = agent.phase1_k_f;
    task::StepResult r;
    do {
      const Decision d = act(agent.net, agent.input(obs, prev, prev_k_f), option, control,
                             config.mode, rng);
      const double k_f = agent.options.values[static_cast<std::size_t>(d.option)];
      r = env.step(decode_action(d.action), k_f);
      ++row.option_steps[static_cast<std::size_t>(d.option)];
      option = d.option;
      prev = d.action;
      prev_k_f = k_f;
      obs = r.observation;
    } while (!task::is_terminal(r.status));
    row.outcome = r.status;
    row.steps = env.episode_steps();
    row.ret = env.episode_return();
    row.end_distance = env.frame().l_g;
    const double duration = static_cast<double>(row.steps) * cpg::kControlPeriod;
    speed_sum += (row.start_distance - row.end_distance) / duration;
    if (row.outcome == task::EpisodeStatus::success) {
      ++report.successes;
      time_sum += duration;
    }
    for (std::size_t k = 0; k < row.option_steps.size(); ++k) {
      report.option_steps[k] += row.option_steps[k];
    }
    report.rows.push_back(std::move(row));
  }
  report.episodes = config.episodes;
  if (config.episodes > 0) {
    report.success_rate =
        static_cast<double>(report.successes) / static_cast<double>(config.episodes);
    report.mean_speed = speed_sum / static_cast<double>(config.episodes);
  }
  report.mean_time_to_goal = report.successes > 0
                                 ? time_sum / static_cast<double>(report.successes)
                                 : std::numeric_limits<double>::quiet_NaN();
  return report;
}

std::vector<RolloutRow> rollout(const Agent& agent, task::GoalReachingEnv& env,
                                const std::vector<snake::Vec2>& goals, std::size_t level,
                                ActMode mode, Rng& rng) {
  std::vector<RolloutRow> rows;
  const OptionControl control = agent.control();
  int option = -1;
  Action prev{};
  double prev_k_f = agent.phase1_k_f;
  for (std::size_t g = 0; g < goals.size(); ++g) {
    snake::Observation obs = env.issue_goal(goals[g], level);
    task::StepResult r;
    do {
      const Decision d =
          act(agent.net, agent.input(obs, prev, prev_k_f), option, control, mode, rng);
      const double k_f = agent.options.values[static_cast<std::size_t>(d.option)];
      r = env.step(decode_action(d.action), k_f);
      RolloutRow row;
      row.row.t = env.body_state().t;
      row.row.head = snake::head_position(env.body_state(), env.body_params());
      row.row.heading = snake::heading(env.body_state(), env.body_params());
      row.row.kappa = snake::curvature(env.body_state(), env.body_params());
      row.row.psi = r.psi;
      row.row.rho_g = r.frame.rho_g;
      row.row.theta_g = r.frame.theta_g;
      row.row.v_g = r.frame.v_g;
      row.row.reward = r.reward;
      row.goal_index = g;
      row.k_f = k_f;
      row.option = d.option;
      row.option_switched = option >= 0 && d.option != option;
      row.status = r.status;
      rows.push_back(row);
      option = d.option;
      prev = d.action;
      prev_k_f = k_f;
      obs = r.observation;
    } while (!task::is_terminal(r.status));
    if (r.status != task::EpisodeStatus::success) break;
  }
  return rows;
}

}  // namespace snakecpg::ppoc
