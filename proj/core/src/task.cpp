#include "snakecpg/task.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "snakecpg/cpg_analysis.hpp"
#include "snakecpg/error.hpp"

namespace snakecpg::task {

namespace {

constexpr double kDeg = snake::kPi / 180.0;

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("curriculum: " + what);
}

}  // namespace

Curriculum::Curriculum(std::vector<CurriculumLevel> levels) : levels_(std::move(levels)) {
  require(!levels_.empty(), "at least one level is required");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const auto& l = levels_[i];
    const std::string at = "level " + std::to_string(i) + ": ";
    require(std::isfinite(l.r) && l.r > 0.0, at + "r must be positive");
    require(std::isfinite(l.theta) && l.theta >= 0.0 && l.theta <= snake::kPi,
            at + "theta must lie in [0, pi]");
    require(std::isfinite(l.rho_l) && l.rho_l >= 0.0, at + "rho_l must be non-negative");
    require(std::isfinite(l.rho_u) && l.rho_u > l.rho_l, at + "rho_u must exceed rho_l");
    require(l.sigma > 0.0 && l.sigma <= 1.0, at + "sigma must lie in (0, 1]");
    require(l.n_window > 0, at + "n_window must be positive");
    if (i == 0) continue;
    const auto& p = levels_[i - 1];
    require(l.r < p.r, at + "r must shrink");
    require(l.theta > p.theta, at + "theta must widen");
    require(l.rho_u > p.rho_u, at + "rho_u must grow");
    require(l.rho_u - l.rho_l < p.rho_u - p.rho_l, at + "distance band must narrow");
  }
}

Curriculum Curriculum::default_table() {
  const double r[] = {0.40, 0.35, 0.30, 0.25, 0.20, 0.15};
  const double theta_deg[] = {10, 20, 30, 40, 50, 60};
  const double rho_u[] = {0.5, 0.7, 0.9, 1.1, 1.3, 1.5};
  const double width[] = {0.10, 0.09, 0.08, 0.07, 0.06, 0.05};
  std::vector<CurriculumLevel> levels;
  for (int i = 0; i < 6; ++i) {
    levels.push_back({r[i], theta_deg[i] * kDeg, rho_u[i] - width[i], rho_u[i], 0.9, 100});
  }
  return Curriculum(std::move(levels));
}

const CurriculumLevel& Curriculum::level(std::size_t i) const {
  if (i >= levels_.size()) {
    throw ParameterDomainError("curriculum level " + std::to_string(i) + " out of range");
  }
  return levels_[i];
}

const char* to_string(EpisodeStatus status) {
  switch (status) {
    case EpisodeStatus::running: return "running";
    case EpisodeStatus::success: return "success";
    case EpisodeStatus::starved: return "starved";
    case EpisodeStatus::missed_goal: return "missed_goal";
    case EpisodeStatus::timeout: return "timeout";
  }
  return "unknown";
}

EpisodeStatus status_from_string(const std::string& name) {
  for (auto s : {EpisodeStatus::running, EpisodeStatus::success, EpisodeStatus::starved,
                 EpisodeStatus::missed_goal, EpisodeStatus::timeout}) {
    if (name == to_string(s)) return s;
  }
  throw PersistenceError("unknown episode status '" + name + "'");
}

GoalSpec sample_goal(const CurriculumLevel& level, std::size_t level_index, snake::Vec2 head,
                     double heading, Rng& rng) {
  // Area-uniform: rho^2 uniform between the squared bounds.
  const double r2 = uniform(rng, level.rho_l * level.rho_l, level.rho_u * level.rho_u);
  const double rho = std::sqrt(r2);
  const double angle = level.theta > 0.0 ? uniform(rng, -level.theta, level.theta) : 0.0;
  const double dir = heading + angle;
  GoalSpec g;
  g.position = head + snake::Vec2{rho * std::cos(dir), rho * std::sin(dir)};
  g.origin = head;
  g.level = level_index;
  return g;
}

double reward(double v_g, double theta_g, double l_g, const Curriculum& curriculum,
              std::size_t level, const RewardWeights& weights) {
  double rings = 0.0;
  for (std::size_t k = 0; k <= level; ++k) {
    const double r = curriculum.level(k).r;
    if (l_g < r) rings += 1.0 / r;
  }
  return weights.c_v * std::abs(v_g) + weights.c_g * std::cos(theta_g) * rings;
}

void TerminationHistory::record(double v_g, double l_g, snake::Vec2 head) {
  ++steps_;
  last_l_g_ = l_g;
  negative_run_ = v_g < 0.0 ? negative_run_ + 1 : 0;
  if (!anchored_ || snake::norm(head - anchor_) >= motion_epsilon_) {
    anchor_ = head;
    anchored_ = true;
    still_run_ = 0;
  } else {
    ++still_run_;
  }
}

EpisodeStatus check_termination(const TerminationHistory& history, double radius,
                                const TerminationRules& rules) {
  if (history.steps() == 0) return EpisodeStatus::running;
  if (history.last_l_g() < radius) return EpisodeStatus::success;
  if (history.still_run() >= rules.starvation_steps) return EpisodeStatus::starved;
  if (history.negative_run() > rules.missed_goal_steps) return EpisodeStatus::missed_goal;
  if (history.steps() >= rules.step_cap) return EpisodeStatus::timeout;
  return EpisodeStatus::running;
}

std::size_t CurriculumTracker::successes() const {
  std::size_t n = 0;
  for (bool s : window_) n += s ? 1 : 0;
  return n;
}

bool CurriculumTracker::record(EpisodeStatus outcome, const Curriculum& curriculum) {
  if (!is_terminal(outcome)) {
    throw ContractViolation("curriculum update needs a terminal outcome");
  }
  const auto& lvl = curriculum.level(level_);
  window_.push_back(outcome == EpisodeStatus::success);
  while (window_.size() > lvl.n_window) window_.pop_front();
  if (window_.size() < lvl.n_window || level_ + 1 >= curriculum.size()) return false;
  // Integer comparison avoids 0.9 * 100 rounding below 90.
  const auto needed =
      static_cast<std::size_t>(std::ceil(lvl.sigma * static_cast<double>(lvl.n_window) - 1e-9));
  if (successes() < needed) return false;
  ++level_;
  window_.clear();
  return true;
}

std::pair<CurriculumTracker, bool> update_curriculum(CurriculumTracker tracker,
                                                     EpisodeStatus outcome,
                                                     const Curriculum& curriculum) {
  const bool promoted = tracker.record(outcome, curriculum);
  return {std::move(tracker), promoted};
}

std::string episode_json(const EpisodeRecord& record) {
  nlohmann::ordered_json j;
  j["level"] = record.level;
  j["outcome"] = to_string(record.outcome);
  j["steps"] = record.steps;
  j["return"] = record.ret;
  return j.dump();
}

GoalReachingEnv::GoalReachingEnv(EnvConfig config, Curriculum curriculum, Rng rng)
    : config_(std::move(config)),
      curriculum_(std::move(curriculum)),
      rng_(std::move(rng)),
      params_(config_.body),
      body_(snake::SnakeState::at_rest(config_.body)),
      network_(config_.cpg),
      history_(config_.rules.motion_epsilon) {
  config_.cpg.validate();
  config_.body.validate();
  cpg::Network warm(config_.cpg);
  const auto u = cpg::TonicVector::uniform(0.5);
  const auto n = static_cast<long>(std::llround(config_.cpg_warmup / cpg::kSubstepDt));
  for (long k = 0; k < n; ++k) warm.advance(u, 1.0, cpg::kSubstepDt);
  warm_cpg_ = warm.state();
  network_.reset(warm_cpg_);
}

snake::Observation GoalReachingEnv::reset(std::size_t level) {
  params_ = config_.domain_randomization
                ? snake::sample_domain_randomization(rng_, config_.body, config_.ranges)
                : config_.body;
  body_ = snake::SnakeState::at_rest(params_);
  network_.reset(warm_cpg_);
  return start_goal(level);
}

snake::Observation GoalReachingEnv::next_goal(std::size_t level) {
  if (!started_) return reset(level);
  return start_goal(level);
}

snake::Observation GoalReachingEnv::issue_goal(snake::Vec2 goal, std::size_t level) {
  if (!started_) {
    params_ = config_.body;
    body_ = snake::SnakeState::at_rest(params_);
    network_.reset(warm_cpg_);
    started_ = true;
  }
  curriculum_.level(level);
  goal_ = GoalSpec{goal, snake::head_position(body_, params_), level};
  frame_ = snake::goal_frame(body_, params_, goal_.position, goal_.origin);
  history_ = TerminationHistory(config_.rules.motion_epsilon, goal_.origin);
  status_ = EpisodeStatus::running;
  return_ = 0.0;
  return snake::observe(body_, params_, frame_, frame_, cpg::kControlPeriod);
}

snake::Observation GoalReachingEnv::begin_episode(std::size_t level) {
  return status_ == EpisodeStatus::success ? next_goal(level) : reset(level);
}

snake::Observation GoalReachingEnv::start_goal(std::size_t level) {
  started_ = true;
  goal_ = sample_goal(curriculum_.level(level), level, snake::head_position(body_, params_),
                      snake::heading(body_, params_), rng_);
  frame_ = snake::goal_frame(body_, params_, goal_.position, goal_.origin);
  history_ = TerminationHistory(config_.rules.motion_epsilon, goal_.origin);
  status_ = EpisodeStatus::running;
  return_ = 0.0;
  return snake::observe(body_, params_, frame_, frame_, cpg::kControlPeriod);
}

StepResult GoalReachingEnv::step(const cpg::TonicVector& u, double k_f) {
  if (!started_ || is_terminal(status_)) {
    throw ContractViolation("step() called outside a running episode");
  }
  StepResult out;
  for (int k = 0; k < cpg::kSubsteps; ++k) {
    out.psi = network_.output();
    body_ = snake::substep(body_, out.psi, params_, cpg::kSubstepDt);
    network_.advance(u, k_f, cpg::kSubstepDt);
  }
  const snake::GoalFrame previous = frame_;
  frame_ = snake::goal_frame(body_, params_, goal_.position, goal_.origin);
  out.frame = frame_;
  out.observation = snake::observe(body_, params_, frame_, previous, cpg::kControlPeriod);
  out.reward = reward(frame_.v_g, frame_.theta_g, frame_.l_g, curriculum_, goal_.level,
                      config_.reward);
  history_.record(frame_.v_g, frame_.l_g, snake::head_position(body_, params_));
  status_ = check_termination(history_, curriculum_.level(goal_.level).r, config_.rules);
  out.status = status_;
  return_ += out.reward;
  return out;
}

}  // namespace snakecpg::task
