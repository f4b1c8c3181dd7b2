#pragma once

// Goal-reaching episodes over the snake body: curriculum levels, goal
// sampling, reward, termination and the promotion tracker.

#include <cstddef>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "snakecpg/cpg.hpp"
#include "snakecpg/rng.hpp"
#include "snakecpg/snake.hpp"

namespace snakecpg::task {

struct CurriculumLevel {
  double r = 0.4;       // acceptance radius, m
  double theta = 0.0;   // fan half-angle, rad
  double rho_l = 0.4;   // sampling distance bounds, m
  double rho_u = 0.5;
  double sigma = 0.9;   // promotion success rate
  std::size_t n_window = 100;
};

class Curriculum {
 public:
  /// Throws ConfigError unless every level is well formed and consecutive
  /// levels shrink r and the distance band while widening theta and rho_u.
  explicit Curriculum(std::vector<CurriculumLevel> levels);

  /// Six levels: r 0.40 -> 0.15 m, theta 10 -> 60 deg, rho_u 0.5 -> 1.5 m.
  static Curriculum default_table();

  const CurriculumLevel& level(std::size_t i) const;
  std::size_t size() const { return levels_.size(); }
  const std::vector<CurriculumLevel>& levels() const { return levels_; }

 private:
  std::vector<CurriculumLevel> levels_;
};

enum class EpisodeStatus { running, success, starved, missed_goal, timeout };

const char* to_string(EpisodeStatus status);
EpisodeStatus status_from_string(const std::string& name);
inline bool is_terminal(EpisodeStatus s) { return s != EpisodeStatus::running; }

struct GoalSpec {
  snake::Vec2 position;
  snake::Vec2 origin;  // head position when the goal was issued
  std::size_t level = 0;
};

/// Area-uniform draw over the fan centred on the head and its heading.
GoalSpec sample_goal(const CurriculumLevel& level, std::size_t level_index, snake::Vec2 head,
                     double heading, Rng& rng);

struct RewardWeights {
  double c_v = 1.0;
  double c_g = 1.0;
};

/// c_v |v_g| + c_g cos(theta_g) * sum_{k <= level} I(l_g < r_k) / r_k.
double reward(double v_g, double theta_g, double l_g, const Curriculum& curriculum,
              std::size_t level, const RewardWeights& weights = {});

struct TerminationRules {
  std::size_t starvation_steps = 60;
  double motion_epsilon = 1e-3;  // m
  std::size_t missed_goal_steps = 30;
  std::size_t step_cap = 2000;
};

/// Per-episode run lengths feeding check_termination().
class TerminationHistory {
 public:
  TerminationHistory() = default;
  explicit TerminationHistory(double motion_epsilon) : motion_epsilon_(motion_epsilon) {}
  /// Anchors the stillness run at the head position the episode starts from.
  TerminationHistory(double motion_epsilon, snake::Vec2 start)
      : motion_epsilon_(motion_epsilon), anchored_(true), anchor_(start) {}

  void record(double v_g, double l_g, snake::Vec2 head);

  std::size_t steps() const { return steps_; }
  double last_l_g() const { return last_l_g_; }
  std::size_t negative_run() const { return negative_run_; }
  /// Consecutive steps the head has stayed within motion_epsilon of an anchor.
  std::size_t still_run() const { return still_run_; }

 private:
  double motion_epsilon_ = 1e-3;
  std::size_t steps_ = 0;
  double last_l_g_ = 0.0;
  std::size_t negative_run_ = 0;
  std::size_t still_run_ = 0;
  bool anchored_ = false;
  snake::Vec2 anchor_;
};

EpisodeStatus check_termination(const TerminationHistory& history, double radius,
                                const TerminationRules& rules = {});

/// Sliding window of outcomes at the current level.
class CurriculumTracker {
 public:
  CurriculumTracker() = default;
  CurriculumTracker(std::size_t level, std::deque<bool> window)
      : level_(level), window_(std::move(window)) {}

  std::size_t level() const { return level_; }
  const std::deque<bool>& window() const { return window_; }
  std::size_t successes() const;

  /// Returns true on promotion. The top level is never left.
  bool record(EpisodeStatus outcome, const Curriculum& curriculum);

 private:
  std::size_t level_ = 0;
  std::deque<bool> window_;
};

std::pair<CurriculumTracker, bool> update_curriculum(CurriculumTracker tracker,
                                                     EpisodeStatus outcome,
                                                     const Curriculum& curriculum);

struct EnvConfig {
  cpg::MatsuokaParams cpg;
  snake::SnakeParams body;
  bool domain_randomization = true;
  snake::DomainRandomization ranges;
  RewardWeights reward;
  TerminationRules rules;
  /// CPG pre-roll at u = 0.5 so episodes start on the limit cycle.
  double cpg_warmup = 20.0;
};

struct StepResult {
  snake::Observation observation{};
  double reward = 0.0;
  EpisodeStatus status = EpisodeStatus::running;
  snake::GoalFrame frame;
  cpg::CpgOutput psi{};
};

struct EpisodeRecord {
  std::size_t level = 0;
  EpisodeStatus outcome = EpisodeStatus::running;
  std::size_t steps = 0;
  double ret = 0.0;
};

/// JSON object text with keys level, outcome, steps, return.
std::string episode_json(const EpisodeRecord& record);

class GoalReachingEnv {
 public:
  GoalReachingEnv(EnvConfig config, Curriculum curriculum, Rng rng);

  /// New body (fresh randomisation, straight at the origin) and new goal.
  snake::Observation reset(std::size_t level);
  /// Keeps the body where it is and issues a new goal.
  snake::Observation next_goal(std::size_t level);
  /// Keeps the body where it is and issues the given goal.
  snake::Observation issue_goal(snake::Vec2 goal, std::size_t level);
  /// Continues after success, resets after any failure.
  snake::Observation begin_episode(std::size_t level);

  /// One 60 Hz control step with the given tonic input and frequency ratio.
  StepResult step(const cpg::TonicVector& u, double k_f);

  const snake::SnakeState& body_state() const { return body_; }
  const snake::SnakeParams& body_params() const { return params_; }
  const cpg::Network& network() const { return network_; }
  const GoalSpec& goal() const { return goal_; }
  const snake::GoalFrame& frame() const { return frame_; }
  const Curriculum& curriculum() const { return curriculum_; }
  std::size_t episode_steps() const { return history_.steps(); }
  double episode_return() const { return return_; }
  EpisodeStatus status() const { return status_; }
  const Rng& rng() const { return rng_; }

 private:
  snake::Observation start_goal(std::size_t level);

  EnvConfig config_;
  Curriculum curriculum_;
  Rng rng_;
  cpg::CpgState warm_cpg_;
  snake::SnakeParams params_;
  snake::SnakeState body_;
  cpg::Network network_;
  GoalSpec goal_;
  snake::GoalFrame frame_;
  TerminationHistory history_;
  EpisodeStatus status_ = EpisodeStatus::running;
  double return_ = 0.0;
  bool started_ = false;
};

}  // namespace snakecpg::task
