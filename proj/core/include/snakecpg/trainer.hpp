#pragma once

// Two-phase PPOC training over parallel goal-reaching workers, plus policy
// evaluation, fixed-goal rollouts and checkpoint persistence.

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "snakecpg/ppoc.hpp"
#include "snakecpg/task.hpp"

namespace snakecpg::ppoc {

struct TrainerConfig {
  double learning_rate = 5e-4;
  UpdateConfig update;
  double gamma = 0.99;
  double lambda = 0.95;
  std::size_t workers = 4;
  std::size_t steps_per_worker = 512;  // transitions per worker per update
  std::size_t episodes = 2000;         // budget across all workers
  /// Phase 2 starts after plateau_window episodes with neither a promotion
  /// nor a relative gain of plateau_tolerance in the trailing-100 mean
  /// return, and at the latest after phase1_max_episodes.
  std::size_t plateau_window = 300;
  double plateau_tolerance = 0.01;
  std::size_t phase1_max_episodes = 1200;
  double phase1_k_f = 1.0;
  PolicySpec policy;
  OptionSet options;

  void validate() const;
};

/// Network plus everything needed to turn observations into decisions.
struct Agent {
  PolicyNet net;
  RunningNormalizer normalizer;
  OptionSet options;
  int phase = 1;
  double phase1_k_f = 1.0;

  OptionControl control() const;
  /// Normalised [observation, previous action, previous K_f].
  Vector input(const snake::Observation& obs, const Action& prev_action, double prev_k_f) const;
  static Vector raw_input(const snake::Observation& obs, const Action& prev_action,
                          double prev_k_f);
};

struct EpisodeLog {
  std::size_t episode = 0;  // 1-based, global across workers
  std::size_t worker = 0;
  std::size_t level = 0;
  task::EpisodeStatus outcome = task::EpisodeStatus::running;
  std::size_t steps = 0;
  double ret = 0.0;
  int phase = 1;
  std::vector<std::size_t> option_steps;  // control steps spent in each option

  /// One JSON object: episode, level, outcome, steps, return, phase, option_usage.
  std::string json(const OptionSet& options) const;
};

struct UpdateLog {
  std::size_t update = 0;
  std::size_t episodes = 0;
  std::size_t level = 0;
  int phase = 1;
  LossReport loss;
};

class Trainer {
 public:
  Trainer(TrainerConfig config, task::EnvConfig env, task::Curriculum curriculum,
          std::uint64_t seed);

  using EpisodeSink = std::function<void(const EpisodeLog&)>;
  using UpdateSink = std::function<void(const UpdateLog&)>;

  /// Collects one batch from every worker and applies one update. Returns
  /// false once the episode budget is spent (no work is done then).
  bool train_batch(const EpisodeSink& on_episode = {}, const UpdateSink& on_update = {});
  /// Repeats train_batch() until the budget is spent. `on_batch` runs after
  /// every update (checkpointing hook). On a numerical blow-up the weights
  /// are rolled back to the last good update before the error propagates.
  void run(const EpisodeSink& on_episode = {}, const UpdateSink& on_update = {},
           const std::function<void(const Trainer&)>& on_batch = {});

  const Agent& agent() const { return agent_; }
  const TrainerConfig& config() const { return config_; }
  /// Total episode budget, counted from the start of training; used to
  /// extend a resumed run.
  void set_episode_budget(std::size_t episodes) { config_.episodes = episodes; }
  const task::Curriculum& curriculum() const { return curriculum_; }
  const task::CurriculumTracker& tracker() const { return tracker_; }
  std::size_t episodes() const { return episodes_; }
  std::size_t updates() const { return updates_; }
  int phase() const { return agent_.phase; }
  std::uint64_t seed() const { return seed_; }

  /// Versioned JSON text with weights, optimizer moments, normaliser, option
  /// set, curriculum state, counters and RNG states.
  std::string checkpoint() const;
  void save(const std::string& path) const;
  /// Restores a checkpoint; workers start fresh episodes from their saved
  /// generators. Throws PersistenceError with the file and version on mismatch.
  static Trainer resume(const std::string& path, task::EnvConfig env);
  static Trainer from_checkpoint_text(const std::string& text, task::EnvConfig env,
                                      const std::string& source = "<memory>");

 private:
  struct Worker {
    task::GoalReachingEnv env;
    Rng rng;
    int option = -1;
    Action prev_action{};
    double prev_k_f = 1.0;
    bool need_begin = true;
    snake::Observation obs{};
    std::vector<std::size_t> usage;
  };
  struct WorkerBatch {
    Segment segment;
    std::vector<Vector> raw_inputs;
    std::vector<EpisodeLog> episodes;
  };

  void make_workers();
  WorkerBatch collect(Worker& worker, std::size_t index, std::size_t level) const;
  void absorb_episode(EpisodeLog log, const EpisodeSink& sink);

  TrainerConfig config_;
  task::EnvConfig env_config_;
  task::Curriculum curriculum_;
  std::uint64_t seed_ = 0;
  Agent agent_;
  Adam adam_;
  Rng update_rng_;
  std::vector<Worker> workers_;
  task::CurriculumTracker tracker_;
  std::size_t episodes_ = 0;
  std::size_t updates_ = 0;
  std::deque<double> recent_returns_;
  double best_recent_mean_ = -1e300;
  std::size_t stall_ = 0;
};

struct EvalConfig {
  std::size_t episodes = 100;
  std::size_t level = 0;
  ActMode mode = ActMode::stochastic;
};

struct EvalEpisode {
  task::EpisodeStatus outcome = task::EpisodeStatus::running;
  std::size_t steps = 0;
  double ret = 0.0;
  double start_distance = 0.0;
  double end_distance = 0.0;
  std::vector<std::size_t> option_steps;
};

struct EvalReport {
  std::size_t episodes = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  /// Mean over episodes of (start distance - end distance) / duration, m/s.
  double mean_speed = 0.0;
  /// Mean duration of successful episodes, s; NaN without successes.
  double mean_time_to_goal = 0.0;
  std::vector<std::size_t> option_steps;
  std::vector<EvalEpisode> rows;

  std::size_t distinct_options() const;
};

/// Every episode starts from a freshly reset body at `config.level`.
EvalReport evaluate(const Agent& agent, task::GoalReachingEnv& env, const EvalConfig& config,
                    Rng& rng);

struct RolloutRow {
  snake::TrajectoryRow row;
  std::size_t goal_index = 0;
  double k_f = 1.0;
  int option = 0;
  bool option_switched = false;
  task::EpisodeStatus status = task::EpisodeStatus::running;
};

/// Drives the policy through `goals` in order, issuing the next goal after
/// each success and stopping at the first failure.
std::vector<RolloutRow> rollout(const Agent& agent, task::GoalReachingEnv& env,
                                const std::vector<snake::Vec2>& goals, std::size_t level,
                                ActMode mode, Rng& rng);

}  // namespace snakecpg::ppoc
