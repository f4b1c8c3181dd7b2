#include "snakecpg/lab.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "snakecpg/cpg_analysis.hpp"
#include "snakecpg/error.hpp"
#include "snakecpg/io.hpp"
#include "snakecpg/locomotion.hpp"

namespace snakecpg::lab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using io::Column;
using io::ColumnType;

namespace {

std::string prepare_out(const config::ExperimentConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw PersistenceError("cannot create output directory '" + c.out + "': " + ec.message());
  io::write_text((fs::path(c.out) / "config.ini").string(), config::to_ini(c));
  return c.out;
}

std::string path_in(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
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

std::size_t resolve_level(int requested, const ppoc::Trainer& trainer) {
  const std::size_t level =
      requested < 0 ? trainer.tracker().level() : static_cast<std::size_t>(requested);
  if (level >= trainer.curriculum().size()) {
    throw ConfigError("level " + std::to_string(level) + " exceeds the curriculum (" +
                      std::to_string(trainer.curriculum().size()) + " levels)");
  }
  return level;
}

ppoc::Trainer load_checkpoint(const config::ExperimentConfig& c, const std::string& path) {
  if (path.empty()) throw ConfigError("this command requires --checkpoint");
  return ppoc::Trainer::resume(path, c.env);
}

}  // namespace

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ParameterDomainError("linear fit needs at least two paired points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ParameterDomainError("linear fit needs non-constant x");
  LinearFit f;
  f.n = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ParameterDomainError("rank correlation needs at least two paired points");
  }
  return pearson(ranks(x), ranks(y));
}

BiasSweep characterize_bias(const cpg::MatsuokaParams& params,
                            const config::BiasSweepConfig& sweep) {
  if (!(sweep.step > 0.0)) throw ParameterDomainError("bias sweep step must be positive");
  const cpg::MatsuokaParams prim = params.primitive();
  const auto n = static_cast<std::size_t>(std::floor(sweep.u_max / sweep.step + 1e-9));
  BiasSweep out;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k <= n; ++k) {
    BiasRow row;
    row.u_e = static_cast<double>(k) * sweep.step;
    row.u_f = 1.0 - row.u_e;
    cpg::TonicVector u;
    u[cpg::neuron_index(0, cpg::kExtensor)] = row.u_e;
    u[cpg::neuron_index(0, cpg::kFlexor)] = row.u_f;
    const auto trace =
        cpg::simulate_outputs(prim, cpg::CpgState::seeded(), u, 1.0,
                              sweep.settle + sweep.window, sweep.settle, cpg::kSubstepDt,
                              cpg::OutputMode::clamped);
    const auto signal = trace.link(0);
    row.bias = cpg::periodic_mean(signal);
    row.amplitude = cpg::span_amplitude(signal);
    try {
      cpg::measure_oscillation(signal, trace.dt);
      row.oscillating = true;
    } catch (const NoOscillationError&) {
      row.oscillating = false;
    }
    if (row.oscillating) {
      xs.push_back(row.u_e);
      ys.push_back(row.bias);
    }
    out.rows.push_back(row);
  }
  if (xs.size() >= 2) out.fit = linear_fit(xs, ys);
  return out;
}

VelocityMap velocity_map(const cpg::MatsuokaParams& params, const snake::SnakeParams& body,
                         const config::VelocityMapConfig& map, Rng& rng, std::size_t workers) {
  VelocityMap out;
  out.rows.resize(map.samples);
  for (auto& r : out.rows) {
    r.u = uniform(rng, map.u_lo, map.u_hi);
    r.k_f = uniform(rng, map.k_f_lo, map.k_f_hi);
  }
  parallel_for(out.rows.size(), workers, [&](std::size_t i) {
    VelocityRow& r = out.rows[i];
    locomotion::OpenLoopOptions o;
    o.duration = map.duration;
    o.warmup = map.warmup;
    o.k_f = r.k_f;
    o.substeps_per_sample = std::numeric_limits<int>::max();
    try {
      const auto run = locomotion::run_open_loop(
          params, body, locomotion::constant(cpg::TonicVector::uniform(r.u)), o);
      const double d = snake::norm(run.final_state.com - run.samples.front().com);
      r.mean_speed = d / map.duration;
      r.diverged = !std::isfinite(r.mean_speed);
    } catch (const NumericalBlowupError&) {
      r.diverged = true;
    }
    if (r.diverged) r.mean_speed = std::numeric_limits<double>::quiet_NaN();
  });
  std::vector<double> k, v;
  for (const auto& r : out.rows) {
    if (r.diverged) {
      ++out.diverged;
      continue;
    }
    k.push_back(r.k_f);
    v.push_back(r.mean_speed);
  }
  if (k.size() >= 2) out.spearman_k_f_speed = spearman(k, v);
  return out;
}

std::string cmd_characterize_bias(const config::ExperimentConfig& c) {
  const std::string dir = prepare_out(c);
  const BiasSweep sweep = characterize_bias(c.env.cpg, c.bias);
  io::CsvWriter csv(path_in(dir, "bias.csv"), {{"u_e", ColumnType::real},
                                                {"u_f", ColumnType::real},
                                                {"bias", ColumnType::real},
                                                {"amplitude", ColumnType::real},
                                                {"oscillating", ColumnType::boolean}});
  std::size_t flagged = 0;
  for (const auto& r : sweep.rows) {
    csv.row({r.u_e, r.u_f, r.bias, r.amplitude, r.oscillating});
    flagged += r.oscillating ? 0 : 1;
  }
  csv.close();
  json j;
  j["rows"] = sweep.rows.size();
  j["fit_rows"] = sweep.fit.n;
  j["flagged_rows"] = flagged;
  j["slope"] = sweep.fit.slope;
  j["intercept"] = sweep.fit.intercept;
  j["r2"] = sweep.fit.r2;
  j["bias_at_u_max"] = sweep.rows.back().bias;
  io::write_text(path_in(dir, "bias_fit.json"), j.dump(2) + "\n");
  std::ostringstream s;
  s << "bias sweep: " << sweep.rows.size() << " rows (" << flagged
    << " non-oscillating), slope " << sweep.fit.slope << ", R^2 " << sweep.fit.r2;
  return s.str();
}

std::string cmd_velocity_map(const config::ExperimentConfig& c) {
  const std::string dir = prepare_out(c);
  Rng rng = make_stream(c.seed, "velocity-map");
  const VelocityMap map = velocity_map(c.env.cpg, c.env.body, c.velocity, rng, c.workers);
  io::CsvWriter csv(path_in(dir, "velocity_map.csv"),
                    {{"u", ColumnType::real},
                     {"k_f", ColumnType::real},
                     {"mean_speed", ColumnType::real, true},
                     {"diverged", ColumnType::boolean}});
  for (const auto& r : map.rows) csv.row({r.u, r.k_f, r.mean_speed, r.diverged});
  csv.close();
  json j;
  j["samples"] = map.rows.size();
  j["diverged"] = map.diverged;
  j["spearman_k_f_speed"] = map.spearman_k_f_speed;
  io::write_text(path_in(dir, "velocity_summary.json"), j.dump(2) + "\n");
  std::ostringstream s;
  s << "velocity map: " << map.rows.size() << " samples, " << map.diverged
    << " diverged, Spearman(K_f, speed) = " << map.spearman_k_f_speed;
  return s.str();
}

std::string cmd_gp_search(const config::ExperimentConfig& c) {
  const std::string dir = prepare_out(c);
  Rng rng = make_stream(c.seed, "gp");
  const auto box = gp::SearchBox::around(gp::encode(c.env.cpg), c.gp.box_lo, c.gp.box_hi);
  const auto body = c.env.body;
  const auto weights = c.gp.fitness;
  const auto base = c.env.cpg;
  gp::EvolveConfig ev = c.gp.evolve;
  ev.workers = c.workers;
  const auto result = gp::evolve(
      ev, box, [&](const gp::Genome& g) { return gp::evaluate_fitness(g, body, weights, base); },
      rng);

  std::vector<Column> cols{{"generation", ColumnType::integer},
                           {"best_F", ColumnType::real},
                           {"mean_F", ColumnType::real, true},
                           {"evaluated", ColumnType::integer}};
  for (const char* name : gp::gene_names()) cols.push_back({name, ColumnType::real});
  io::CsvWriter csv(path_in(dir, "gp_history.csv"), cols);
  for (const auto& h : result.history) {
    std::vector<io::Cell> row{static_cast<long long>(h.generation), h.best_F, h.mean_F,
                              static_cast<long long>(h.evaluated)};
    for (double g : h.best) row.emplace_back(g);
    csv.row(row);
  }
  csv.close();
  io::write_text(path_in(dir, "gp_best.ini"), config::cpg_ini(gp::decode(result.best, base)));
  json j;
  j["initial_best_F"] = result.history.front().best_F;
  j["best_F"] = result.best_report.F;
  j["v_d"] = result.best_report.v_d;
  j["theta_d"] = result.best_report.theta_d;
  j["s_d"] = result.best_report.s_d;
  j["T"] = result.best_report.T;
  j["simulations"] = result.simulations;
  json genome;
  for (std::size_t i = 0; i < gp::kGenes; ++i) genome[gp::gene_names()[i]] = result.best[i];
  j["best_genome"] = genome;
  io::write_text(path_in(dir, "gp_summary.json"), j.dump(2) + "\n");
  std::ostringstream s;
  s << "gp search: best F " << result.best_report.F << " (initial "
    << result.history.front().best_F << ") after " << result.simulations << " rollouts";
  return s.str();
}

std::string cmd_train(const config::ExperimentConfig& c, const std::string& checkpoint) {
  const std::string dir = prepare_out(c);
  const bool resuming = !checkpoint.empty();
  ppoc::Trainer trainer = resuming ? ppoc::Trainer::resume(checkpoint, c.env)
                                   : ppoc::Trainer(c.trainer, c.env, c.curriculum, c.seed);
  if (resuming) trainer.set_episode_budget(c.trainer.episodes);
  const std::string ckpt = path_in(dir, "checkpoint.json");
  io::JsonLinesWriter episodes(path_in(dir, "episodes.jsonl"),
                               {"episode", "level", "outcome", "steps", "return",
                                "option_usage"},
                               resuming);
  io::JsonLinesWriter updates(path_in(dir, "updates.jsonl"),
                              {"update", "episodes", "level", "phase"}, resuming);
  const auto& options = trainer.config().options;
  auto on_episode = [&](const ppoc::EpisodeLog& e) { episodes.write(e.json(options)); };
  auto on_update = [&](const ppoc::UpdateLog& u) {
    json j;
    j["update"] = u.update;
    j["episodes"] = u.episodes;
    j["level"] = u.level;
    j["phase"] = u.phase;
    j["loss"] = {{"total", u.loss.total},       {"policy", u.loss.policy},
                 {"value", u.loss.value},       {"entropy", u.loss.entropy},
                 {"option", u.loss.option},     {"termination", u.loss.termination},
                 {"clip_fraction", u.loss.clip_fraction}, {"approx_kl", u.loss.approx_kl}};
    updates.write(j.dump());
  };
  auto on_batch = [&](const ppoc::Trainer& t) {
    if (c.checkpoint_every > 0 && t.updates() % c.checkpoint_every == 0) t.save(ckpt);
  };
  try {
    trainer.run(on_episode, on_update, on_batch);
  } catch (const NumericalBlowupError&) {
    trainer.save(ckpt);  // weights were rolled back to the last good update
    throw;
  }
  trainer.save(ckpt);

  json j;
  j["episodes"] = trainer.episodes();
  j["updates"] = trainer.updates();
  j["level"] = trainer.tracker().level();
  j["phase"] = trainer.phase();
  j["seed"] = trainer.seed();
  io::write_text(path_in(dir, "train_summary.json"), j.dump(2) + "\n");
  std::ostringstream s;
  s << "train: " << trainer.episodes() << " episodes, level " << trainer.tracker().level()
    << ", phase " << trainer.phase();
  return s.str();
}

std::string cmd_eval(const config::ExperimentConfig& c, const std::string& checkpoint) {
  const ppoc::Trainer trainer = load_checkpoint(c, checkpoint);
  const std::string dir = prepare_out(c);
  ppoc::EvalConfig ec;
  ec.episodes = c.eval.episodes;
  ec.level = resolve_level(c.eval.level, trainer);
  ec.mode = c.eval.mode;
  task::GoalReachingEnv env(c.env, trainer.curriculum(), make_stream(c.seed, "eval-env"));
  Rng rng = make_stream(c.seed, "eval");
  const auto report = ppoc::evaluate(trainer.agent(), env, ec, rng);

  const auto& options = trainer.agent().options;
  std::vector<Column> cols{{"episode", ColumnType::integer},
                           {"outcome", ColumnType::text},
                           {"steps", ColumnType::integer},
                           {"return", ColumnType::real},
                           {"start_distance", ColumnType::real},
                           {"end_distance", ColumnType::real}};
  for (double k : options.values) cols.push_back({"steps_k_f_" + io::format_real(k), ColumnType::integer});
  io::CsvWriter csv(path_in(dir, "eval_episodes.csv"), cols);
  for (std::size_t e = 0; e < report.rows.size(); ++e) {
    const auto& r = report.rows[e];
    std::vector<io::Cell> row{static_cast<long long>(e + 1), std::string(task::to_string(r.outcome)),
                              static_cast<long long>(r.steps), r.ret, r.start_distance,
                              r.end_distance};
    for (auto n : r.option_steps) row.emplace_back(static_cast<long long>(n));
    csv.row(row);
  }
  csv.close();
  json j;
  j["checkpoint"] = checkpoint;
  j["mode"] = config::to_string(ec.mode);
  j["level"] = ec.level;
  j["episodes"] = report.episodes;
  j["successes"] = report.successes;
  j["success_rate"] = report.success_rate;
  j["mean_speed"] = report.mean_speed;
  j["mean_time_to_goal"] = finite_or_null(report.mean_time_to_goal);
  j["distinct_options"] = report.distinct_options();
  json usage = json::object();
  for (std::size_t k = 0; k < options.size(); ++k) {
    usage[io::format_real(options.values[k])] = report.option_steps[k];
  }
  j["option_usage"] = usage;
  io::write_text(path_in(dir, "eval.json"), j.dump(2) + "\n");
  std::ostringstream s;
  s << "eval: success rate " << report.success_rate << ", mean approach speed "
    << report.mean_speed << " m/s, mean time to goal " << report.mean_time_to_goal << " s";
  return s.str();
}

std::string cmd_rollout(const config::ExperimentConfig& c, const std::string& checkpoint) {
  const ppoc::Trainer trainer = load_checkpoint(c, checkpoint);
  const std::string dir = prepare_out(c);
  const std::size_t level = resolve_level(c.rollout.level, trainer);
  task::EnvConfig env_cfg = c.env;
  env_cfg.domain_randomization = false;
  task::GoalReachingEnv env(env_cfg, trainer.curriculum(), make_stream(c.seed, "rollout-env"));
  Rng rng = make_stream(c.seed, "rollout");
  const auto rows = ppoc::rollout(trainer.agent(), env, c.rollout.goals, level, c.rollout.mode, rng);

  std::vector<Column> cols{{"t", ColumnType::real},        {"goal_index", ColumnType::integer},
                           {"goal_x", ColumnType::real},   {"goal_y", ColumnType::real},
                           {"head_x", ColumnType::real},   {"head_y", ColumnType::real},
                           {"heading", ColumnType::real}};
  for (int i = 1; i <= 4; ++i) cols.push_back({"kappa_" + std::to_string(i), ColumnType::real});
  for (int i = 1; i <= 4; ++i) cols.push_back({"psi_" + std::to_string(i), ColumnType::real});
  for (const char* n : {"rho_g", "theta_g", "v_g", "reward", "k_f"}) {
    cols.push_back({n, ColumnType::real});
  }
  cols.push_back({"option", ColumnType::integer});
  cols.push_back({"option_switch", ColumnType::boolean});
  cols.push_back({"status", ColumnType::text});
  io::CsvWriter csv(path_in(dir, "trajectory.csv"), cols);
  std::size_t reached = 0;
  for (const auto& r : rows) {
    const auto& g = c.rollout.goals[r.goal_index];
    std::vector<io::Cell> row{r.row.t, static_cast<long long>(r.goal_index), g.x, g.y,
                              r.row.head.x, r.row.head.y, r.row.heading};
    for (double k : r.row.kappa) row.emplace_back(k);
    for (double p : r.row.psi) row.emplace_back(p);
    for (double v : {r.row.rho_g, r.row.theta_g, r.row.v_g, r.row.reward, r.k_f}) {
      row.emplace_back(v);
    }
    row.emplace_back(static_cast<long long>(r.option));
    row.emplace_back(r.option_switched);
    row.emplace_back(std::string(task::to_string(r.status)));
    csv.row(row);
    reached += r.status == task::EpisodeStatus::success ? 1 : 0;
  }
  csv.close();
  std::ostringstream s;
  s << "rollout: reached " << reached << " of " << c.rollout.goals.size() << " goals in "
    << rows.size() << " control steps";
  return s.str();
}

}  // namespace snakecpg::lab
