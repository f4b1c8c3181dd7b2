#include "snakecpg/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "snakecpg/error.hpp"

namespace snakecpg::config {

namespace pt = boost::property_tree;

namespace {

constexpr double kDeg = snake::kPi / 180.0;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

double to_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("'" + t + "' is not a number");
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("'" + t + "' is not a non-negative integer");
  }
  return v;
}

int to_int(const std::string& text) {
  const std::string t = trim(text);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("'" + t + "' is not an integer");
  }
  return v;
}

bool to_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("'" + t + "' is not a boolean");
}

std::vector<double> to_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split(text, ',')) out.push_back(to_double(p));
  return out;
}

template <std::size_t N>
std::array<double, N> to_array(const std::string& text) {
  const auto v = to_list(text);
  if (v.size() != N) {
    throw ConfigError("expected " + std::to_string(N) + " comma-separated values, got " +
                      std::to_string(v.size()));
  }
  std::array<double, N> a{};
  std::copy(v.begin(), v.end(), a.begin());
  return a;
}

std::pair<double, double> to_range(const std::string& text) {
  const auto a = to_array<2>(text);
  return {a[0], a[1]};
}

ppoc::ActMode to_mode(const std::string& text) {
  const std::string t = trim(text);
  if (t == "stochastic") return ppoc::ActMode::stochastic;
  if (t == "deterministic") return ppoc::ActMode::deterministic;
  throw ConfigError("mode must be 'stochastic' or 'deterministic'");
}

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename C>
std::string fmt_list(const C& values) {
  std::string s;
  for (const auto& v : values) {
    if (!s.empty()) s += ", ";
    s += fmt(v);
  }
  return s;
}

std::string fmt_range(double lo, double hi) { return fmt(lo) + ", " + fmt(hi); }

using Setter = std::function<void(const std::string&)>;
using Schema = std::map<std::string, std::map<std::string, Setter>>;

struct CurriculumLists {
  std::vector<double> r, theta_deg, rho_l, rho_u, sigma;
  std::vector<double> n_window;
  bool touched = false;
};

Schema schema(ExperimentConfig& c, CurriculumLists& cur) {
  auto& cpg = c.env.cpg;
  auto& body = c.env.body;
  auto& dr = c.env.ranges;
  auto& tr = c.trainer;
  Schema s;
  s["run"] = {
      {"seed", [&](const std::string& v) { c.seed = to_unsigned(v); }},
      {"out", [&](const std::string& v) { c.out = trim(v); }},
      {"workers", [&](const std::string& v) { c.workers = to_unsigned(v); }},
      {"checkpoint_every", [&](const std::string& v) { c.checkpoint_every = to_unsigned(v); }},
  };
  s["cpg"] = {
      {"tau_r", [&](const std::string& v) { cpg.tau_r = to_double(v); }},
      {"tau_a", [&](const std::string& v) { cpg.tau_a = to_double(v); }},
      {"a", [&](const std::string& v) { cpg.a = to_double(v); }},
      {"b", [&](const std::string& v) { cpg.b = to_double(v); }},
      {"A", [&](const std::string& v) { cpg.A = to_double(v); }},
      {"w_down", [&](const std::string& v) { cpg.w_down = to_double(v); }},
      {"w_up", [&](const std::string& v) { cpg.w_up = to_double(v); }},
  };
  s["snake"] = {
      {"link_length", [&](const std::string& v) { body.link_length = to_array<4>(v); }},
      {"head_mass", [&](const std::string& v) { body.head_mass = to_double(v); }},
      {"body_mass", [&](const std::string& v) { body.body_mass = to_double(v); }},
      {"tail_mass", [&](const std::string& v) { body.tail_mass = to_double(v); }},
      {"max_pressure", [&](const std::string& v) { body.max_pressure = to_array<4>(v); }},
      {"nominal_pressure", [&](const std::string& v) { body.nominal_pressure = to_double(v); }},
      {"ground_mu", [&](const std::string& v) { body.ground_mu = to_double(v); }},
      {"wheel_mu", [&](const std::string& v) { body.wheel_mu = to_double(v); }},
      {"gravity_angle", [&](const std::string& v) { body.gravity_angle = to_double(v); }},
      {"act_tau", [&](const std::string& v) { body.act_tau = to_double(v); }},
      {"curvature_gain", [&](const std::string& v) { body.curvature_gain = to_double(v); }},
      {"friction_speed", [&](const std::string& v) { body.friction_speed = to_double(v); }},
  };
  auto range = [](double& lo, double& hi) {
    return [&lo, &hi](const std::string& v) { std::tie(lo, hi) = to_range(v); };
  };
  s["randomization"] = {
      {"enabled", [&](const std::string& v) { c.env.domain_randomization = to_bool(v); }},
      {"ground_mu", range(dr.ground_mu_lo, dr.ground_mu_hi)},
      {"wheel_mu", range(dr.wheel_mu_lo, dr.wheel_mu_hi)},
      {"head_mass", range(dr.head_mass_lo, dr.head_mass_hi)},
      {"body_mass", range(dr.body_mass_lo, dr.body_mass_hi)},
      {"tail_mass", range(dr.tail_mass_lo, dr.tail_mass_hi)},
      {"max_pressure", range(dr.pressure_lo, dr.pressure_hi)},
      {"gravity_angle", range(dr.gravity_angle_lo, dr.gravity_angle_hi)},
  };
  auto list = [&cur](std::vector<double>& dst) {
    return [&cur, &dst](const std::string& v) {
      dst = to_list(v);
      cur.touched = true;
    };
  };
  s["curriculum"] = {
      {"r", list(cur.r)},         {"theta_deg", list(cur.theta_deg)},
      {"rho_l", list(cur.rho_l)}, {"rho_u", list(cur.rho_u)},
      {"sigma", list(cur.sigma)}, {"n_window", list(cur.n_window)},
  };
  s["task"] = {
      {"c_v", [&](const std::string& v) { c.env.reward.c_v = to_double(v); }},
      {"c_g", [&](const std::string& v) { c.env.reward.c_g = to_double(v); }},
      {"starvation_steps",
       [&](const std::string& v) { c.env.rules.starvation_steps = to_unsigned(v); }},
      {"motion_epsilon",
       [&](const std::string& v) { c.env.rules.motion_epsilon = to_double(v); }},
      {"missed_goal_steps",
       [&](const std::string& v) { c.env.rules.missed_goal_steps = to_unsigned(v); }},
      {"step_cap", [&](const std::string& v) { c.env.rules.step_cap = to_unsigned(v); }},
      {"cpg_warmup", [&](const std::string& v) { c.env.cpg_warmup = to_double(v); }},
  };
  s["bias"] = {
      {"step", [&](const std::string& v) { c.bias.step = to_double(v); }},
      {"u_max", [&](const std::string& v) { c.bias.u_max = to_double(v); }},
      {"settle", [&](const std::string& v) { c.bias.settle = to_double(v); }},
      {"window", [&](const std::string& v) { c.bias.window = to_double(v); }},
  };
  s["velocity_map"] = {
      {"samples", [&](const std::string& v) { c.velocity.samples = to_unsigned(v); }},
      {"u", range(c.velocity.u_lo, c.velocity.u_hi)},
      {"k_f", range(c.velocity.k_f_lo, c.velocity.k_f_hi)},
      {"warmup", [&](const std::string& v) { c.velocity.warmup = to_double(v); }},
      {"duration", [&](const std::string& v) { c.velocity.duration = to_double(v); }},
  };
  auto& ev = c.gp.evolve;
  s["gp"] = {
      {"population", [&](const std::string& v) { ev.population = to_unsigned(v); }},
      {"generations", [&](const std::string& v) { ev.generations = to_unsigned(v); }},
      {"tournament", [&](const std::string& v) { ev.tournament = to_unsigned(v); }},
      {"crossover_rate", [&](const std::string& v) { ev.crossover_rate = to_double(v); }},
      {"mutation_rate", [&](const std::string& v) { ev.mutation_rate = to_double(v); }},
      {"mutation_scale", [&](const std::string& v) { ev.mutation_scale = to_double(v); }},
      {"elites", [&](const std::string& v) { ev.elites = to_unsigned(v); }},
      {"init_retries", [&](const std::string& v) { ev.init_retries = to_unsigned(v); }},
      {"box", range(c.gp.box_lo, c.gp.box_hi)},
      {"horizon", [&](const std::string& v) { c.gp.fitness.horizon = to_double(v); }},
      {"a1", [&](const std::string& v) { c.gp.fitness.a1 = to_double(v); }},
      {"a2", [&](const std::string& v) { c.gp.fitness.a2 = to_double(v); }},
      {"a3", [&](const std::string& v) { c.gp.fitness.a3 = to_double(v); }},
  };
  s["trainer"] = {
      {"learning_rate", [&](const std::string& v) { tr.learning_rate = to_double(v); }},
      {"clip", [&](const std::string& v) { tr.update.loss.clip = to_double(v); }},
      {"value_coef", [&](const std::string& v) { tr.update.loss.value_coef = to_double(v); }},
      {"entropy_coef",
       [&](const std::string& v) { tr.update.loss.entropy_coef = to_double(v); }},
      {"xi", [&](const std::string& v) { tr.update.loss.xi = to_double(v); }},
      {"epochs", [&](const std::string& v) { tr.update.epochs = to_unsigned(v); }},
      {"minibatch", [&](const std::string& v) { tr.update.minibatch = to_unsigned(v); }},
      {"max_grad_norm", [&](const std::string& v) { tr.update.max_grad_norm = to_double(v); }},
      {"gamma", [&](const std::string& v) { tr.gamma = to_double(v); }},
      {"lambda", [&](const std::string& v) { tr.lambda = to_double(v); }},
      {"steps_per_worker", [&](const std::string& v) { tr.steps_per_worker = to_unsigned(v); }},
      {"episodes", [&](const std::string& v) { tr.episodes = to_unsigned(v); }},
      {"plateau_window", [&](const std::string& v) { tr.plateau_window = to_unsigned(v); }},
      {"plateau_tolerance", [&](const std::string& v) { tr.plateau_tolerance = to_double(v); }},
      {"phase1_max_episodes",
       [&](const std::string& v) { tr.phase1_max_episodes = to_unsigned(v); }},
      {"phase1_k_f", [&](const std::string& v) { tr.phase1_k_f = to_double(v); }},
      {"hidden", [&](const std::string& v) { tr.policy.hidden = to_unsigned(v); }},
      {"init_log_std", [&](const std::string& v) { tr.policy.init_log_std = to_double(v); }},
      {"init_termination_bias",
       [&](const std::string& v) { tr.policy.init_termination_bias = to_double(v); }},
      {"options", [&](const std::string& v) { tr.options.values = to_list(v); }},
  };
  s["eval"] = {
      {"episodes", [&](const std::string& v) { c.eval.episodes = to_unsigned(v); }},
      {"level", [&](const std::string& v) { c.eval.level = to_int(v); }},
      {"mode", [&](const std::string& v) { c.eval.mode = to_mode(v); }},
  };
  s["rollout"] = {
      {"goals",
       [&](const std::string& v) {
         c.rollout.goals.clear();
         for (const auto& pair : split(v, ';')) {
           if (pair.empty()) continue;
           const auto xy = to_array<2>(pair);
           c.rollout.goals.push_back({xy[0], xy[1]});
         }
       }},
      {"level", [&](const std::string& v) { c.rollout.level = to_int(v); }},
      {"mode", [&](const std::string& v) { c.rollout.mode = to_mode(v); }},
  };
  return s;
}

task::Curriculum build_curriculum(const CurriculumLists& l) {
  const std::size_t n = l.r.size();
  auto expand = [n](const std::vector<double>& v, const char* name) {
    if (v.size() == 1) return std::vector<double>(n, v.front());
    if (v.size() != n) {
      throw ConfigError(std::string("curriculum.") + name + " needs 1 or " +
                        std::to_string(n) + " values");
    }
    return v;
  };
  if (n == 0) throw ConfigError("curriculum.r must list at least one level");
  const auto theta = expand(l.theta_deg, "theta_deg");
  const auto rho_l = expand(l.rho_l, "rho_l");
  const auto rho_u = expand(l.rho_u, "rho_u");
  const auto sigma = expand(l.sigma.empty() ? std::vector<double>{0.9} : l.sigma, "sigma");
  const auto window =
      expand(l.n_window.empty() ? std::vector<double>{100.0} : l.n_window, "n_window");
  std::vector<task::CurriculumLevel> levels;
  for (std::size_t i = 0; i < n; ++i) {
    if (window[i] < 1.0 || window[i] != std::floor(window[i])) {
      throw ConfigError("curriculum.n_window must hold positive integers");
    }
    levels.push_back({l.r[i], theta[i] * kDeg, rho_l[i], rho_u[i], sigma[i],
                      static_cast<std::size_t>(window[i])});
  }
  return task::Curriculum(std::move(levels));
}

}  // namespace

const char* to_string(ppoc::ActMode mode) {
  return mode == ppoc::ActMode::stochastic ? "stochastic" : "deterministic";
}

void ExperimentConfig::validate() const {
  try {
    env.cpg.validate();
    env.body.validate();
  } catch (const ParameterDomainError& e) {
    throw ConfigError(e.what());
  }
  if (workers == 0) throw ConfigError("run.workers must be positive");
  if (!(bias.step > 0.0) || !(bias.u_max >= 0.0) || !(bias.window > 0.0)) {
    throw ConfigError("bias: step and window must be positive, u_max non-negative");
  }
  if (velocity.samples == 0 || !(velocity.u_hi >= velocity.u_lo) ||
      !(velocity.k_f_hi >= velocity.k_f_lo) || !(velocity.k_f_lo > 0.0) ||
      !(velocity.duration > 0.0)) {
    throw ConfigError("velocity_map: empty sample box or non-positive duration");
  }
  if (gp.evolve.population < 4) throw ConfigError("gp.population must be at least 4");
  if (!(gp.box_lo > 0.0) || !(gp.box_hi > gp.box_lo)) {
    throw ConfigError("gp.box needs 0 < lo < hi");
  }
  if (!(gp.fitness.horizon > 0.0)) throw ConfigError("gp.horizon must be positive");
  if (rollout.goals.empty()) throw ConfigError("rollout.goals must list at least one goal");
  ppoc::TrainerConfig t = trainer;
  t.policy.n_options = t.options.size();
  t.workers = workers;
  t.validate();
}

ExperimentConfig parse(const std::string& text, const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig c;
  CurriculumLists cur;
  auto s = schema(c, cur);
  for (const auto& [section, keys] : tree) {
    auto sit = s.find(section);
    if (sit == s.end()) throw ConfigError(source + ": unknown section [" + section + "]");
    if (!keys.data().empty()) {
      throw ConfigError(source + ": top-level key '" + section + "' outside any section");
    }
    for (const auto& [key, value] : keys) {
      auto kit = sit->second.find(key);
      if (kit == sit->second.end()) {
        throw ConfigError(source + ": unknown key '" + key + "' in [" + section + "]");
      }
      try {
        kit->second(value.data());
      } catch (const ConfigError& e) {
        throw ConfigError(source + ": [" + section + "] " + key + ": " + e.what());
      }
    }
  }
  if (cur.touched) {
    try {
      c.curriculum = build_curriculum(cur);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ": " + e.what());
    }
  }
  c.trainer.workers = c.workers;
  c.trainer.policy.n_options = c.trainer.options.size();
  c.gp.evolve.workers = c.workers;
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

ExperimentConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::string cpg_ini(const cpg::MatsuokaParams& p) {
  std::ostringstream o;
  o << "[cpg]\n"
    << "tau_r = " << fmt(p.tau_r) << "\n"
    << "tau_a = " << fmt(p.tau_a) << "\n"
    << "a = " << fmt(p.a) << "\n"
    << "b = " << fmt(p.b) << "\n"
    << "A = " << fmt(p.A) << "\n"
    << "w_down = " << fmt(p.w_down) << "\n"
    << "w_up = " << fmt(p.w_up) << "\n";
  return o.str();
}

std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& b = c.env.body;
  const auto& dr = c.env.ranges;
  const auto& tr = c.trainer;
  o << "[run]\n"
    << "seed = " << c.seed << "\n"
    << "out = " << c.out << "\n"
    << "workers = " << c.workers << "\n"
    << "checkpoint_every = " << c.checkpoint_every << "\n\n";
  o << cpg_ini(c.env.cpg) << "\n";
  o << "[snake]\n"
    << "link_length = " << fmt_list(b.link_length) << "\n"
    << "head_mass = " << fmt(b.head_mass) << "\n"
    << "body_mass = " << fmt(b.body_mass) << "\n"
    << "tail_mass = " << fmt(b.tail_mass) << "\n"
    << "max_pressure = " << fmt_list(b.max_pressure) << "\n"
    << "nominal_pressure = " << fmt(b.nominal_pressure) << "\n"
    << "ground_mu = " << fmt(b.ground_mu) << "\n"
    << "wheel_mu = " << fmt(b.wheel_mu) << "\n"
    << "gravity_angle = " << fmt(b.gravity_angle) << "\n"
    << "act_tau = " << fmt(b.act_tau) << "\n"
    << "curvature_gain = " << fmt(b.curvature_gain) << "\n"
    << "friction_speed = " << fmt(b.friction_speed) << "\n\n";
  o << "[randomization]\n"
    << "enabled = " << (c.env.domain_randomization ? "true" : "false") << "\n"
    << "ground_mu = " << fmt_range(dr.ground_mu_lo, dr.ground_mu_hi) << "\n"
    << "wheel_mu = " << fmt_range(dr.wheel_mu_lo, dr.wheel_mu_hi) << "\n"
    << "head_mass = " << fmt_range(dr.head_mass_lo, dr.head_mass_hi) << "\n"
    << "body_mass = " << fmt_range(dr.body_mass_lo, dr.body_mass_hi) << "\n"
    << "tail_mass = " << fmt_range(dr.tail_mass_lo, dr.tail_mass_hi) << "\n"
    << "max_pressure = " << fmt_range(dr.pressure_lo, dr.pressure_hi) << "\n"
    << "gravity_angle = " << fmt_range(dr.gravity_angle_lo, dr.gravity_angle_hi) << "\n\n";
  std::vector<double> r, th, lo, hi, sg, nw;
  for (const auto& l : c.curriculum.levels()) {
    r.push_back(l.r);
    th.push_back(l.theta / kDeg);
    lo.push_back(l.rho_l);
    hi.push_back(l.rho_u);
    sg.push_back(l.sigma);
    nw.push_back(static_cast<double>(l.n_window));
  }
  o << "[curriculum]\n"
    << "r = " << fmt_list(r) << "\n"
    << "theta_deg = " << fmt_list(th) << "\n"
    << "rho_l = " << fmt_list(lo) << "\n"
    << "rho_u = " << fmt_list(hi) << "\n"
    << "sigma = " << fmt_list(sg) << "\n"
    << "n_window = " << fmt_list(nw) << "\n\n";
  o << "[task]\n"
    << "c_v = " << fmt(c.env.reward.c_v) << "\n"
    << "c_g = " << fmt(c.env.reward.c_g) << "\n"
    << "starvation_steps = " << c.env.rules.starvation_steps << "\n"
    << "motion_epsilon = " << fmt(c.env.rules.motion_epsilon) << "\n"
    << "missed_goal_steps = " << c.env.rules.missed_goal_steps << "\n"
    << "step_cap = " << c.env.rules.step_cap << "\n"
    << "cpg_warmup = " << fmt(c.env.cpg_warmup) << "\n\n";
  o << "[bias]\n"
    << "step = " << fmt(c.bias.step) << "\n"
    << "u_max = " << fmt(c.bias.u_max) << "\n"
    << "settle = " << fmt(c.bias.settle) << "\n"
    << "window = " << fmt(c.bias.window) << "\n\n";
  o << "[velocity_map]\n"
    << "samples = " << c.velocity.samples << "\n"
    << "u = " << fmt_range(c.velocity.u_lo, c.velocity.u_hi) << "\n"
    << "k_f = " << fmt_range(c.velocity.k_f_lo, c.velocity.k_f_hi) << "\n"
    << "warmup = " << fmt(c.velocity.warmup) << "\n"
    << "duration = " << fmt(c.velocity.duration) << "\n\n";
  const auto& ev = c.gp.evolve;
  o << "[gp]\n"
    << "population = " << ev.population << "\n"
    << "generations = " << ev.generations << "\n"
    << "tournament = " << ev.tournament << "\n"
    << "crossover_rate = " << fmt(ev.crossover_rate) << "\n"
    << "mutation_rate = " << fmt(ev.mutation_rate) << "\n"
    << "mutation_scale = " << fmt(ev.mutation_scale) << "\n"
    << "elites = " << ev.elites << "\n"
    << "init_retries = " << ev.init_retries << "\n"
    << "box = " << fmt_range(c.gp.box_lo, c.gp.box_hi) << "\n"
    << "horizon = " << fmt(c.gp.fitness.horizon) << "\n"
    << "a1 = " << fmt(c.gp.fitness.a1) << "\n"
    << "a2 = " << fmt(c.gp.fitness.a2) << "\n"
    << "a3 = " << fmt(c.gp.fitness.a3) << "\n\n";
  o << "[trainer]\n"
    << "learning_rate = " << fmt(tr.learning_rate) << "\n"
    << "clip = " << fmt(tr.update.loss.clip) << "\n"
    << "value_coef = " << fmt(tr.update.loss.value_coef) << "\n"
    << "entropy_coef = " << fmt(tr.update.loss.entropy_coef) << "\n"
    << "xi = " << fmt(tr.update.loss.xi) << "\n"
    << "epochs = " << tr.update.epochs << "\n"
    << "minibatch = " << tr.update.minibatch << "\n"
    << "max_grad_norm = " << fmt(tr.update.max_grad_norm) << "\n"
    << "gamma = " << fmt(tr.gamma) << "\n"
    << "lambda = " << fmt(tr.lambda) << "\n"
    << "steps_per_worker = " << tr.steps_per_worker << "\n"
    << "episodes = " << tr.episodes << "\n"
    << "plateau_window = " << tr.plateau_window << "\n"
    << "plateau_tolerance = " << fmt(tr.plateau_tolerance) << "\n"
    << "phase1_max_episodes = " << tr.phase1_max_episodes << "\n"
    << "phase1_k_f = " << fmt(tr.phase1_k_f) << "\n"
    << "hidden = " << tr.policy.hidden << "\n"
    << "init_log_std = " << fmt(tr.policy.init_log_std) << "\n"
    << "init_termination_bias = " << fmt(tr.policy.init_termination_bias) << "\n"
    << "options = " << fmt_list(tr.options.values) << "\n\n";
  o << "[eval]\n"
    << "episodes = " << c.eval.episodes << "\n"
    << "level = " << c.eval.level << "\n"
    << "mode = " << to_string(c.eval.mode) << "\n\n";
  std::string goals;
  for (const auto& g : c.rollout.goals) {
    if (!goals.empty()) goals += "; ";
    goals += fmt(g.x) + ", " + fmt(g.y);
  }
  o << "[rollout]\n"
    << "goals = " << goals << "\n"
    << "level = " << c.rollout.level << "\n"
    << "mode = " << to_string(c.rollout.mode) << "\n";
  return o.str();
}

}  // namespace snakecpg::config
