#include "snakecpg/gp.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "snakecpg/cpg_analysis.hpp"
#include "snakecpg/error.hpp"

namespace snakecpg::gp {

const std::array<const char*, kGenes>& gene_names() {
  static const std::array<const char*, kGenes> names{"b",      "tau_r", "tau_a", "a",
                                                     "w_down", "w_up",  "A"};
  return names;
}

Genome encode(const cpg::MatsuokaParams& p) {
  return {p.b, p.tau_r, p.tau_a, p.a, p.w_down, p.w_up, p.A};
}

cpg::MatsuokaParams decode(const Genome& g, const cpg::MatsuokaParams& base) {
  cpg::MatsuokaParams p = base;
  p.b = g[0];
  p.tau_r = g[1];
  p.tau_a = g[2];
  p.a = g[3];
  p.w_down = g[4];
  p.w_up = g[5];
  p.A = g[6];
  return p;
}

bool feasible(const Genome& genome) {
  for (double v : genome) {
    if (!std::isfinite(v) || v <= 0.0) return false;
  }
  try {
    const auto p = decode(genome);
    p.validate();
    return cpg::check_stability_condition(p);
  } catch (const ParameterDomainError&) {
    return false;
  }
}

SearchBox SearchBox::around(const Genome& center, double lo_factor, double hi_factor) {
  if (!(lo_factor > 0.0) || !(hi_factor > lo_factor)) {
    throw ParameterDomainError("search box factors need 0 < lo < hi");
  }
  SearchBox box;
  for (std::size_t i = 0; i < kGenes; ++i) {
    box.lo[i] = center[i] * lo_factor;
    box.hi[i] = center[i] * hi_factor;
  }
  return box;
}

Genome SearchBox::clamp(Genome g) const {
  for (std::size_t i = 0; i < kGenes; ++i) g[i] = std::clamp(g[i], lo[i], hi[i]);
  return g;
}

FitnessReport evaluate_fitness(const Genome& genome, const snake::SnakeParams& body,
                               const FitnessWeights& w, const cpg::MatsuokaParams& base) {
  FitnessReport report;
  report.T = w.horizon;
  if (!feasible(genome)) return report;

  const auto params = decode(genome, base);
  cpg::Network net(params);
  snake::SnakeState state = snake::SnakeState::at_rest(body);
  const snake::Vec2 com0 = state.com;
  const double heading0 = snake::heading(state, body);
  const snake::Vec2 axis{std::cos(heading0), std::sin(heading0)};
  const auto u = cpg::TonicVector::uniform(1.0);
  const double dt = cpg::kSubstepDt;
  const auto steps = static_cast<long>(std::llround(w.horizon / dt));
  try {
    for (long k = 0; k < steps; ++k) {
      state = snake::substep(state, net.output(), body, dt);
      net.advance(u, 1.0, dt);
    }
  } catch (const NumericalBlowupError& e) {
    report.diagnostic = e.what();
    return report;
  }
  report.v_d = snake::dot(snake::com_velocity(state, body), axis);
  report.s_d = snake::dot(state.com - com0, axis);
  report.theta_d = snake::wrap_angle(snake::heading(state, body) - heading0);
  if (!std::isfinite(report.v_d) || !std::isfinite(report.s_d) ||
      !std::isfinite(report.theta_d)) {
    report.diagnostic = "non-finite body state at t = T";
    return report;
  }
  report.F = w.a1 * std::abs(report.v_d) - w.a2 * std::abs(report.theta_d) +
             w.a3 * std::abs(report.s_d);
  report.evaluated = true;
  return report;
}

std::vector<FitnessReport> evaluate_all(const std::vector<Genome>& genomes,
                                        const Evaluator& evaluate, std::size_t workers) {
  std::vector<FitnessReport> out(genomes.size());
  auto run = [&](std::size_t i) {
    out[i] = feasible(genomes[i]) ? evaluate(genomes[i]) : FitnessReport{};
  };
  workers = std::max<std::size_t>(1, std::min(workers, genomes.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < genomes.size(); ++i) run(i);
    return out;
  }
  // Strided static partition; each slot is written by exactly one thread.
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < genomes.size(); i += workers) run(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

namespace {

Genome random_genome(const SearchBox& box, Rng& rng) {
  Genome g;
  for (std::size_t i = 0; i < kGenes; ++i) g[i] = uniform(rng, box.lo[i], box.hi[i]);
  return g;
}

std::size_t tournament(const std::vector<FitnessReport>& fit, std::size_t k, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, fit.size() - 1);
  std::size_t best = pick(rng);
  for (std::size_t j = 1; j < k; ++j) {
    const std::size_t c = pick(rng);
    if (fit[c].F > fit[best].F) best = c;
  }
  return best;
}

GenerationStats summarize(std::size_t generation, const std::vector<Genome>& pop,
                          const std::vector<FitnessReport>& fit) {
  GenerationStats s;
  s.generation = generation;
  double sum = 0.0;
  std::size_t best = 0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (fit[i].F > fit[best].F) best = i;
    if (fit[i].evaluated) {
      sum += fit[i].F;
      ++s.evaluated;
    }
  }
  s.best_F = fit[best].F;
  s.best = pop[best];
  s.mean_F = s.evaluated > 0 ? sum / static_cast<double>(s.evaluated) : kInfeasible;
  return s;
}

std::vector<std::size_t> ranking(const std::vector<FitnessReport>& fit) {
  std::vector<std::size_t> order(fit.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fit[a].F > fit[b].F; });
  return order;
}

}  // namespace

EvolveResult evolve(const EvolveConfig& config, const SearchBox& box, const Evaluator& evaluate,
                    Rng& rng) {
  if (config.population < 4) throw ParameterDomainError("population size must be at least 4");
  if (config.tournament < 1) throw ParameterDomainError("tournament size must be positive");
  if (config.elites >= config.population) {
    throw ParameterDomainError("elite count must be below the population size");
  }
  for (std::size_t i = 0; i < kGenes; ++i) {
    if (!(box.lo[i] > 0.0) || !(box.hi[i] > box.lo[i])) {
      throw ParameterDomainError(std::string("search box for gene ") + gene_names()[i] +
                                 " must satisfy 0 < lo < hi");
    }
  }

  EvolveResult result;
  std::vector<Genome> pop;
  pop.reserve(config.population);
  for (std::size_t n = 0; n < config.population; ++n) {
    Genome g = random_genome(box, rng);
    std::size_t tries = 1;
    while (!feasible(g) && tries < config.init_retries) {
      g = random_genome(box, rng);
      ++tries;
    }
    if (!feasible(g)) {
      throw ParameterDomainError("no feasible genome found in the search box after " +
                                 std::to_string(config.init_retries) + " draws");
    }
    pop.push_back(g);
  }

  auto fit = evaluate_all(pop, evaluate, config.workers);
  result.simulations += pop.size();
  result.history.push_back(summarize(0, pop, fit));

  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    const auto order = ranking(fit);
    std::vector<Genome> next;
    std::vector<FitnessReport> next_fit;
    for (std::size_t e = 0; e < config.elites; ++e) {
      next.push_back(pop[order[e]]);
      next_fit.push_back(fit[order[e]]);
    }
    std::vector<Genome> children;
    while (next.size() + children.size() < config.population) {
      Genome child = pop[tournament(fit, config.tournament, rng)];
      if (uniform(rng, 0.0, 1.0) < config.crossover_rate) {
        const Genome& other = pop[tournament(fit, config.tournament, rng)];
        for (std::size_t i = 0; i < kGenes; ++i) {
          if (uniform(rng, 0.0, 1.0) < 0.5) child[i] = other[i];
        }
      }
      for (std::size_t i = 0; i < kGenes; ++i) {
        if (uniform(rng, 0.0, 1.0) < config.mutation_rate) {
          child[i] += config.mutation_scale * (box.hi[i] - box.lo[i]) * gauss(rng);
        }
      }
      children.push_back(box.clamp(child));
    }
    auto child_fit = evaluate_all(children, evaluate, config.workers);
    for (const auto& g : children) result.simulations += feasible(g) ? 1 : 0;
    next.insert(next.end(), children.begin(), children.end());
    next_fit.insert(next_fit.end(), child_fit.begin(), child_fit.end());
    pop = std::move(next);
    fit = std::move(next_fit);
    result.history.push_back(summarize(gen, pop, fit));
  }

  const auto order = ranking(fit);
  result.best = pop[order.front()];
  result.best_report = fit[order.front()];
  return result;
}

}  // namespace snakecpg::gp
