#pragma once

// Real-vector genetic search over the seven Matsuoka constants.

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "snakecpg/cpg.hpp"
#include "snakecpg/rng.hpp"
#include "snakecpg/snake.hpp"

namespace snakecpg::gp {

inline constexpr std::size_t kGenes = 7;
inline constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

/// Gene order: b, tau_r, tau_a, a, w_down, w_up, A.
using Genome = std::array<double, kGenes>;

const std::array<const char*, kGenes>& gene_names();
Genome encode(const cpg::MatsuokaParams& params);
cpg::MatsuokaParams decode(const Genome& genome, const cpg::MatsuokaParams& base = {});
/// Positive genes whose decoded oscillator satisfies the stability condition.
bool feasible(const Genome& genome);

struct SearchBox {
  Genome lo{};
  Genome hi{};

  /// [lo_factor, hi_factor] times every gene of `center`.
  static SearchBox around(const Genome& center, double lo_factor = 0.25, double hi_factor = 4.0);
  Genome clamp(Genome g) const;
};

struct FitnessWeights {
  double a1 = 40.0;
  double a2 = 100.0;
  double a3 = 50.0;
  double horizon = 6.4;  // s
};

struct FitnessReport {
  double F = kInfeasible;
  double v_d = 0.0;
  double theta_d = 0.0;
  double s_d = 0.0;
  double T = 0.0;
  bool evaluated = false;   // false for infeasible or diverged genomes
  std::string diagnostic;   // set when the rollout blew up
};

/// Rollout from rest with u = all ones and K_f = 1. Velocity and displacement
/// are taken at the COM, projected on the initial heading.
FitnessReport evaluate_fitness(const Genome& genome, const snake::SnakeParams& body = {},
                               const FitnessWeights& weights = {},
                               const cpg::MatsuokaParams& base = {});

using Evaluator = std::function<FitnessReport(const Genome&)>;

struct EvolveConfig {
  std::size_t population = 24;
  std::size_t generations = 20;
  std::size_t tournament = 3;
  double crossover_rate = 0.7;
  double mutation_rate = 0.2;
  double mutation_scale = 0.1;  // fraction of box width
  std::size_t elites = 1;
  std::size_t init_retries = 1000;  // per individual
  std::size_t workers = 1;
};

struct GenerationStats {
  std::size_t generation = 0;
  double best_F = kInfeasible;
  double mean_F = kInfeasible;  // over evaluated genomes
  std::size_t evaluated = 0;
  Genome best{};
};

struct EvolveResult {
  Genome best{};
  FitnessReport best_report;
  std::vector<GenerationStats> history;  // entry 0 is the initial population
  std::size_t simulations = 0;
};

/// Infeasible genomes receive kInfeasible without reaching `evaluate`.
EvolveResult evolve(const EvolveConfig& config, const SearchBox& box, const Evaluator& evaluate,
                    Rng& rng);

/// Evaluates every genome, splitting the work over `workers` threads. The
/// result does not depend on the worker count.
std::vector<FitnessReport> evaluate_all(const std::vector<Genome>& genomes,
                                        const Evaluator& evaluate, std::size_t workers);

}  // namespace snakecpg::gp
