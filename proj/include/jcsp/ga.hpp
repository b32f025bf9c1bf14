#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "jcsp/prng.hpp"

namespace jcsp {

struct GaParams {
  int generations = 1000;      // G
  int population = 50;
  double crossover_rate = 0.9;
  double mutation_rate = -1.0;  // < 0: default 1/genes
  int replications = 30;        // Q / I
  std::uint64_t seed = 1;

  void check() const {
    if (generations < 1) throw std::invalid_argument("ga: generations >= 1");
    if (population < 2) throw std::invalid_argument("ga: population >= 2");
    if (crossover_rate < 0.0 || crossover_rate > 1.0)
      throw std::invalid_argument("ga: crossover rate in [0,1]");
    if (mutation_rate > 1.0) throw std::invalid_argument("ga: mutation rate <= 1");
    if (replications < 1) throw std::invalid_argument("ga: replications >= 1");
  }
};

struct GaResult {
  std::vector<int> genes;
  double fitness = 0.0;
  std::vector<double> best_history;  // best-so-far per generation
  std::vector<double> mean_history;  // population mean per generation
  int evaluations = 0;
};

/// Integer-coded minimizing GA: tournament selection of size 3, uniform
/// crossover, per-gene reset mutation, elitism of one. Every gene g is drawn
/// from {0, ..., domains[g]-1}, so any genotype is feasible by construction.
/// Fitness values are memoized across the run (the objective must be pure).
inline GaResult ga_minimize(const std::vector<int>& domains,
                            const std::function<double(const std::vector<int>&)>& fitness,
                            const GaParams& params) {
  params.check();
  if (domains.empty()) throw std::invalid_argument("ga: empty genome");
  for (int d : domains)
    if (d < 1) throw std::invalid_argument("ga: gene domain must be >= 1");

  const std::size_t G = domains.size();
  double pmut = params.mutation_rate >= 0.0 ? params.mutation_rate
                                            : 1.0 / static_cast<double>(G);
  auto rng = make_rng(derive_seed(params.seed, 0x6A11));
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::map<std::vector<int>, double> memo;
  GaResult out;
  auto eval = [&](const std::vector<int>& genes) {
    auto it = memo.find(genes);
    if (it != memo.end()) return it->second;
    double f = fitness(genes);
    memo.emplace(genes, f);
    ++out.evaluations;
    return f;
  };

  auto random_genes = [&]() {
    std::vector<int> g(G);
    for (std::size_t i = 0; i < G; ++i) {
      std::uniform_int_distribution<int> d(0, domains[i] - 1);
      g[i] = d(rng);
    }
    return g;
  };

  std::vector<std::vector<int>> pop;
  std::vector<double> fit;
  for (int i = 0; i < params.population; ++i) {
    pop.push_back(random_genes());
    fit.push_back(eval(pop.back()));
  }

  auto best_index = [&]() {
    std::size_t b = 0;
    for (std::size_t i = 1; i < pop.size(); ++i)
      if (fit[i] < fit[b]) b = i;
    return b;
  };

  std::size_t b0 = best_index();
  out.genes = pop[b0];
  out.fitness = fit[b0];

  std::uniform_int_distribution<int> pick(0, params.population - 1);
  auto tournament = [&]() {
    int best = pick(rng);
    for (int t = 1; t < 3; ++t) {
      int c = pick(rng);
      if (fit[static_cast<std::size_t>(c)] < fit[static_cast<std::size_t>(best)]) best = c;
    }
    return static_cast<std::size_t>(best);
  };

  for (int gen = 0; gen < params.generations; ++gen) {
    std::vector<std::vector<int>> next;
    next.push_back(out.genes);  // elitism
    while (static_cast<int>(next.size()) < params.population) {
      std::vector<int> a = pop[tournament()];
      const std::vector<int>& b = pop[tournament()];
      if (coin(rng) < params.crossover_rate)
        for (std::size_t i = 0; i < G; ++i)
          if (coin(rng) < 0.5) a[i] = b[i];
      for (std::size_t i = 0; i < G; ++i)
        if (coin(rng) < pmut) {
          std::uniform_int_distribution<int> d(0, domains[i] - 1);
          a[i] = d(rng);
        }
      next.push_back(std::move(a));
    }
    pop = std::move(next);
    double mean = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      fit[i] = eval(pop[i]);
      mean += fit[i];
      if (fit[i] < out.fitness) {
        out.fitness = fit[i];
        out.genes = pop[i];
      }
    }
    out.best_history.push_back(out.fitness);
    out.mean_history.push_back(mean / static_cast<double>(pop.size()));
  }
  return out;
}

}  // namespace jcsp
