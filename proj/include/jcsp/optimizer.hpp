#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "jcsp/catalog.hpp"
#include "jcsp/ga.hpp"
#include "jcsp/solver.hpp"
#include "jcsp/workload.hpp"

namespace jcsp {

/// Total response time of the layered model for a placement. The cache mode
/// selects how the content-fetch step is modeled.
inline double evaluate_placement(const ServiceCatalog& cat, const WorkloadSpec& w,
                                 const PlacementDecision& x, CacheMode mode = CacheMode::None,
                                 const CacheAllocation* alloc = nullptr,
                                 const SolverOptions& sopt = {}) {
  LqnModel m = build_edge_model(cat, x, w, mode, alloc);
  SolverResult r = solve_lqn(m, sopt);
  return total_response_time(r);
}

struct PlacementOutcome {
  PlacementDecision x;
  double response = 0.0;
  std::vector<double> best_history;
  int evaluations = 0;
};

/// Exact optimum by enumerating all feasible placements in lexicographic
/// order; strict improvement keeps the lexicographically first optimum.
inline PlacementOutcome exhaustive_placement_oracle(const ServiceCatalog& cat,
                                                    const WorkloadSpec& w,
                                                    long limit = 10'000,
                                                    CacheMode mode = CacheMode::None,
                                                    const CacheAllocation* alloc = nullptr,
                                                    const SolverOptions& sopt = {}) {
  cat.check();
  const int K = cat.jobs();
  std::vector<std::vector<int>> feas;
  long count = 1;
  for (int k = 0; k < K; ++k) {
    feas.push_back(feasible_nodes(cat, k));
    count *= static_cast<long>(feas.back().size());
    if (count > limit)
      throw std::invalid_argument("exhaustive oracle: " + std::to_string(count) +
                                  " placements exceed the limit of " + std::to_string(limit));
  }
  PlacementOutcome best;
  best.response = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(static_cast<std::size_t>(K), 0);
  for (;;) {
    PlacementDecision x;
    for (int k = 0; k < K; ++k)
      x.node_of.push_back(feas[static_cast<std::size_t>(k)][idx[static_cast<std::size_t>(k)]]);
    double r = evaluate_placement(cat, w, x, mode, alloc, sopt);
    ++best.evaluations;
    if (r < best.response) {
      best.response = r;
      best.x = x;
    }
    int k = K - 1;
    while (k >= 0 &&
           ++idx[static_cast<std::size_t>(k)] == feas[static_cast<std::size_t>(k)].size()) {
      idx[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return best;
}

/// GA over placement genes; gene k indexes F_k, so every genotype satisfies
/// the one-node-per-job constraints by construction.
inline PlacementOutcome ga_optimize_placement(const ServiceCatalog& cat, const WorkloadSpec& w,
                                              const GaParams& params,
                                              CacheMode mode = CacheMode::None,
                                              const CacheAllocation* alloc = nullptr,
                                              const SolverOptions& sopt = {}) {
  cat.check();
  const int K = cat.jobs();
  std::vector<std::vector<int>> feas;
  std::vector<int> domains;
  for (int k = 0; k < K; ++k) {
    feas.push_back(feasible_nodes(cat, k));
    domains.push_back(static_cast<int>(feas.back().size()));
  }
  auto decode = [&](const std::vector<int>& genes) {
    PlacementDecision x;
    for (int k = 0; k < K; ++k)
      x.node_of.push_back(feas[static_cast<std::size_t>(k)][static_cast<std::size_t>(
          genes[static_cast<std::size_t>(k)])]);
    return x;
  };
  GaResult g = ga_minimize(
      domains,
      [&](const std::vector<int>& genes) {
        return evaluate_placement(cat, w, decode(genes), mode, alloc, sopt);
      },
      params);
  PlacementOutcome out;
  out.x = decode(g.genes);
  out.response = g.fitness;
  out.best_history = g.best_history;
  out.evaluations = g.evaluations;
  return out;
}

// --- joint caching and service placement -------------------------------------

namespace odetail {

/// Largest-remainder split of a node's slot budget over services, weighted
/// by nonnegative integer genes; all-zero weights put the budget on the
/// first service (deterministic degenerate case).
inline std::vector<int> split_slots(const std::vector<int>& weights, int budget) {
  std::vector<int> out(weights.size(), 0);
  long wsum = std::accumulate(weights.begin(), weights.end(), 0L);
  if (budget <= 0) return out;
  if (wsum == 0) {
    out[0] = budget;
    return out;
  }
  int assigned = 0;
  std::vector<std::pair<double, std::size_t>> rem;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    double share = static_cast<double>(weights[c]) * budget / static_cast<double>(wsum);
    out[c] = static_cast<int>(std::floor(share));
    assigned += out[c];
    rem.push_back({share - std::floor(share), c});
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (int i = 0; i < budget - assigned; ++i) out[rem[static_cast<std::size_t>(i)].second] += 1;
  return out;
}

}  // namespace odetail

struct JcspOutcome {
  PlacementDecision x;
  CacheAllocation alloc;
  double response = 0.0;
  double memory_mb = 0.0;  // total cache memory in use
  std::vector<double> best_history;
  int evaluations = 0;
};

/// Joint chromosome: K placement genes followed by M*C capacity-weight
/// genes; weights are re-normalized per node by largest remainder so each
/// node's allocations sum exactly to its slot budget.
inline JcspOutcome ga_optimize_jcsp(const ServiceCatalog& cat, const WorkloadSpec& w,
                                    const GaParams& params, const SolverOptions& sopt = {}) {
  cat.check();
  w.check();
  const int K = cat.jobs();
  const int M = cat.nodes;
  const int C = cat.services;
  if (static_cast<int>(w.node_capacity_mb.size()) != M)
    throw std::invalid_argument("ga_optimize_jcsp: one node capacity per node required");

  std::vector<int> budgets;
  for (int m = 0; m < M; ++m) budgets.push_back(w.node_slots(static_cast<std::size_t>(m)));

  std::vector<std::vector<int>> feas;
  std::vector<int> domains;
  for (int k = 0; k < K; ++k) {
    feas.push_back(feasible_nodes(cat, k));
    domains.push_back(static_cast<int>(feas.back().size()));
  }
  constexpr int kWeightLevels = 10;
  for (int i = 0; i < M * C; ++i) domains.push_back(kWeightLevels);

  auto decode = [&](const std::vector<int>& genes) {
    PlacementDecision x;
    for (int k = 0; k < K; ++k)
      x.node_of.push_back(feas[static_cast<std::size_t>(k)][static_cast<std::size_t>(
          genes[static_cast<std::size_t>(k)])]);
    CacheAllocation alloc;
    alloc.node_slots = budgets;
    for (int m = 0; m < M; ++m) {
      std::vector<int> weights(genes.begin() + K + m * C, genes.begin() + K + (m + 1) * C);
      alloc.slots.push_back(odetail::split_slots(weights, budgets[static_cast<std::size_t>(m)]));
    }
    return std::make_pair(x, alloc);
  };

  GaResult g = ga_minimize(
      domains,
      [&](const std::vector<int>& genes) {
        auto [x, alloc] = decode(genes);
        return evaluate_placement(cat, w, x, CacheMode::Allocated, &alloc, sopt);
      },
      params);

  JcspOutcome out;
  std::tie(out.x, out.alloc) = decode(g.genes);
  out.response = g.fitness;
  out.best_history = g.best_history;
  out.evaluations = g.evaluations;
  double item_size = w.item_size_mb();
  for (int b : budgets) out.memory_mb += b * item_size;
  return out;
}

// --- baselines ----------------------------------------------------------------

/// Every request fetches from the origin server; no caching modules at all.
inline double baseline_no_cache(const ServiceCatalog& cat, const WorkloadSpec& w,
                                const PlacementDecision& x, const SolverOptions& sopt = {}) {
  return evaluate_placement(cat, w, x, CacheMode::None, nullptr, sopt);
}

struct PrefetchAllOutcome {
  double response = 0.0;
  double memory_mb = 0.0;  // full item footprint of every placed service
};

/// Every placed service caches its complete item catalog.
inline PrefetchAllOutcome baseline_prefetch_all(const ServiceCatalog& cat, const WorkloadSpec& w,
                                                const PlacementDecision& x,
                                                const SolverOptions& sopt = {}) {
  PrefetchAllOutcome out;
  out.response = evaluate_placement(cat, w, x, CacheMode::PrefetchAll, nullptr, sopt);
  double item_size = w.item_size_mb();
  for (int k = 0; k < cat.jobs(); ++k) {
    int svc = cat.job_service[static_cast<std::size_t>(k)];
    out.memory_mb += w.services.at(static_cast<std::size_t>(svc)).item_count * item_size;
  }
  return out;
}

// --- deterministic-scheduling baseline ----------------------------------------

struct OdtscSchedule {
  PlacementDecision x;
  std::vector<double> start;
  std::vector<double> finish;
  double total_completion = 0.0;  // sum over jobs of their completion time
};

namespace odetail {

/// List scheduling for fixed assignments and job priorities: chain
/// precedence between consecutive workflow jobs, no overlap per node.
inline OdtscSchedule schedule_jobs(const ServiceCatalog& cat, const std::vector<int>& assign,
                                   const std::vector<int>& priority) {
  const int K = cat.jobs();
  std::vector<int> pred(static_cast<std::size_t>(K), -1);
  for (const auto& wf : cat.workflows)
    for (std::size_t i = 0; i + 1 < wf.jobs.size(); ++i)
      pred[static_cast<std::size_t>(wf.jobs[i + 1])] = wf.jobs[i];

  std::vector<int> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return priority[static_cast<std::size_t>(a)] < priority[static_cast<std::size_t>(b)];
  });

  OdtscSchedule s;
  s.x.node_of = assign;
  s.start.assign(static_cast<std::size_t>(K), -1.0);
  s.finish.assign(static_cast<std::size_t>(K), -1.0);
  std::vector<double> node_free(static_cast<std::size_t>(cat.nodes), 0.0);
  int scheduled = 0;
  while (scheduled < K) {
    bool progress = false;
    for (int k : order) {
      if (s.start[static_cast<std::size_t>(k)] >= 0.0) continue;
      int p = pred[static_cast<std::size_t>(k)];
      if (p >= 0 && s.finish[static_cast<std::size_t>(p)] < 0.0) continue;
      int node = assign[static_cast<std::size_t>(k)];
      double ready = p >= 0 ? s.finish[static_cast<std::size_t>(p)] : 0.0;
      double begin = std::max(ready, node_free[static_cast<std::size_t>(node)]);
      double exec = cat.service_time[static_cast<std::size_t>(node)][static_cast<std::size_t>(k)];
      s.start[static_cast<std::size_t>(k)] = begin;
      s.finish[static_cast<std::size_t>(k)] = begin + exec;
      node_free[static_cast<std::size_t>(node)] = begin + exec;
      ++scheduled;
      progress = true;
    }
    if (!progress) throw std::logic_error("odtsc: precedence deadlock");
  }
  for (double f : s.finish) s.total_completion += f;
  return s;
}

}  // namespace odetail

/// Deterministic offline scheduling baseline: a GA over 2K genes (job
/// priorities then assignments) minimizing the summed completion times under
/// chain precedence and no-overlap-per-node, using t_mk as deterministic
/// execution times. The resulting assignment is the x' of the comparison
/// pipeline.
inline OdtscSchedule odtsc_style_baseline(const ServiceCatalog& cat, const GaParams& params) {
  cat.check();
  const int K = cat.jobs();
  constexpr int kPriorityLevels = 16;
  std::vector<std::vector<int>> feas;
  std::vector<int> domains;
  for (int k = 0; k < K; ++k) domains.push_back(kPriorityLevels);
  for (int k = 0; k < K; ++k) {
    feas.push_back(feasible_nodes(cat, k));
    domains.push_back(static_cast<int>(feas.back().size()));
  }
  auto decode = [&](const std::vector<int>& genes) {
    std::vector<int> priority(genes.begin(), genes.begin() + K);
    std::vector<int> assign;
    for (int k = 0; k < K; ++k)
      assign.push_back(feas[static_cast<std::size_t>(k)][static_cast<std::size_t>(
          genes[static_cast<std::size_t>(K + k)])]);
    return odetail::schedule_jobs(cat, assign, priority);
  };
  GaResult g = ga_minimize(
      domains,
      [&](const std::vector<int>& genes) { return decode(genes).total_completion; },
      params);
  return decode(g.genes);
}

}  // namespace jcsp
