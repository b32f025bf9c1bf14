#include <gtest/gtest.h>

#include <numeric>

#include "jcsp/optimizer.hpp"

namespace {

using namespace jcsp;

WorkloadSpec test_workload(int services, std::uint64_t seed = 11, int users = 3) {
  SynthParams p;
  p.services = services;
  p.users = users;
  p.seed = seed;
  p.slots_per_node = 4;
  WorkloadSpec w = synth_workload(p);
  for (auto& s : w.services) s.item_count = 8;
  return w;
}

TEST(Ga, MinimizesSumOfGenes) {
  GaParams params;
  params.generations = 40;
  params.population = 20;
  params.seed = 5;
  auto fitness = [](const std::vector<int>& g) {
    return static_cast<double>(std::accumulate(g.begin(), g.end(), 0));
  };
  GaResult r = ga_minimize({8, 8, 8, 8, 8}, fitness, params);
  EXPECT_EQ(r.fitness, 0.0);
  for (int g : r.genes) EXPECT_EQ(g, 0);
}

TEST(Ga, BestHistoryNonIncreasingAndDeterministic) {
  GaParams params;
  params.generations = 25;
  params.population = 12;
  params.seed = 9;
  auto fitness = [](const std::vector<int>& g) {
    double f = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) f += (g[i] - 3.0) * (g[i] - 3.0) * (i + 1.0);
    return f;
  };
  GaResult a = ga_minimize({10, 10, 10}, fitness, params);
  GaResult b = ga_minimize({10, 10, 10}, fitness, params);
  EXPECT_EQ(a.genes, b.genes);
  EXPECT_EQ(a.fitness, b.fitness);
  for (std::size_t i = 1; i < a.best_history.size(); ++i)
    EXPECT_LE(a.best_history[i], a.best_history[i - 1]);
  params.seed = 10;
  GaResult c = ga_minimize({10, 10, 10}, fitness, params);
  EXPECT_EQ(c.fitness, a.fitness);  // small space: both find the optimum
}

TEST(Ga, ParameterValidation) {
  GaParams params;
  params.population = 1;
  auto f = [](const std::vector<int>&) { return 0.0; };
  EXPECT_THROW(ga_minimize({2}, f, params), std::invalid_argument);
  params = {};
  EXPECT_THROW(ga_minimize({}, f, params), std::invalid_argument);
  EXPECT_THROW(ga_minimize({0}, f, params), std::invalid_argument);
}

TEST(EvaluatePlacement, SymmetricNodesGiveEqualResponse) {
  WorkloadSpec w = test_workload(1);
  ServiceCatalog cat = make_catalog(w, 2, 7);
  // make the two nodes identical
  cat.service_time[1] = cat.service_time[0];
  PlacementDecision a, b;
  a.node_of = {0};
  b.node_of = {1};
  EXPECT_NEAR(evaluate_placement(cat, w, a), evaluate_placement(cat, w, b), 1e-12);
}

TEST(ExhaustiveOracle, EnumeratesAndGuards) {
  WorkloadSpec w = test_workload(2);
  ServiceCatalog cat = make_catalog(w, 2, 13);
  PlacementOutcome best = exhaustive_placement_oracle(cat, w);
  EXPECT_EQ(best.evaluations, 4);  // 2 jobs x 2 feasible nodes
  // the oracle value is a lower bound over all placements
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      PlacementDecision x;
      x.node_of = {a, b};
      EXPECT_GE(evaluate_placement(cat, w, x) + 1e-12, best.response);
    }
  EXPECT_THROW(exhaustive_placement_oracle(cat, w, 3), std::invalid_argument);
}

TEST(ExhaustiveOracle, LexicographicTieBreak) {
  WorkloadSpec w = test_workload(2);
  ServiceCatalog cat = make_catalog(w, 2, 13);
  cat.service_time[1] = cat.service_time[0];  // symmetric nodes
  PlacementOutcome best = exhaustive_placement_oracle(cat, w);
  // spreading is optimal on symmetric nodes; {0,1} and {1,0} tie and the
  // lexicographically first wins
  EXPECT_EQ(best.x.node_of, (std::vector<int>{0, 1}));
}

TEST(GaPlacement, SingleFeasibleNodeIsImmediate) {
  WorkloadSpec w = test_workload(2);
  ServiceCatalog cat = make_catalog(w, 2, 13);
  cat.placement = {{1, 1}, {0, 0}};  // only node 0 is feasible
  GaParams params;
  params.generations = 1;
  params.population = 4;
  PlacementOutcome out = ga_optimize_placement(cat, w, params);
  EXPECT_EQ(out.x.node_of, (std::vector<int>{0, 0}));
}

TEST(GaPlacement, PicksDominantNodeAtLowLoad) {
  WorkloadSpec w = test_workload(2, 11, 1);
  w.think_time = 50.0;  // negligible contention
  ServiceCatalog cat = make_catalog(w, 2, 13);
  for (int k = 0; k < 2; ++k) {
    cat.service_time[0][static_cast<std::size_t>(k)] = 0.1;
    cat.service_time[1][static_cast<std::size_t>(k)] = 0.8;
  }
  GaParams params;
  params.generations = 15;
  params.population = 10;
  params.seed = 3;
  PlacementOutcome out = ga_optimize_placement(cat, w, params);
  EXPECT_EQ(out.x.node_of, (std::vector<int>{0, 0}));
}

TEST(GaPlacement, NearOracleOnSeededInstances) {
  int hits = 0;
  const int runs = 5;
  for (int i = 0; i < runs; ++i) {
    WorkloadSpec w = test_workload(3, 40 + static_cast<std::uint64_t>(i));
    ServiceCatalog cat = make_catalog(w, 2, 70 + static_cast<std::uint64_t>(i));
    PlacementOutcome oracle = exhaustive_placement_oracle(cat, w);
    GaParams params;
    params.generations = 30;
    params.population = 16;
    params.seed = 100 + static_cast<std::uint64_t>(i);
    PlacementOutcome ga = ga_optimize_placement(cat, w, params);
    EXPECT_GE(ga.response + 1e-12, oracle.response);
    if (ga.response <= oracle.response * 1.01) ++hits;
  }
  EXPECT_EQ(hits, runs);  // tiny search space: the GA should always find it
}

TEST(SlotSplit, LargestRemainderExact) {
  EXPECT_EQ(odetail::split_slots({1, 1}, 3), (std::vector<int>{2, 1}));
  EXPECT_EQ(odetail::split_slots({0, 0, 0}, 4), (std::vector<int>{4, 0, 0}));
  EXPECT_EQ(odetail::split_slots({3, 1}, 4), (std::vector<int>{3, 1}));
  // sums are always exact
  for (int budget : {1, 5, 7}) {
    auto s = odetail::split_slots({5, 2, 9, 1}, budget);
    EXPECT_EQ(std::accumulate(s.begin(), s.end(), 0), budget);
  }
}

TEST(GaJcsp, SingleServiceTakesFullCapacity) {
  WorkloadSpec w = test_workload(1);
  w.node_capacity_mb.resize(1);
  ServiceCatalog cat = make_catalog(w, 1, 7);
  GaParams params;
  params.generations = 3;
  params.population = 6;
  JcspOutcome out = ga_optimize_jcsp(cat, w, params);
  ASSERT_EQ(out.alloc.slots.size(), 1u);
  EXPECT_EQ(out.alloc.slots[0][0], w.node_slots(0));
  EXPECT_NEAR(out.memory_mb, w.node_slots(0) * w.item_size_mb(), 1e-9);
}

TEST(GaJcsp, StarvesUnrequestedService) {
  WorkloadSpec w = test_workload(2);
  w.node_capacity_mb.resize(1);
  ServiceCatalog cat = make_catalog(w, 1, 7);
  cat.workflows = {{{0}, 1.0}, {{1}, 0.0}};  // service 1 never requested
  cat.check();
  GaParams params;
  params.generations = 25;
  params.population = 16;
  params.seed = 6;
  JcspOutcome out = ga_optimize_jcsp(cat, w, params);
  EXPECT_EQ(out.alloc.slots[0][0], w.node_slots(0));
  EXPECT_EQ(out.alloc.slots[0][1], 0);
}

TEST(Baselines, OrderingOnFixture) {
  WorkloadSpec w = test_workload(2);
  ServiceCatalog cat = make_catalog(w, 2, 21);
  GaParams params;
  params.generations = 10;
  params.population = 12;
  params.seed = 2;
  JcspOutcome jcsp = ga_optimize_jcsp(cat, w, params);
  double no_cache = baseline_no_cache(cat, w, jcsp.x);
  PrefetchAllOutcome prefetch = baseline_prefetch_all(cat, w, jcsp.x);
  EXPECT_LE(prefetch.response, jcsp.response + 1e-9);
  EXPECT_LE(jcsp.response, no_cache + 1e-9);
  // prefetch-all memory = full item footprint; JCSP uses only the budgets
  double item_size = w.item_size_mb();
  EXPECT_NEAR(prefetch.memory_mb, 2 * 8 * item_size, 1e-9);
  EXPECT_LT(jcsp.memory_mb, prefetch.memory_mb);
}

TEST(Odtsc, SingleJobStartsAtZero) {
  WorkloadSpec w = test_workload(1);
  ServiceCatalog cat = make_catalog(w, 1, 7);
  GaParams params;
  params.generations = 2;
  params.population = 4;
  OdtscSchedule s = odtsc_style_baseline(cat, params);
  EXPECT_EQ(s.start[0], 0.0);
  EXPECT_NEAR(s.finish[0], cat.service_time[0][0], 1e-12);
  EXPECT_NEAR(s.total_completion, cat.service_time[0][0], 1e-12);
}

TEST(Odtsc, SpreadsEqualJobsAcrossIdenticalNodes) {
  WorkloadSpec w = test_workload(2);
  ServiceCatalog cat = make_catalog(w, 2, 7);
  for (auto& row : cat.service_time) row = {1.0, 1.0};
  GaParams params;
  params.generations = 20;
  params.population = 12;
  params.seed = 4;
  OdtscSchedule s = odtsc_style_baseline(cat, params);
  // one job per node: both finish at 1, total 2 (same node would give 3)
  EXPECT_NE(s.x.node_of[0], s.x.node_of[1]);
  EXPECT_NEAR(s.total_completion, 2.0, 1e-12);
}

TEST(Odtsc, ChainMatchesBruteForce) {
  WorkloadSpec w = test_workload(3);
  ServiceCatalog cat = make_catalog(w, 2, 7);
  cat.workflows = {{{0, 1, 2}, 1.0}};
  cat.service_time = {{0.4, 1.0, 0.3}, {0.7, 0.5, 0.9}};
  cat.check();

  // chain precedence forces the order; completion depends on assignment only
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        double f0 = cat.service_time[static_cast<std::size_t>(a)][0];
        double f1 = f0 + cat.service_time[static_cast<std::size_t>(b)][1];
        double f2 = f1 + cat.service_time[static_cast<std::size_t>(c)][2];
        best = std::min(best, f0 + f1 + f2);
      }

  GaParams params;
  params.generations = 30;
  params.population = 16;
  params.seed = 8;
  OdtscSchedule s = odtsc_style_baseline(cat, params);
  EXPECT_NEAR(s.total_completion, best, 1e-12);
}

}  // namespace
