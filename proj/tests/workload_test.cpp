#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "jcsp/catalog.hpp"
#include "jcsp/solver.hpp"
#include "jcsp/workload.hpp"

namespace {

using namespace jcsp;

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("jcsp-wl-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    fs::path p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

TEST(Zipf, WorkloadPopularityExamples) {
  // eta = 0 degenerates to uniform
  auto u = zipf_weights(4, 0.0);
  for (double w : u) EXPECT_NEAR(w, 0.25, 1e-12);
  // eta = 1, n = 2: weights 1, 1/2 normalize to 2/3, 1/3
  auto z = zipf_weights(2, 1.0);
  EXPECT_NEAR(z[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(z[1], 1.0 / 3.0, 1e-12);
}

TEST(SynthWorkload, DeterministicAndValid) {
  SynthParams p;
  p.nodes = 4;
  p.users = 25;
  p.services = 20;
  p.capacity_mb = 750.0;
  p.item_size_gb = 1.0;
  p.zipf_eta = 1.0;
  p.seed = 99;
  WorkloadSpec a = synth_workload(p);
  WorkloadSpec b = synth_workload(p);
  EXPECT_EQ(save_workload(a).dump(), save_workload(b).dump());
  EXPECT_EQ(static_cast<int>(a.services.size()), 20);
  double sum = 0.0;
  for (double q : a.request_probability) sum += q;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  // identical item size: n = round(p / item-size), item-size = q / 50
  double item_size = 750.0 / 50.0;
  int expect_items = static_cast<int>(std::lround(1024.0 / item_size));
  EXPECT_EQ(a.services[0].item_count, expect_items);
}

TEST(SynthWorkload, RejectsBadParameters) {
  SynthParams p;
  p.capacity_mb = 0.0;
  EXPECT_THROW(synth_workload(p), std::invalid_argument);
  p = {};
  p.services = 0;
  EXPECT_THROW(synth_workload(p), std::invalid_argument);
}

TEST(IngestTrace, RatePerSecondFromDailyCounts) {
  TempDir dir;
  TraceFiles files;
  files.invocations_csv =
      dir.file("inv.csv", "app,function,bin1\napp-a,f1,1440\n");
  files.durations_csv =
      dir.file("dur.csv", "app,function,min,avg,max\napp-a,f1,0.1,0.5,2.0\n");
  files.memory_csv = dir.file("mem.csv", "app,p1,avg,max\napp-a,100,150,300\n");
  IngestOptions opt;
  opt.horizon_seconds = 86400.0;  // one day
  WorkloadSpec w = ingest_trace(files, opt);
  ASSERT_EQ(w.services.size(), 1u);
  EXPECT_NEAR(w.services[0].invocation_rate, 1.0 / 60.0, 1e-12);
  EXPECT_NEAR(w.services[0].service_time.mean, 0.5, 1e-12);
  EXPECT_NEAR(w.services[0].memory_mb, 150.0, 1e-12);
  EXPECT_NEAR(w.request_probability[0], 1.0, 1e-12);
}

TEST(IngestTrace, RowDiagnostics) {
  TempDir dir;
  TraceFiles files;
  files.invocations_csv =
      dir.file("inv.csv", "app,function,bin1\napp-a,f1,100\n");
  // min > max violates the percentile ordering
  files.durations_csv =
      dir.file("dur.csv", "app,function,min,avg,max\napp-a,f1,5.0,0.5,2.0\n");
  files.memory_csv = dir.file("mem.csv", "app,p1,avg,max\napp-a,100,150,300\n");
  try {
    ingest_trace(files);
    FAIL() << "expected ordering diagnostic";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }

  files.durations_csv =
      dir.file("dur2.csv", "app,function,min,avg,max\napp-a,f1,0.1,abc,2.0\n");
  EXPECT_THROW(ingest_trace(files), std::runtime_error);

  // durations referencing an unknown function: missing join key
  files.durations_csv =
      dir.file("dur3.csv", "app,function,min,avg,max\napp-b,f9,0.1,0.5,2.0\n");
  EXPECT_THROW(ingest_trace(files), std::runtime_error);
}

TEST(CdfReport, StepsAndMedians) {
  SynthParams p;
  p.services = 1;
  WorkloadSpec one = synth_workload(p);
  CdfReport r1 = cdf_report(one);
  ASSERT_EQ(r1.execution_time.value.size(), 1u);
  EXPECT_NEAR(r1.execution_time.cumulative[0], 1.0, 1e-12);

  WorkloadSpec two = one;
  two.services.push_back(two.services[0]);
  two.services[0].service_time.mean = 1.0;
  two.services[1].service_time.mean = 3.0;
  two.request_probability = {0.5, 0.5};
  CdfReport r2 = cdf_report(two);
  EXPECT_NEAR(r2.execution_time.value[0], 1.0, 1e-12);
  EXPECT_NEAR(r2.execution_time.cumulative[0], 0.5, 1e-12);
  EXPECT_NEAR(r2.execution_time.cumulative[1], 1.0, 1e-12);

  // CDF is monotone and ends at 1 on a bigger workload
  p.services = 30;
  CdfReport r3 = cdf_report(synth_workload(p));
  for (std::size_t i = 1; i < r3.memory.cumulative.size(); ++i)
    EXPECT_GE(r3.memory.cumulative[i], r3.memory.cumulative[i - 1]);
  EXPECT_NEAR(r3.memory.cumulative.back(), 1.0, 1e-12);
}

TEST(WorkloadJson, RoundTrip) {
  SynthParams p;
  p.services = 5;
  p.seed = 3;
  WorkloadSpec w = synth_workload(p);
  WorkloadSpec back = load_workload(save_workload(w));
  EXPECT_EQ(save_workload(w).dump(), save_workload(back).dump());
  nlohmann::json bad = save_workload(w);
  bad["schema"] = "other/9";
  EXPECT_THROW(load_workload(bad), std::runtime_error);
}

// --- catalog / edge model ----------------------------------------------------

WorkloadSpec small_workload(int services) {
  SynthParams p;
  p.services = services;
  p.users = 3;
  p.seed = 11;
  return synth_workload(p);
}

TEST(Catalog, FeasibleNodes) {
  ServiceCatalog cat;
  cat.nodes = 2;
  cat.services = 1;
  cat.job_service = {0};
  cat.placement = {{1}, {0}};
  cat.service_time = {{0.5}, {0.5}};
  cat.workflows = {{{0}, 1.0}};
  cat.check();
  auto f = feasible_nodes(cat, 0);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0], 0);

  cat.placement = {{1}, {1}};
  EXPECT_EQ(feasible_nodes(cat, 0).size(), 2u);

  cat.placement = {{0}, {0}};
  EXPECT_THROW(feasible_nodes(cat, 0), std::invalid_argument);
}

TEST(Catalog, PlacementFeasibilityChecked) {
  WorkloadSpec w = small_workload(2);
  ServiceCatalog cat = make_catalog(w, 2, 7);
  cat.placement[1][0] = 0;  // node 1 cannot host job 0
  PlacementDecision x;
  x.node_of = {1, 0};
  EXPECT_THROW(x.check(cat), std::invalid_argument);
  x.node_of = {0, 0};
  EXPECT_NO_THROW(x.check(cat));
}

TEST(EdgeModel, SingleServiceTwoLayers) {
  WorkloadSpec w = small_workload(1);
  ServiceCatalog cat = make_catalog(w, 1, 7);
  PlacementDecision x;
  x.node_of = {0};
  LqnModel m = build_edge_model(cat, x, w);
  EXPECT_TRUE(validate_model(m).empty());
  // reference layer + node layer (+ origin delay layer)
  EXPECT_NE(m.find_task("users"), nullptr);
  EXPECT_NE(m.find_task("job-0"), nullptr);
  SolverResult r = solve_lqn(m);
  EXPECT_GT(r.total_throughput, 0.0);
}

TEST(EdgeModel, ChainWorkflowCrossNodeCall) {
  WorkloadSpec w = small_workload(3);
  ServiceCatalog cat = make_catalog(w, 2, 7);
  cat.workflows = {{{0, 1, 2}, 1.0}};  // one chain of three jobs
  cat.check();
  PlacementDecision x;
  x.node_of = {0, 1, 0};  // job 1 crosses to the other node
  LqnModel m = build_edge_model(cat, x, w);
  EXPECT_TRUE(validate_model(m).empty());
  const Call* c = m.find_call("next-0");
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->to_entry, "job-1.serve");
  EXPECT_EQ(c->kind, CallKind::Synchronous);
  EXPECT_EQ(m.find_task("job-0")->host_processor, "node-0");
  EXPECT_EQ(m.find_task("job-1")->host_processor, "node-1");
  SolverResult r = solve_lqn(m);
  EXPECT_GT(r.total_throughput, 0.0);
}

TEST(EdgeModel, CacheAllocationShapes) {
  WorkloadSpec w = small_workload(2);
  w.node_capacity_mb = {30.0, 30.0};
  w.slots_per_node = 2;  // 2 item slots per node
  for (auto& s : w.services) s.item_count = 4;
  ServiceCatalog cat = make_catalog(w, 1, 7);
  PlacementDecision x;
  x.node_of = {0, 0};

  CacheAllocation alloc;
  alloc.node_slots = {2};
  alloc.slots = {{1, 1}};
  LqnModel m = apply_cache_allocation(cat, x, w, alloc);
  EXPECT_TRUE(validate_model(m).empty());
  EXPECT_NE(m.find_task("cache-0"), nullptr);
  EXPECT_NE(m.find_task("cache-1"), nullptr);
  EXPECT_EQ(m.find_task("cache-0")->cache_spec->total_capacity(), 1);

  // zero allocation: that service keeps a pure miss path, no cache-task
  alloc.slots = {{2, 0}};
  LqnModel m2 = apply_cache_allocation(cat, x, w, alloc);
  EXPECT_NE(m2.find_task("cache-0"), nullptr);
  EXPECT_EQ(m2.find_task("cache-1"), nullptr);
  ASSERT_NE(m2.find_call("miss-1"), nullptr);
  EXPECT_EQ(m2.find_call("miss-1")->to_entry, "origin-1.fetch");

  // allocations must sum exactly to the node budget
  alloc.slots = {{2, 1}};
  EXPECT_THROW(apply_cache_allocation(cat, x, w, alloc), std::invalid_argument);
  alloc.slots = {{1, 0}};
  EXPECT_THROW(apply_cache_allocation(cat, x, w, alloc), std::invalid_argument);
}

TEST(EdgeModel, PrefetchAllCachesEverything) {
  WorkloadSpec w = small_workload(2);
  for (auto& s : w.services) s.item_count = 3;
  ServiceCatalog cat = make_catalog(w, 1, 7);
  PlacementDecision x;
  x.node_of = {0, 0};
  LqnModel m = build_edge_model(cat, x, w, CacheMode::PrefetchAll);
  EXPECT_TRUE(validate_model(m).empty());
  for (int k = 0; k < 2; ++k) {
    const Task* ct = m.find_task("cache-" + std::to_string(k));
    ASSERT_NE(ct, nullptr);
    EXPECT_EQ(ct->cache_spec->total_capacity(), 3);
  }
  SolverResult r = solve_lqn(m);
  for (const auto& cs : r.caches) EXPECT_NEAR(cs.p_miss, 0.0, 1e-9);
}

TEST(EdgeModel, SolvableWithAllocatedCaches) {
  WorkloadSpec w = small_workload(2);
  w.slots_per_node = 4;
  for (auto& s : w.services) s.item_count = 6;
  ServiceCatalog cat = make_catalog(w, 2, 7);
  PlacementDecision x;
  x.node_of = {0, 1};
  CacheAllocation alloc;
  alloc.node_slots = {w.node_slots(0), w.node_slots(1)};
  alloc.slots = {{4, 0}, {0, 4}};
  LqnModel m = apply_cache_allocation(cat, x, w, alloc);
  SolverResult r = solve_lqn(m);
  EXPECT_GT(r.total_throughput, 0.0);
  ASSERT_EQ(r.caches.size(), 2u);
  for (const auto& cs : r.caches) {
    EXPECT_GT(cs.p_hit, 0.0);
    EXPECT_LT(cs.p_hit, 1.0);
    EXPECT_NEAR(cs.p_hit + cs.p_miss, 1.0, 1e-9);
  }
}

}  // namespace
