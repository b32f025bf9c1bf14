#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "jcsp/model.hpp"
#include "jcsp/prng.hpp"
#include "jcsp/workload.hpp"

namespace jcsp {

/// Placement feasibility and per-node service demands plus the user
/// workflows (chains of jobs with request probabilities).
struct ServiceCatalog {
  int nodes = 0;     // M
  int services = 0;  // C, also the number of distinct service types
  struct Workflow {
    std::vector<int> jobs;     // chain of job indices, executed in order
    double probability = 1.0;  // request probability of this workflow
  };
  std::vector<int> job_service;                    // per job k: service type
  std::vector<std::vector<int>> placement;         // p_mk, [node][job] in {0,1}
  std::vector<std::vector<double>> service_time;   // t_mk, [node][job] seconds
  std::vector<Workflow> workflows;

  int jobs() const { return static_cast<int>(job_service.size()); }

  void check() const {
    if (nodes < 1 || services < 1 || jobs() < 1)
      throw std::invalid_argument("catalog: nodes, services and jobs must be >= 1");
    if (static_cast<int>(placement.size()) != nodes ||
        static_cast<int>(service_time.size()) != nodes)
      throw std::invalid_argument("catalog: placement/service-time must have one row per node");
    for (int m = 0; m < nodes; ++m) {
      if (static_cast<int>(placement[static_cast<std::size_t>(m)].size()) != jobs() ||
          static_cast<int>(service_time[static_cast<std::size_t>(m)].size()) != jobs())
        throw std::invalid_argument("catalog: matrix rows must have one column per job");
      for (int k = 0; k < jobs(); ++k) {
        int p = placement[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)];
        if (p != 0 && p != 1) throw std::invalid_argument("catalog: placement must be binary");
        if (service_time[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] < 0.0)
          throw std::invalid_argument("catalog: negative service time");
      }
    }
    for (int s : job_service)
      if (s < 0 || s >= services) throw std::invalid_argument("catalog: bad service index");
    if (workflows.empty()) throw std::invalid_argument("catalog: no workflows");
    double psum = 0.0;
    std::set<int> seen;
    for (const auto& wf : workflows) {
      if (wf.jobs.empty()) throw std::invalid_argument("catalog: empty workflow");
      if (wf.probability < 0.0) throw std::invalid_argument("catalog: negative workflow probability");
      psum += wf.probability;
      for (int k : wf.jobs) {
        if (k < 0 || k >= jobs()) throw std::invalid_argument("catalog: workflow references bad job");
        if (!seen.insert(k).second)
          throw std::invalid_argument("catalog: job appears in more than one workflow");
      }
    }
    if (std::abs(psum - 1.0) > 1e-9)
      throw std::invalid_argument("catalog: workflow probabilities must sum to 1");
  }
};

/// Returns F_k, the nodes that provision job k. Empty F_k is an error.
inline std::vector<int> feasible_nodes(const ServiceCatalog& cat, int k) {
  if (k < 0 || k >= cat.jobs()) throw std::invalid_argument("feasible_nodes: bad job index");
  std::vector<int> out;
  for (int m = 0; m < cat.nodes; ++m)
    if (cat.placement[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] == 1)
      out.push_back(m);
  if (out.empty())
    throw std::invalid_argument("feasible_nodes: job " + std::to_string(k) +
                                " has no feasible node");
  return out;
}

/// One node per job: x_mk = 1 iff m == node_of[k].
struct PlacementDecision {
  std::vector<int> node_of;

  void check(const ServiceCatalog& cat) const {
    if (static_cast<int>(node_of.size()) != cat.jobs())
      throw std::invalid_argument("placement: one node per job required");
    for (int k = 0; k < cat.jobs(); ++k) {
      int m = node_of[static_cast<std::size_t>(k)];
      if (m < 0 || m >= cat.nodes)
        throw std::invalid_argument("placement: node index out of range");
      if (cat.placement[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] != 1)
        throw std::invalid_argument("placement: job " + std::to_string(k) +
                                    " assigned to infeasible node " + std::to_string(m));
    }
  }
};

/// Per node, per service: allocated cache capacity in item slots. The
/// allocations of a node must sum exactly to its slot budget.
struct CacheAllocation {
  std::vector<std::vector<int>> slots;  // [node][service]
  std::vector<int> node_slots;          // per node budget

  void check() const {
    if (slots.size() != node_slots.size())
      throw std::invalid_argument("allocation: one row per node required");
    for (std::size_t m = 0; m < slots.size(); ++m) {
      int sum = 0;
      for (int a : slots[m]) {
        if (a < 0) throw std::invalid_argument("allocation: negative capacity");
        sum += a;
      }
      if (sum != node_slots[m])
        throw std::invalid_argument("allocation: node " + std::to_string(m) +
                                    " uses " + std::to_string(sum) + " of " +
                                    std::to_string(node_slots[m]) + " slots");
    }
  }
};

/// How the content-fetch step of each service is modeled.
enum class CacheMode {
  None,        // every request fetches from the origin server
  Allocated,   // per-service cache-tasks sized by a CacheAllocation
  PrefetchAll  // every item cached, pure hit path
};

namespace edetail {

inline std::string node_proc(int m) { return "node-" + std::to_string(m); }
inline std::string job_task(int k) { return "job-" + std::to_string(k); }
inline std::string job_entry(int k) { return "job-" + std::to_string(k) + ".serve"; }

}  // namespace edetail

/// Builds the layered model for a placement: users on a pseudo-processor
/// issue workflow chains; each job runs on its assigned node's PS processor;
/// consecutive workflow jobs on different nodes become cross-node calls.
/// The content-fetch step per job is controlled by `mode`.
inline LqnModel build_edge_model(const ServiceCatalog& cat, const PlacementDecision& x,
                                 const WorkloadSpec& w, CacheMode mode = CacheMode::None,
                                 const CacheAllocation* alloc = nullptr) {
  cat.check();
  x.check(cat);
  w.check();
  if (mode == CacheMode::Allocated) {
    if (alloc == nullptr) throw std::invalid_argument("build_edge_model: allocation required");
    alloc->check();
    if (static_cast<int>(alloc->slots.size()) != cat.nodes)
      throw std::invalid_argument("build_edge_model: allocation node count mismatch");
  }

  using edetail::job_entry;
  using edetail::job_task;
  using edetail::node_proc;

  LqnModel m;
  m.name = "edge";
  m.processors.push_back({"p-users", Scheduling::InfiniteServer, 1, true});
  std::set<int> used_nodes(x.node_of.begin(), x.node_of.end());
  for (int node : used_nodes)
    m.processors.push_back({node_proc(node), Scheduling::ProcessorSharing, 1});
  m.processors.push_back({"p-origin", Scheduling::InfiniteServer, 1});

  Task users;
  users.id = "users";
  users.host_processor = "p-users";
  users.multiplicity = w.users;
  users.kind = TaskKind::Reference;
  m.tasks.push_back(users);
  m.entries.push_back({"users.cycle", "users", EntryKind::Ordinary, std::nullopt, "think"});

  Activity think;
  think.id = "think";
  think.owner = "users.cycle";
  think.host_demand = {DistKind::Exponential, w.think_time, 1.0};
  m.activities.push_back(think);

  // workflow dispatch: single workflow chains directly, several branch by
  // request probability
  auto chain_head_activity = [&](const ServiceCatalog::Workflow& wf, int wi) {
    Activity a;
    a.id = "wf-" + std::to_string(wi);
    a.owner = "users.cycle";
    a.host_demand = {DistKind::Exponential, 0.0, 1.0};
    a.calls_out = {"call-wf-" + std::to_string(wi)};
    m.activities.push_back(a);
    Call c;
    c.id = "call-wf-" + std::to_string(wi);
    c.from_activity = a.id;
    c.to_entry = job_entry(wf.jobs.front());
    c.kind = CallKind::Synchronous;
    c.mean_calls = 1.0;
    m.calls.push_back(c);
    return a.id;
  };

  if (cat.workflows.size() == 1) {
    std::string head = chain_head_activity(cat.workflows.front(), 0);
    m.precedences.push_back({{"think"}, {head}, PrecedenceKind::Sequence, {}});
  } else {
    PrecedenceEdge pe;
    pe.from = {"think"};
    pe.kind = PrecedenceKind::OrBranch;
    for (std::size_t wi = 0; wi < cat.workflows.size(); ++wi) {
      pe.to.push_back(chain_head_activity(cat.workflows[wi], static_cast<int>(wi)));
      pe.branch_probabilities.push_back(cat.workflows[wi].probability);
    }
    m.precedences.push_back(pe);
  }

  // per job: a task on its node; the serve activity runs the compute demand,
  // fetches content, then calls the workflow successor (if any)
  std::vector<int> successor(static_cast<std::size_t>(cat.jobs()), -1);
  for (const auto& wf : cat.workflows)
    for (std::size_t i = 0; i + 1 < wf.jobs.size(); ++i)
      successor[static_cast<std::size_t>(wf.jobs[i])] = wf.jobs[i + 1];

  for (int k = 0; k < cat.jobs(); ++k) {
    int node = x.node_of[static_cast<std::size_t>(k)];
    int svc = cat.job_service[static_cast<std::size_t>(k)];
    const WorkloadService& ws = w.services.at(static_cast<std::size_t>(svc));
    double demand = cat.service_time[static_cast<std::size_t>(node)][static_cast<std::size_t>(k)];

    Task t;
    t.id = job_task(k);
    t.host_processor = node_proc(node);
    t.multiplicity = w.users;  // admission never binds; contention is the PS processor
    t.kind = TaskKind::Ordinary;
    m.tasks.push_back(t);
    m.entries.push_back({job_entry(k), t.id, EntryKind::Ordinary, std::nullopt, "run-" + std::to_string(k)});

    Activity run;
    run.id = "run-" + std::to_string(k);
    run.owner = job_entry(k);
    run.host_demand = ws.service_time;
    run.host_demand.mean = demand;

    int capacity = 0;
    if (mode == CacheMode::Allocated)
      capacity = alloc->slots.at(static_cast<std::size_t>(node)).at(static_cast<std::size_t>(svc));
    else if (mode == CacheMode::PrefetchAll)
      capacity = ws.item_count;

    // origin entry for this job's content
    std::string origin_task = "origin-" + std::to_string(k);
    std::string origin_entry = origin_task + ".fetch";
    {
      Task ot;
      ot.id = origin_task;
      ot.host_processor = "p-origin";
      ot.multiplicity = w.users;
      ot.kind = TaskKind::Ordinary;
      m.tasks.push_back(ot);
      m.entries.push_back({origin_entry, ot.id, EntryKind::Ordinary, std::nullopt, "of-" + std::to_string(k)});
      Activity of;
      of.id = "of-" + std::to_string(k);
      of.owner = origin_entry;
      of.host_demand = {DistKind::Exponential, w.miss_time, 1.0};
      m.activities.push_back(of);
    }

    if (capacity <= 0) {
      // pure miss path: every request fetches from the origin
      run.calls_out.push_back("miss-" + std::to_string(k));
      Call c;
      c.id = "miss-" + std::to_string(k);
      c.from_activity = run.id;
      c.to_entry = origin_entry;
      c.kind = CallKind::Synchronous;
      c.mean_calls = 1.0;
      m.calls.push_back(c);
    } else {
      capacity = std::min(capacity, ws.item_count);
      std::string cache_task = "cache-" + std::to_string(k);
      std::string cache_entry = cache_task + ".item";
      run.calls_out.push_back("lookup-" + std::to_string(k));
      Call lookup;
      lookup.id = "lookup-" + std::to_string(k);
      lookup.from_activity = run.id;
      lookup.to_entry = cache_entry;
      lookup.kind = CallKind::Synchronous;
      lookup.mean_calls = 1.0;
      m.calls.push_back(lookup);

      Task ct;
      ct.id = cache_task;
      ct.host_processor = node_proc(node);
      ct.multiplicity = w.users;
      ct.kind = TaskKind::Cache;
      CacheTaskSpec cs;
      cs.items = ws.item_count;
      cs.lists = {{capacity, 0}};
      cs.popularity.kind = "zipf";
      cs.popularity.eta = ws.zipf_eta;
      cs.replacement = "rr";
      ct.cache_spec = cs;
      m.tasks.push_back(ct);
      m.entries.push_back({cache_entry, cache_task, EntryKind::Item, std::nullopt,
                           "access-" + std::to_string(k)});

      Activity access, hit, miss;
      access.id = "access-" + std::to_string(k);
      access.owner = cache_entry;
      access.host_demand = {DistKind::Exponential, 0.0, 1.0};
      hit.id = "hit-" + std::to_string(k);
      hit.owner = cache_entry;
      hit.host_demand = {DistKind::Exponential, w.hit_time, 1.0};
      miss.id = "cm-" + std::to_string(k);
      miss.owner = cache_entry;
      miss.host_demand = {DistKind::Exponential, 0.0, 1.0};
      miss.calls_out = {"cmiss-" + std::to_string(k)};
      m.activities.push_back(access);
      m.activities.push_back(hit);
      m.activities.push_back(miss);
      m.precedences.push_back({{access.id}, {hit.id, miss.id}, PrecedenceKind::CacheAccess, {}});
      Call cm;
      cm.id = "cmiss-" + std::to_string(k);
      cm.from_activity = miss.id;
      cm.to_entry = origin_entry;
      cm.kind = CallKind::Synchronous;
      cm.mean_calls = 1.0;
      m.calls.push_back(cm);
    }

    // workflow successor: synchronous call, cross-node when placed elsewhere
    if (successor[static_cast<std::size_t>(k)] >= 0) {
      int nk = successor[static_cast<std::size_t>(k)];
      run.calls_out.push_back("next-" + std::to_string(k));
      Call c;
      c.id = "next-" + std::to_string(k);
      c.from_activity = run.id;
      c.to_entry = job_entry(nk);
      c.kind = CallKind::Synchronous;
      c.mean_calls = 1.0;
      m.calls.push_back(c);
    }
    m.activities.push_back(run);
  }

  require_valid(m);
  return m;
}

/// Adds per-service cache-tasks to a cache-free edge model built by
/// build_edge_model. Rebuilding with the allocation keeps ids stable.
inline LqnModel apply_cache_allocation(const ServiceCatalog& cat, const PlacementDecision& x,
                                       const WorkloadSpec& w, const CacheAllocation& alloc) {
  return build_edge_model(cat, x, w, CacheMode::Allocated, &alloc);
}

/// Default catalog for a workload: jobs == services, every node feasible,
/// per-node speed factors perturb the demand, one single-job workflow per
/// service weighted by its request probability.
inline ServiceCatalog make_catalog(const WorkloadSpec& w, int nodes, std::uint64_t seed) {
  if (nodes < 1) throw std::invalid_argument("make_catalog: nodes >= 1");
  w.check();
  auto rng = make_rng(derive_seed(seed, 0xCA7A));
  std::uniform_real_distribution<double> speed(0.6, 1.4);
  ServiceCatalog cat;
  cat.nodes = nodes;
  cat.services = static_cast<int>(w.services.size());
  cat.job_service.resize(w.services.size());
  for (std::size_t k = 0; k < w.services.size(); ++k)
    cat.job_service[k] = static_cast<int>(k);
  cat.placement.assign(static_cast<std::size_t>(nodes),
                       std::vector<int>(w.services.size(), 1));
  cat.service_time.resize(static_cast<std::size_t>(nodes));
  for (int m = 0; m < nodes; ++m) {
    double factor = speed(rng);
    for (const auto& s : w.services)
      cat.service_time[static_cast<std::size_t>(m)].push_back(s.service_time.mean * factor);
  }
  for (std::size_t k = 0; k < w.services.size(); ++k)
    cat.workflows.push_back({{static_cast<int>(k)}, w.request_probability[k]});
  cat.check();
  return cat;
}

}  // namespace jcsp
