#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "jcsp/cache.hpp"
#include "jcsp/model.hpp"
#include "jcsp/mva.hpp"
#include "jcsp/prng.hpp"

namespace jcsp {

enum class FpiForm { LittleLaw, LiteralEq3 };
enum class AmvaVariant { BardSchweitzer, ExactMva };

struct SolverOptions {
  double delta = 1e-6;       // convergence tolerance on |lambda' - lambda|
  int max_inner = 500;       // FPI iterations per caching sub-model
  int max_outer = 200;       // layer sweeps
  FpiForm fpi_form = FpiForm::LittleLaw;
  AmvaVariant amva = AmvaVariant::BardSchweitzer;
  bool random_initial_lambda = false;  // default: deterministic s/theta_t
  std::uint64_t seed = 0;

  void check() const {
    if (!(delta > 0.0)) throw std::invalid_argument("solver: delta must be > 0");
    if (max_inner < 1 || max_outer < 1)
      throw std::invalid_argument("solver: iteration caps must be >= 1");
  }
};

struct CachingSubmodelState {
  double lambda = 0.0;
  double population = 1.0;  // s: max pending requests to the cache
  double theta_t = 0.0;     // mean think time
  double theta_m = 0.0;     // mean miss delay
  double theta_h = 0.0;     // mean hit fetch delay
  double p_hit = 0.0;
  double p_miss = 1.0;
  int iteration = 0;
};

/// One arrival-rate update of the caching sub-model.
inline double fpi_lambda_update(const CachingSubmodelState& st,
                                FpiForm form = FpiForm::LittleLaw) {
  double mix = st.p_miss * st.theta_m + st.p_hit * st.theta_h;
  switch (form) {
    case FpiForm::LittleLaw: {
      double denom = st.theta_t + mix;
      if (!(denom > 0.0)) throw std::invalid_argument("fpi: zero denominator");
      return st.population / denom;
    }
    case FpiForm::LiteralEq3: {
      double denom = st.lambda * st.theta_t + mix;
      if (!(denom > 0.0)) throw std::invalid_argument("fpi: zero denominator");
      return st.population * st.lambda / denom;
    }
  }
  return 0.0;
}

/// Layer decomposition artifact: clients on top, servers below, solved as a
/// mixed queueing network; caching sub-models get the two-level split.
struct Submodel {
  std::vector<std::string> client_tasks;
  std::vector<std::string> server_tasks;
  bool caching = false;
};

namespace detail {

inline std::map<std::string, int> task_layers(const LqnModel& m) {
  auto g = task_call_graph(m);
  std::vector<std::string> topo;
  if (graph_has_cycle(g, &topo)) throw ModelError("cyclic layering");
  std::map<std::string, int> layer;
  for (const auto& t : m.tasks) layer[t.id] = t.kind == TaskKind::Reference ? 0 : -1;
  // longest path from any reference task, following topological order
  for (const auto& u : topo) {
    int lu = layer[u];
    if (lu < 0) continue;
    for (const auto& v : g[u]) layer[v] = std::max(layer[v], lu + 1);
  }
  for (auto& [id, l] : layer)
    if (l < 0) l = 1;  // unreachable servers: park below the reference layer
  return layer;
}

}  // namespace detail

inline std::vector<Submodel> decompose_layers(const LqnModel& m) {
  require_valid(m);
  auto layer = detail::task_layers(m);
  int max_layer = 0;
  for (const auto& [id, l] : layer) max_layer = std::max(max_layer, l);
  if (max_layer == 0) throw ModelError("model has no server layer");
  std::vector<Submodel> subs(static_cast<std::size_t>(max_layer));
  for (const auto& t : m.tasks) {
    int l = layer[t.id];
    if (l < max_layer) subs[static_cast<std::size_t>(l)].client_tasks.push_back(t.id);
    if (l >= 1) {
      subs[static_cast<std::size_t>(l - 1)].server_tasks.push_back(t.id);
      if (t.kind == TaskKind::Cache) subs[static_cast<std::size_t>(l - 1)].caching = true;
    }
  }
  return subs;
}

/// The two halves of a caching sub-model: the cache isolated in an open
/// network (upper) and the delay + queueing station closed network with the
/// cache-task multiplicity as its population (lower).
struct CachingSplit {
  std::string cache_task;
  ListCacheSpec upper;     // rates carry the popularity mix; scale set by lambda
  int population = 1;      // s
  double hit_demand = 0.0;   // direct demand of the hit activity chain
  double miss_demand = 0.0;  // direct demand of the miss activity chain
  double miss_call_delay = 0.0;  // origin-server fetch seen by the miss class
};

/// Per-entity, per-class solver output row.
struct EntityMetric {
  std::string entity;
  std::string cls;
  double throughput = 0.0;
  double residence = 0.0;
  double queue_length = 0.0;
  double utilization = 0.0;
};

struct CacheStat {
  std::string task;
  double p_hit = 0.0;
  double p_miss = 1.0;
  std::vector<double> item_miss_ratio;
};

struct ConvergenceReport {
  bool converged = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};

struct SolverResult {
  std::vector<std::string> class_names;
  std::vector<double> throughput;      // X_i per class
  std::vector<double> response_time;   // R_i per class (cycle minus think)
  std::vector<double> think_time;      // Z_i per class
  double total_throughput = 0.0;
  std::vector<EntityMetric> entities;
  std::vector<CacheStat> caches;
  ConvergenceReport convergence;
};

inline double total_response_time(const SolverResult& r) {
  if (!(r.total_throughput > 0.0))
    throw std::invalid_argument("total_response_time: zero total throughput");
  double sum = 0.0;
  for (std::size_t i = 0; i < r.throughput.size(); ++i)
    sum += r.throughput[i] / r.total_throughput * r.response_time[i];
  return sum;
}

// ---------------------------------------------------------------------------
// Model compilation: activity chains folded into per-entry demand + calls.
// ---------------------------------------------------------------------------

namespace detail {

struct Chain {
  double demand = 0.0;                       // mean seconds on the host processor
  std::vector<std::pair<int, double>> calls;  // (entry index, mean calls)
};

struct CEntry {
  std::string id;
  int task = -1;
  bool item = false;
  Chain whole;     // ordinary entries
  Chain hit, miss; // item entries
  std::vector<double> popularity;
  PhaseType demand_dist;  // of the main chain head, for simulation parity
};

struct CTask {
  std::string id;
  int proc = -1;
  int multiplicity = 1;
  TaskKind kind = TaskKind::Ordinary;
  std::vector<int> entries;
  int layer = 0;
  std::optional<CacheTaskSpec> cache_spec;
};

struct Compiled {
  std::vector<Processor> procs;
  std::vector<CTask> tasks;
  std::vector<CEntry> entries;
  std::vector<int> reference_tasks;          // task indices
  std::vector<Chain> reference_chain;        // per reference task: think + workflow
  std::map<std::string, int> entry_index;
  std::map<std::string, int> task_index;
};

inline Compiled compile(const LqnModel& m) {
  require_valid(m);
  Compiled c;
  c.procs = m.processors;
  std::map<std::string, int> proc_index;
  for (std::size_t i = 0; i < m.processors.size(); ++i) proc_index[m.processors[i].id] = static_cast<int>(i);
  auto layers = task_layers(m);
  for (const auto& t : m.tasks) {
    CTask ct;
    ct.id = t.id;
    ct.proc = proc_index.at(t.host_processor);
    ct.multiplicity = t.multiplicity;
    ct.kind = t.kind;
    ct.layer = layers.at(t.id);
    ct.cache_spec = t.cache_spec;
    c.task_index[t.id] = static_cast<int>(c.tasks.size());
    c.tasks.push_back(ct);
  }
  for (const auto& e : m.entries) {
    c.entry_index[e.id] = static_cast<int>(c.entries.size());
    CEntry ce;
    ce.id = e.id;
    ce.task = c.task_index.at(e.owner_task);
    ce.item = e.kind == EntryKind::Item;
    c.entries.push_back(ce);
    c.tasks[static_cast<std::size_t>(c.entries.back().task)].entries.push_back(
        static_cast<int>(c.entries.size()) - 1);
  }

  // successor lookup for the activity graph
  std::map<std::string, const PrecedenceEdge*> succ;
  for (const auto& pe : m.precedences)
    if (!pe.from.empty()) succ[pe.from.front()] = &pe;

  auto walk = [&](auto&& self, const std::string& act_id, double weight, Chain& out) -> void {
    const Activity* a = m.find_activity(act_id);
    if (a == nullptr) throw ModelError("solver: dangling activity '" + act_id + "'");
    out.demand += weight * a->host_demand.mean;
    for (const auto& cid : a->calls_out) {
      const Call* call = m.find_call(cid);
      auto it = c.entry_index.find(call->to_entry);
      if (it == c.entry_index.end()) throw ModelError("solver: dangling call target");
      out.calls.emplace_back(it->second, weight * call->mean_calls);
    }
    auto sit = succ.find(act_id);
    if (sit == succ.end()) return;
    const PrecedenceEdge& pe = *sit->second;
    switch (pe.kind) {
      case PrecedenceKind::Sequence:
        for (const auto& nxt : pe.to) self(self, nxt, weight, out);
        break;
      case PrecedenceKind::OrBranch:
        for (std::size_t i = 0; i < pe.to.size(); ++i)
          self(self, pe.to[i], weight * pe.branch_probabilities[i], out);
        break;
      case PrecedenceKind::CacheAccess:
        throw ModelError("solver: nested cache-access inside a chain");
    }
  };

  for (const auto& e : m.entries) {
    CEntry& ce = c.entries[static_cast<std::size_t>(c.entry_index.at(e.id))];
    const Activity* bound = m.find_activity(e.bound_activity);
    ce.demand_dist = bound->host_demand;
    auto sit = succ.find(e.bound_activity);
    if (ce.item) {
      if (sit == succ.end() || sit->second->kind != PrecedenceKind::CacheAccess)
        throw ModelError("solver: item entry '" + e.id + "' must bind a cache-access branch");
      // the access activity itself contributes to both branches
      Chain access;
      access.demand = bound->host_demand.mean;
      for (const auto& cid : bound->calls_out) {
        const Call* call = m.find_call(cid);
        access.calls.emplace_back(c.entry_index.at(call->to_entry), call->mean_calls);
      }
      ce.hit = access;
      ce.miss = access;
      walk(walk, sit->second->to[0], 1.0, ce.hit);
      walk(walk, sit->second->to[1], 1.0, ce.miss);
      const CTask& task = c.tasks[static_cast<std::size_t>(ce.task)];
      if (!task.cache_spec) throw ModelError("solver: item entry on non-cache task");
      if (e.popularity) ce.popularity = *e.popularity;
      else ce.popularity = task.cache_spec->popularity.expand(task.cache_spec->items);
    } else {
      walk(walk, e.bound_activity, 1.0, ce.whole);
    }
  }

  for (std::size_t ti = 0; ti < c.tasks.size(); ++ti) {
    if (c.tasks[ti].kind != TaskKind::Reference) continue;
    c.reference_tasks.push_back(static_cast<int>(ti));
    if (c.tasks[ti].entries.empty())
      throw ModelError("solver: reference task '" + c.tasks[ti].id + "' has no entry");
    // reference chain: the task's first entry describes think + workflow
    c.reference_chain.push_back(
        c.entries[static_cast<std::size_t>(c.tasks[ti].entries.front())].whole);
  }
  return c;
}

/// Per-class visit ratios over entries, resolving item entries through the
/// current hit/miss probability estimates.
inline std::vector<double> visit_ratios(const Compiled& c, const Chain& root,
                                        const std::map<int, std::pair<double, double>>& hit_miss) {
  std::vector<double> v(c.entries.size(), 0.0);
  auto push = [&](auto&& self, int entry, double weight) -> void {
    if (weight <= 0.0) return;
    v[static_cast<std::size_t>(entry)] += weight;
    const CEntry& ce = c.entries[static_cast<std::size_t>(entry)];
    if (ce.item) {
      auto hm = hit_miss.count(entry) ? hit_miss.at(entry) : std::make_pair(0.0, 1.0);
      for (const auto& [callee, mean] : ce.hit.calls) self(self, callee, weight * hm.first * mean);
      for (const auto& [callee, mean] : ce.miss.calls) self(self, callee, weight * hm.second * mean);
    } else {
      for (const auto& [callee, mean] : ce.whole.calls) self(self, callee, weight * mean);
    }
  };
  for (const auto& [entry, mean] : root.calls) push(push, entry, mean);
  return v;
}

}  // namespace detail

inline CachingSplit split_caching_submodel(const LqnModel& m, const Submodel& sub) {
  int cache_count = 0;
  std::string cache_id;
  for (const auto& tid : sub.server_tasks) {
    const Task* t = m.find_task(tid);
    if (t != nullptr && t->kind == TaskKind::Cache) {
      ++cache_count;
      cache_id = tid;
    }
  }
  if (cache_count != 1)
    throw ModelError("split_caching_submodel: sub-model must contain exactly one cache-task");
  detail::Compiled c = detail::compile(m);
  const detail::CTask& ct = c.tasks[static_cast<std::size_t>(c.task_index.at(cache_id))];
  const CacheTaskSpec& cs = *ct.cache_spec;

  CachingSplit split;
  split.cache_task = cache_id;
  split.population = ct.multiplicity;
  for (int ei : ct.entries) {
    const detail::CEntry& ce = c.entries[static_cast<std::size_t>(ei)];
    if (!ce.item) continue;
    split.hit_demand = ce.hit.demand;
    split.miss_demand = ce.miss.demand;
    // upper model: one stream, popularity-shaped unit rates, RR insertion
    std::vector<double> rates = ce.popularity;
    split.upper = ListCacheSpec::single_list(rates, cs.total_capacity());
    break;
  }
  if (split.upper.items == 0)
    throw ModelError("split_caching_submodel: cache-task carries no item entry");
  return split;
}

/// Standalone caching sub-model: the Fig. 4 split reduced to its parameters.
struct CachingSubmodel {
  ListCacheSpec cache;          // popularity-shaped rates; scale is overwritten by lambda
  int population = 1;           // s
  double theta_t = 1.0;         // token idle time
  double hit_demand = 0.0;      // queueing-station demand of the hit class
  double miss_demand = 0.0;     // queueing-station demand of the miss class
  double miss_extra_delay = 0.0;  // pure delay on the miss path (origin fetch)
};

struct CachingSolution {
  double lambda = 0.0;       // converged throughput of the sub-model
  double p_hit = 0.0;
  double p_miss = 1.0;
  double hit_residence = 0.0;    // theta_h at convergence
  double miss_residence = 0.0;   // theta_m at convergence
  double holding_time = 0.0;     // mean token-holding time
  double station_queue = 0.0;
  double station_utilization = 0.0;
  std::vector<double> item_miss_ratio;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
};

inline CachingSolution solve_caching_submodel(const CachingSubmodel& sub,
                                              const SolverOptions& options = {}) {
  options.check();
  if (sub.population < 1) throw std::invalid_argument("caching sub-model: population >= 1");
  if (!(sub.theta_t > 0.0) && sub.hit_demand <= 0.0 && sub.miss_demand <= 0.0)
    throw std::invalid_argument("caching sub-model: all delays zero");

  CachingSolution sol;
  CachingSubmodelState st;
  st.population = static_cast<double>(sub.population);
  st.theta_t = sub.theta_t;
  if (options.random_initial_lambda) {
    auto rng = make_rng(options.seed, 0xCAC4E);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    st.lambda = u(rng) * st.population / std::max(sub.theta_t, 1e-6);
  } else {
    st.lambda = st.population / std::max(sub.theta_t, 1e-6);
  }

  for (st.iteration = 1; st.iteration <= options.max_inner; ++st.iteration) {
    // upper sub-model: isolated cache under the current Poisson rate
    ListCacheSpec spec = sub.cache;
    for (auto& stream : spec.rates)
      for (auto& per_item : stream)
        for (auto& r : per_item) r *= std::max(st.lambda, 1e-12);
    CacheMarginals marg = cache_marginals(spec);
    double lam_total = 0.0, hit = 0.0;
    for (int v = 0; v < spec.streams(); ++v)
      for (int k = 0; k < spec.items; ++k) {
        double lam = spec.rates[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)][0];
        lam_total += lam;
        hit += lam * (1.0 - marg.pi[static_cast<std::size_t>(k)][0]);
      }
    st.p_hit = lam_total > 0.0 ? std::clamp(hit / lam_total, 0.0, 1.0) : 0.0;
    st.p_miss = 1.0 - st.p_hit;
    sol.item_miss_ratio = marg.miss_ratios();

    // lower sub-model: delay + queueing station, hit/miss class switching
    double station_demand = st.p_hit * sub.hit_demand + st.p_miss * sub.miss_demand;
    ClosedNetwork net;
    net.population = {sub.population};
    net.stations.push_back(
        {ClosedNetwork::StationType::Delay, "think",
         {sub.theta_t + st.p_miss * sub.miss_extra_delay}, 1});
    net.stations.push_back({ClosedNetwork::StationType::Queue, "station", {station_demand}, 1});
    MvaResult lower = options.amva == AmvaVariant::ExactMva ? exact_mva_solve(net)
                                                            : amva_solve(net);
    double q_station = lower.queue_length[1][0];
    // per-class residence at the shared PS station
    double expand = station_demand > 0.0 ? lower.residence[1][0] / station_demand : 1.0;
    st.theta_h = sub.hit_demand * expand;
    st.theta_m = sub.miss_demand * expand + sub.miss_extra_delay;

    double next = fpi_lambda_update(st, options.fpi_form);
    double residual = std::abs(next - st.lambda);
    sol.residual_history.push_back(residual);
    st.lambda = next;
    if (residual < options.delta) {
      sol.converged = true;
      sol.station_queue = q_station;
      sol.station_utilization = lower.utilization[1];
      break;
    }
    sol.station_queue = q_station;
    sol.station_utilization = lower.utilization[1];
  }
  sol.iterations = st.iteration > options.max_inner ? options.max_inner : st.iteration;
  sol.lambda = st.lambda;
  sol.p_hit = st.p_hit;
  sol.p_miss = st.p_miss;
  sol.hit_residence = st.theta_h;
  sol.miss_residence = st.theta_m;
  sol.holding_time = st.p_hit * st.theta_h + st.p_miss * st.theta_m;
  if (!sol.converged)
    throw std::runtime_error("solve_caching_submodel: no convergence after " +
                             std::to_string(options.max_inner) + " iterations (last residual " +
                             std::to_string(sol.residual_history.empty()
                                                ? 0.0
                                                : sol.residual_history.back()) +
                             ")");
  return sol;
}

// ---------------------------------------------------------------------------
// Full layered solve (Algorithm 1 shape).
// ---------------------------------------------------------------------------

inline SolverResult solve_lqn(const LqnModel& m, const SolverOptions& options = {}) {
  options.check();
  detail::Compiled c = detail::compile(m);
  const int C = static_cast<int>(c.reference_tasks.size());
  if (C == 0) throw ModelError("solve_lqn: no reference task");

  // cache bookkeeping: entry index -> (p_hit, p_miss), holding time per cache task
  std::map<int, std::pair<double, double>> hit_miss;
  std::map<int, double> holding;  // task index -> token-holding time estimate
  // holding minus the delay of calls made from the hit/miss chains; those
  // callees keep their own stations in the upper network, so charging their
  // residence to the cache station as well would count it twice
  std::map<int, double> holding_local;
  std::map<int, int> cache_entry_of_task;
  for (std::size_t ti = 0; ti < c.tasks.size(); ++ti) {
    if (c.tasks[ti].kind != TaskKind::Cache) continue;
    for (int ei : c.tasks[ti].entries)
      if (c.entries[static_cast<std::size_t>(ei)].item) {
        cache_entry_of_task[static_cast<int>(ti)] = ei;
        const auto& ce = c.entries[static_cast<std::size_t>(ei)];
        hit_miss[ei] = {0.5, 0.5};
        holding[static_cast<int>(ti)] = 0.5 * ce.hit.demand + 0.5 * ce.miss.demand;
        holding_local[static_cast<int>(ti)] = holding[static_cast<int>(ti)];
      }
  }

  // station layout: one station per processor hosting non-cache server work,
  // plus one multi-server station per cache-task
  struct StationRef {
    enum class Kind { Processor, CacheTask } kind;
    int index;  // processor or task index
    std::string name;
    ClosedNetwork::StationType type;
    int servers = 1;
  };
  std::vector<StationRef> stations;
  std::map<int, int> proc_station, cache_station;
  for (std::size_t ti = 0; ti < c.tasks.size(); ++ti) {
    const auto& t = c.tasks[ti];
    if (t.kind == TaskKind::Reference) continue;
    if (t.kind == TaskKind::Cache) {
      cache_station[static_cast<int>(ti)] = static_cast<int>(stations.size());
      stations.push_back({StationRef::Kind::CacheTask, static_cast<int>(ti), t.id,
                          ClosedNetwork::StationType::Queue, t.multiplicity});
    } else if (!proc_station.count(t.proc)) {
      const Processor& p = c.procs[static_cast<std::size_t>(t.proc)];
      proc_station[t.proc] = static_cast<int>(stations.size());
      stations.push_back({StationRef::Kind::Processor, t.proc, p.id,
                          p.scheduling == Scheduling::InfiniteServer
                              ? ClosedNetwork::StationType::Delay
                              : ClosedNetwork::StationType::Queue,
                          p.multiplicity});
    }
  }

  const int S = static_cast<int>(stations.size());
  ConvergenceReport report;
  std::vector<std::vector<double>> visits(static_cast<std::size_t>(C));
  MvaResult global;
  std::vector<double> think(static_cast<std::size_t>(C), 0.0);
  std::vector<int> pops(static_cast<std::size_t>(C), 1);
  std::map<int, CachingSolution> cache_solutions;

  auto build_network = [&]() {
    ClosedNetwork net;
    net.population.resize(static_cast<std::size_t>(C));
    for (int i = 0; i < C; ++i) {
      int ti = c.reference_tasks[static_cast<std::size_t>(i)];
      pops[static_cast<std::size_t>(i)] = c.tasks[static_cast<std::size_t>(ti)].multiplicity;
      net.population[static_cast<std::size_t>(i)] = pops[static_cast<std::size_t>(i)];
      think[static_cast<std::size_t>(i)] = c.reference_chain[static_cast<std::size_t>(i)].demand;
      visits[static_cast<std::size_t>(i)] =
          detail::visit_ratios(c, c.reference_chain[static_cast<std::size_t>(i)], hit_miss);
    }
    for (int s = 0; s < S; ++s) {
      ClosedNetwork::Station st;
      st.name = stations[static_cast<std::size_t>(s)].name;
      st.type = stations[static_cast<std::size_t>(s)].type;
      st.servers = stations[static_cast<std::size_t>(s)].servers;
      st.demand.assign(static_cast<std::size_t>(C), 0.0);
      net.stations.push_back(st);
    }
    // think-time delay station
    ClosedNetwork::Station delay;
    delay.name = "reference-think";
    delay.type = ClosedNetwork::StationType::Delay;
    delay.demand.assign(static_cast<std::size_t>(C), 0.0);
    for (int i = 0; i < C; ++i)
      delay.demand[static_cast<std::size_t>(i)] = think[static_cast<std::size_t>(i)];
    net.stations.push_back(delay);

    for (int i = 0; i < C; ++i) {
      for (std::size_t ei = 0; ei < c.entries.size(); ++ei) {
        double v = visits[static_cast<std::size_t>(i)][ei];
        if (v <= 0.0) continue;
        const detail::CEntry& ce = c.entries[ei];
        const detail::CTask& t = c.tasks[static_cast<std::size_t>(ce.task)];
        if (t.kind == TaskKind::Reference) continue;
        if (t.kind == TaskKind::Cache) {
          int s = cache_station.at(ce.task);
          net.stations[static_cast<std::size_t>(s)].demand[static_cast<std::size_t>(i)] +=
              v * holding_local.at(ce.task);
        } else {
          int s = proc_station.at(t.proc);
          net.stations[static_cast<std::size_t>(s)].demand[static_cast<std::size_t>(i)] +=
              v * ce.whole.demand;
        }
      }
    }
    return net;
  };

  auto solve_network = [&](const ClosedNetwork& net) {
    if (options.amva == AmvaVariant::ExactMva) {
      try {
        return exact_mva_solve(net);
      } catch (const std::invalid_argument&) {
        // population too large: fall through to AMVA
      }
    }
    return amva_solve(net);
  };

  bool has_caches = !cache_entry_of_task.empty();
  double prev_signature = -1.0;
  for (report.outer_iterations = 1; report.outer_iterations <= options.max_outer;
       ++report.outer_iterations) {
    ClosedNetwork net = build_network();

    // Exact birth-death shortcut: single class and the only queueing station
    // is one cache-task (the validation-model layout).
    bool bd_shortcut = false;
    if (C == 1 && cache_station.size() == 1) {
      int queues = 0;
      for (const auto& st : net.stations)
        if (st.type == ClosedNetwork::StationType::Queue && st.demand[0] > 0.0) ++queues;
      if (queues == 1) bd_shortcut = true;
    }
    if (bd_shortcut) {
      int cs = cache_station.begin()->second;
      double z = 0.0;
      for (std::size_t s = 0; s < net.stations.size(); ++s)
        if (net.stations[s].type == ClosedNetwork::StationType::Delay) z += net.stations[s].demand[0];
      auto bd = delay_multiserver_solve(net.population[0], z, net.stations[static_cast<std::size_t>(cs)].demand[0],
                                        net.stations[static_cast<std::size_t>(cs)].servers);
      global = MvaResult{};
      global.throughput = {bd.throughput};
      global.residence.assign(net.stations.size(), {0.0});
      global.queue_length.assign(net.stations.size(), {0.0});
      global.utilization.assign(net.stations.size(), 0.0);
      for (std::size_t s = 0; s < net.stations.size(); ++s)
        if (net.stations[s].type == ClosedNetwork::StationType::Delay) {
          global.residence[s][0] = net.stations[s].demand[0];
          global.queue_length[s][0] = bd.throughput * net.stations[s].demand[0];
        }
      global.residence[static_cast<std::size_t>(cs)][0] = bd.station_response;
      global.queue_length[static_cast<std::size_t>(cs)][0] = bd.station_queue;
      global.utilization[static_cast<std::size_t>(cs)] = bd.utilization;
    } else {
      global = solve_network(net);
    }

    if (!has_caches) {
      report.converged = true;
      break;
    }

    // per-station total queue for per-visit residence expansion
    std::vector<double> station_queue(net.stations.size(), 0.0);
    for (std::size_t s = 0; s < net.stations.size(); ++s)
      for (int i = 0; i < C; ++i)
        station_queue[s] += global.queue_length[s][static_cast<std::size_t>(i)];

    double signature = 0.0;
    report.inner_iterations = 0;
    for (const auto& [ti, ei] : cache_entry_of_task) {
      const detail::CEntry& ce = c.entries[static_cast<std::size_t>(ei)];
      const detail::CTask& t = c.tasks[static_cast<std::size_t>(ti)];

      double lambda_offered = 0.0;
      for (int i = 0; i < C; ++i)
        lambda_offered += global.throughput[static_cast<std::size_t>(i)] *
                          visits[static_cast<std::size_t>(i)][static_cast<std::size_t>(ei)];
      if (lambda_offered <= 1e-12) {
        // nobody calls this cache in the current iterate
        hit_miss[ei] = {0.0, 1.0};
        continue;
      }

      // miss-path extra delay: per-visit residence of callee entries
      auto call_delay = [&](const detail::Chain& chain) {
        double d = 0.0;
        for (const auto& [callee, mean] : chain.calls) {
          const detail::CEntry& cal = c.entries[static_cast<std::size_t>(callee)];
          const detail::CTask& cal_task = c.tasks[static_cast<std::size_t>(cal.task)];
          double per_visit;
          if (cal_task.kind == TaskKind::Cache) {
            per_visit = holding.count(cal.task) ? holding.at(cal.task) : 0.0;
          } else {
            int s = proc_station.at(cal_task.proc);
            per_visit = (stations[static_cast<std::size_t>(s)].type ==
                         ClosedNetwork::StationType::Delay)
                            ? cal.whole.demand
                            : cal.whole.demand * (1.0 + station_queue[static_cast<std::size_t>(s)]);
          }
          d += mean * per_visit;
        }
        return d;
      };

      CachingSubmodel sub;
      sub.cache = ListCacheSpec::single_list(ce.popularity, t.cache_spec->total_capacity());
      // Tokens beyond the total client population can never be held
      // simultaneously; the sub-model population is the attainable concurrency.
      int total_clients = 0;
      for (int rt : c.reference_tasks)
        total_clients += c.tasks[static_cast<std::size_t>(rt)].multiplicity;
      int s_eff = std::min(t.multiplicity, total_clients);
      sub.population = s_eff;
      double hold_prev = holding.at(ti);
      sub.theta_t = std::max(static_cast<double>(s_eff) / lambda_offered - hold_prev, 1e-9);
      sub.hit_demand = ce.hit.demand;
      sub.miss_demand = ce.miss.demand;
      sub.miss_extra_delay = call_delay(ce.miss) - call_delay(ce.hit);
      if (sub.miss_extra_delay < 0.0) sub.miss_extra_delay = 0.0;

      CachingSolution sol = solve_caching_submodel(sub, options);
      report.inner_iterations += sol.iterations;
      hit_miss[ei] = {sol.p_hit, sol.p_miss};
      holding[ti] = sol.holding_time;
      holding_local[ti] = sol.p_hit * sol.hit_residence +
                          sol.p_miss * (sol.miss_residence - sub.miss_extra_delay);
      cache_solutions[ti] = sol;
      signature += sol.holding_time + sol.p_hit;
    }
    for (int i = 0; i < C; ++i) signature += global.throughput[static_cast<std::size_t>(i)];

    double residual = std::abs(signature - prev_signature);
    report.residual_history.push_back(residual);
    report.residual = residual;
    prev_signature = signature;
    if (residual < options.delta) {
      report.converged = true;
      break;
    }
  }
  if (!report.converged && has_caches)
    throw std::runtime_error("solve_lqn: outer loop did not converge (residual " +
                             std::to_string(report.residual) + ")");
  report.converged = true;

  // -------------------------------------------------------------- results
  SolverResult res;
  res.convergence = report;
  for (int i = 0; i < C; ++i) {
    int ti = c.reference_tasks[static_cast<std::size_t>(i)];
    res.class_names.push_back(c.tasks[static_cast<std::size_t>(ti)].id);
    double x = global.throughput[static_cast<std::size_t>(i)];
    res.throughput.push_back(x);
    res.think_time.push_back(think[static_cast<std::size_t>(i)]);
    double cycle = x > 0.0 ? pops[static_cast<std::size_t>(i)] / x : 0.0;
    res.response_time.push_back(std::max(cycle - think[static_cast<std::size_t>(i)], 0.0));
    res.total_throughput += x;
  }
  for (int s = 0; s < S; ++s) {
    for (int i = 0; i < C; ++i) {
      EntityMetric em;
      em.entity = stations[static_cast<std::size_t>(s)].name;
      em.cls = res.class_names[static_cast<std::size_t>(i)];
      em.throughput = global.throughput[static_cast<std::size_t>(i)];
      em.residence = global.residence[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)];
      em.queue_length = global.queue_length[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)];
      em.utilization = global.utilization[static_cast<std::size_t>(s)];
      res.entities.push_back(em);
    }
  }
  for (const auto& [ti, sol] : cache_solutions) {
    CacheStat stat;
    stat.task = c.tasks[static_cast<std::size_t>(ti)].id;
    stat.p_hit = sol.p_hit;
    stat.p_miss = sol.p_miss;
    stat.item_miss_ratio = sol.item_miss_ratio;
    res.caches.push_back(stat);
    // per-class station residence inside the caching sub-model
    EntityMetric em;
    em.entity = stat.task + ".station";
    em.cls = "merged";
    em.throughput = sol.lambda;
    em.residence = sol.holding_time;
    em.queue_length = sol.station_queue;
    em.utilization = sol.station_utilization;
    res.entities.push_back(em);
  }
  return res;
}

}  // namespace jcsp
