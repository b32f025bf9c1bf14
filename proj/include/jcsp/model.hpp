#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "jcsp/dist.hpp"

namespace jcsp {

enum class Scheduling { ProcessorSharing, InfiniteServer };
enum class TaskKind { Ordinary, Reference, Cache };
enum class EntryKind { Ordinary, Item };
enum class PrecedenceKind { Sequence, OrBranch, CacheAccess };
enum class CallKind { Synchronous, Asynchronous };

struct Processor {
  std::string id;
  Scheduling scheduling = Scheduling::ProcessorSharing;
  int multiplicity = 1;
  bool is_pseudo = false;
};

struct Popularity {
  std::string kind = "zipf";       // "zipf" | "custom"
  double eta = 1.0;                // zipf only
  std::vector<double> weights;     // custom only

  std::vector<double> expand(int items) const {
    if (kind == "zipf") return zipf_weights(items, eta);
    if (kind == "custom") {
      if (static_cast<int>(weights.size()) != items)
        throw std::invalid_argument("popularity: weight count != item count");
      return normalized_weights(weights);
    }
    throw std::invalid_argument("popularity: unknown kind '" + kind + "'");
  }
};

struct CacheList {
  int capacity = 1;
  int parent = 0;
};

struct CacheTaskSpec {
  int items = 1;
  std::vector<CacheList> lists = {{1, 0}};
  Popularity popularity;
  std::string replacement = "rr";

  int total_capacity() const {
    int c = 0;
    for (const auto& l : lists) c += l.capacity;
    return c;
  }
};

struct Task {
  std::string id;
  std::string host_processor;
  int multiplicity = 1;
  TaskKind kind = TaskKind::Ordinary;
  std::optional<CacheTaskSpec> cache_spec;
};

struct Entry {
  std::string id;
  std::string owner_task;
  EntryKind kind = EntryKind::Ordinary;
  std::optional<std::vector<double>> popularity;  // item entries; falls back to task cache-spec
  std::string bound_activity;
};

struct Activity {
  std::string id;
  std::string owner;  // entry id or task id
  PhaseType host_demand;
  std::vector<std::string> calls_out;  // call ids
};

struct PrecedenceEdge {
  std::vector<std::string> from;
  std::vector<std::string> to;  // cache-access: exactly {hit, miss}
  PrecedenceKind kind = PrecedenceKind::Sequence;
  std::vector<double> branch_probabilities;  // or-branch only
};

struct Call {
  std::string id;
  std::string from_activity;
  std::string to_entry;
  CallKind kind = CallKind::Synchronous;
  double mean_calls = 1.0;
};

struct LqnModel {
  std::string name;
  std::vector<Processor> processors;
  std::vector<Task> tasks;
  std::vector<Entry> entries;
  std::vector<Activity> activities;
  std::vector<PrecedenceEdge> precedences;
  std::vector<Call> calls;

  const Processor* find_processor(const std::string& id) const { return find(processors, id); }
  const Task* find_task(const std::string& id) const { return find(tasks, id); }
  const Entry* find_entry(const std::string& id) const { return find(entries, id); }
  const Activity* find_activity(const std::string& id) const { return find(activities, id); }
  const Call* find_call(const std::string& id) const { return find(calls, id); }

 private:
  template <class T>
  static const T* find(const std::vector<T>& v, const std::string& id) {
    for (const auto& x : v)
      if (x.id == id) return &x;
    return nullptr;
  }
};

struct Diagnostic {
  std::string path;     // model-element path, e.g. "task/cache1"
  std::string message;
};

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

/// Task-level client-server call graph edges: caller task -> callee task.
inline std::map<std::string, std::set<std::string>> task_call_graph(const LqnModel& m) {
  std::map<std::string, std::set<std::string>> g;
  for (const auto& t : m.tasks) g[t.id];
  std::map<std::string, std::string> activity_task;
  for (const auto& a : m.activities) {
    std::string owner_task = a.owner;
    if (const Entry* e = m.find_entry(a.owner)) owner_task = e->owner_task;
    activity_task[a.id] = owner_task;
  }
  for (const auto& c : m.calls) {
    auto it = activity_task.find(c.from_activity);
    const Entry* e = m.find_entry(c.to_entry);
    if (it == activity_task.end() || e == nullptr) continue;  // dangling: reported elsewhere
    if (it->second != e->owner_task) g[it->second].insert(e->owner_task);
  }
  return g;
}

inline bool graph_has_cycle(const std::map<std::string, std::set<std::string>>& g,
                            std::vector<std::string>* topo = nullptr) {
  std::map<std::string, int> state;  // 0 new, 1 open, 2 done
  std::vector<std::string> order;
  bool cyclic = false;
  auto dfs = [&](auto&& self, const std::string& u) -> void {
    state[u] = 1;
    auto it = g.find(u);
    if (it != g.end())
      for (const auto& v : it->second) {
        int s = state[v];
        if (s == 1) cyclic = true;
        else if (s == 0) self(self, v);
      }
    state[u] = 2;
    order.push_back(u);
  };
  for (const auto& [u, _] : g)
    if (state[u] == 0) dfs(dfs, u);
  if (topo) {
    topo->assign(order.rbegin(), order.rend());
  }
  return cyclic;
}

}  // namespace detail

/// Checks every structural invariant of the formalism; one diagnostic per
/// violation. Empty result means the model is valid.
inline std::vector<Diagnostic> validate_model(const LqnModel& m) {
  std::vector<Diagnostic> diags;
  auto add = [&](const std::string& path, const std::string& msg) {
    diags.push_back({path, msg});
  };

  std::set<std::string> ids;
  auto unique_id = [&](const std::string& kind, const std::string& id) {
    if (id.empty()) add(kind + "/", "empty id");
    if (!ids.insert(id).second) add(kind + "/" + id, "duplicate id");
  };
  for (const auto& p : m.processors) unique_id("processor", p.id);
  for (const auto& t : m.tasks) unique_id("task", t.id);
  for (const auto& e : m.entries) unique_id("entry", e.id);
  for (const auto& a : m.activities) unique_id("activity", a.id);
  for (const auto& c : m.calls) unique_id("call", c.id);

  for (const auto& p : m.processors)
    if (p.multiplicity < 1) add("processor/" + p.id, "multiplicity must be >= 1");

  int reference_tasks = 0;
  for (const auto& t : m.tasks) {
    if (m.find_processor(t.host_processor) == nullptr)
      add("task/" + t.id, "dangling host-processor '" + t.host_processor + "'");
    if (t.multiplicity < 1) add("task/" + t.id, "multiplicity must be >= 1");
    if (t.kind == TaskKind::Reference) ++reference_tasks;
    if ((t.kind == TaskKind::Cache) != t.cache_spec.has_value())
      add("task/" + t.id, "cache-spec must be present exactly when kind = cache");
    if (t.cache_spec) {
      const auto& cs = *t.cache_spec;
      if (cs.items < 1) add("task/" + t.id, "cache-spec items must be >= 1");
      if (cs.lists.empty()) add("task/" + t.id, "cache-spec needs at least one list");
      if (cs.total_capacity() > cs.items)
        add("task/" + t.id, "cache capacity exceeds total number of items");
      for (std::size_t l = 0; l < cs.lists.size(); ++l) {
        if (cs.lists[l].capacity < 1)
          add("task/" + t.id, "cache list capacity must be >= 1");
        if (cs.lists[l].parent < 0 || cs.lists[l].parent > static_cast<int>(cs.lists.size()))
          add("task/" + t.id, "cache list parent out of range");
      }
      if (cs.replacement != "rr")
        add("task/" + t.id, "unsupported replacement policy '" + cs.replacement + "'");
      if (cs.popularity.kind == "custom" &&
          static_cast<int>(cs.popularity.weights.size()) != cs.items)
        add("task/" + t.id, "custom popularity weight count != items");
    }
  }
  if (reference_tasks == 0) add("model", "no reference task (workload source) present");

  for (const auto& e : m.entries) {
    const Task* t = m.find_task(e.owner_task);
    if (t == nullptr) add("entry/" + e.id, "dangling owner-task '" + e.owner_task + "'");
    if (e.kind == EntryKind::Item && t != nullptr && t->kind != TaskKind::Cache)
      add("entry/" + e.id, "item entries may occur only on cache tasks");
    if (e.popularity) {
      if (e.kind != EntryKind::Item)
        add("entry/" + e.id, "popularity only allowed on item entries");
      double sum = 0.0;
      for (double w : *e.popularity) {
        if (w < 0.0) add("entry/" + e.id, "negative popularity weight");
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        add("entry/" + e.id, "popularity must sum to 1");
    }
    if (m.find_activity(e.bound_activity) == nullptr)
      add("entry/" + e.id, "dangling bound-activity '" + e.bound_activity + "'");
  }

  for (const auto& a : m.activities) {
    if (m.find_entry(a.owner) == nullptr && m.find_task(a.owner) == nullptr)
      add("activity/" + a.id, "owner is neither an entry nor a task");
    try {
      a.host_demand.check();
    } catch (const std::exception& ex) {
      if (!(a.host_demand.mean == 0.0))  // zero-demand activities are allowed
        add("activity/" + a.id, std::string("host-demand: ") + ex.what());
    }
    if (a.host_demand.mean < 0.0) add("activity/" + a.id, "host-demand mean must be >= 0");
    for (const auto& cid : a.calls_out)
      if (m.find_call(cid) == nullptr)
        add("activity/" + a.id, "dangling call '" + cid + "'");
  }

  for (std::size_t i = 0; i < m.precedences.size(); ++i) {
    const auto& pe = m.precedences[i];
    std::string path = "precedence/#" + std::to_string(i);
    for (const auto& aid : pe.from)
      if (m.find_activity(aid) == nullptr) add(path, "dangling from-activity '" + aid + "'");
    for (const auto& aid : pe.to)
      if (m.find_activity(aid) == nullptr) add(path, "dangling to-activity '" + aid + "'");
    if (pe.from.size() > 1 || (pe.kind == PrecedenceKind::Sequence && pe.to.size() > 1))
      add(path, "fork/join precedences are not supported (chains + or-branch only)");
    switch (pe.kind) {
      case PrecedenceKind::Sequence:
        break;
      case PrecedenceKind::OrBranch: {
        if (pe.branch_probabilities.size() != pe.to.size())
          add(path, "or-branch probability count != successor count");
        double sum = 0.0;
        for (double p : pe.branch_probabilities) sum += p;
        if (std::abs(sum - 1.0) > 1e-9) add(path, "or-branch probabilities must sum to 1");
        break;
      }
      case PrecedenceKind::CacheAccess: {
        if (pe.to.size() != 2)
          add(path, "cache-access must have exactly two successors (hit, miss)");
        if (!pe.from.empty()) {
          const Activity* a = m.find_activity(pe.from.front());
          const Entry* e = a ? m.find_entry(a->owner) : nullptr;
          if (e == nullptr || e->kind != EntryKind::Item)
            add(path, "cache-access must originate under an item entry");
        }
        break;
      }
    }
  }

  for (const auto& c : m.calls) {
    if (m.find_activity(c.from_activity) == nullptr)
      add("call/" + c.id, "dangling from-activity '" + c.from_activity + "'");
    const Entry* e = m.find_entry(c.to_entry);
    if (e == nullptr) add("call/" + c.id, "dangling to-entry '" + c.to_entry + "'");
    if (!(c.mean_calls > 0.0)) add("call/" + c.id, "mean-calls must be > 0");
    if (e != nullptr) {
      const Task* t = m.find_task(e->owner_task);
      if (t != nullptr && t->kind == TaskKind::Reference)
        add("call/" + c.id, "reference tasks must not receive calls");
    }
  }

  // Layering: client-server task graph must be acyclic.
  if (detail::graph_has_cycle(detail::task_call_graph(m)))
    add("model", "layering cycle in the task call graph");

  // Activity precedence graph must be a DAG.
  {
    std::map<std::string, std::set<std::string>> g;
    for (const auto& a : m.activities) g[a.id];
    for (const auto& pe : m.precedences)
      for (const auto& u : pe.from)
        for (const auto& v : pe.to) g[u].insert(v);
    if (detail::graph_has_cycle(g)) add("model", "activity graph contains a cycle");
  }

  return diags;
}

inline void require_valid(const LqnModel& m) {
  auto diags = validate_model(m);
  if (!diags.empty()) {
    std::string msg = "invalid model '" + m.name + "':";
    for (const auto& d : diags) msg += "\n  " + d.path + ": " + d.message;
    throw ModelError(msg);
  }
}

}  // namespace jcsp
