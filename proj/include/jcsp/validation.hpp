#pragma once

#include <string>

#include "jcsp/model.hpp"

namespace jcsp {

/// Parameters of the two-layer validation model: a closed population of
/// users with exponential think time calling a cache-task (capacity 1 over
/// 3 uniform items by default) whose hit and miss branches execute on a
/// processor-sharing node.
struct ValidationModelParams {
  int users = 1;
  int tokens = 1;
  int items = 3;
  int capacity = 1;
  double think_time = 1.0;
  double hit_demand = 0.2;
  double miss_demand = 1.0;
  double eta = 0.0;  // 0 = uniform popularity
};

inline LqnModel make_validation_model(const ValidationModelParams& p) {
  LqnModel m;
  m.name = "validation-u" + std::to_string(p.users) + "-s" + std::to_string(p.tokens);

  m.processors.push_back({"p-users", Scheduling::InfiniteServer, 1, true});
  m.processors.push_back({"p-cache", Scheduling::ProcessorSharing, 1, false});

  Task users;
  users.id = "users";
  users.host_processor = "p-users";
  users.multiplicity = p.users;
  users.kind = TaskKind::Reference;
  m.tasks.push_back(users);

  Task cache;
  cache.id = "cache";
  cache.host_processor = "p-cache";
  cache.multiplicity = p.tokens;
  cache.kind = TaskKind::Cache;
  CacheTaskSpec cs;
  cs.items = p.items;
  cs.lists = {{p.capacity, 0}};
  cs.popularity.kind = "zipf";
  cs.popularity.eta = p.eta;
  cache.cache_spec = cs;
  m.tasks.push_back(cache);

  m.entries.push_back({"users.cycle", "users", EntryKind::Ordinary, std::nullopt, "think"});
  m.entries.push_back({"cache.fetch", "cache", EntryKind::Item, std::nullopt, "access"});

  m.activities.push_back(
      {"think", "users.cycle", PhaseType::exponential(p.think_time), {"call-fetch"}});
  m.activities.push_back({"access", "cache.fetch", PhaseType{DistKind::Exponential, 0.0, 1.0}, {}});
  m.activities.push_back({"hit", "cache.fetch", PhaseType::exponential(p.hit_demand), {}});
  m.activities.push_back({"miss", "cache.fetch", PhaseType::exponential(p.miss_demand), {}});

  m.precedences.push_back({{"access"}, {"hit", "miss"}, PrecedenceKind::CacheAccess, {}});

  m.calls.push_back({"call-fetch", "think", "cache.fetch", CallKind::Synchronous, 1.0});
  return m;
}

}  // namespace jcsp
