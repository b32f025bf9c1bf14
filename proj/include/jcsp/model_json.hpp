#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "jcsp/model.hpp"

namespace jcsp {

inline constexpr const char* kModelSchema = "jcsp-lqn/1";

namespace detail {

using nlohmann::json;

inline json to_json(const PhaseType& d) {
  return json{{"kind", to_string(d.kind)}, {"mean", d.mean}, {"scv", d.scv}};
}

inline PhaseType phase_from_json(const json& j, const std::string& where) {
  PhaseType d;
  std::string kind = j.value("kind", "exponential");
  if (kind == "exponential") d.kind = DistKind::Exponential;
  else if (kind == "erlang") d.kind = DistKind::Erlang;
  else if (kind == "hyper-exponential") d.kind = DistKind::HyperExponential;
  else throw ModelError(where + ": unknown distribution kind '" + kind + "'");
  d.mean = j.value("mean", 0.0);
  d.scv = j.value("scv", 1.0);
  return d;
}

inline json to_json(const Popularity& p) {
  if (p.kind == "zipf") return json{{"kind", "zipf"}, {"eta", p.eta}};
  return json{{"kind", "custom"}, {"weights", p.weights}};
}

inline Popularity popularity_from_json(const json& j) {
  Popularity p;
  p.kind = j.value("kind", "zipf");
  p.eta = j.value("eta", 1.0);
  if (j.contains("weights")) p.weights = j.at("weights").get<std::vector<double>>();
  return p;
}

}  // namespace detail

inline std::string save_model(const LqnModel& m) {
  using nlohmann::json;
  json doc;
  doc["schema"] = kModelSchema;
  doc["name"] = m.name;
  doc["processors"] = json::array();
  for (const auto& p : m.processors)
    doc["processors"].push_back(
        {{"id", p.id},
         {"scheduling", p.scheduling == Scheduling::ProcessorSharing ? "processor-sharing"
                                                                     : "infinite-server"},
         {"multiplicity", p.multiplicity},
         {"is-pseudo", p.is_pseudo}});
  doc["tasks"] = json::array();
  for (const auto& t : m.tasks) {
    json jt{{"id", t.id},
            {"host-processor", t.host_processor},
            {"multiplicity", t.multiplicity},
            {"kind", t.kind == TaskKind::Ordinary ? "ordinary"
                     : t.kind == TaskKind::Reference ? "reference"
                                                     : "cache"}};
    if (t.cache_spec) {
      const auto& cs = *t.cache_spec;
      json lists = json::array();
      for (const auto& l : cs.lists)
        lists.push_back({{"capacity", l.capacity}, {"parent", l.parent}});
      jt["cache-spec"] = {{"items", cs.items},
                          {"lists", lists},
                          {"popularity", detail::to_json(cs.popularity)},
                          {"replacement", cs.replacement}};
    }
    doc["tasks"].push_back(jt);
  }
  doc["entries"] = json::array();
  for (const auto& e : m.entries) {
    json je{{"id", e.id},
            {"owner-task", e.owner_task},
            {"kind", e.kind == EntryKind::Ordinary ? "ordinary" : "item"},
            {"bound-activity", e.bound_activity}};
    if (e.popularity) je["popularity"] = *e.popularity;
    doc["entries"].push_back(je);
  }
  doc["activities"] = json::array();
  for (const auto& a : m.activities)
    doc["activities"].push_back({{"id", a.id},
                                 {"owner", a.owner},
                                 {"host-demand", detail::to_json(a.host_demand)},
                                 {"calls-out", a.calls_out}});
  doc["precedences"] = json::array();
  for (const auto& pe : m.precedences) {
    json jp{{"from", pe.from},
            {"to", pe.to},
            {"kind", pe.kind == PrecedenceKind::Sequence ? "sequence"
                     : pe.kind == PrecedenceKind::OrBranch ? "or-branch"
                                                           : "cache-access"}};
    if (!pe.branch_probabilities.empty())
      jp["branch-probabilities"] = pe.branch_probabilities;
    doc["precedences"].push_back(jp);
  }
  doc["calls"] = json::array();
  for (const auto& c : m.calls)
    doc["calls"].push_back(
        {{"id", c.id},
         {"from-activity", c.from_activity},
         {"to-entry", c.to_entry},
         {"kind", c.kind == CallKind::Synchronous ? "synchronous" : "asynchronous"},
         {"mean-calls", c.mean_calls}});
  return doc.dump(2) + "\n";
}

inline LqnModel load_model(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ModelError(std::string("model document parse error: ") + ex.what());
  }
  if (doc.value("schema", "") != kModelSchema)
    throw ModelError("model document: missing or unsupported schema (want '" +
                     std::string(kModelSchema) + "')");
  LqnModel m;
  m.name = doc.value("name", "");
  for (const auto& jp : doc.value("processors", json::array())) {
    Processor p;
    p.id = jp.value("id", "");
    std::string sched = jp.value("scheduling", "processor-sharing");
    if (sched == "processor-sharing") p.scheduling = Scheduling::ProcessorSharing;
    else if (sched == "infinite-server") p.scheduling = Scheduling::InfiniteServer;
    else throw ModelError("processor/" + p.id + ": unknown scheduling '" + sched + "'");
    p.multiplicity = jp.value("multiplicity", 1);
    p.is_pseudo = jp.value("is-pseudo", false);
    m.processors.push_back(p);
  }
  for (const auto& jt : doc.value("tasks", json::array())) {
    Task t;
    t.id = jt.value("id", "");
    t.host_processor = jt.value("host-processor", "");
    t.multiplicity = jt.value("multiplicity", 1);
    std::string kind = jt.value("kind", "ordinary");
    if (kind == "ordinary") t.kind = TaskKind::Ordinary;
    else if (kind == "reference") t.kind = TaskKind::Reference;
    else if (kind == "cache") t.kind = TaskKind::Cache;
    else throw ModelError("task/" + t.id + ": unknown kind '" + kind + "'");
    if (jt.contains("cache-spec")) {
      const auto& jc = jt.at("cache-spec");
      CacheTaskSpec cs;
      cs.items = jc.value("items", 1);
      cs.lists.clear();
      for (const auto& jl : jc.value("lists", json::array()))
        cs.lists.push_back({jl.value("capacity", 1), jl.value("parent", 0)});
      if (cs.lists.empty()) cs.lists.push_back({1, 0});
      if (jc.contains("popularity")) cs.popularity = detail::popularity_from_json(jc.at("popularity"));
      cs.replacement = jc.value("replacement", "rr");
      t.cache_spec = cs;
    }
    m.tasks.push_back(t);
  }
  for (const auto& je : doc.value("entries", json::array())) {
    Entry e;
    e.id = je.value("id", "");
    e.owner_task = je.value("owner-task", "");
    std::string kind = je.value("kind", "ordinary");
    if (kind == "ordinary") e.kind = EntryKind::Ordinary;
    else if (kind == "item") e.kind = EntryKind::Item;
    else throw ModelError("entry/" + e.id + ": unknown kind '" + kind + "'");
    if (je.contains("popularity")) e.popularity = je.at("popularity").get<std::vector<double>>();
    e.bound_activity = je.value("bound-activity", "");
    m.entries.push_back(e);
  }
  for (const auto& ja : doc.value("activities", json::array())) {
    Activity a;
    a.id = ja.value("id", "");
    a.owner = ja.value("owner", "");
    if (ja.contains("host-demand"))
      a.host_demand = detail::phase_from_json(ja.at("host-demand"), "activity/" + a.id);
    if (ja.contains("calls-out")) a.calls_out = ja.at("calls-out").get<std::vector<std::string>>();
    m.activities.push_back(a);
  }
  for (const auto& jp : doc.value("precedences", json::array())) {
    PrecedenceEdge pe;
    pe.from = jp.value("from", std::vector<std::string>{});
    pe.to = jp.value("to", std::vector<std::string>{});
    std::string kind = jp.value("kind", "sequence");
    if (kind == "sequence") pe.kind = PrecedenceKind::Sequence;
    else if (kind == "or-branch") pe.kind = PrecedenceKind::OrBranch;
    else if (kind == "cache-access") pe.kind = PrecedenceKind::CacheAccess;
    else throw ModelError("precedence: unknown kind '" + kind + "'");
    if (jp.contains("branch-probabilities"))
      pe.branch_probabilities = jp.at("branch-probabilities").get<std::vector<double>>();
    m.precedences.push_back(pe);
  }
  for (const auto& jc : doc.value("calls", json::array())) {
    Call c;
    c.id = jc.value("id", "");
    c.from_activity = jc.value("from-activity", "");
    c.to_entry = jc.value("to-entry", "");
    std::string kind = jc.value("kind", "synchronous");
    if (kind == "synchronous") c.kind = CallKind::Synchronous;
    else if (kind == "asynchronous") c.kind = CallKind::Asynchronous;
    else throw ModelError("call/" + c.id + ": unknown kind '" + kind + "'");
    c.mean_calls = jc.value("mean-calls", 1.0);
    m.calls.push_back(c);
  }
  require_valid(m);
  return m;
}

inline LqnModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

inline void save_model_file(const LqnModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write model file '" + path + "'");
  out << save_model(m);
}

}  // namespace jcsp
