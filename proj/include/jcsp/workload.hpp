#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "jcsp/dist.hpp"
#include "jcsp/model_json.hpp"
#include "jcsp/prng.hpp"

namespace jcsp {

inline constexpr const char* kWorkloadSchema = "jcsp-workload/1";

/// One service as seen by the workload: arrival intensity, execution-time
/// distribution, memory footprint, and its content-item catalog.
struct WorkloadService {
  std::string id;
  double invocation_rate = 0.0;  // requests per second
  PhaseType service_time;        // execution time
  double memory_mb = 0.0;
  int item_count = 1;
  double total_item_size_gb = 0.0;
  double zipf_eta = 0.0;
};

struct WorkloadSpec {
  int users = 5;
  double think_time = 1.0;  // seconds
  double hit_time = 0.02;   // local item fetch (s)
  double miss_time = 0.5;   // origin-server fetch (s)
  std::vector<WorkloadService> services;
  std::vector<double> request_probability;  // per service, sums to 1
  std::vector<double> node_capacity_mb;     // cache capacity q per node
  int slots_per_node = 50;                  // identical-size item slots per standard node

  // items are identically sized; the slot size is set by the standard node
  double item_size_mb() const {
    if (node_capacity_mb.empty() || slots_per_node < 1)
      throw std::invalid_argument("workload: node capacities and slots required");
    return node_capacity_mb.front() / static_cast<double>(slots_per_node);
  }
  int node_slots(std::size_t m) const {
    return static_cast<int>(std::lround(node_capacity_mb.at(m) / item_size_mb()));
  }

  void check() const {
    if (users < 1) throw std::invalid_argument("workload: users >= 1");
    if (services.empty()) throw std::invalid_argument("workload: no services");
    if (request_probability.size() != services.size())
      throw std::invalid_argument("workload: request probabilities must cover all services");
    double sum = 0.0;
    for (double p : request_probability) {
      if (p < 0.0) throw std::invalid_argument("workload: negative request probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("workload: request probabilities must sum to 1");
    for (const auto& s : services) {
      if (s.invocation_rate < 0.0) throw std::invalid_argument("workload: negative rate");
      if (s.item_count < 1) throw std::invalid_argument("workload: item count >= 1");
      if (s.zipf_eta < 0.0) throw std::invalid_argument("workload: eta >= 0");
      s.service_time.check();
    }
    for (double q : node_capacity_mb)
      if (!(q > 0.0)) throw std::invalid_argument("workload: node capacity must be > 0");
  }
};

// --- trace ingestion ---------------------------------------------------------

/// Raw joined record from the three trace files.
struct TraceRecord {
  std::string app;
  std::string function;
  long invocations = 0;
  double duration_min = 0.0, duration_avg = 0.0, duration_max = 0.0;  // seconds
  double memory_p1 = 0.0, memory_avg = 0.0, memory_max = 0.0;         // MB
};

struct TraceFiles {
  std::string invocations_csv;  // app, function, <per-bin counts...>
  std::string durations_csv;    // app, function, min, avg, max
  std::string memory_csv;       // app, p1, avg, max
};

struct IngestOptions {
  double horizon_seconds = 14.0 * 86400.0;  // public trace span
  std::uint64_t seed = 1;
  int max_services = 0;  // 0 = keep all; otherwise deterministic sub-sample
  int users = 5;
  double node_capacity_mb = 500.0;
  int nodes = 2;
  double total_item_size_gb = 1.0;
  double zipf_eta = 1.0;
  int slots_per_node = 50;
};

namespace wldetail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

inline double parse_num(const std::string& s, const std::string& file, int row) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(file + ": row " + std::to_string(row) + ": bad numeric field '" + s + "'");
  }
}

}  // namespace wldetail

inline WorkloadSpec ingest_trace(const TraceFiles& files, const IngestOptions& opt = {}) {
  using wldetail::parse_num;
  using wldetail::split_csv_row;

  std::map<std::pair<std::string, std::string>, TraceRecord> records;

  // invocation counts: app, function, then one column per time bin
  {
    std::ifstream in(files.invocations_csv);
    if (!in) throw std::runtime_error("cannot open " + files.invocations_csv);
    std::string line;
    int row = 0;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      auto f = split_csv_row(line);
      if (f.size() < 3)
        throw std::runtime_error(files.invocations_csv + ": row " + std::to_string(row) +
                                 ": expected app, function and at least one bin");
      TraceRecord& rec = records[{f[0], f[1]}];
      rec.app = f[0];
      rec.function = f[1];
      for (std::size_t i = 2; i < f.size(); ++i)
        rec.invocations += static_cast<long>(parse_num(f[i], files.invocations_csv, row));
    }
  }

  // durations: app, function, min, avg, max (seconds)
  {
    std::ifstream in(files.durations_csv);
    if (!in) throw std::runtime_error("cannot open " + files.durations_csv);
    std::string line;
    int row = 0;
    std::getline(in, line);
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      auto f = split_csv_row(line);
      if (f.size() < 5)
        throw std::runtime_error(files.durations_csv + ": row " + std::to_string(row) +
                                 ": expected app, function, min, avg, max");
      auto it = records.find({f[0], f[1]});
      if (it == records.end())
        throw std::runtime_error(files.durations_csv + ": row " + std::to_string(row) +
                                 ": function '" + f[1] + "' has no invocation record");
      it->second.duration_min = parse_num(f[2], files.durations_csv, row);
      it->second.duration_avg = parse_num(f[3], files.durations_csv, row);
      it->second.duration_max = parse_num(f[4], files.durations_csv, row);
      if (it->second.duration_min > it->second.duration_avg ||
          it->second.duration_avg > it->second.duration_max)
        throw std::runtime_error(files.durations_csv + ": row " + std::to_string(row) +
                                 ": duration ordering min <= avg <= max violated");
    }
  }

  // memory: app, p1, avg, max (MB); applies to every function of the app
  std::map<std::string, std::array<double, 3>> app_memory;
  {
    std::ifstream in(files.memory_csv);
    if (!in) throw std::runtime_error("cannot open " + files.memory_csv);
    std::string line;
    int row = 0;
    std::getline(in, line);
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      auto f = split_csv_row(line);
      if (f.size() < 4)
        throw std::runtime_error(files.memory_csv + ": row " + std::to_string(row) +
                                 ": expected app, p1, avg, max");
      double p1 = parse_num(f[1], files.memory_csv, row);
      double avg = parse_num(f[2], files.memory_csv, row);
      double mx = parse_num(f[3], files.memory_csv, row);
      if (p1 > avg || avg > mx)
        throw std::runtime_error(files.memory_csv + ": row " + std::to_string(row) +
                                 ": memory percentile ordering violated");
      app_memory[f[0]] = {p1, avg, mx};
    }
  }

  std::vector<TraceRecord> recs;
  for (auto& [key, rec] : records) {
    auto mit = app_memory.find(rec.app);
    if (mit == app_memory.end())
      throw std::runtime_error(files.memory_csv + ": app '" + rec.app +
                               "' missing from memory file");
    rec.memory_p1 = mit->second[0];
    rec.memory_avg = mit->second[1];
    rec.memory_max = mit->second[2];
    if (rec.duration_avg <= 0.0)
      throw std::runtime_error(files.durations_csv + ": function '" + rec.function +
                               "' has no positive average duration");
    recs.push_back(rec);
  }
  if (recs.empty()) throw std::runtime_error("trace: no joined records");

  if (opt.max_services > 0 && static_cast<int>(recs.size()) > opt.max_services) {
    auto rng = make_rng(derive_seed(opt.seed, 0x7ace));
    std::shuffle(recs.begin(), recs.end(), rng);
    recs.resize(static_cast<std::size_t>(opt.max_services));
    std::sort(recs.begin(), recs.end(), [](const TraceRecord& a, const TraceRecord& b) {
      return std::tie(a.app, a.function) < std::tie(b.app, b.function);
    });
  }

  WorkloadSpec w;
  w.users = opt.users;
  w.slots_per_node = opt.slots_per_node;
  w.node_capacity_mb.assign(static_cast<std::size_t>(opt.nodes), opt.node_capacity_mb);
  double item_size = opt.node_capacity_mb / static_cast<double>(opt.slots_per_node);
  int items = std::max(1, static_cast<int>(std::lround(opt.total_item_size_gb * 1024.0 / item_size)));
  double rate_sum = 0.0;
  for (const auto& r : recs) {
    WorkloadService s;
    s.id = r.app + "/" + r.function;
    s.invocation_rate = static_cast<double>(r.invocations) / opt.horizon_seconds;
    s.service_time = {DistKind::Exponential, r.duration_avg, 1.0};
    s.memory_mb = r.memory_avg;
    s.item_count = items;
    s.total_item_size_gb = opt.total_item_size_gb;
    s.zipf_eta = opt.zipf_eta;
    w.services.push_back(s);
    rate_sum += s.invocation_rate;
  }
  if (!(rate_sum > 0.0)) throw std::runtime_error("trace: zero total invocation rate");
  for (const auto& s : w.services) w.request_probability.push_back(s.invocation_rate / rate_sum);
  w.check();
  return w;
}

// --- synthetic generator -----------------------------------------------------

struct SynthParams {
  int nodes = 2;       // M
  int users = 5;       // N
  int services = 10;   // C
  double capacity_mb = 500.0;   // q
  double item_size_gb = 1.0;    // p, total item footprint per service
  double zipf_eta = 1.0;        // η
  std::uint64_t seed = 1;
  int slots_per_node = 50;

  void check() const {
    if (nodes < 1 || users < 1 || services < 1)
      throw std::invalid_argument("synth: counts must be >= 1");
    if (!(capacity_mb > 0.0)) throw std::invalid_argument("synth: q must be > 0");
    if (!(item_size_gb > 0.0)) throw std::invalid_argument("synth: p must be > 0");
    if (zipf_eta < 0.0) throw std::invalid_argument("synth: eta >= 0");
  }
};

/// Generates a workload shaped like the serverless-trace summaries: most
/// execution times are sub-second with a long tail, memory 50-400 MB.
inline WorkloadSpec synth_workload(const SynthParams& p) {
  p.check();
  auto rng = make_rng(derive_seed(p.seed, 0x5717));
  std::exponential_distribution<double> exec_mean(1.0 / 0.6);
  std::uniform_real_distribution<double> mem(50.0, 400.0);
  std::lognormal_distribution<double> rate(std::log(0.05), 0.8);

  WorkloadSpec w;
  w.users = p.users;
  w.slots_per_node = p.slots_per_node;
  w.node_capacity_mb.assign(static_cast<std::size_t>(p.nodes), p.capacity_mb);
  double item_size = p.capacity_mb / static_cast<double>(p.slots_per_node);
  int items = std::max(1, static_cast<int>(std::lround(p.item_size_gb * 1024.0 / item_size)));

  double rate_sum = 0.0;
  for (int c = 0; c < p.services; ++c) {
    WorkloadService s;
    s.id = "svc-" + std::to_string(c);
    s.invocation_rate = rate(rng);
    s.service_time = {DistKind::Exponential, std::max(0.05, exec_mean(rng)), 1.0};
    s.memory_mb = mem(rng);
    s.item_count = items;
    s.total_item_size_gb = p.item_size_gb;
    s.zipf_eta = p.zipf_eta;
    w.services.push_back(s);
    rate_sum += s.invocation_rate;
  }
  for (const auto& s : w.services) w.request_probability.push_back(s.invocation_rate / rate_sum);
  w.check();
  return w;
}

// --- distribution summary ----------------------------------------------------

struct CdfTable {
  std::vector<double> value;
  std::vector<double> cumulative;  // nondecreasing, ends at 1
};

struct CdfReport {
  CdfTable execution_time;  // over per-service mean execution times
  CdfTable memory;          // over per-service memory footprints
};

namespace wldetail {
inline CdfTable make_cdf(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  CdfTable t;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    t.value.push_back(xs[i]);
    t.cumulative.push_back(static_cast<double>(i + 1) / static_cast<double>(xs.size()));
  }
  return t;
}
}  // namespace wldetail

inline CdfReport cdf_report(const WorkloadSpec& w) {
  if (w.services.empty()) throw std::invalid_argument("cdf_report: empty workload");
  std::vector<double> exec, mem;
  for (const auto& s : w.services) {
    exec.push_back(s.service_time.mean);
    mem.push_back(s.memory_mb);
  }
  return {wldetail::make_cdf(std::move(exec)), wldetail::make_cdf(std::move(mem))};
}

// --- serialization -----------------------------------------------------------

inline nlohmann::json save_workload(const WorkloadSpec& w) {
  w.check();
  nlohmann::json j;
  j["schema"] = kWorkloadSchema;
  j["users"] = w.users;
  j["think-time"] = w.think_time;
  j["hit-time"] = w.hit_time;
  j["miss-time"] = w.miss_time;
  j["slots-per-node"] = w.slots_per_node;
  j["node-capacity-mb"] = w.node_capacity_mb;
  j["request-probability"] = w.request_probability;
  j["services"] = nlohmann::json::array();
  for (const auto& s : w.services) {
    nlohmann::json js;
    js["id"] = s.id;
    js["invocation-rate"] = s.invocation_rate;
    js["service-time"] = detail::to_json(s.service_time);
    js["memory-mb"] = s.memory_mb;
    js["item-count"] = s.item_count;
    js["total-item-size-gb"] = s.total_item_size_gb;
    js["zipf-eta"] = s.zipf_eta;
    j["services"].push_back(js);
  }
  return j;
}

inline WorkloadSpec load_workload(const nlohmann::json& j) {
  if (!j.contains("schema") || j.at("schema") != kWorkloadSchema)
    throw std::runtime_error("workload: unknown schema");
  WorkloadSpec w;
  w.users = j.at("users").get<int>();
  w.think_time = j.at("think-time").get<double>();
  w.hit_time = j.at("hit-time").get<double>();
  w.miss_time = j.at("miss-time").get<double>();
  w.slots_per_node = j.at("slots-per-node").get<int>();
  w.node_capacity_mb = j.at("node-capacity-mb").get<std::vector<double>>();
  w.request_probability = j.at("request-probability").get<std::vector<double>>();
  for (const auto& js : j.at("services")) {
    WorkloadService s;
    s.id = js.at("id").get<std::string>();
    s.invocation_rate = js.at("invocation-rate").get<double>();
    s.service_time = detail::phase_from_json(js.at("service-time"), "workload/" + s.id);
    s.memory_mb = js.at("memory-mb").get<double>();
    s.item_count = js.at("item-count").get<int>();
    s.total_item_size_gb = js.at("total-item-size-gb").get<double>();
    s.zipf_eta = js.at("zipf-eta").get<double>();
    w.services.push_back(s);
  }
  w.check();
  return w;
}

}  // namespace jcsp
