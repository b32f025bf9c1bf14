#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "jcsp/model.hpp"
#include "jcsp/simulator.hpp"
#include "jcsp/solver.hpp"

namespace jcsp {

namespace rdetail {

inline std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

}  // namespace rdetail

/// Flat per-(entity, class) table of the analytical solution.
inline std::string solver_csv(const SolverResult& r) {
  if (r.class_names.empty()) throw std::invalid_argument("solver_csv: empty result");
  std::ostringstream os;
  os << "entity,class,throughput,residence-time,queue-length,utilization\n";
  for (std::size_t i = 0; i < r.class_names.size(); ++i)
    os << "reference," << r.class_names[i] << ',' << rdetail::num(r.throughput[i]) << ','
       << rdetail::num(r.response_time[i]) << ',' << rdetail::num(r.throughput[i] * r.response_time[i])
       << ",0\n";
  for (const auto& em : r.entities)
    os << em.entity << ',' << em.cls << ',' << rdetail::num(em.throughput) << ','
       << rdetail::num(em.residence) << ',' << rdetail::num(em.queue_length) << ','
       << rdetail::num(em.utilization) << '\n';
  return os.str();
}

/// Per cache-task hit/miss table; the node is the cache's host processor.
inline std::string cache_csv(const SolverResult& r, const LqnModel* model = nullptr) {
  std::ostringstream os;
  os << "node,service,p-hit,p-miss\n";
  for (const auto& cs : r.caches) {
    std::string node = cs.task;
    if (model != nullptr) {
      const Task* t = model->find_task(cs.task);
      if (t != nullptr) node = t->host_processor;
    }
    os << node << ',' << cs.task << ',' << rdetail::num(cs.p_hit) << ','
       << rdetail::num(cs.p_miss) << '\n';
  }
  return os.str();
}

/// Simulation table: the solver schema plus confidence and provenance columns.
inline std::string sim_csv(const SimResult& r) {
  std::ostringstream os;
  os << "entity,class,throughput,residence-time,queue-length,utilization,"
        "ci-half-width,replications,seed\n";
  for (std::size_t i = 0; i < r.class_names.size(); ++i)
    os << "reference," << r.class_names[i] << ',' << rdetail::num(r.throughput[i].mean) << ','
       << rdetail::num(r.response_time[i].mean) << ','
       << rdetail::num(r.throughput[i].mean * r.response_time[i].mean) << ",0,"
       << rdetail::num(r.response_time[i].half_width) << ',' << r.replications << ',' << r.seed
       << '\n';
  for (const auto& [task, est] : r.task_residence)
    os << task << ",merged,0," << rdetail::num(est.mean) << ",0,0,"
       << rdetail::num(est.half_width) << ',' << r.replications << ',' << r.seed << '\n';
  for (const auto& [proc, est] : r.utilization)
    os << proc << ",merged,0,0,0," << rdetail::num(est.mean) << ','
       << rdetail::num(est.half_width) << ',' << r.replications << ',' << r.seed << '\n';
  return os.str();
}

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "entity,analytical,simulated,ci-half-width,abs-diff,rel-diff\n";
  for (const auto& row : rows)
    os << row.entity << ',' << rdetail::num(row.analytical) << ',' << rdetail::num(row.simulated)
       << ',' << rdetail::num(row.half_width) << ',' << rdetail::num(row.abs_diff) << ','
       << rdetail::num(row.rel_diff) << '\n';
  return os.str();
}

inline std::string fitness_csv(const std::vector<double>& best, const std::vector<double>& mean) {
  std::ostringstream os;
  os << "generation,best,mean\n";
  for (std::size_t g = 0; g < best.size(); ++g)
    os << g << ',' << rdetail::num(best[g]) << ','
       << rdetail::num(g < mean.size() ? mean[g] : best[g]) << '\n';
  return os.str();
}

// --- artifacts ----------------------------------------------------------------

/// Collects named artifacts, writes them under one directory, and emits a
/// manifest listing every file with its size and a hash of the run config.
/// No timestamps anywhere: identical config + seed give identical bytes.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::string out_dir) : dir_(std::move(out_dir)) {
    std::filesystem::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& content) {
    std::filesystem::path p = std::filesystem::path(dir_) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    artifacts_[name] = content.size();
  }

  void finish(const std::string& config_string) {
    nlohmann::json j;
    j["schema"] = "jcsp-manifest/1";
    j["config-hash"] = fnv1a(config_string);
    j["artifacts"] = nlohmann::json::array();
    for (const auto& [name, size] : artifacts_)
      j["artifacts"].push_back({{"name", name}, {"bytes", size}});
    std::ofstream out(std::filesystem::path(dir_) / "manifest", std::ios::binary);
    out << j.dump(2) << '\n';
  }

  static std::string fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
  }

 private:
  std::string dir_;
  std::map<std::string, std::size_t> artifacts_;  // sorted for stable manifests
};

}  // namespace jcsp
