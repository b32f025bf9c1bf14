// Command-line front end: validate/solve/simulate models, compare against
// simulation, run the placement and joint-caching optimizers, generate or
// ingest workloads, and compute the gain/error metrics.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "jcsp/catalog.hpp"
#include "jcsp/metrics.hpp"
#include "jcsp/model_json.hpp"
#include "jcsp/optimizer.hpp"
#include "jcsp/report.hpp"
#include "jcsp/simulator.hpp"
#include "jcsp/solver.hpp"
#include "jcsp/workload.hpp"

namespace {

using namespace jcsp;

int worker_threads() {
  // concurrency cap; the current pipeline is sequential but the knob is
  // honored so scripts relying on it keep working
  const char* env = std::getenv("JCSP_THREADS");
  if (env == nullptr) return 1;
  int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

SolverOptions make_solver_options(double delta, int max_iters, const std::string& fpi,
                                  const std::string& amva) {
  SolverOptions o;
  o.delta = delta;
  o.max_inner = max_iters;
  o.max_outer = max_iters;
  if (fpi == "little-law") o.fpi_form = FpiForm::LittleLaw;
  else if (fpi == "literal-eq3") o.fpi_form = FpiForm::LiteralEq3;
  else throw std::invalid_argument("unknown --fpi-form '" + fpi + "'");
  if (amva == "bard-schweitzer") o.amva = AmvaVariant::BardSchweitzer;
  else if (amva == "exact") o.amva = AmvaVariant::ExactMva;
  else throw std::invalid_argument("unknown --amva '" + amva + "'");
  return o;
}

std::string solver_report_text(const SolverResult& r) {
  std::ostringstream os;
  os << "classes: " << r.class_names.size() << "\n";
  for (std::size_t i = 0; i < r.class_names.size(); ++i)
    os << "  " << r.class_names[i] << ": throughput " << r.throughput[i] << " /s, response "
       << r.response_time[i] << " s, think " << r.think_time[i] << " s\n";
  os << "total throughput: " << r.total_throughput << " /s\n";
  os << "total response time: " << total_response_time(r) << " s\n";
  for (const auto& cs : r.caches)
    os << "cache " << cs.task << ": p-hit " << cs.p_hit << ", p-miss " << cs.p_miss << "\n";
  os << "outer iterations: " << r.convergence.outer_iterations << ", residual "
     << r.convergence.residual << "\n";
  return os.str();
}

SynthParams parse_grid(const std::string& grid) {
  // "M=2,N=5,C=10,q=500,p=1,eta=1.0"
  SynthParams p;
  std::stringstream ss(grid);
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad grid entry '" + kv + "'");
    std::string key = kv.substr(0, eq);
    double val = std::stod(kv.substr(eq + 1));
    if (key == "M") p.nodes = static_cast<int>(val);
    else if (key == "N") p.users = static_cast<int>(val);
    else if (key == "C") p.services = static_cast<int>(val);
    else if (key == "q") p.capacity_mb = val;
    else if (key == "p") p.item_size_gb = val;
    else if (key == "eta") p.zipf_eta = val;
    else throw std::invalid_argument("unknown grid key '" + key + "'");
  }
  return p;
}

std::vector<std::pair<double, double>> read_pairs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::pair<double, double>> pairs;
  std::string line;
  std::getline(in, line);  // header
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": expected two columns");
    pairs.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
  }
  if (pairs.empty()) throw std::runtime_error(path + ": no data rows");
  return pairs;
}

PlacementDecision first_feasible_placement(const ServiceCatalog& cat) {
  PlacementDecision x;
  for (int k = 0; k < cat.jobs(); ++k) x.node_of.push_back(feasible_nodes(cat, k).front());
  return x;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layered queueing models with caching: solver, simulator, optimizer"};
  app.require_subcommand(1);

  std::string model_path, workload_path, out_dir = "out";
  std::uint64_t seed = 1;
  double delta = 1e-6;
  int max_iters = 500;
  std::string fpi_form = "little-law", amva = "bard-schweitzer";
  std::string mode = "placement", scheme = "no-cache", grid;
  int generations = 200, population = 50, replications = 10, nodes = 2;
  std::string in_path, invocations, durations, memory_csv;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "master random seed");
  };
  auto add_solver_opts = [&](CLI::App* cmd) {
    cmd->add_option("--delta", delta, "fixed-point convergence tolerance");
    cmd->add_option("--max-iters", max_iters, "iteration cap");
    cmd->add_option("--fpi-form", fpi_form)->check(CLI::IsMember({"little-law", "literal-eq3"}));
    cmd->add_option("--amva", amva)->check(CLI::IsMember({"bard-schweitzer", "exact"}));
  };

  CLI::App* validate = app.add_subcommand("validate", "check a model document");
  validate->add_option("--model", model_path)->required();

  CLI::App* solve = app.add_subcommand("solve", "analytical layered solve");
  solve->add_option("--model", model_path)->required();
  add_common(solve);
  add_solver_opts(solve);

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "discrete-event simulation");
  simulate_cmd->add_option("--model", model_path)->required();
  simulate_cmd->add_option("--replications", replications);
  add_common(simulate_cmd);

  CLI::App* compare = app.add_subcommand("compare", "analytical vs simulated residence");
  compare->add_option("--model", model_path)->required();
  compare->add_option("--replications", replications);
  add_common(compare);
  add_solver_opts(compare);

  CLI::App* optimize = app.add_subcommand("optimize", "search placements (and cache splits)");
  optimize->add_option("--workload", workload_path)->required();
  optimize->add_option("--mode", mode)->check(CLI::IsMember({"placement", "jcsp"}));
  optimize->add_option("--generations", generations);
  optimize->add_option("--population", population);
  optimize->add_option("--nodes", nodes, "edge node count");
  add_common(optimize);
  add_solver_opts(optimize);

  CLI::App* baseline = app.add_subcommand("baseline", "evaluate a caching baseline");
  baseline->add_option("--workload", workload_path)->required();
  baseline->add_option("--scheme", scheme)->check(CLI::IsMember({"no-cache", "prefetch-all"}));
  baseline->add_option("--nodes", nodes);
  add_common(baseline);
  add_solver_opts(baseline);

  CLI::App* gen = app.add_subcommand("gen-workload", "synthesize a workload");
  gen->add_option("--grid", grid, "e.g. M=2,N=5,C=10,q=500,p=1,eta=1.0")->required();
  add_common(gen);

  CLI::App* ingest = app.add_subcommand("ingest-trace", "build a workload from trace CSVs");
  ingest->add_option("--invocations", invocations)->required();
  ingest->add_option("--durations", durations)->required();
  ingest->add_option("--memory", memory_csv)->required();
  add_common(ingest);

  CLI::App* gain = app.add_subcommand("gain", "average relative gain over baseline pairs");
  gain->add_option("--in", in_path, "CSV with header baseline,proposed")->required();

  CLI::App* mape = app.add_subcommand("mape", "mean absolute percentage error");
  mape->add_option("--in", in_path, "CSV with header estimate,reference")->required();

  CLI11_PARSE(app, argc, argv);
  (void)worker_threads();

  try {
    if (*validate) {
      LqnModel m;
      std::ifstream in(model_path);
      if (!in) throw std::runtime_error("cannot open " + model_path);
      nlohmann::json j = nlohmann::json::parse(in);
      // parse without invariants first so every violation is reported
      try {
        m = load_model(j);
      } catch (const ModelError& e) {
        std::cerr << e.what() << "\n";
        return 1;
      }
      auto diags = validate_model(m);
      for (const auto& d : diags) std::cerr << d.path << ": " << d.message << "\n";
      std::cout << (diags.empty() ? "ok" : "invalid") << "\n";
      return diags.empty() ? 0 : 1;
    }

    if (*solve) {
      LqnModel m = load_model_file(model_path);
      SolverOptions o = make_solver_options(delta, max_iters, fpi_form, amva);
      SolverResult r = solve_lqn(m, o);
      ArtifactWriter w(out_dir);
      w.write("solver.csv", solver_csv(r));
      w.write("cache.csv", cache_csv(r, &m));
      w.write("report.txt", solver_report_text(r));
      w.finish("solve|" + model_path + "|" + std::to_string(delta) + "|" + fpi_form + "|" + amva);
      std::cout << "total response time: " << total_response_time(r) << " s\n";
      return 0;
    }

    if (*simulate_cmd) {
      LqnModel m = load_model_file(model_path);
      SimOptions o;
      o.seed = seed;
      o.replications = replications;
      SimResult r = simulate(m, o);
      ArtifactWriter w(out_dir);
      w.write("sim.csv", sim_csv(r));
      w.finish("simulate|" + model_path + "|" + std::to_string(seed) + "|" +
               std::to_string(replications));
      std::cout << "simulated " << r.replications << " replications\n";
      return 0;
    }

    if (*compare) {
      LqnModel m = load_model_file(model_path);
      SolverOptions so = make_solver_options(delta, max_iters, fpi_form, amva);
      SolverResult analytical = solve_lqn(m, so);
      SimOptions o;
      o.seed = seed;
      o.replications = replications;
      SimResult sim = simulate(m, o);
      auto rows = compare_residence(analytical, sim);
      ArtifactWriter w(out_dir);
      w.write("comparison.csv", comparison_csv(rows));
      w.write("solver.csv", solver_csv(analytical));
      w.write("sim.csv", sim_csv(sim));
      w.finish("compare|" + model_path + "|" + std::to_string(seed));
      for (const auto& row : rows)
        std::cout << row.entity << ": analytical " << row.analytical << ", simulated "
                  << row.simulated << " (rel diff " << row.rel_diff << ")\n";
      return 0;
    }

    if (*optimize) {
      std::ifstream in(workload_path);
      if (!in) throw std::runtime_error("cannot open " + workload_path);
      WorkloadSpec wl = load_workload(nlohmann::json::parse(in));
      if (static_cast<int>(wl.node_capacity_mb.size()) != nodes)
        wl.node_capacity_mb.assign(static_cast<std::size_t>(nodes),
                                   wl.node_capacity_mb.empty() ? 500.0 : wl.node_capacity_mb[0]);
      ServiceCatalog cat = make_catalog(wl, nodes, seed);
      SolverOptions so = make_solver_options(delta, max_iters, fpi_form, amva);
      GaParams params;
      params.generations = generations;
      params.population = population;
      params.seed = seed;
      ArtifactWriter w(out_dir);
      nlohmann::json decision;
      if (mode == "placement") {
        PlacementOutcome out = ga_optimize_placement(cat, wl, params, CacheMode::None, nullptr, so);
        decision["mode"] = "placement";
        decision["node-of"] = out.x.node_of;
        decision["response-time"] = out.response;
        w.write("fitness.csv", fitness_csv(out.best_history, {}));
        std::cout << "best response time: " << out.response << " s\n";
      } else {
        JcspOutcome out = ga_optimize_jcsp(cat, wl, params, so);
        decision["mode"] = "jcsp";
        decision["node-of"] = out.x.node_of;
        decision["cache-slots"] = out.alloc.slots;
        decision["response-time"] = out.response;
        decision["memory-mb"] = out.memory_mb;
        w.write("fitness.csv", fitness_csv(out.best_history, {}));
        std::cout << "best response time: " << out.response << " s, cache memory " << out.memory_mb
                  << " MB\n";
      }
      w.write("decision.json", decision.dump(2) + "\n");
      w.finish("optimize|" + mode + "|" + workload_path + "|" + std::to_string(seed) + "|" +
               std::to_string(generations) + "|" + std::to_string(population));
      return 0;
    }

    if (*baseline) {
      std::ifstream in(workload_path);
      if (!in) throw std::runtime_error("cannot open " + workload_path);
      WorkloadSpec wl = load_workload(nlohmann::json::parse(in));
      if (static_cast<int>(wl.node_capacity_mb.size()) != nodes)
        wl.node_capacity_mb.assign(static_cast<std::size_t>(nodes),
                                   wl.node_capacity_mb.empty() ? 500.0 : wl.node_capacity_mb[0]);
      ServiceCatalog cat = make_catalog(wl, nodes, seed);
      SolverOptions so = make_solver_options(delta, max_iters, fpi_form, amva);
      PlacementDecision x = first_feasible_placement(cat);
      nlohmann::json j;
      j["scheme"] = scheme;
      if (scheme == "no-cache") {
        j["response-time"] = baseline_no_cache(cat, wl, x, so);
      } else {
        PrefetchAllOutcome out = baseline_prefetch_all(cat, wl, x, so);
        j["response-time"] = out.response;
        j["memory-mb"] = out.memory_mb;
      }
      ArtifactWriter w(out_dir);
      w.write("baseline.json", j.dump(2) + "\n");
      w.finish("baseline|" + scheme + "|" + workload_path + "|" + std::to_string(seed));
      std::cout << "response time: " << j["response-time"].get<double>() << " s\n";
      return 0;
    }

    if (*gen) {
      SynthParams p = parse_grid(grid);
      p.seed = seed;
      WorkloadSpec wl = synth_workload(p);
      CdfReport cdf = cdf_report(wl);
      std::ostringstream cdf_csv;
      cdf_csv << "metric,value,cumulative\n";
      for (std::size_t i = 0; i < cdf.execution_time.value.size(); ++i)
        cdf_csv << "execution-time," << cdf.execution_time.value[i] << ','
                << cdf.execution_time.cumulative[i] << '\n';
      for (std::size_t i = 0; i < cdf.memory.value.size(); ++i)
        cdf_csv << "memory," << cdf.memory.value[i] << ',' << cdf.memory.cumulative[i] << '\n';
      ArtifactWriter w(out_dir);
      w.write("workload.json", save_workload(wl).dump(2) + "\n");
      w.write("cdf.csv", cdf_csv.str());
      w.finish("gen-workload|" + grid + "|" + std::to_string(seed));
      std::cout << "generated " << wl.services.size() << " services\n";
      return 0;
    }

    if (*ingest) {
      TraceFiles files{invocations, durations, memory_csv};
      IngestOptions o;
      o.seed = seed;
      WorkloadSpec wl = ingest_trace(files, o);
      ArtifactWriter w(out_dir);
      w.write("workload.json", save_workload(wl).dump(2) + "\n");
      w.finish("ingest-trace|" + invocations + "|" + std::to_string(seed));
      std::cout << "ingested " << wl.services.size() << " services\n";
      return 0;
    }

    if (*gain) {
      std::cout << compute_gain(read_pairs_csv(in_path)) << "\n";
      return 0;
    }

    if (*mape) {
      auto pairs = read_pairs_csv(in_path);
      std::vector<double> est, ref;
      for (const auto& [e, r] : pairs) {
        est.push_back(e);
        ref.push_back(r);
      }
      std::cout << compute_mape(est, ref) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
