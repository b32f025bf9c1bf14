#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace jcsp {

/// Closed product-form-style network: delay (infinite-server) stations and
/// queueing stations (PS, or FCFS with exponential demands), per-class
/// populations and service demands (visit ratio folded into the demand).
struct ClosedNetwork {
  enum class StationType { Delay, Queue };
  struct Station {
    StationType type = StationType::Queue;
    std::string name;
    std::vector<double> demand;  // per class, seconds per cycle
    int servers = 1;             // queue stations only
  };
  std::vector<Station> stations;
  std::vector<int> population;  // per class

  int classes() const { return static_cast<int>(population.size()); }
  void check() const {
    for (const auto& st : stations) {
      if (static_cast<int>(st.demand.size()) != classes())
        throw std::invalid_argument("closed network: demand/class size mismatch");
      for (double d : st.demand)
        if (d < 0.0) throw std::invalid_argument("closed network: negative demand");
      if (st.servers < 1) throw std::invalid_argument("closed network: servers >= 1 required");
    }
    for (int n : population)
      if (n < 0) throw std::invalid_argument("closed network: negative population");
  }
};

struct MvaResult {
  std::vector<double> throughput;                 // per class
  std::vector<std::vector<double>> residence;     // [station][class]
  std::vector<std::vector<double>> queue_length;  // [station][class]
  std::vector<double> utilization;                // per station (queue stations)
  int iterations = 0;
  bool converged = true;

  double cycle_time(int c) const {
    double r = 0.0;
    for (const auto& row : residence) r += row[static_cast<std::size_t>(c)];
    return r;
  }
};

namespace detail {

// Seidmann decomposition for multi-server queue stations: D/c at the queue
// plus D(c-1)/c as pure delay.
inline ClosedNetwork seidmann_transform(const ClosedNetwork& in) {
  ClosedNetwork out;
  out.population = in.population;
  for (const auto& st : in.stations) {
    if (st.type == ClosedNetwork::StationType::Queue && st.servers > 1) {
      ClosedNetwork::Station q = st;
      ClosedNetwork::Station d;
      d.type = ClosedNetwork::StationType::Delay;
      d.name = st.name + ".ms-delay";
      d.demand.resize(st.demand.size());
      double c = static_cast<double>(st.servers);
      for (std::size_t i = 0; i < st.demand.size(); ++i) {
        q.demand[i] = st.demand[i] / c;
        d.demand[i] = st.demand[i] * (c - 1.0) / c;
      }
      q.servers = 1;
      out.stations.push_back(q);
      out.stations.push_back(d);
    } else {
      out.stations.push_back(st);
    }
  }
  return out;
}

inline std::size_t pop_index(const std::vector<int>& n, const std::vector<int>& pop) {
  std::size_t idx = 0, stride = 1;
  for (std::size_t c = 0; c < n.size(); ++c) {
    idx += stride * static_cast<std::size_t>(n[c]);
    stride *= static_cast<std::size_t>(pop[c] + 1);
  }
  return idx;
}

}  // namespace detail

/// Exact multi-class MVA by recursion over the population lattice.
/// Guarded: the lattice size must stay enumerable.
inline MvaResult exact_mva_solve(const ClosedNetwork& input,
                                 std::size_t state_guard = 4'000'000) {
  ClosedNetwork net = detail::seidmann_transform(input);
  net.check();
  const int C = net.classes();
  const int S = static_cast<int>(net.stations.size());
  std::size_t lattice = 1;
  for (int c = 0; c < C; ++c) {
    lattice *= static_cast<std::size_t>(net.population[static_cast<std::size_t>(c)] + 1);
    if (lattice > state_guard)
      throw std::invalid_argument("exact_mva_solve: population lattice exceeds guard");
  }

  // Q[idx][s] = total queue length at station s under population vector idx.
  std::vector<std::vector<double>> Q(lattice, std::vector<double>(static_cast<std::size_t>(S), 0.0));
  std::vector<std::vector<double>> lastX(lattice, std::vector<double>(static_cast<std::size_t>(C), 0.0));
  std::vector<std::vector<std::vector<double>>> lastR(
      lattice, std::vector<std::vector<double>>(static_cast<std::size_t>(S),
                                                std::vector<double>(static_cast<std::size_t>(C), 0.0)));

  std::vector<int> n(static_cast<std::size_t>(C), 0);
  bool more = true;
  while (more) {
    std::size_t idx = detail::pop_index(n, net.population);
    int total = 0;
    for (int c = 0; c < C; ++c) total += n[static_cast<std::size_t>(c)];
    if (total > 0) {
      for (int c = 0; c < C; ++c) {
        if (n[static_cast<std::size_t>(c)] == 0) continue;
        std::vector<int> nm = n;
        --nm[static_cast<std::size_t>(c)];
        std::size_t idxm = detail::pop_index(nm, net.population);
        double cycle = 0.0;
        for (int s = 0; s < S; ++s) {
          const auto& st = net.stations[static_cast<std::size_t>(s)];
          double d = st.demand[static_cast<std::size_t>(c)];
          double r = (st.type == ClosedNetwork::StationType::Delay)
                         ? d
                         : d * (1.0 + Q[idxm][static_cast<std::size_t>(s)]);
          lastR[idx][static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] = r;
          cycle += r;
        }
        lastX[idx][static_cast<std::size_t>(c)] =
            cycle > 0.0 ? static_cast<double>(n[static_cast<std::size_t>(c)]) / cycle
                        : 0.0;
      }
      for (int s = 0; s < S; ++s) {
        double q = 0.0;
        for (int c = 0; c < C; ++c)
          q += lastX[idx][static_cast<std::size_t>(c)] *
               lastR[idx][static_cast<std::size_t>(s)][static_cast<std::size_t>(c)];
        Q[idx][static_cast<std::size_t>(s)] = q;
      }
    }
    // next vector
    more = false;
    for (int c = 0; c < C; ++c) {
      if (n[static_cast<std::size_t>(c)] < net.population[static_cast<std::size_t>(c)]) {
        ++n[static_cast<std::size_t>(c)];
        for (int b = 0; b < c; ++b) n[static_cast<std::size_t>(b)] = 0;
        more = true;
        break;
      }
    }
  }

  std::size_t top = detail::pop_index(net.population, net.population);
  MvaResult res;
  res.throughput = lastX[top];
  res.residence.assign(static_cast<std::size_t>(S),
                       std::vector<double>(static_cast<std::size_t>(C), 0.0));
  res.queue_length = res.residence;
  res.utilization.assign(static_cast<std::size_t>(S), 0.0);
  for (int s = 0; s < S; ++s)
    for (int c = 0; c < C; ++c) {
      double r = lastR[top][static_cast<std::size_t>(s)][static_cast<std::size_t>(c)];
      res.residence[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] = r;
      res.queue_length[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] =
          res.throughput[static_cast<std::size_t>(c)] * r;
      if (net.stations[static_cast<std::size_t>(s)].type == ClosedNetwork::StationType::Queue)
        res.utilization[static_cast<std::size_t>(s)] +=
            res.throughput[static_cast<std::size_t>(c)] *
            net.stations[static_cast<std::size_t>(s)].demand[static_cast<std::size_t>(c)];
    }
  return res;
}

namespace detail {

// Schweitzer core with optional Linearizer delta terms. D[s][c][j] estimates
// the change of the per-customer fraction Q_sc/N_c when one class-j customer
// is removed; the plain Bard-Schweitzer step corresponds to D = 0.
struct AmvaCore {
  std::vector<std::vector<double>> Q;  // [station][class]
  std::vector<std::vector<double>> R;
  std::vector<double> X;
  int iterations = 0;
  bool converged = false;
};

inline AmvaCore amva_core(const ClosedNetwork& net, const std::vector<double>& pop,
                          const std::vector<std::vector<std::vector<double>>>* D,
                          double tol, int max_sweeps) {
  const int C = net.classes();
  const int S = static_cast<int>(net.stations.size());
  AmvaCore out;
  out.Q.assign(static_cast<std::size_t>(S), std::vector<double>(static_cast<std::size_t>(C), 0.0));
  out.R = out.Q;
  out.X.assign(static_cast<std::size_t>(C), 0.0);

  int queue_stations = 0;
  for (const auto& st : net.stations)
    if (st.type == ClosedNetwork::StationType::Queue) ++queue_stations;
  for (int s = 0; s < S; ++s)
    for (int c = 0; c < C; ++c)
      if (net.stations[static_cast<std::size_t>(s)].type == ClosedNetwork::StationType::Queue &&
          queue_stations > 0)
        out.Q[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] =
            pop[static_cast<std::size_t>(c)] / queue_stations;

  double total_pop = 0.0;
  for (double n : pop) total_pop += n;
  if (total_pop <= 0.0) {
    out.converged = true;
    return out;
  }

  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double delta = 0.0;
    std::vector<std::vector<double>> R(static_cast<std::size_t>(S),
                                       std::vector<double>(static_cast<std::size_t>(C), 0.0));
    std::vector<double> X(static_cast<std::size_t>(C), 0.0);
    for (int c = 0; c < C; ++c) {
      double nc = pop[static_cast<std::size_t>(c)];
      if (nc <= 0.0) continue;
      double cycle = 0.0;
      for (int s = 0; s < S; ++s) {
        const auto& st = net.stations[static_cast<std::size_t>(s)];
        double d = st.demand[static_cast<std::size_t>(c)];
        double r;
        if (st.type == ClosedNetwork::StationType::Delay) {
          r = d;
        } else {
          // arrival-instant queue with one class-c customer removed
          double q_arr = 0.0;
          for (int e = 0; e < C; ++e) {
            double ne = pop[static_cast<std::size_t>(e)];
            if (ne <= 0.0) continue;
            double frac = out.Q[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)] / ne;
            double dd = D ? (*D)[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)]
                              [static_cast<std::size_t>(c)]
                          : 0.0;
            double removed = (e == c) ? ne - 1.0 : ne;
            q_arr += removed * (frac + dd);
          }
          r = d * (1.0 + std::max(0.0, q_arr));
        }
        R[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] = r;
        cycle += r;
      }
      X[static_cast<std::size_t>(c)] = cycle > 0.0 ? nc / cycle : 0.0;
    }
    for (int s = 0; s < S; ++s)
      for (int c = 0; c < C; ++c) {
        double q_new = X[static_cast<std::size_t>(c)] *
                       R[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)];
        delta = std::max(delta, std::abs(q_new - out.Q[static_cast<std::size_t>(s)]
                                                      [static_cast<std::size_t>(c)]));
        out.Q[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] = q_new;
      }
    out.X = X;
    out.R = R;
    out.iterations = sweep;
    if (delta < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace detail

/// Approximate MVA: Schweitzer fixed point refined by Linearizer delta
/// terms (two outer passes). Little's-law-consistent outputs.
inline MvaResult amva_solve(const ClosedNetwork& input, double tol = 1e-8,
                            int max_sweeps = 10'000) {
  ClosedNetwork net = detail::seidmann_transform(input);
  net.check();
  const int C = net.classes();
  const int S = static_cast<int>(net.stations.size());
  std::vector<double> pop(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) pop[static_cast<std::size_t>(c)] =
      static_cast<double>(net.population[static_cast<std::size_t>(c)]);

  // D[s][c][j]: fraction deltas, Linearizer style.
  std::vector<std::vector<std::vector<double>>> D(
      static_cast<std::size_t>(S),
      std::vector<std::vector<double>>(static_cast<std::size_t>(C),
                                       std::vector<double>(static_cast<std::size_t>(C), 0.0)));
  detail::AmvaCore full = detail::amva_core(net, pop, &D, tol, max_sweeps);
  for (int outer = 0; outer < 2; ++outer) {
    bool any_sub = false;
    for (int j = 0; j < C; ++j) {
      if (pop[static_cast<std::size_t>(j)] < 1.0) continue;
      std::vector<double> sub = pop;
      sub[static_cast<std::size_t>(j)] -= 1.0;
      detail::AmvaCore part = detail::amva_core(net, sub, &D, tol, max_sweeps);
      any_sub = true;
      for (int s = 0; s < S; ++s)
        for (int c = 0; c < C; ++c) {
          double nc = pop[static_cast<std::size_t>(c)];
          double nc_sub = sub[static_cast<std::size_t>(c)];
          if (nc <= 0.0 || nc_sub <= 0.0) continue;
          double f_full = full.Q[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] / nc;
          double f_sub = part.Q[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] / nc_sub;
          D[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] =
              f_sub - f_full;
        }
    }
    if (!any_sub) break;
    full = detail::amva_core(net, pop, &D, tol, max_sweeps);
  }
  if (!full.converged) throw std::runtime_error("amva_solve: no convergence within sweep cap");

  MvaResult res;
  res.throughput = full.X;
  res.residence = full.R;
  res.queue_length = full.Q;
  res.iterations = full.iterations;
  res.converged = true;
  res.utilization.assign(static_cast<std::size_t>(S), 0.0);
  for (int s = 0; s < S; ++s)
    if (net.stations[static_cast<std::size_t>(s)].type == ClosedNetwork::StationType::Queue)
      for (int c = 0; c < C; ++c)
        res.utilization[static_cast<std::size_t>(s)] +=
            res.throughput[static_cast<std::size_t>(c)] *
            net.stations[static_cast<std::size_t>(s)].demand[static_cast<std::size_t>(c)];
  return res;
}

/// Exact throughput of a single-class cycle: delay (think z) plus one
/// multi-server exponential station (c servers, service time d). Birth-death
/// closed form; used for cache-task token pools seen from the layer above.
struct DelayMultiServerResult {
  double throughput = 0.0;
  double station_response = 0.0;  // wait + service per visit
  double station_queue = 0.0;
  double utilization = 0.0;       // per server
};

inline DelayMultiServerResult delay_multiserver_solve(int population, double think,
                                                      double demand, int servers) {
  if (population < 0 || servers < 1)
    throw std::invalid_argument("delay_multiserver_solve: bad population/servers");
  DelayMultiServerResult out;
  if (population == 0 || demand <= 0.0) {
    out.throughput = (think > 0.0 && demand <= 0.0)
                         ? static_cast<double>(population) / std::max(think, 1e-300)
                         : 0.0;
    return out;
  }
  if (think <= 0.0) think = 1e-12;
  // pi_j ~ prod_{i<j} ((N-i)/z) / (min(i+1,c)/d), j customers at the station
  std::vector<double> logpi(static_cast<std::size_t>(population + 1), 0.0);
  for (int j = 1; j <= population; ++j) {
    double birth = static_cast<double>(population - (j - 1)) / think;
    double death = static_cast<double>(std::min(j, servers)) / demand;
    logpi[static_cast<std::size_t>(j)] =
        logpi[static_cast<std::size_t>(j - 1)] + std::log(birth) - std::log(death);
  }
  double mx = *std::max_element(logpi.begin(), logpi.end());
  double norm = 0.0;
  for (double lp : logpi) norm += std::exp(lp - mx);
  double x = 0.0, q = 0.0, busy = 0.0;
  for (int j = 0; j <= population; ++j) {
    double p = std::exp(logpi[static_cast<std::size_t>(j)] - mx) / norm;
    x += p * static_cast<double>(std::min(j, servers)) / demand;
    q += p * static_cast<double>(j);
    busy += p * static_cast<double>(std::min(j, servers));
  }
  out.throughput = x;
  out.station_queue = q;
  out.station_response = x > 0.0 ? q / x : 0.0;
  out.utilization = busy / static_cast<double>(servers);
  return out;
}

}  // namespace jcsp
