#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace jcsp {

/// List-based cache under random replacement. Lists 1..h form a tree with
/// parent map p(l); list 0 is the virtual "not cached" list holding the
/// n - sum(m_l) uncached items. Requests arrive as Poisson streams
/// v = 1..u with per-item, per-list rates lambda_vk(l) and access
/// probabilities c_vk(l, j) of moving item k from list l to list j on a hit.
struct ListCacheSpec {
  int items = 0;                   // n
  std::vector<int> capacities;     // m_l for l = 1..h
  std::vector<int> parent;         // parent[l-1] = p(l), must chain to 0

  // rates[v][k][l] for l = 0..h
  std::vector<std::vector<std::vector<double>>> rates;
  // access[v][k][l][j] = c_vk(l, j), l,j = 0..h
  std::vector<std::vector<std::vector<std::vector<double>>>> access;

  int lists() const { return static_cast<int>(capacities.size()); }
  int streams() const { return static_cast<int>(rates.size()); }
  int total_capacity() const {
    return std::accumulate(capacities.begin(), capacities.end(), 0);
  }

  /// Single-list RR cache with one stream: item k arrives at rate
  /// item_rates[k] and a miss always inserts (c(0,1) = 1, c(0,0) = 0).
  static ListCacheSpec single_list(std::vector<double> item_rates, int capacity) {
    ListCacheSpec s;
    s.items = static_cast<int>(item_rates.size());
    s.capacities = {capacity};
    s.parent = {0};
    s.rates.resize(1);
    s.rates[0].resize(static_cast<std::size_t>(s.items));
    s.access.resize(1);
    s.access[0].resize(static_cast<std::size_t>(s.items));
    for (int k = 0; k < s.items; ++k) {
      s.rates[0][static_cast<std::size_t>(k)] = {item_rates[static_cast<std::size_t>(k)],
                                                 item_rates[static_cast<std::size_t>(k)]};
      s.access[0][static_cast<std::size_t>(k)] = {{0.0, 1.0}, {0.0, 1.0}};
    }
    s.check();
    return s;
  }

  void check() const {
    if (items <= 0) throw std::invalid_argument("cache: item count must be positive");
    if (capacities.empty()) throw std::invalid_argument("cache: at least one list required");
    if (total_capacity() > items)
      throw std::invalid_argument("cache: total capacity exceeds item count");
    if (parent.size() != capacities.size())
      throw std::invalid_argument("cache: parent map size mismatch");
    int h = lists();
    for (int l = 1; l <= h; ++l) {
      if (capacities[static_cast<std::size_t>(l - 1)] <= 0)
        throw std::invalid_argument("cache: list capacity must be positive");
      // parent chains must reach list 0 without cycles
      int cur = l, hops = 0;
      while (cur != 0) {
        if (cur < 0 || cur > h || hops++ > h)
          throw std::invalid_argument("cache: malformed parent topology at list " +
                                      std::to_string(l));
        cur = parent[static_cast<std::size_t>(cur - 1)];
      }
    }
    for (const auto& stream : rates) {
      if (static_cast<int>(stream.size()) != items)
        throw std::invalid_argument("cache: rate tensor item dimension mismatch");
      for (const auto& per_item : stream)
        if (static_cast<int>(per_item.size()) != h + 1)
          throw std::invalid_argument("cache: rate tensor list dimension mismatch");
    }
  }
};

/// Access factors gamma[k][j], j = 0..h, with gamma[k][0] = 1 and
/// gamma_kj = gamma_k,p(j) * sum_v lambda_vk(p(j)) c_vk(p(j), j).
using AccessFactorMatrix = std::vector<std::vector<double>>;

inline AccessFactorMatrix access_factors(const ListCacheSpec& spec) {
  spec.check();
  const int n = spec.items;
  const int h = spec.lists();
  AccessFactorMatrix gamma(static_cast<std::size_t>(n),
                           std::vector<double>(static_cast<std::size_t>(h + 1), 0.0));
  // Order lists so parents are computed first.
  std::vector<int> order;
  std::vector<char> done(static_cast<std::size_t>(h + 1), 0);
  done[0] = 1;
  while (static_cast<int>(order.size()) < h) {
    bool progressed = false;
    for (int l = 1; l <= h; ++l) {
      if (done[static_cast<std::size_t>(l)]) continue;
      if (done[static_cast<std::size_t>(spec.parent[static_cast<std::size_t>(l - 1)])]) {
        order.push_back(l);
        done[static_cast<std::size_t>(l)] = 1;
        progressed = true;
      }
    }
    if (!progressed) throw std::invalid_argument("cache: malformed parent topology");
  }
  for (int k = 0; k < n; ++k) gamma[static_cast<std::size_t>(k)][0] = 1.0;
  for (int j : order) {
    int p = spec.parent[static_cast<std::size_t>(j - 1)];
    for (int k = 0; k < n; ++k) {
      double flow = 0.0;
      for (int v = 0; v < spec.streams(); ++v) {
        double lam = spec.rates[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)]
                               [static_cast<std::size_t>(p)];
        double c = spec.access[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)]
                              [static_cast<std::size_t>(p)][static_cast<std::size_t>(j)];
        flow += lam * c;
      }
      gamma[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] =
          gamma[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)] * flow;
    }
  }
  return gamma;
}

namespace detail {

/// Dense DP table over per-list occupancy vectors (mixed-radix index with
/// radix m_l + 1 per list). Entry [c] is the sum over item subsets filling
/// occupancy c of the product of their access factors (set convention: the
/// in-list ordering factor common to E and E_k is dropped, exact for all
/// marginal ratios).
struct OccupancyDp {
  std::vector<int> caps;
  std::vector<std::size_t> stride;
  std::size_t size = 1;

  explicit OccupancyDp(const std::vector<int>& capacities) : caps(capacities) {
    stride.resize(caps.size());
    for (std::size_t l = 0; l < caps.size(); ++l) {
      stride[l] = size;
      size *= static_cast<std::size_t>(caps[l] + 1);
    }
  }
  std::size_t full_index() const {
    std::size_t idx = 0;
    for (std::size_t l = 0; l < caps.size(); ++l)
      idx += stride[l] * static_cast<std::size_t>(caps[l]);
    return idx;
  }
};

inline std::vector<double> occupancy_table(const OccupancyDp& dp,
                                           const AccessFactorMatrix& gamma, int skip_item) {
  const int h = static_cast<int>(dp.caps.size());
  std::vector<double> cur(dp.size, 0.0), next(dp.size, 0.0);
  cur[0] = 1.0;
  const int n = static_cast<int>(gamma.size());
  for (int k = 0; k < n; ++k) {
    if (k == skip_item) continue;
    next = cur;
    // add item k to some list j (or leave it uncached: contribution already in cur)
    for (std::size_t idx = 0; idx < dp.size; ++idx) {
      double base = cur[idx];
      if (base == 0.0) continue;
      std::size_t rem = idx;
      for (int j = 0; j < h; ++j) {
        int occ = static_cast<int>(rem / dp.stride[static_cast<std::size_t>(j)] %
                                   static_cast<std::size_t>(dp.caps[static_cast<std::size_t>(j)] + 1));
        if (occ < dp.caps[static_cast<std::size_t>(j)]) {
          double g = gamma[static_cast<std::size_t>(k)][static_cast<std::size_t>(j + 1)];
          if (g != 0.0)
            next[idx + dp.stride[static_cast<std::size_t>(j)]] += base * g;
        }
      }
      (void)rem;
    }
    cur.swap(next);
  }
  return cur;
}

}  // namespace detail

/// Normalizing constants: E(m) plus all leave-one-out E_k(m) and the
/// shifted E_k(m - 1_l) needed by the marginal formula. gamma values are
/// rescaled by their geometric mean before the recurrence so the symmetric
/// sums stay in double range; the scale factor cancels in every ratio used.
struct NormalizingConstants {
  double full = 0.0;                                 // E(m), scaled
  std::vector<double> leave_one_out;                 // E_k(m), scaled
  std::vector<std::vector<double>> leave_one_out_shift;  // [k][l-1] = E_k(m - 1_l), scaled
  double scale = 1.0;                                // per-gamma multiplier that was applied
};

inline NormalizingConstants normalizing_constant(const AccessFactorMatrix& gamma,
                                                 const std::vector<int>& capacities) {
  const int n = static_cast<int>(gamma.size());
  const int h = static_cast<int>(capacities.size());
  int total = std::accumulate(capacities.begin(), capacities.end(), 0);
  if (total > n) throw std::invalid_argument("normalizing_constant: capacity exceeds item count");

  // Log-scale normalization by the geometric mean of positive access factors.
  double log_sum = 0.0;
  int log_cnt = 0;
  for (const auto& row : gamma)
    for (int j = 1; j <= h; ++j) {
      double g = row[static_cast<std::size_t>(j)];
      if (g > 0.0) {
        log_sum += std::log(g);
        ++log_cnt;
      }
    }
  double scale = log_cnt > 0 ? std::exp(-log_sum / log_cnt) : 1.0;
  AccessFactorMatrix scaled = gamma;
  for (auto& row : scaled)
    for (int j = 1; j <= h; ++j) row[static_cast<std::size_t>(j)] *= scale;

  detail::OccupancyDp dp(capacities);
  NormalizingConstants out;
  out.scale = scale;
  std::vector<double> full_table = detail::occupancy_table(dp, scaled, -1);
  out.full = full_table[dp.full_index()];
  if (!std::isfinite(out.full) || out.full <= 0.0)
    throw std::runtime_error("normalizing_constant: numerically degenerate E(m)");

  out.leave_one_out.resize(static_cast<std::size_t>(n));
  out.leave_one_out_shift.assign(static_cast<std::size_t>(n),
                                 std::vector<double>(static_cast<std::size_t>(h), 0.0));
  for (int k = 0; k < n; ++k) {
    // Rebuild the table with item k excluded. Dividing the full table by
    // item k's factor is cheaper but its subtraction cancels catastrophically
    // under skewed access factors; the direct recurrence is all-positive.
    std::vector<double> tk = detail::occupancy_table(dp, scaled, k);
    out.leave_one_out[static_cast<std::size_t>(k)] = tk[dp.full_index()];
    for (int l = 0; l < h; ++l) {
      if (capacities[static_cast<std::size_t>(l)] >= 1)
        out.leave_one_out_shift[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] =
            tk[dp.full_index() - dp.stride[static_cast<std::size_t>(l)]];
    }
    if (!std::isfinite(out.leave_one_out[static_cast<std::size_t>(k)]))
      throw std::runtime_error("normalizing_constant: numerically degenerate E_k(m)");
  }
  return out;
}

/// Solved stationary cache quantities per Eqs. (4)-(6) conventions.
struct CacheMarginals {
  // pi[k][l], l = 0..h; pi[k][0] is the miss ratio of item k
  std::vector<std::vector<double>> pi;
  // miss_rate[v][k] = lambda_vk(0) pi_k0 (1 - c_vk(0,0))
  std::vector<std::vector<double>> miss_rate;
  double total_miss_rate = 0.0;
  double normalizing_full = 0.0;  // scaled E(m); ratios only are meaningful

  std::vector<double> miss_ratios() const {
    std::vector<double> out(pi.size());
    for (std::size_t k = 0; k < pi.size(); ++k) out[k] = pi[k][0];
    return out;
  }
};

inline CacheMarginals cache_marginals(const ListCacheSpec& spec) {
  spec.check();
  const int n = spec.items;
  const int h = spec.lists();
  AccessFactorMatrix gamma = access_factors(spec);
  NormalizingConstants nc = normalizing_constant(gamma, spec.capacities);

  CacheMarginals out;
  out.normalizing_full = nc.full;
  out.pi.assign(static_cast<std::size_t>(n),
                std::vector<double>(static_cast<std::size_t>(h + 1), 0.0));
  for (int k = 0; k < n; ++k) {
    double pk0 = nc.leave_one_out[static_cast<std::size_t>(k)] / nc.full;
    out.pi[static_cast<std::size_t>(k)][0] = pk0;
    for (int l = 1; l <= h; ++l) {
      // Set convention: pi_kl = gamma_kl E_k(m - 1_l) / E(m); the scale
      // factor applied inside normalizing_constant makes the degrees match.
      double g = gamma[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] * nc.scale;
      out.pi[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] =
          g * nc.leave_one_out_shift[static_cast<std::size_t>(k)][static_cast<std::size_t>(l - 1)] /
          nc.full;
    }
  }
  out.miss_rate.assign(static_cast<std::size_t>(spec.streams()),
                       std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int v = 0; v < spec.streams(); ++v)
    for (int k = 0; k < n; ++k) {
      double lam0 = spec.rates[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)][0];
      double c00 = spec.access[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)][0][0];
      double mr = lam0 * out.pi[static_cast<std::size_t>(k)][0] * (1.0 - c00);
      out.miss_rate[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] = mr;
      out.total_miss_rate += mr;
    }
  return out;
}

/// Exact marginals by direct enumeration of all admissible item-to-list
/// assignments under the product form. Test oracle; guarded to small n.
inline CacheMarginals brute_force_cache_oracle(const ListCacheSpec& spec) {
  spec.check();
  const int n = spec.items;
  const int h = spec.lists();
  if (n > 12) throw std::invalid_argument("cache oracle: n > 12 exceeds the enumeration guard");
  // state count = multinomial(n; m_1, ..., m_h, rest) <= (h+1)^n <= 1e6 guard
  double states = std::pow(static_cast<double>(h + 1), n);
  if (states > 1e6) throw std::invalid_argument("cache oracle: state space exceeds guard");

  AccessFactorMatrix gamma = access_factors(spec);
  std::vector<std::vector<double>> mass(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(h + 1), 0.0));
  double total = 0.0;
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  std::vector<int> used(static_cast<std::size_t>(h + 1), 0);

  auto recurse = [&](auto&& self, int k, double weight) -> void {
    if (k == n) {
      for (int l = 1; l <= h; ++l)
        if (used[static_cast<std::size_t>(l)] != spec.capacities[static_cast<std::size_t>(l - 1)])
          return;
      total += weight;
      for (int i = 0; i < n; ++i)
        mass[static_cast<std::size_t>(i)][static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] +=
            weight;
      return;
    }
    for (int l = 0; l <= h; ++l) {
      if (l >= 1 && used[static_cast<std::size_t>(l)] >= spec.capacities[static_cast<std::size_t>(l - 1)])
        continue;
      double g = gamma[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
      if (g == 0.0 && l >= 1) continue;
      assign[static_cast<std::size_t>(k)] = l;
      ++used[static_cast<std::size_t>(l)];
      self(self, k + 1, weight * g);
      --used[static_cast<std::size_t>(l)];
    }
  };
  recurse(recurse, 0, 1.0);
  if (!(total > 0.0)) throw std::runtime_error("cache oracle: empty admissible state space");

  CacheMarginals out;
  out.normalizing_full = total;
  out.pi.assign(static_cast<std::size_t>(n),
                std::vector<double>(static_cast<std::size_t>(h + 1), 0.0));
  for (int k = 0; k < n; ++k)
    for (int l = 0; l <= h; ++l)
      out.pi[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] =
          mass[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] / total;
  out.miss_rate.assign(static_cast<std::size_t>(spec.streams()),
                       std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int v = 0; v < spec.streams(); ++v)
    for (int k = 0; k < n; ++k) {
      double lam0 = spec.rates[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)][0];
      double c00 = spec.access[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)][0][0];
      double mr = lam0 * out.pi[static_cast<std::size_t>(k)][0] * (1.0 - c00);
      out.miss_rate[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] = mr;
      out.total_miss_rate += mr;
    }
  return out;
}

/// Request-weighted hit/miss probabilities of an isolated cache fed by the
/// given per-stream Poisson rates (already folded into the spec).
struct HitMiss {
  double p_hit = 0.0;
  double p_miss = 1.0;
  std::vector<double> per_stream_hit;  // request-weighted per stream
};

inline HitMiss isolated_cache_hit_miss(const ListCacheSpec& spec) {
  spec.check();
  double offered = 0.0;
  for (const auto& stream : spec.rates)
    for (const auto& per_item : stream) offered += per_item[0];
  if (!(offered > 0.0))
    throw std::invalid_argument("isolated_cache_hit_miss: zero total arrival rate");
  CacheMarginals m = cache_marginals(spec);
  HitMiss out;
  out.per_stream_hit.resize(static_cast<std::size_t>(spec.streams()), 0.0);
  double lam_total = 0.0, hit_total = 0.0;
  for (int v = 0; v < spec.streams(); ++v) {
    double lam_v = 0.0, hit_v = 0.0;
    for (int k = 0; k < spec.items; ++k) {
      double lam = spec.rates[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)][0];
      lam_v += lam;
      hit_v += lam * (1.0 - m.pi[static_cast<std::size_t>(k)][0]);
    }
    out.per_stream_hit[static_cast<std::size_t>(v)] = lam_v > 0.0 ? hit_v / lam_v : 0.0;
    lam_total += lam_v;
    hit_total += hit_v;
  }
  if (!(lam_total > 0.0))
    throw std::invalid_argument("isolated_cache_hit_miss: zero total arrival rate");
  out.p_hit = hit_total / lam_total;
  out.p_miss = 1.0 - out.p_hit;
  return out;
}

}  // namespace jcsp
