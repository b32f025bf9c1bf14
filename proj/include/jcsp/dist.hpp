#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace jcsp {

enum class DistKind { Exponential, Erlang, HyperExponential };

inline std::string to_string(DistKind k) {
  switch (k) {
    case DistKind::Exponential: return "exponential";
    case DistKind::Erlang: return "erlang";
    case DistKind::HyperExponential: return "hyper-exponential";
  }
  return "?";
}

/// Two-moment phase-type service description: mean in seconds, squared
/// coefficient of variation. scv = 1 exponential, < 1 Erlang, > 1
/// hyper-exponential (balanced-means two-phase fit).
struct PhaseType {
  DistKind kind = DistKind::Exponential;
  double mean = 1.0;
  double scv = 1.0;

  static PhaseType exponential(double mean) { return {DistKind::Exponential, mean, 1.0}; }
  static PhaseType erlang(double mean, int phases) {
    return {DistKind::Erlang, mean, 1.0 / static_cast<double>(phases)};
  }
  // Default scv = 4 when "hyper-exponential" is requested without parameters.
  static PhaseType hyperexp(double mean, double scv = 4.0) {
    return {DistKind::HyperExponential, mean, scv};
  }

  void check() const {
    if (!(mean > 0.0)) throw std::invalid_argument("phase-type mean must be > 0");
    switch (kind) {
      case DistKind::Exponential:
        if (std::abs(scv - 1.0) > 1e-9) throw std::invalid_argument("exponential requires scv = 1");
        break;
      case DistKind::Erlang:
        if (!(scv < 1.0) || !(scv > 0.0)) throw std::invalid_argument("erlang requires 0 < scv < 1");
        break;
      case DistKind::HyperExponential:
        if (!(scv > 1.0)) throw std::invalid_argument("hyper-exponential requires scv > 1");
        break;
    }
  }

  template <class Rng>
  double sample(Rng& rng) const {
    switch (kind) {
      case DistKind::Exponential:
        return std::exponential_distribution<double>(1.0 / mean)(rng);
      case DistKind::Erlang: {
        int k = std::max(1, static_cast<int>(std::lround(1.0 / scv)));
        double rate = static_cast<double>(k) / mean;
        double sum = 0.0;
        std::exponential_distribution<double> exp1(rate);
        for (int i = 0; i < k; ++i) sum += exp1(rng);
        return sum;
      }
      case DistKind::HyperExponential: {
        // Balanced-means two-phase construction.
        double p = 0.5 * (1.0 + std::sqrt((scv - 1.0) / (scv + 1.0)));
        double r1 = 2.0 * p / mean;
        double r2 = 2.0 * (1.0 - p) / mean;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double rate = (u(rng) < p) ? r1 : r2;
        return std::exponential_distribution<double>(rate)(rng);
      }
    }
    return 0.0;
  }
};

/// Zipf popularity over n ranks: weight of rank i proportional to 1/i^eta.
inline std::vector<double> zipf_weights(int n, double eta) {
  if (n <= 0) throw std::invalid_argument("zipf: n must be positive");
  if (eta < 0.0) throw std::invalid_argument("zipf: eta must be >= 0");
  std::vector<double> w(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 1.0 / std::pow(static_cast<double>(i + 1), eta);
    sum += w[static_cast<std::size_t>(i)];
  }
  for (auto& x : w) x /= sum;
  return w;
}

inline std::vector<double> normalized_weights(std::vector<double> w) {
  double sum = 0.0;
  for (double x : w) {
    if (x < 0.0) throw std::invalid_argument("popularity weights must be nonnegative");
    sum += x;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("popularity weights must not all be zero");
  for (auto& x : w) x /= sum;
  return w;
}

}  // namespace jcsp
