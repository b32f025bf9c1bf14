#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace jcsp {

/// Average relative gain of the proposed response times over a baseline:
/// g = (1/I) sum |R_i(baseline) - R_i(proposed)| / R_i(baseline).
inline double compute_gain(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("compute_gain: no pairs");
  double sum = 0.0;
  for (const auto& [baseline, proposed] : pairs) {
    if (!(baseline > 0.0))
      throw std::invalid_argument("compute_gain: baseline response must be > 0");
    sum += std::abs(baseline - proposed) / baseline;
  }
  return sum / static_cast<double>(pairs.size());
}

/// Mean absolute percentage error of estimated vs reference miss ratios:
/// eps = mean over included pairs of |1 - estimate/reference|. Pairs for
/// unrequested services must already be excluded by the caller.
inline double compute_mape(const std::vector<double>& estimates,
                           const std::vector<double>& references) {
  if (estimates.size() != references.size())
    throw std::invalid_argument("compute_mape: size mismatch");
  if (estimates.empty()) throw std::invalid_argument("compute_mape: no pairs");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!(references[i] > 0.0))
      throw std::invalid_argument("compute_mape: zero reference miss ratio at index " +
                                  std::to_string(i));
    sum += std::abs(1.0 - estimates[i] / references[i]);
  }
  return sum / static_cast<double>(estimates.size());
}

}  // namespace jcsp
