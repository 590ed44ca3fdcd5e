#pragma once

// Generators and reference statistics shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "tps/oracle.hpp"
#include "tps/rng.hpp"
#include "tps/targets.hpp"

namespace tps::testing {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Random log f on the box, N(0, spread^2) per state. With probability
/// `cut` a state is chosen as a hole and it and everything above it leave
/// the support; zero and its unit neighbours always stay, so the support is
/// downward closed and non-singleton.
inline TableTarget random_table(Rng& rng, const std::vector<Count>& maxima, double spread = 1.0, double cut = 0.0) {
  Box box(maxima);
  std::vector<double> values(box.volume());
  std::vector<CountVector> holes;
  CountVector y(box.dimension(), 0);
  do {
    values[box.index(y)] = spread * standard_normal(rng);
    Count sum = 0;
    for (auto c : y) sum += c;
    if (sum > 1 && uniform01(rng) < cut) holes.push_back(y);
  } while (box.next(y));
  for (const auto& h : holes) {
    CountVector z(box.dimension(), 0);
    do {
      bool above = true;
      for (std::size_t k = 0; k < z.size(); ++k) above = above && z[k] >= h[k];
      if (above) values[box.index(z)] = kNegInf;
    } while (box.next(z));
  }
  return TableTarget(std::move(box), std::move(values));
}

inline TargetPtr shared_table(Rng& rng, const std::vector<Count>& maxima, double spread = 1.0, double cut = 0.0) {
  return std::make_shared<const TableTarget>(random_table(rng, maxima, spread, cut));
}

/// Asymptotic Kolmogorov p-value with Stephens' small-sample correction.
inline double ks_pvalue(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double dmax = 0.0;
  for (std::size_t k = 0; k < sample.size(); ++k) {
    const double f = cdf(sample[k]);
    dmax = std::max({dmax, f - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - f});
  }
  const double root = std::sqrt(n);
  const double lambda = (root + 0.12 + 0.11 / root) * dmax;
  if (lambda < 0.2) return 1.0;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    p += (j % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

inline double log_factorial_sum(CountSpan y) {
  double s = 0.0;
  for (auto c : y) s += std::lgamma(static_cast<double>(c) + 1.0);
  return s;
}

/// Mean and batch-means standard error of one component over a trace.
struct ScalarEstimate {
  double mean;
  double std_error;
};

inline ScalarEstimate time_average(const WeightedTrace& trace, std::size_t component, std::size_t batch) {
  const std::size_t batches = trace.size() / batch;
  std::vector<double> means(batches);
  double total_w = 0.0, total = 0.0;
  for (std::size_t j = 0; j < batches; ++j) {
    double w = 0.0, s = 0.0;
    for (std::size_t k = j * batch; k < (j + 1) * batch; ++k) {
      w += trace.weight(k);
      s += trace.weight(k) * trace.sample(k)[component];
    }
    means[j] = s / w;
    total_w += w;
    total += s;
  }
  const double mean = total / total_w;
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  const double var_of_mean = ss / static_cast<double>(batches - 1) / static_cast<double>(batches);
  return {mean, std::sqrt(var_of_mean)};
}

}  // namespace tps::testing
