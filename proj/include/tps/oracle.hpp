#pragma once

#include <cstddef>
#include <vector>

#include "tps/ctmc.hpp"
#include "tps/ess.hpp"
#include "tps/targets.hpp"
#include "tps/trace.hpp"

namespace tps {

/// A probability table on a box. `overflow` holds mass that fell outside
/// the box (empirical tables only); box probabilities plus overflow sum to 1.
struct ExactPmf {
  Box box;
  std::vector<double> probs;
  double overflow = 0.0;

  double operator()(CountSpan y) const { return box.contains(y) ? probs[box.index(y)] : 0.0; }
};

inline constexpr std::size_t kMaxEnumerationVolume = 10'000'000;
inline constexpr std::size_t kMaxGeneratorVolume = 10'000;

/// pi(y) proportional to f(y) / prod y_i! over the box, normalized with
/// log-sum-exp. Throws if the box is too large or carries no mass.
ExactPmf enumerate_pmf(const Target& target, const Box& box);

/// Fraction of the mass of a doubled box ({0..2(max_i+1)-1} per component)
/// that lies inside `box`. A truncation heuristic, not a bound.
double captured_mass(const Target& target, const Box& box);

/// Stationary law of the generator restricted to the box (moves that leave
/// the box are dropped). States are those reachable from the zero vector.
/// Throws std::runtime_error if the restricted chain is reducible or the
/// linear system is singular.
ExactPmf ctmc_stationary(const RateOracle& rates, const Box& box);

/// Holding-time occupation measure of a trace on the box.
ExactPmf empirical_pmf(const WeightedTrace& trace, const Box& box);

/// Half the L1 distance, including any overflow mass. Boxes must match.
double tv_distance(const ExactPmf& p, const ExactPmf& q);

/// Builds the time-weighted joint law of (S(t), S(t + lag)) over the
/// piecewise-constant trajectory and returns its total variation distance
/// from its transpose. Zero for a reversible process in equilibrium.
/// Throws if the trace spans no more than `lag` time units.
double two_time_symmetry(const WeightedTrace& trace, double lag, const Box& box);

Moments exact_moments(const ExactPmf& pmf);

}  // namespace tps
