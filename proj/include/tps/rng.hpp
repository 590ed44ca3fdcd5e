#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tps {

/// Per-chain random stream. Chains never share one.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits, so that streams are
/// identical across standard library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Exp(rate) variate, i.e. mean 1/rate. Strictly positive; a zero rate
/// yields +inf.
inline double exponential(Rng& rng, double rate) {
  if (!(rate > 0.0)) return INFINITY;
  const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;  // in (0, 1)
  return -std::log(u) / rate;
}

/// Standard normal via Box-Muller; only used for building random targets.
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace tps
