#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "tps/rng.hpp"
#include "tps/targets.hpp"
#include "tps/trace.hpp"

namespace tps {

/// Locally balanced functions, bal(z) = z bal(1/z).
enum class Balance { sqrt, min1, ratio };

std::string_view to_string(Balance bal);
double balance(Balance bal, double z);
/// balance(bal, exp(log_z)) without overflow; -inf maps to 0.
double balance_from_log(Balance bal, double log_z);

/// Up- and down-move rates out of a state, one entry per component.
struct RateVector {
  std::vector<double> up;
  std::vector<double> down;

  double total() const;
};

/// Birth-death rates: up_i = m^-1 f(y+e_i)/f(y), down_i = y_i / m.
/// Throws std::domain_error if y is off the support.
RateVector bd_rates(const Target& target, CountSpan y, double window_length = 1.0);

/// Zanella rates on unit-step neighbours:
///   up_i   = bal(pi(y+e_i)/pi(y)) = bal(f(y+e_i)/f(y) / (y_i+1))
///   down_i = bal(pi(y-e_i)/pi(y)) = bal(y_i f(y-e_i)/f(y)),   0 if y_i = 0.
RateVector zanella_rates(const Target& target, CountSpan y, Balance bal);

/// Which jump-rate family a CTMC sampler uses.
struct CtmcRule {
  enum class Kind { birth_death, zanella };
  Kind kind = Kind::birth_death;
  Balance balance = Balance::sqrt;
  double window_length = 1.0;  // birth-death only

  static CtmcRule birth_death(double m = 1.0) { return {Kind::birth_death, Balance::sqrt, m}; }
  static CtmcRule zanella(Balance bal) { return {Kind::zanella, bal, 1.0}; }
};

/// Fills `out` with the rule's rates at y, reading ratios through `ratios`
/// (which must already be refreshed at y).
void compute_rates(const CtmcRule& rule, CountSpan y, const RatioEvaluator& ratios, RateVector& out);

/// Rates as a function of state, for exact generator solves.
using RateOracle = std::function<RateVector(CountSpan)>;
RateOracle make_rate_oracle(TargetPtr target, CtmcRule rule);

/// Race-of-exponentials simulation of a nearest-neighbour CTMC.
class CtmcSampler {
 public:
  /// Throws std::domain_error if `initial` is off the support.
  CtmcSampler(TargetPtr target, CtmcRule rule, CountVector initial, EvalMode mode = EvalMode::full);
  /// Starts from the zero vector.
  CtmcSampler(TargetPtr target, CtmcRule rule, EvalMode mode = EvalMode::full);

  CtmcSampler(const CtmcSampler& other);
  CtmcSampler& operator=(const CtmcSampler&) = delete;

  JumpEvent propose(Rng& rng);
  void apply(const JumpEvent& event);
  JumpEvent step(Rng& rng) {
    const JumpEvent e = propose(rng);
    apply(e);
    return e;
  }

  template <TraceSink S>
  void run(std::size_t steps, Rng& rng, S& sink) {
    for (std::size_t k = 0; k < steps; ++k) {
      const JumpEvent e = propose(rng);
      sink.push(state_, e);
      apply(e);
    }
  }

  const CountVector& state() const { return state_; }
  const Target& target() const { return *target_; }
  const CtmcRule& rule() const { return rule_; }
  const RateVector& rates() const { return rates_; }

 private:
  TargetPtr target_;
  CtmcRule rule_;
  CountVector state_;
  RatioEvaluator evaluator_;
  RateVector rates_;
};

}  // namespace tps
