#include "tps/ctmc.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tps {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_in_support(const Target& target, CountSpan y) {
  if (!target.in_support(y)) throw std::domain_error("rates requested at a state off the support");
}

TargetPtr require_target(TargetPtr target) {
  if (!target) throw std::invalid_argument("sampler needs a target");
  return target;
}

}  // namespace

std::string_view to_string(Balance bal) {
  switch (bal) {
    case Balance::sqrt: return "sqrt";
    case Balance::min1: return "min";
    case Balance::ratio: return "ratio";
  }
  return "?";
}

double balance(Balance bal, double z) {
  switch (bal) {
    case Balance::sqrt: return std::sqrt(z);
    case Balance::min1: return std::min(1.0, z);
    case Balance::ratio: return z / (1.0 + z);
  }
  return 0.0;
}

double balance_from_log(Balance bal, double log_z) {
  if (log_z == kNegInf) return 0.0;
  switch (bal) {
    case Balance::sqrt: return std::exp(0.5 * log_z);
    case Balance::min1: return std::exp(std::min(0.0, log_z));
    case Balance::ratio:
      // Logistic function, evaluated on the side that cannot overflow.
      if (log_z > 0.0) return 1.0 / (1.0 + std::exp(-log_z));
      return std::exp(log_z) / (1.0 + std::exp(log_z));
  }
  return 0.0;
}

double RateVector::total() const {
  return std::accumulate(up.begin(), up.end(), 0.0) + std::accumulate(down.begin(), down.end(), 0.0);
}

void compute_rates(const CtmcRule& rule, CountSpan y, const RatioEvaluator& ratios, RateVector& out) {
  const std::size_t d = y.size();
  out.up.resize(d);
  out.down.resize(d);
  if (rule.kind == CtmcRule::Kind::birth_death) {
    const double eta = 1.0 / rule.window_length;
    for (std::size_t i = 0; i < d; ++i) {
      out.up[i] = eta * std::exp(ratios.up(y, i));
      out.down[i] = eta * y[i];
    }
    return;
  }
  for (std::size_t i = 0; i < d; ++i) {
    out.up[i] = balance_from_log(rule.balance, ratios.up(y, i) - std::log(y[i] + 1.0));
    out.down[i] = y[i] > 0 ? balance_from_log(rule.balance, std::log(static_cast<double>(y[i])) - ratios.down(y, i))
                           : 0.0;
  }
}

RateVector bd_rates(const Target& target, CountSpan y, double window_length) {
  if (!(window_length > 0.0)) throw std::invalid_argument("window length must be positive");
  require_in_support(target, y);
  RatioEvaluator ratios(target, EvalMode::full);
  ratios.reset(y);
  RateVector out;
  compute_rates(CtmcRule::birth_death(window_length), y, ratios, out);
  return out;
}

RateVector zanella_rates(const Target& target, CountSpan y, Balance bal) {
  require_in_support(target, y);
  RatioEvaluator ratios(target, EvalMode::full);
  ratios.reset(y);
  RateVector out;
  compute_rates(CtmcRule::zanella(bal), y, ratios, out);
  return out;
}

RateOracle make_rate_oracle(TargetPtr target, CtmcRule rule) {
  return [target = require_target(std::move(target)), rule](CountSpan y) {
    RatioEvaluator ratios(*target, EvalMode::full);
    ratios.reset(y);
    RateVector out;
    compute_rates(rule, y, ratios, out);
    return out;
  };
}

CtmcSampler::CtmcSampler(TargetPtr target, CtmcRule rule, CountVector initial, EvalMode mode)
    : target_(require_target(std::move(target))),
      rule_(rule),
      state_(std::move(initial)),
      evaluator_(*target_, mode) {
  if (rule_.kind == CtmcRule::Kind::birth_death && !(rule_.window_length > 0.0))
    throw std::invalid_argument("window length must be positive");
  require_in_support(*target_, state_);
  evaluator_.reset(state_);
}

CtmcSampler::CtmcSampler(TargetPtr target, CtmcRule rule, EvalMode mode)
    : CtmcSampler(target, rule, CountVector(target ? target->dimension() : 0, 0), mode) {}

CtmcSampler::CtmcSampler(const CtmcSampler& other)
    : target_(other.target_),
      rule_(other.rule_),
      state_(other.state_),
      evaluator_(*target_, other.evaluator_.mode()),
      rates_(other.rates_) {
  evaluator_.reset(state_);
}

JumpEvent CtmcSampler::propose(Rng& rng) {
  evaluator_.refresh(state_);
  compute_rates(rule_, state_, evaluator_, rates_);
  const double total = rates_.total();
  assert(!std::isnan(total));
  if (!(total > 0.0)) throw std::logic_error("ctmc sampler reached an absorbing state");

  const double wait = exponential(rng, total);
  double u = uniform01(rng) * total;
  const std::size_t d = state_.size();
  JumpEvent chosen{wait, 0, 0};
  for (std::size_t i = 0; i < d; ++i) {
    if (rates_.up[i] > 0.0) {
      chosen = {wait, static_cast<std::uint32_t>(i), +1};
      if (u < rates_.up[i]) return chosen;
      u -= rates_.up[i];
    }
    if (rates_.down[i] > 0.0) {
      chosen = {wait, static_cast<std::uint32_t>(i), -1};
      if (u < rates_.down[i]) return chosen;
      u -= rates_.down[i];
    }
  }
  return chosen;  // rounding: fall back to the last move with positive rate
}

void CtmcSampler::apply(const JumpEvent& event) {
  state_[event.component] += event.delta;
  evaluator_.moved(event.component, event.delta);
}

}  // namespace tps
