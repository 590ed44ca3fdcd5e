#include "tps/pps.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tps {

namespace {

void require_non_singleton(const Target& target) {
  const CountVector zero(target.dimension(), 0);
  if (!target.in_support(zero)) throw std::invalid_argument("target support does not contain the zero vector");
  // Downward closure: a non-singleton support contains some unit vector.
  for (std::size_t i = 0; i < target.dimension(); ++i)
    if (target.log_ratio_up(zero, i) > -std::numeric_limits<double>::infinity()) return;
  throw std::invalid_argument("target support is a single state");
}

TargetPtr require_target(TargetPtr target) {
  if (!target) throw std::invalid_argument("sampler needs a target");
  return target;
}

}  // namespace

CountVector PointWindow::tally(std::size_t dim) const {
  CountVector counts(dim, 0);
  for (const auto& p : points_) ++counts.at(p.component);
  return counts;
}

PointProcessSampler::PointProcessSampler(TargetPtr target, double window_length, EvalMode mode)
    : target_(require_target(std::move(target))),
      state_{window_length, CountVector(target_->dimension(), 0), PointWindow(window_length)},
      evaluator_(*target_, mode),
      rates_(target_->dimension(), 0.0),
      inv_length_(1.0 / window_length) {
  if (!(window_length > 0.0) || !std::isfinite(window_length))
    throw std::invalid_argument("window length must be positive and finite");
  require_non_singleton(*target_);
  evaluator_.reset(state_.counts);
}

PointProcessSampler::PointProcessSampler(const PointProcessSampler& other)
    : target_(other.target_),
      state_(other.state_),
      evaluator_(*target_, other.evaluator_.mode()),
      rates_(other.rates_),
      inv_length_(other.inv_length_) {
  evaluator_.reset(state_.counts);
}

JumpEvent PointProcessSampler::propose(Rng& rng) {
  const CountVector& s = state_.counts;
  evaluator_.refresh(s);
  double total = 0.0;
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    rates_[i] = inv_length_ * std::exp(evaluator_.up(s, i));
    total += rates_[i];
  }
  assert(!std::isnan(total));

  const double wait = exponential(rng, total);
  if (state_.window.empty()) {
    if (!(total > 0.0)) throw std::logic_error("point process sampler reached an absorbing state");
  } else if (!(state_.now + wait < state_.window.next_expiry())) {
    const WindowPoint& head = state_.window.front();
    return {state_.window.next_expiry() - state_.now, head.component, -1};
  }

  double u = uniform01(rng) * total;
  std::size_t chosen = rates_.size();
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (rates_[i] <= 0.0) continue;
    chosen = i;
    if (u < rates_[i]) break;
    u -= rates_[i];
  }
  return {wait, static_cast<std::uint32_t>(chosen), +1};
}

void PointProcessSampler::apply(const JumpEvent& event) {
  if (event.delta > 0) {
    state_.now += event.holding;
    state_.window.push({state_.now, event.component});
    ++state_.counts[event.component];
  } else {
    const WindowPoint head = state_.window.pop();
    assert(head.component == event.component);
    state_.now = head.time + state_.window.length();
    --state_.counts[head.component];
  }
  evaluator_.moved(event.component, event.delta);
}

bool PointProcessSampler::invariants_hold() const {
  if (state_.window.tally(state_.counts.size()) != state_.counts) return false;
  const double lo = state_.now - state_.window.length();
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& p : state_.window.points()) {
    if (!(p.time > prev) || !(p.time > lo) || p.time > state_.now) return false;
    prev = p.time;
  }
  return target_->in_support(state_.counts);
}

}  // namespace tps
