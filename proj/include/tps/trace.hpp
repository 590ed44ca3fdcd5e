#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tps/targets.hpp"

namespace tps {

/// One jump of a sampler. `holding` is the time spent in the pre-jump state;
/// `delta` is +1 (arrival/birth) or -1 (departure/death) on `component`.
struct JumpEvent {
  double holding = 0.0;
  std::uint32_t component = 0;
  std::int32_t delta = 0;

  bool operator==(const JumpEvent&) const = default;
};

/// Receives (pre-jump state, event) pairs from a running sampler.
template <class S>
concept TraceSink = requires(S& sink, CountSpan state, const JumpEvent& event) {
  sink.push(state, event);
};

struct NullSink {
  void push(CountSpan, const JumpEvent&) {}
};

/// Embedded jump chain with holding-time weights, stored flat.
class WeightedTrace {
 public:
  explicit WeightedTrace(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("trace dimension must be positive");
  }

  void push(CountSpan state, double weight) {
    if (state.size() != dim_) throw std::invalid_argument("trace sample has wrong dimension");
    if (!(weight > 0.0)) throw std::invalid_argument("trace weights must be positive");
    samples_.insert(samples_.end(), state.begin(), state.end());
    weights_.push_back(weight);
  }
  void push(CountSpan state, const JumpEvent& event) { push(state, event.holding); }

  void reserve(std::size_t n) {
    samples_.reserve(n * dim_);
    weights_.reserve(n);
  }

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }
  CountSpan sample(std::size_t k) const { return {samples_.data() + k * dim_, dim_}; }
  double weight(std::size_t k) const { return weights_[k]; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Count>& flat_samples() const { return samples_; }

 private:
  std::size_t dim_;
  std::vector<Count> samples_;
  std::vector<double> weights_;
};

/// Compact record of a run: the starting state plus every jump. Replaying
/// it reproduces the (state, event) stream exactly.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(CountVector initial) : initial_(std::move(initial)) {}

  void push(CountSpan, const JumpEvent& event) { events_.push_back(event); }
  void reserve(std::size_t n) { events_.reserve(n); }

  const CountVector& initial() const { return initial_; }
  const std::vector<JumpEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }

  template <TraceSink S>
  void replay(S& sink) const {
    CountVector state = initial_;
    for (const auto& e : events_) {
      sink.push(state, e);
      state[e.component] += e.delta;
    }
  }

 private:
  CountVector initial_;
  std::vector<JumpEvent> events_;
};

}  // namespace tps
