#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "tps/rng.hpp"
#include "tps/targets.hpp"
#include "tps/trace.hpp"

namespace tps {

struct WindowPoint {
  double time;
  std::uint32_t component;
};

/// Points currently inside the sliding window (t - m, t], oldest first.
/// A single global FIFO: expiry order is arrival order.
class PointWindow {
 public:
  explicit PointWindow(double length) : length_(length) {}

  double length() const { return length_; }
  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }
  const WindowPoint& front() const { return points_.front(); }
  /// Time at which the oldest point leaves the window.
  double next_expiry() const { return points_.front().time + length_; }

  void push(WindowPoint p) { points_.push_back(p); }
  WindowPoint pop() {
    WindowPoint p = points_.front();
    points_.pop_front();
    return p;
  }

  const std::deque<WindowPoint>& points() const { return points_; }
  CountVector tally(std::size_t dim) const;

 private:
  double length_;
  std::deque<WindowPoint> points_;
};

struct PpsState {
  double now;
  CountVector counts;
  PointWindow window;
};

/// Point-process sampler with constant base intensity 1/m: each component
/// fires at rate m^-1 f(s + e_i)/f(s) and every point leaves the window
/// exactly m time units after it arrived. The window counts s(t) converge
/// in law to the target.
class PointProcessSampler {
 public:
  /// Starts at time m with an empty window and zero counts. Throws
  /// std::invalid_argument if m is not positive or the support is a
  /// single state.
  explicit PointProcessSampler(TargetPtr target, double window_length = 1.0, EvalMode mode = EvalMode::full);

  PointProcessSampler(const PointProcessSampler& other);
  PointProcessSampler& operator=(const PointProcessSampler&) = delete;

  /// Draws the next event without changing the state. An arrival wins only
  /// if it strictly precedes the next expiry.
  JumpEvent propose(Rng& rng);
  void apply(const JumpEvent& event);
  JumpEvent step(Rng& rng) {
    const JumpEvent e = propose(rng);
    apply(e);
    return e;
  }

  /// Runs `steps` events, handing each pre-jump state and event to the sink.
  template <TraceSink S>
  void run(std::size_t steps, Rng& rng, S& sink) {
    for (std::size_t k = 0; k < steps; ++k) {
      const JumpEvent e = propose(rng);
      sink.push(state_.counts, e);
      apply(e);
    }
  }

  const PpsState& state() const { return state_; }
  const Target& target() const { return *target_; }
  /// Conditional intensities at the current state, as used by the last propose().
  const std::vector<double>& intensities() const { return rates_; }

  /// Window/count consistency and ordering. Cheap enough for tests only.
  bool invariants_hold() const;

 private:
  TargetPtr target_;
  PpsState state_;
  RatioEvaluator evaluator_;
  std::vector<double> rates_;
  double inv_length_;
};

}  // namespace tps
