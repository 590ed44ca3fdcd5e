#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tps/trace.hpp"

namespace tps {

/// Time-weighted mean and population covariance.
struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Raised when a covariance estimate has no Cholesky factor.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(std::string which)
      : std::runtime_error(which + " covariance estimate is not positive definite"), which_(std::move(which)) {}
  const std::string& which() const { return which_; }

 private:
  std::string which_;
};

struct EssReport {
  std::size_t k = 0;  // samples used, batch_count * batch_size
  double ess = 0.0;
  double cpu_seconds = 0.0;
  double ess_per_second = 0.0;
  double log_det_xi = 0.0;
  double log_det_sigma = 0.0;
  std::size_t batch_size = 0;
  std::size_t batch_count = 0;
  bool wall_clock = false;  // timing fell back to the wall clock
};

/// Time-weighted moments over the whole trace. Throws on an empty trace.
Moments weighted_moments(const WeightedTrace& trace);

/// Batch-means estimate of the asymptotic covariance. Batches are b
/// consecutive jump samples; each batch mean is time-weighted and
///   Sigma = b/(B-1) sum_j (m_j - m)(m_j - m)'
/// with m the time-weighted mean of the B*b samples used. Trailing samples
/// that do not fill a batch are dropped. Throws std::invalid_argument if
/// fewer than 2b samples are available.
Eigen::MatrixXd batch_means_cov(const WeightedTrace& trace, std::size_t b);

/// k (det Xi / det Sigma)^{1/d}, both estimated from the B*b samples used.
/// Throws NotPositiveDefinite if either estimate is singular.
EssReport multivariate_ess(const WeightedTrace& trace, std::size_t b);

/// Streaming form of the above, usable as a trace sink so that long runs
/// need not be stored. Each completed batch is folded in with an exact
/// two-pass update, so results match the stored-trace functions up to
/// round-off.
class BatchMeansAccumulator {
 public:
  BatchMeansAccumulator(std::size_t dim, std::size_t batch_size);

  void push(CountSpan state, double weight);
  void push(CountSpan state, const JumpEvent& event) { push(state, event.holding); }

  std::size_t dimension() const { return dim_; }
  std::size_t batch_size() const { return b_; }
  std::size_t batch_count() const { return batch_weights_.size(); }
  std::size_t samples_used() const { return batch_count() * b_; }

  /// Moments over the samples in completed batches.
  Moments moments() const;
  Eigen::MatrixXd sigma() const;
  EssReport report() const;

  /// Time-weighted means of each completed batch, one column per batch.
  Eigen::MatrixXd batch_means() const;

 private:
  void close_batch();

  std::size_t dim_;
  std::size_t b_;
  std::vector<double> pending_states_;
  std::vector<double> pending_weights_;
  std::vector<double> batch_weights_;
  std::vector<double> batch_means_;   // flat, dim_ per batch
  Eigen::MatrixXd within_scatter_;   // sum over batches of sum_t w_t (s_t - m_j)(s_t - m_j)'
};

/// log det of a symmetric positive definite matrix via Cholesky; throws
/// NotPositiveDefinite(which) otherwise.
double log_det_spd(const Eigen::MatrixXd& m, const std::string& which);

/// Thread CPU-time stopwatch. Each chain runs on one thread, so this is the
/// CPU time of that chain even when sibling chains run concurrently. Falls
/// back to the wall clock if the CPU clock is unavailable.
class CpuTimer {
 public:
  CpuTimer();
  double seconds() const;
  bool wall_clock() const { return wall_; }

 private:
  static double now(bool wall);
  bool wall_;
  double start_;
};

struct TimedLog {
  EventLog log;
  double cpu_seconds = 0.0;
  bool wall_clock = false;
};

/// Runs `steps` steps of `sampler` recording only the event log; the timer
/// covers the simulation loop alone.
template <class Sampler>
TimedLog timed_run(Sampler& sampler, std::size_t steps, Rng& rng, CountVector initial) {
  TimedLog out{EventLog(std::move(initial)), 0.0, false};
  out.log.reserve(steps);
  CpuTimer timer;
  sampler.run(steps, rng, out.log);
  out.cpu_seconds = timer.seconds();
  out.wall_clock = timer.wall_clock();
  return out;
}

}  // namespace tps
