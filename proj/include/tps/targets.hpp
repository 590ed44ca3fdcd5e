#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tps/rng.hpp"

namespace tps {

using Count = std::int32_t;
/// Event counts per component. Entries are non-negative.
using CountVector = std::vector<Count>;
using CountSpan = std::span<const Count>;

/// How samplers obtain ratios f(y+e_i)/f(y).
///   full:        every step recomputes the target from scratch (W y for
///                quadratic targets), so cost matches a naive implementation.
///   incremental: a cached field W y is shifted by one column per jump.
enum class EvalMode { full, incremental };

std::string_view to_string(EvalMode mode);
EvalMode parse_eval_mode(std::string_view text);

/// Axis-aligned box {0..max_0} x ... x {0..max_{d-1}} with row-major
/// linearization (last component fastest).
class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Count> maxima);

  std::size_t dimension() const { return maxima_.size(); }
  const std::vector<Count>& maxima() const { return maxima_; }
  std::size_t volume() const { return volume_; }
  std::size_t stride(std::size_t component) const { return strides_[component]; }
  bool contains(CountSpan y) const;
  std::size_t index(CountSpan y) const;
  CountVector state(std::size_t index) const;
  /// Advances y to the next state in index order; false after the last one.
  bool next(CountVector& y) const;

  bool operator==(const Box&) const = default;

 private:
  std::vector<Count> maxima_;
  std::vector<std::size_t> strides_;
  std::size_t volume_ = 0;
};

/// Unnormalized target f on a downward-closed support in Z^d_{>=0}. The mass
/// function is f(y)/Z * prod 1/y_i!. Everything is in log space; log f is
/// -inf off the support.
///
/// Samplers evaluate ratios through the unchecked local protocol: targets
/// whose ratios depend on y only via y_i and a field h = W y report
/// field_size() == d, the rest report 0 and ignore h.
class Target {
 public:
  virtual ~Target() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::string_view family() const = 0;

  /// Checked log f(y). Throws std::invalid_argument on dimension mismatch or
  /// negative entries.
  double log_f(CountSpan y) const;

  /// Checked log f(y+e_i) - log f(y). Throws std::domain_error if y is off
  /// the support. In full mode this is two independent log_f calls.
  double log_ratio_up(CountSpan y, std::size_t i, EvalMode mode = EvalMode::full) const;

  bool in_support(CountSpan y) const;

  /// Per-component upper bound of the support, or empty if unbounded.
  virtual std::vector<Count> support_bound() const { return {}; }

  virtual std::size_t field_size() const { return 0; }
  virtual void compute_field(CountSpan y, std::span<double> h) const;
  virtual void shift_field(std::span<double> h, std::size_t i, int delta) const;

  /// log f(y+e_i) - log f(y), given the field at y. Unchecked.
  virtual double local_up(CountSpan y, std::size_t i, std::span<const double> h) const = 0;
  /// log f(y) - log f(y-e_i), given the field at y. Requires y_i >= 1. Unchecked.
  virtual double local_down(CountSpan y, std::size_t i, std::span<const double> h) const = 0;

 protected:
  virtual double unchecked_log_f(CountSpan y) const = 0;
  void check_state(CountSpan y) const;
};

using TargetPtr = std::shared_ptr<const Target>;

/// Independent product of Poisson(rate_i) laws: f(y) = prod rate_i^{y_i}.
class PoissonTarget final : public Target {
 public:
  explicit PoissonTarget(std::vector<double> rates);
  PoissonTarget(std::size_t dim, double rate);

  std::size_t dimension() const override { return log_rates_.size(); }
  std::string_view family() const override { return "poisson"; }
  double local_up(CountSpan y, std::size_t i, std::span<const double> h) const override;
  double local_down(CountSpan y, std::size_t i, std::span<const double> h) const override;

 protected:
  double unchecked_log_f(CountSpan y) const override;

 private:
  std::vector<double> log_rates_;
};

/// Row sums of a symmetric zero-diagonal matrix. Throws std::invalid_argument
/// otherwise.
Eigen::VectorXd sk_bias(const Eigen::MatrixXd& weights);

/// Sherrington-Kirkpatrick model mapped onto {0,1}^d:
/// f(y) = exp(beta [y'Wy - b'y]) with b = sk_bias(W).
class SKTarget final : public Target {
 public:
  SKTarget(double beta, Eigen::MatrixXd weights);

  std::size_t dimension() const override { return static_cast<std::size_t>(weights_.rows()); }
  std::string_view family() const override { return "sk"; }
  std::vector<Count> support_bound() const override;
  std::size_t field_size() const override { return dimension(); }
  void compute_field(CountSpan y, std::span<double> h) const override;
  void shift_field(std::span<double> h, std::size_t i, int delta) const override;
  double local_up(CountSpan y, std::size_t i, std::span<const double> h) const override;
  double local_down(CountSpan y, std::size_t i, std::span<const double> h) const override;

  double beta() const { return beta_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }

 protected:
  double unchecked_log_f(CountSpan y) const override;

 private:
  double beta_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
};

/// Count-valued Boltzmann machine with a refractory penalty:
/// log f(y) = y'Wy/2 + (b - diag(W)/2)'y - sum_i exp(a1 y_i + a0) / (exp(a1) - 1).
class NeuralTarget final : public Target {
 public:
  NeuralTarget(Eigen::MatrixXd weights, Eigen::VectorXd bias, double a0, double a1);

  std::size_t dimension() const override { return static_cast<std::size_t>(weights_.rows()); }
  std::string_view family() const override { return "neural"; }
  std::size_t field_size() const override { return dimension(); }
  void compute_field(CountSpan y, std::span<double> h) const override;
  void shift_field(std::span<double> h, std::size_t i, int delta) const override;
  double local_up(CountSpan y, std::size_t i, std::span<const double> h) const override;
  double local_down(CountSpan y, std::size_t i, std::span<const double> h) const override;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  double a0() const { return a0_; }
  double a1() const { return a1_; }

 protected:
  double unchecked_log_f(CountSpan y) const override;

 private:
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
  double a0_;
  double a1_;
  double refractory_scale_;  // 1 / (exp(a1) - 1)
};

/// Tabulated log f on a box; -inf marks states outside the support. The
/// constructor rejects tables whose support is not downward closed.
class TableTarget final : public Target {
 public:
  TableTarget(Box box, std::vector<double> log_f_values);

  /// Parses lines of `c_1 c_2 ... c_d log_f` (commas allowed between counts,
  /// `#` starts a comment). Unlisted states in the bounding box are -inf.
  static TableTarget from_stream(std::istream& in);
  static TableTarget from_file(const std::filesystem::path& path);

  std::size_t dimension() const override { return box_.dimension(); }
  std::string_view family() const override { return "table"; }
  std::vector<Count> support_bound() const override { return box_.maxima(); }
  double local_up(CountSpan y, std::size_t i, std::span<const double> h) const override;
  double local_down(CountSpan y, std::size_t i, std::span<const double> h) const override;

  const Box& box() const { return box_; }
  const std::vector<double>& values() const { return values_; }

 protected:
  double unchecked_log_f(CountSpan y) const override;

 private:
  Box box_;
  std::vector<double> values_;
};

/// Symmetric zero-diagonal matrix with off-diagonal entries N(0, 4/d).
Eigen::MatrixXd random_sk_weights(std::size_t dim, Rng& rng);
/// Symmetric matrix with entries N(0, 1/d) on and above the diagonal.
Eigen::MatrixXd random_neural_weights(std::size_t dim, Rng& rng);

/// Per-chain cache for the ratios a sampler needs at its current state.
class RatioEvaluator {
 public:
  RatioEvaluator(const Target& target, EvalMode mode);

  EvalMode mode() const { return mode_; }
  /// Initializes the cache at y.
  void reset(CountSpan y);
  /// Called before the ratios at y are read; full mode recomputes the field.
  void refresh(CountSpan y);
  /// Called after y_i changed by delta (+1 or -1).
  void moved(std::size_t i, int delta);

  double up(CountSpan y, std::size_t i) const { return target_->local_up(y, i, field_); }
  double down(CountSpan y, std::size_t i) const { return target_->local_down(y, i, field_); }

 private:
  const Target* target_;
  EvalMode mode_;
  std::vector<double> field_;
};

}  // namespace tps
