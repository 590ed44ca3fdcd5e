#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tps/rng.hpp"
#include "tps/targets.hpp"
#include "tps/trace.hpp"

namespace tps {

/// Observed components are clamped to external input; the rest are latent.
struct Partition {
  std::vector<std::size_t> observed;
  std::vector<std::size_t> latent;

  /// Builds the partition of {0..dim-1} with the given observed indices.
  static Partition with_observed(std::size_t dim, std::vector<std::size_t> observed);
  std::size_t dimension() const { return observed.size() + latent.size(); }
};

/// Gradient (or statistic) with respect to the learnable parameters: the
/// upper triangle of W including the diagonal, mirrored, and the bias.
struct ParamGradient {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;

  static ParamGradient zeros(std::size_t dim);
  ParamGradient& operator+=(const ParamGradient& other);
  ParamGradient& operator*=(double s);
};

/// d log f / d theta at y: y_i y_j for w_ij (i<j), y_i(y_i-1)/2 for w_ii,
/// y_i for b_i.
ParamGradient sufficient_stats(CountSpan y);

/// Distribution over observed count vectors with finite support.
struct DataDistribution {
  std::vector<CountVector> values;
  std::vector<double> probs;

  /// Lines of `c_1 ... c_k probability`; probabilities are renormalized.
  static DataDistribution from_stream(std::istream& in);
  static DataDistribution from_file(const std::filesystem::path& path);
};

/// The law of the latent components given observed counts, as a target on
/// the latent dimensions.
class ConditionalTarget final : public Target {
 public:
  ConditionalTarget(TargetPtr base, Partition partition, CountVector observed);

  std::size_t dimension() const override { return partition_.latent.size(); }
  std::string_view family() const override { return "conditional"; }
  double local_up(CountSpan y, std::size_t i, std::span<const double> h) const override;
  double local_down(CountSpan y, std::size_t i, std::span<const double> h) const override;

  /// Full d-vector with observed entries filled in.
  CountVector expand(CountSpan latent) const;

 protected:
  double unchecked_log_f(CountSpan y) const override;

 private:
  TargetPtr base_;
  Partition partition_;
  CountVector observed_;
};

enum class ChainKind { pps, birth_death };

struct SamplerBudget {
  std::size_t burn_in = 10'000;
  std::size_t steps = 100'000;
  std::size_t batch_size = 1'000;  // for standard errors
  ChainKind chain = ChainKind::pps;
};

/// Samples the latent components with observed components frozen at
/// `observed`. Returns `steps` full d-dimensional samples after `burn_in`.
/// With no latent components the trace is `steps` copies of `observed`
/// with unit weight.
WeightedTrace clamped_run(TargetPtr target, const Partition& partition, CountSpan observed,
                          const SamplerBudget& budget, Rng& rng);

struct GradientEstimate {
  ParamGradient value;
  ParamGradient std_error;
};

/// Monte Carlo gradient of KL(psi || pi_O): expectation of the sufficient
/// statistics under a free run minus their psi-mixture under clamped runs.
/// Descent subtracts it.
GradientEstimate kl_gradient(TargetPtr target, const Partition& partition, const DataDistribution& psi,
                             const SamplerBudget& budget, Rng& rng);

/// The same gradient with all expectations computed exactly on a box.
ParamGradient exact_kl_gradient(const NeuralTarget& target, const Partition& partition,
                                const DataDistribution& psi, const Box& box);

/// KL(psi || pi_O) with pi computed exactly on the box.
double exact_kl(const NeuralTarget& target, const Partition& partition, const DataDistribution& psi,
                const Box& box);

struct NeuralParams {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

struct FitOptions {
  std::size_t iterations = 100;
  double step_size = 0.1;
  SamplerBudget budget;
  /// When set, exact KL is tracked on this box and a run of 10 consecutive
  /// increases aborts the fit.
  std::optional<Box> monitor_box;
};

struct FitResult {
  std::vector<NeuralParams> trajectory;  // initial parameters first
  std::vector<double> kl;                // exact KL per trajectory entry, if monitored
  bool diverged = false;
};

/// Gradient descent on (W, b) with a0, a1 held fixed.
FitResult fit(const NeuralTarget& initial, const Partition& partition, const DataDistribution& psi,
              const FitOptions& options, Rng& rng);

/// Applies theta <- theta - step * gradient, keeping W symmetric.
NeuralTarget descend(const NeuralTarget& target, const ParamGradient& gradient, double step);

}  // namespace tps
