#include "tps/learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tps/ctmc.hpp"
#include "tps/ess.hpp"
#include "tps/oracle.hpp"
#include "tps/pps.hpp"

namespace tps {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t stat_count(std::size_t d) { return d * (d + 1) / 2 + d; }

// Sufficient statistics packed as integers: upper triangle of W row by row,
// then b.
void pack_stats(CountSpan y, CountVector& out) {
  const std::size_t d = y.size();
  out.resize(stat_count(d));
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) {
    out[k++] = y[i] * (y[i] - 1) / 2;
    for (std::size_t j = i + 1; j < d; ++j) out[k++] = y[i] * y[j];
  }
  for (std::size_t i = 0; i < d; ++i) out[k++] = y[i];
}

ParamGradient unpack_stats(const Eigen::VectorXd& packed, std::size_t d) {
  ParamGradient g = ParamGradient::zeros(d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(d); ++i)
    for (Eigen::Index j = i; j < static_cast<Eigen::Index>(d); ++j) g.dW(i, j) = g.dW(j, i) = packed[k++];
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(d); ++i) g.db[i] = packed[k++];
  return g;
}

// Adapts a full-dimensional trace sink to accept latent-only states.
template <class Inner>
struct ExpandingSink {
  const ConditionalTarget& conditional;
  Inner& inner;
  void push(CountSpan latent, const JumpEvent& e) { inner.push(conditional.expand(latent), e.holding); }
};

struct StatsSink {
  BatchMeansAccumulator acc;
  CountVector scratch;
  void push(CountSpan y, double w) {
    pack_stats(y, scratch);
    acc.push(scratch, w);
  }
  void push(CountSpan y, const JumpEvent& e) { push(y, e.holding); }
};

template <class Sink>
void sample_chain(TargetPtr target, const SamplerBudget& budget, Rng& rng, Sink& sink) {
  NullSink discard;
  if (budget.chain == ChainKind::pps) {
    PointProcessSampler sampler(std::move(target));
    sampler.run(budget.burn_in, rng, discard);
    sampler.run(budget.steps, rng, sink);
  } else {
    CtmcSampler sampler(std::move(target), CtmcRule::birth_death());
    sampler.run(budget.burn_in, rng, discard);
    sampler.run(budget.steps, rng, sink);
  }
}

struct StatsEstimate {
  ParamGradient mean;
  ParamGradient variance;  // of the mean
};

// Time-weighted expectation of the sufficient statistics with batch-means
// variances.
template <class Feed>
StatsEstimate estimate_stats(std::size_t d, std::size_t batch_size, Feed&& feed) {
  StatsSink sink{BatchMeansAccumulator(stat_count(d), batch_size), {}};
  feed(sink);
  if (sink.acc.batch_count() < 2) throw std::invalid_argument("sampler budget too small for batch means");
  const Eigen::VectorXd mean = sink.acc.moments().mean;
  const Eigen::VectorXd var = sink.acc.sigma().diagonal() / static_cast<double>(sink.acc.samples_used());
  return {unpack_stats(mean, d), unpack_stats(var, d)};
}

ParamGradient elementwise_sqrt(ParamGradient g) {
  g.dW = g.dW.cwiseMax(0.0).cwiseSqrt();
  g.db = g.db.cwiseMax(0.0).cwiseSqrt();
  return g;
}

std::vector<double> parse_numbers(const std::string& line, std::size_t lineno) {
  std::string cleaned = line;
  for (auto& ch : cleaned)
    if (ch == ',' || ch == '\t') ch = ' ';
  std::istringstream in(cleaned);
  std::vector<double> out;
  for (std::string tok; in >> tok;) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": cannot parse '" + tok + "'");
    }
  }
  return out;
}

// Exact expectations over the box. `observed` selects the slice of states
// whose observed entries equal it (all states if empty).
struct ExactSlice {
  ParamGradient stats;
  double mass = 0.0;
};

ExactSlice exact_slice(const ExactPmf& pmf, const Partition& partition, CountSpan observed) {
  const std::size_t d = pmf.box.dimension();
  ExactSlice out{ParamGradient::zeros(d), 0.0};
  CountVector y(d, 0);
  do {
    const double p = pmf(y);
    if (p == 0.0) continue;
    bool match = true;
    for (std::size_t k = 0; k < observed.size() && match; ++k) match = y[partition.observed[k]] == observed[k];
    if (!match) continue;
    ParamGradient s = sufficient_stats(y);
    s *= p;
    out.stats += s;
    out.mass += p;
  } while (pmf.box.next(y));
  return out;
}

void check_psi(const Partition& partition, const DataDistribution& psi) {
  if (psi.values.empty() || psi.values.size() != psi.probs.size())
    throw std::invalid_argument("data distribution is empty or malformed");
  for (const auto& o : psi.values)
    if (o.size() != partition.observed.size())
      throw std::invalid_argument("data distribution entries must match the observed components");
}

}  // namespace

// Partition

Partition Partition::with_observed(std::size_t dim, std::vector<std::size_t> observed) {
  std::vector<char> is_observed(dim, 0);
  for (auto i : observed) {
    if (i >= dim) throw std::invalid_argument("observed index out of range");
    if (is_observed[i]) throw std::invalid_argument("duplicate observed index");
    is_observed[i] = 1;
  }
  Partition p;
  p.observed = std::move(observed);
  for (std::size_t i = 0; i < dim; ++i)
    if (!is_observed[i]) p.latent.push_back(i);
  return p;
}

// ParamGradient

ParamGradient ParamGradient::zeros(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return {Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
}

ParamGradient& ParamGradient::operator+=(const ParamGradient& other) {
  dW += other.dW;
  db += other.db;
  return *this;
}

ParamGradient& ParamGradient::operator*=(double s) {
  dW *= s;
  db *= s;
  return *this;
}

ParamGradient sufficient_stats(CountSpan y) {
  const std::size_t d = y.size();
  ParamGradient g = ParamGradient::zeros(d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto a = static_cast<Eigen::Index>(i);
    g.dW(a, a) = 0.5 * y[i] * (y[i] - 1.0);
    g.db[a] = y[i];
    for (std::size_t j = i + 1; j < d; ++j) {
      const auto b = static_cast<Eigen::Index>(j);
      g.dW(a, b) = g.dW(b, a) = static_cast<double>(y[i]) * y[j];
    }
  }
  return g;
}

// DataDistribution

DataDistribution DataDistribution::from_stream(std::istream& in) {
  DataDistribution out;
  std::string line;
  std::size_t lineno = 0;
  double total = 0.0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::vector<double> nums = parse_numbers(line, lineno);
    if (nums.empty()) continue;
    if (nums.size() < 2) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected counts and probability");
    CountVector o;
    for (std::size_t k = 0; k + 1 < nums.size(); ++k) {
      if (nums[k] < 0 || nums[k] != std::floor(nums[k]))
        throw std::invalid_argument("line " + std::to_string(lineno) + ": counts must be non-negative integers");
      o.push_back(static_cast<Count>(nums[k]));
    }
    if (!out.values.empty() && o.size() != out.values.front().size())
      throw std::invalid_argument("line " + std::to_string(lineno) + ": inconsistent dimension");
    const double p = nums.back();
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("line " + std::to_string(lineno) + ": bad probability");
    out.values.push_back(std::move(o));
    out.probs.push_back(p);
    total += p;
  }
  if (out.values.empty() || !(total > 0.0)) throw std::invalid_argument("data distribution has no mass");
  for (auto& p : out.probs) p /= total;
  return out;
}

DataDistribution DataDistribution::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open data file " + path.string());
  return from_stream(in);
}

// ConditionalTarget

ConditionalTarget::ConditionalTarget(TargetPtr base, Partition partition, CountVector observed)
    : base_(std::move(base)), partition_(std::move(partition)), observed_(std::move(observed)) {
  if (!base_) throw std::invalid_argument("conditional target needs a base target");
  if (partition_.dimension() != base_->dimension()) throw std::invalid_argument("partition does not match target dimension");
  if (observed_.size() != partition_.observed.size()) throw std::invalid_argument("observed counts do not match partition");
  for (auto c : observed_)
    if (c < 0) throw std::invalid_argument("observed counts must be non-negative");
}

CountVector ConditionalTarget::expand(CountSpan latent) const {
  CountVector full(base_->dimension());
  for (std::size_t k = 0; k < observed_.size(); ++k) full[partition_.observed[k]] = observed_[k];
  for (std::size_t k = 0; k < latent.size(); ++k) full[partition_.latent[k]] = latent[k];
  return full;
}

double ConditionalTarget::unchecked_log_f(CountSpan y) const { return base_->log_f(expand(y)); }

double ConditionalTarget::local_up(CountSpan y, std::size_t i, std::span<const double>) const {
  CountVector full = expand(y);
  const double base = base_->log_f(full);
  ++full[partition_.latent[i]];
  return base_->log_f(full) - base;
}

double ConditionalTarget::local_down(CountSpan y, std::size_t i, std::span<const double>) const {
  CountVector full = expand(y);
  const double base = base_->log_f(full);
  --full[partition_.latent[i]];
  return base - base_->log_f(full);
}

// Sampling and gradients

WeightedTrace clamped_run(TargetPtr target, const Partition& partition, CountSpan observed,
                          const SamplerBudget& budget, Rng& rng) {
  if (!target) throw std::invalid_argument("clamped_run needs a target");
  if (partition.dimension() != target->dimension()) throw std::invalid_argument("partition does not match target dimension");
  if (observed.size() != partition.observed.size()) throw std::invalid_argument("observed counts do not match partition");
  WeightedTrace trace(target->dimension());
  trace.reserve(budget.steps);
  if (partition.observed.empty()) {
    sample_chain(std::move(target), budget, rng, trace);
    return trace;
  }
  auto conditional = std::make_shared<const ConditionalTarget>(target, partition, CountVector(observed.begin(), observed.end()));
  if (partition.latent.empty()) {
    const CountVector full = conditional->expand({});
    for (std::size_t k = 0; k < budget.steps; ++k) trace.push(full, 1.0);
    return trace;
  }
  ExpandingSink<WeightedTrace> sink{*conditional, trace};
  sample_chain(conditional, budget, rng, sink);
  return trace;
}

GradientEstimate kl_gradient(TargetPtr target, const Partition& partition, const DataDistribution& psi,
                             const SamplerBudget& budget, Rng& rng) {
  if (!target) throw std::invalid_argument("kl_gradient needs a target");
  check_psi(partition, psi);
  const std::size_t d = target->dimension();

  const StatsEstimate model = estimate_stats(d, budget.batch_size, [&](StatsSink& sink) {
    sample_chain(target, budget, rng, sink);
  });

  ParamGradient data = ParamGradient::zeros(d);
  ParamGradient data_var = ParamGradient::zeros(d);
  for (std::size_t n = 0; n < psi.values.size(); ++n) {
    const double p = psi.probs[n];
    if (p == 0.0) continue;
    ParamGradient mean;
    ParamGradient var = ParamGradient::zeros(d);
    if (partition.latent.empty()) {
      CountVector full(d);
      for (std::size_t k = 0; k < d; ++k) full[partition.observed[k]] = psi.values[n][k];
      mean = sufficient_stats(full);
    } else {
      auto conditional = std::make_shared<const ConditionalTarget>(target, partition, psi.values[n]);
      const StatsEstimate est = estimate_stats(d, budget.batch_size, [&](StatsSink& sink) {
        ExpandingSink<StatsSink> expanding{*conditional, sink};
        sample_chain(conditional, budget, rng, expanding);
      });
      mean = est.mean;
      var = est.variance;
    }
    mean *= p;
    data += mean;
    var *= p * p;
    data_var += var;
  }

  GradientEstimate out{model.mean, {}};
  data *= -1.0;
  out.value += data;
  ParamGradient total_var = model.variance;
  total_var += data_var;
  out.std_error = elementwise_sqrt(total_var);
  return out;
}

ParamGradient exact_kl_gradient(const NeuralTarget& target, const Partition& partition, const DataDistribution& psi,
                                const Box& box) {
  check_psi(partition, psi);
  const ExactPmf pmf = enumerate_pmf(target, box);
  ParamGradient out = exact_slice(pmf, partition, {}).stats;
  for (std::size_t n = 0; n < psi.values.size(); ++n) {
    if (psi.probs[n] == 0.0) continue;
    ExactSlice slice = exact_slice(pmf, partition, psi.values[n]);
    if (!(slice.mass > 0.0)) throw std::domain_error("data point has zero model mass inside the box");
    slice.stats *= -psi.probs[n] / slice.mass;
    out += slice.stats;
  }
  return out;
}

double exact_kl(const NeuralTarget& target, const Partition& partition, const DataDistribution& psi, const Box& box) {
  check_psi(partition, psi);
  const ExactPmf pmf = enumerate_pmf(target, box);
  double kl = 0.0;
  for (std::size_t n = 0; n < psi.values.size(); ++n) {
    const double p = psi.probs[n];
    if (p == 0.0) continue;
    const double marginal = exact_slice(pmf, partition, psi.values[n]).mass;
    if (!(marginal > 0.0)) return std::numeric_limits<double>::infinity();
    kl += p * std::log(p / marginal);
  }
  return kl;
}

NeuralTarget descend(const NeuralTarget& target, const ParamGradient& gradient, double step) {
  Eigen::MatrixXd w = target.weights();
  const auto d = w.rows();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) w(i, j) = w(j, i) = w(i, j) - step * gradient.dW(i, j);
  return NeuralTarget(std::move(w), target.bias() - step * gradient.db, target.a0(), target.a1());
}

FitResult fit(const NeuralTarget& initial, const Partition& partition, const DataDistribution& psi,
              const FitOptions& options, Rng& rng) {
  if (!(options.step_size >= 0.0)) throw std::invalid_argument("step size must be non-negative");
  FitResult out;
  auto current = std::make_shared<const NeuralTarget>(initial);
  out.trajectory.push_back({current->weights(), current->bias()});
  if (options.monitor_box) out.kl.push_back(exact_kl(*current, partition, psi, *options.monitor_box));

  std::size_t rises = 0;
  for (std::size_t it = 0; it < options.iterations; ++it) {
    const GradientEstimate g = kl_gradient(current, partition, psi, options.budget, rng);
    current = std::make_shared<const NeuralTarget>(descend(*current, g.value, options.step_size));
    out.trajectory.push_back({current->weights(), current->bias()});
    if (!options.monitor_box) continue;
    out.kl.push_back(exact_kl(*current, partition, psi, *options.monitor_box));
    rises = out.kl.back() > out.kl[out.kl.size() - 2] ? rises + 1 : 0;
    if (rises >= 10) {
      out.diverged = true;
      break;
    }
  }
  return out;
}

}  // namespace tps
