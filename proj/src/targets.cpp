#include "tps/targets.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tps {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::VectorXd as_vector(CountSpan y) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) v[static_cast<Eigen::Index>(i)] = y[i];
  return v;
}

Eigen::Map<const Eigen::VectorXi> counts_view(CountSpan y) {
  static_assert(sizeof(Count) == sizeof(int));
  return {y.data(), static_cast<Eigen::Index>(y.size())};
}

std::string format_state(CountSpan y) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < y.size(); ++i) out << (i ? "," : "") << y[i];
  out << ')';
  return out.str();
}

void require_symmetric(const Eigen::MatrixXd& w, const char* what) {
  if (w.rows() != w.cols() || w.rows() == 0)
    throw std::invalid_argument(std::string(what) + ": weight matrix must be square and non-empty");
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = i + 1; j < w.cols(); ++j)
      if (w(i, j) != w(j, i))
        throw std::invalid_argument(std::string(what) + ": weight matrix is not symmetric");
}

}  // namespace

std::string_view to_string(EvalMode mode) {
  return mode == EvalMode::full ? "full" : "incremental";
}

EvalMode parse_eval_mode(std::string_view text) {
  if (text == "full") return EvalMode::full;
  if (text == "incremental") return EvalMode::incremental;
  throw std::invalid_argument("unknown recompute mode: " + std::string(text));
}

// Box

Box::Box(std::vector<Count> maxima) : maxima_(std::move(maxima)), strides_(maxima_.size()) {
  if (maxima_.empty()) throw std::invalid_argument("box must have at least one component");
  volume_ = 1;
  for (std::size_t k = maxima_.size(); k-- > 0;) {
    if (maxima_[k] < 0) throw std::invalid_argument("box maxima must be non-negative");
    strides_[k] = volume_;
    const auto extent = static_cast<std::size_t>(maxima_[k]) + 1;
    if (volume_ > std::numeric_limits<std::size_t>::max() / extent)
      throw std::invalid_argument("box volume overflows");
    volume_ *= extent;
  }
}

bool Box::contains(CountSpan y) const {
  if (y.size() != maxima_.size()) return false;
  for (std::size_t k = 0; k < y.size(); ++k)
    if (y[k] < 0 || y[k] > maxima_[k]) return false;
  return true;
}

std::size_t Box::index(CountSpan y) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < y.size(); ++k) idx += static_cast<std::size_t>(y[k]) * strides_[k];
  return idx;
}

CountVector Box::state(std::size_t index) const {
  CountVector y(maxima_.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    y[k] = static_cast<Count>(index / strides_[k]);
    index %= strides_[k];
  }
  return y;
}

bool Box::next(CountVector& y) const {
  for (std::size_t k = y.size(); k-- > 0;) {
    if (y[k] < maxima_[k]) {
      ++y[k];
      return true;
    }
    y[k] = 0;
  }
  return false;
}

// Target

void Target::check_state(CountSpan y) const {
  if (y.size() != dimension())
    throw std::invalid_argument("state has dimension " + std::to_string(y.size()) + ", target has " +
                                std::to_string(dimension()));
  for (auto c : y)
    if (c < 0) throw std::invalid_argument("negative count in state " + format_state(y));
}

double Target::log_f(CountSpan y) const {
  check_state(y);
  return unchecked_log_f(y);
}

bool Target::in_support(CountSpan y) const { return log_f(y) > kNegInf; }

double Target::log_ratio_up(CountSpan y, std::size_t i, EvalMode mode) const {
  check_state(y);
  if (i >= dimension()) throw std::invalid_argument("component index out of range");
  const double base = unchecked_log_f(y);
  if (!(base > kNegInf)) throw std::domain_error("state " + format_state(y) + " is off the support");
  if (mode == EvalMode::full) {
    CountVector up(y.begin(), y.end());
    ++up[i];
    return unchecked_log_f(up) - base;
  }
  std::vector<double> h(field_size());
  compute_field(y, h);
  return local_up(y, i, h);
}

void Target::compute_field(CountSpan, std::span<double>) const {}
void Target::shift_field(std::span<double>, std::size_t, int) const {}

// PoissonTarget

PoissonTarget::PoissonTarget(std::vector<double> rates) {
  if (rates.empty()) throw std::invalid_argument("poisson target needs at least one component");
  log_rates_.reserve(rates.size());
  for (double r : rates) {
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("poisson rates must be positive");
    log_rates_.push_back(std::log(r));
  }
}

PoissonTarget::PoissonTarget(std::size_t dim, double rate) : PoissonTarget(std::vector<double>(dim, rate)) {}

double PoissonTarget::unchecked_log_f(CountSpan y) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * log_rates_[i];
  return acc;
}

double PoissonTarget::local_up(CountSpan, std::size_t i, std::span<const double>) const { return log_rates_[i]; }
double PoissonTarget::local_down(CountSpan, std::size_t i, std::span<const double>) const { return log_rates_[i]; }

// SKTarget

Eigen::VectorXd sk_bias(const Eigen::MatrixXd& weights) {
  require_symmetric(weights, "sk_bias");
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    if (weights(i, i) != 0.0) throw std::invalid_argument("sk_bias: weight matrix must have a zero diagonal");
  return weights.rowwise().sum();
}

SKTarget::SKTarget(double beta, Eigen::MatrixXd weights)
    : beta_(beta), weights_(std::move(weights)), bias_(sk_bias(weights_)) {
  if (!(beta_ >= 0.0) || !std::isfinite(beta_)) throw std::invalid_argument("sk: beta must be non-negative");
}

std::vector<Count> SKTarget::support_bound() const { return std::vector<Count>(dimension(), 1); }

double SKTarget::unchecked_log_f(CountSpan y) const {
  for (auto c : y)
    if (c > 1) return kNegInf;
  const Eigen::VectorXd v = as_vector(y);
  return beta_ * (v.dot(weights_ * v) - bias_.dot(v));
}

void SKTarget::compute_field(CountSpan y, std::span<double> h) const {
  Eigen::Map<Eigen::VectorXd> out(h.data(), static_cast<Eigen::Index>(h.size()));
  out.noalias() = weights_ * counts_view(y).cast<double>();
}

void SKTarget::shift_field(std::span<double> h, std::size_t i, int delta) const {
  Eigen::Map<Eigen::VectorXd> out(h.data(), static_cast<Eigen::Index>(h.size()));
  out += delta * weights_.col(static_cast<Eigen::Index>(i));
}

double SKTarget::local_up(CountSpan y, std::size_t i, std::span<const double> h) const {
  if (y[i] >= 1) return kNegInf;
  return beta_ * (2.0 * h[i] - bias_[static_cast<Eigen::Index>(i)]);
}

double SKTarget::local_down(CountSpan, std::size_t i, std::span<const double> h) const {
  // Zero diagonal: the field at y - e_i agrees with h in component i.
  return beta_ * (2.0 * h[i] - bias_[static_cast<Eigen::Index>(i)]);
}

// NeuralTarget

NeuralTarget::NeuralTarget(Eigen::MatrixXd weights, Eigen::VectorXd bias, double a0, double a1)
    : weights_(std::move(weights)), bias_(std::move(bias)), a0_(a0), a1_(a1) {
  require_symmetric(weights_, "neural");
  if (bias_.size() != weights_.rows()) throw std::invalid_argument("neural: bias length must equal dimension");
  if (!(a1_ > 0.0) || !std::isfinite(a1_) || !std::isfinite(a0_))
    throw std::invalid_argument("neural: need finite a0 and a1 > 0");
  refractory_scale_ = 1.0 / std::expm1(a1_);
}

double NeuralTarget::unchecked_log_f(CountSpan y) const {
  const Eigen::VectorXd v = as_vector(y);
  double acc = 0.5 * v.dot(weights_ * v) + (bias_ - 0.5 * weights_.diagonal()).dot(v);
  for (auto c : y) acc -= std::exp(a1_ * c + a0_) * refractory_scale_;
  return acc;
}

void NeuralTarget::compute_field(CountSpan y, std::span<double> h) const {
  Eigen::Map<Eigen::VectorXd> out(h.data(), static_cast<Eigen::Index>(h.size()));
  out.noalias() = weights_ * counts_view(y).cast<double>();
}

void NeuralTarget::shift_field(std::span<double> h, std::size_t i, int delta) const {
  Eigen::Map<Eigen::VectorXd> out(h.data(), static_cast<Eigen::Index>(h.size()));
  out += delta * weights_.col(static_cast<Eigen::Index>(i));
}

double NeuralTarget::local_up(CountSpan y, std::size_t i, std::span<const double> h) const {
  const auto k = static_cast<Eigen::Index>(i);
  return h[i] + bias_[k] - std::exp(a1_ * y[i] + a0_);
}

double NeuralTarget::local_down(CountSpan y, std::size_t i, std::span<const double> h) const {
  const auto k = static_cast<Eigen::Index>(i);
  return h[i] - weights_(k, k) + bias_[k] - std::exp(a1_ * (y[i] - 1) + a0_);
}

// TableTarget

TableTarget::TableTarget(Box box, std::vector<double> log_f_values)
    : box_(std::move(box)), values_(std::move(log_f_values)) {
  if (values_.size() != box_.volume()) throw std::invalid_argument("table: value count does not match box volume");
  bool any = false;
  CountVector y(box_.dimension(), 0);
  do {
    const double v = values_[box_.index(y)];
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw std::invalid_argument("table: log f at " + format_state(y) + " must be finite or -inf");
    if (v == kNegInf) continue;
    any = true;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == 0) continue;
      CountVector lower = y;
      --lower[i];
      if (values_[box_.index(lower)] == kNegInf)
        throw std::invalid_argument("table: support is not downward closed: " + format_state(y) +
                                    " has mass but " + format_state(lower) + " does not");
    }
  } while (box_.next(y));
  if (!any) throw std::invalid_argument("table: support is empty");
}

TableTarget TableTarget::from_stream(std::istream& in) {
  std::vector<std::pair<CountVector, double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (auto& ch : line)
      if (ch == ',' || ch == '\t') ch = ' ';
    std::istringstream tokens(line);
    std::vector<std::string> parts;
    for (std::string tok; tokens >> tok;) parts.push_back(tok);
    if (parts.empty()) continue;
    if (parts.size() < 2) throw std::invalid_argument("table line " + std::to_string(lineno) + ": expected counts and log f");
    if (dim == 0) dim = parts.size() - 1;
    if (parts.size() - 1 != dim)
      throw std::invalid_argument("table line " + std::to_string(lineno) + ": inconsistent dimension");
    CountVector y(dim);
    try {
      for (std::size_t k = 0; k < dim; ++k) {
        std::size_t used = 0;
        const long v = std::stol(parts[k], &used);
        if (used != parts[k].size() || v < 0) throw std::invalid_argument("bad count");
        y[k] = static_cast<Count>(v);
      }
    } catch (const std::exception&) {
      throw std::invalid_argument("table line " + std::to_string(lineno) + ": counts must be non-negative integers");
    }
    double value = 0.0;
    const std::string& last = parts.back();
    if (last == "-inf" || last == "-Inf" || last == "-INF") {
      value = kNegInf;
    } else {
      try {
        std::size_t used = 0;
        value = std::stod(last, &used);
        if (used != last.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::invalid_argument("table line " + std::to_string(lineno) + ": cannot parse log f '" + last + "'");
      }
    }
    rows.emplace_back(std::move(y), value);
  }
  if (rows.empty()) throw std::invalid_argument("table: no entries");
  std::vector<Count> maxima(dim, 0);
  for (const auto& [y, v] : rows)
    for (std::size_t k = 0; k < dim; ++k) maxima[k] = std::max(maxima[k], y[k]);
  Box box(maxima);
  std::vector<double> values(box.volume(), kNegInf);
  for (const auto& [y, v] : rows) values[box.index(y)] = v;
  return TableTarget(std::move(box), std::move(values));
}

TableTarget TableTarget::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open table file " + path.string());
  return from_stream(in);
}

double TableTarget::unchecked_log_f(CountSpan y) const {
  if (!box_.contains(y)) return kNegInf;
  return values_[box_.index(y)];
}

double TableTarget::local_up(CountSpan y, std::size_t i, std::span<const double>) const {
  if (y[i] >= box_.maxima()[i]) return kNegInf;
  const std::size_t at = box_.index(y);
  return values_[at + box_.stride(i)] - values_[at];
}

double TableTarget::local_down(CountSpan y, std::size_t i, std::span<const double>) const {
  const std::size_t at = box_.index(y);
  return values_[at] - values_[at - box_.stride(i)];
}

// Random weights

Eigen::MatrixXd random_sk_weights(std::size_t dim, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(dim);
  const double sd = std::sqrt(4.0 / static_cast<double>(dim));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) w(i, j) = w(j, i) = sd * standard_normal(rng);
  return w;
}

Eigen::MatrixXd random_neural_weights(std::size_t dim, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(dim);
  const double sd = std::sqrt(1.0 / static_cast<double>(dim));
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) w(i, j) = w(j, i) = sd * standard_normal(rng);
  return w;
}

// RatioEvaluator

RatioEvaluator::RatioEvaluator(const Target& target, EvalMode mode)
    : target_(&target), mode_(mode), field_(target.field_size(), 0.0) {}

void RatioEvaluator::reset(CountSpan y) {
  if (!field_.empty()) target_->compute_field(y, field_);
}

void RatioEvaluator::refresh(CountSpan y) {
  if (mode_ == EvalMode::full && !field_.empty()) target_->compute_field(y, field_);
}

void RatioEvaluator::moved(std::size_t i, int delta) {
  if (mode_ == EvalMode::incremental && !field_.empty()) target_->shift_field(field_, i, delta);
}

}  // namespace tps
