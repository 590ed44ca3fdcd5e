#include "tps/ess.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

namespace tps {

namespace {

Eigen::VectorXd to_vector(CountSpan y) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) v[static_cast<Eigen::Index>(i)] = y[i];
  return v;
}

// Time-weighted mean of samples [begin, end).
Eigen::VectorXd range_mean(const WeightedTrace& trace, std::size_t begin, std::size_t end) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(trace.dimension()));
  double total = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    acc += trace.weight(k) * to_vector(trace.sample(k));
    total += trace.weight(k);
  }
  return acc / total;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Moments weighted_moments(const WeightedTrace& trace) {
  if (trace.empty()) throw std::invalid_argument("weighted_moments: empty trace");
  const auto d = static_cast<Eigen::Index>(trace.dimension());
  Moments out{range_mean(trace, 0, trace.size()), Eigen::MatrixXd::Zero(d, d)};
  double total = 0.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const Eigen::VectorXd c = to_vector(trace.sample(k)) - out.mean;
    out.cov.noalias() += trace.weight(k) * c * c.transpose();
    total += trace.weight(k);
  }
  out.cov = symmetrized(out.cov / total);
  return out;
}

Eigen::MatrixXd batch_means_cov(const WeightedTrace& trace, std::size_t b) {
  if (b == 0) throw std::invalid_argument("batch size must be positive");
  const std::size_t batches = trace.size() / b;
  if (batches < 2) throw std::invalid_argument("batch means needs at least two full batches");
  const auto d = static_cast<Eigen::Index>(trace.dimension());
  Eigen::MatrixXd means(d, static_cast<Eigen::Index>(batches));
  Eigen::VectorXd grand = Eigen::VectorXd::Zero(d);
  double total = 0.0;
  for (std::size_t j = 0; j < batches; ++j) {
    double w = 0.0;
    for (std::size_t k = j * b; k < (j + 1) * b; ++k) w += trace.weight(k);
    means.col(static_cast<Eigen::Index>(j)) = range_mean(trace, j * b, (j + 1) * b);
    grand += w * means.col(static_cast<Eigen::Index>(j));
    total += w;
  }
  grand /= total;
  const Eigen::MatrixXd centered = means.colwise() - grand;
  const double scale = static_cast<double>(b) / static_cast<double>(batches - 1);
  return symmetrized(scale * centered * centered.transpose());
}

EssReport multivariate_ess(const WeightedTrace& trace, std::size_t b) {
  BatchMeansAccumulator acc(trace.dimension(), b);
  for (std::size_t k = 0; k < trace.size(); ++k) acc.push(trace.sample(k), trace.weight(k));
  return acc.report();
}

double log_det_spd(const Eigen::MatrixXd& m, const std::string& which) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite(which);
  const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0) || !std::isfinite(diag[i])) throw NotPositiveDefinite(which);
    acc += std::log(diag[i]);
  }
  return 2.0 * acc;
}

// BatchMeansAccumulator

BatchMeansAccumulator::BatchMeansAccumulator(std::size_t dim, std::size_t batch_size)
    : dim_(dim), b_(batch_size), within_scatter_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                                         static_cast<Eigen::Index>(dim))) {
  if (dim == 0) throw std::invalid_argument("dimension must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  pending_states_.reserve(dim * batch_size);
  pending_weights_.reserve(batch_size);
}

void BatchMeansAccumulator::push(CountSpan state, double weight) {
  if (state.size() != dim_) throw std::invalid_argument("sample has wrong dimension");
  if (!(weight > 0.0)) throw std::invalid_argument("weights must be positive");
  for (auto c : state) pending_states_.push_back(c);
  pending_weights_.push_back(weight);
  if (pending_weights_.size() == b_) close_batch();
}

void BatchMeansAccumulator::close_batch() {
  const auto d = static_cast<Eigen::Index>(dim_);
  const auto n = static_cast<Eigen::Index>(b_);
  Eigen::Map<const Eigen::MatrixXd> states(pending_states_.data(), d, n);
  Eigen::Map<const Eigen::VectorXd> w(pending_weights_.data(), n);
  const double total = w.sum();
  const Eigen::VectorXd mean = states * w / total;
  const Eigen::MatrixXd scaled = (states.colwise() - mean) * w.cwiseSqrt().asDiagonal();
  within_scatter_.noalias() += scaled * scaled.transpose();
  batch_weights_.push_back(total);
  batch_means_.insert(batch_means_.end(), mean.data(), mean.data() + d);
  pending_states_.clear();
  pending_weights_.clear();
}

Eigen::MatrixXd BatchMeansAccumulator::batch_means() const {
  return Eigen::Map<const Eigen::MatrixXd>(batch_means_.data(), static_cast<Eigen::Index>(dim_),
                                           static_cast<Eigen::Index>(batch_count()));
}

Moments BatchMeansAccumulator::moments() const {
  if (batch_count() == 0) throw std::invalid_argument("no complete batch");
  const Eigen::MatrixXd means = batch_means();
  Eigen::Map<const Eigen::VectorXd> w(batch_weights_.data(), static_cast<Eigen::Index>(batch_count()));
  const double total = w.sum();
  Moments out;
  out.mean = means * w / total;
  const Eigen::MatrixXd scaled = (means.colwise() - out.mean) * w.cwiseSqrt().asDiagonal();
  out.cov = symmetrized((within_scatter_ + scaled * scaled.transpose()) / total);
  return out;
}

Eigen::MatrixXd BatchMeansAccumulator::sigma() const {
  if (batch_count() < 2) throw std::invalid_argument("batch means needs at least two full batches");
  const Eigen::MatrixXd means = batch_means();
  Eigen::Map<const Eigen::VectorXd> w(batch_weights_.data(), static_cast<Eigen::Index>(batch_count()));
  const Eigen::VectorXd grand = means * w / w.sum();
  const Eigen::MatrixXd centered = means.colwise() - grand;
  const double scale = static_cast<double>(b_) / static_cast<double>(batch_count() - 1);
  return symmetrized(scale * centered * centered.transpose());
}

EssReport BatchMeansAccumulator::report() const {
  const Eigen::MatrixXd sig = sigma();
  const Moments mom = moments();
  EssReport r;
  r.k = samples_used();
  r.batch_size = b_;
  r.batch_count = batch_count();
  r.log_det_xi = log_det_spd(mom.cov, "xi");
  r.log_det_sigma = log_det_spd(sig, "sigma");
  r.ess = static_cast<double>(r.k) * std::exp((r.log_det_xi - r.log_det_sigma) / static_cast<double>(dim_));
  return r;
}

// CpuTimer

double CpuTimer::now(bool wall) {
  if (!wall) {
    timespec ts{};
    if (clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts) == 0) return static_cast<double>(ts.tv_sec) + 1e-9 * ts.tv_nsec;
  }
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

CpuTimer::CpuTimer() {
  timespec ts{};
  wall_ = clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts) != 0;
  start_ = now(wall_);
}

double CpuTimer::seconds() const { return now(wall_) - start_; }

}  // namespace tps
