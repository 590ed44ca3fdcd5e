#include "tps/oracle.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace tps {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_factorials(CountSpan y) {
  double acc = 0.0;
  for (auto c : y) acc += std::lgamma(c + 1.0);
  return acc;
}

std::vector<double> log_weights(const Target& target, const Box& box) {
  if (box.dimension() != target.dimension()) throw std::invalid_argument("box and target dimensions differ");
  if (box.volume() > kMaxEnumerationVolume) throw std::invalid_argument("box too large to enumerate");
  std::vector<double> lw(box.volume());
  CountVector y(box.dimension(), 0);
  std::size_t k = 0;
  do {
    const double lf = target.log_f(y);
    lw[k++] = lf == kNegInf ? kNegInf : lf - log_factorials(y);
  } while (box.next(y));
  return lw;
}

double log_sum_exp(const std::vector<double>& v) {
  double top = kNegInf;
  for (double x : v) top = std::max(top, x);
  if (top == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - top);
  return top + std::log(acc);
}

}  // namespace

ExactPmf enumerate_pmf(const Target& target, const Box& box) {
  const std::vector<double> lw = log_weights(target, box);
  const double lz = log_sum_exp(lw);
  if (lz == kNegInf) throw std::invalid_argument("target has no mass inside the box");
  ExactPmf out{box, std::vector<double>(box.volume()), 0.0};
  for (std::size_t k = 0; k < lw.size(); ++k) out.probs[k] = std::exp(lw[k] - lz);
  return out;
}

double captured_mass(const Target& target, const Box& box) {
  std::vector<Count> doubled(box.maxima());
  for (auto& m : doubled) m = 2 * (m + 1) - 1;
  const Box outer(doubled);
  const ExactPmf inner_pmf = enumerate_pmf(target, outer);
  double inside = 0.0;
  CountVector y(box.dimension(), 0);
  do inside += inner_pmf(y);
  while (box.next(y));
  return inside;
}

ExactPmf ctmc_stationary(const RateOracle& rates, const Box& box) {
  if (box.volume() > kMaxGeneratorVolume) throw std::invalid_argument("box too large for a generator solve");
  const std::size_t volume = box.volume();
  const std::size_t d = box.dimension();

  // Transition lists restricted to the box.
  struct Move {
    std::size_t to;
    double rate;
  };
  std::vector<std::vector<Move>> moves(volume);
  std::vector<char> seen(volume, 0);
  std::deque<std::size_t> frontier{0};
  seen[0] = 1;
  while (!frontier.empty()) {
    const std::size_t at = frontier.front();
    frontier.pop_front();
    CountVector y = box.state(at);
    const RateVector r = rates(y);
    for (std::size_t i = 0; i < d; ++i) {
      if (r.up[i] > 0.0 && y[i] < box.maxima()[i]) moves[at].push_back({at + box.stride(i), r.up[i]});
      if (r.down[i] > 0.0 && y[i] > 0) moves[at].push_back({at - box.stride(i), r.down[i]});
    }
    for (const auto& m : moves[at])
      if (!seen[m.to]) {
        seen[m.to] = 1;
        frontier.push_back(m.to);
      }
  }

  // Dense numbering of reachable states; every one of them must lead back to 0.
  std::vector<std::size_t> slot(volume, volume);
  std::vector<std::size_t> states;
  for (std::size_t k = 0; k < volume; ++k)
    if (seen[k]) {
      slot[k] = states.size();
      states.push_back(k);
    }
  std::vector<std::vector<std::size_t>> incoming(states.size());
  for (std::size_t s = 0; s < states.size(); ++s)
    for (const auto& m : moves[states[s]]) incoming[slot[m.to]].push_back(s);
  std::vector<char> back(states.size(), 0);
  std::deque<std::size_t> queue{slot[0]};
  back[slot[0]] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const std::size_t s = queue.front();
    queue.pop_front();
    for (std::size_t p : incoming[s])
      if (!back[p]) {
        back[p] = 1;
        ++reached;
        queue.push_back(p);
      }
  }
  if (reached != states.size()) throw std::runtime_error("restricted chain is reducible");

  ExactPmf out{box, std::vector<double>(volume, 0.0), 0.0};
  const auto n = static_cast<Eigen::Index>(states.size());
  if (n == 1) {
    out.probs[states[0]] = 1.0;
    return out;
  }
  // Solve pi Q = 0 as Q' pi = 0 with the last equation replaced by sum(pi) = 1.
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t s = 0; s < states.size(); ++s) {
    double leave = 0.0;
    for (const auto& m : moves[states[s]]) {
      const auto t = static_cast<Eigen::Index>(slot[m.to]);
      leave += m.rate;
      if (t != n - 1) entries.emplace_back(t, static_cast<Eigen::Index>(s), m.rate);
    }
    if (static_cast<Eigen::Index>(s) != n - 1) entries.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), -leave);
    entries.emplace_back(n - 1, static_cast<Eigen::Index>(s), 1.0);
  }
  Eigen::SparseMatrix<double> system(n, n);
  system.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success) throw std::runtime_error("generator system is singular");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  const Eigen::VectorXd pi = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !pi.allFinite()) throw std::runtime_error("generator system is singular");
  const double total = pi.sum();
  for (std::size_t s = 0; s < states.size(); ++s)
    out.probs[states[s]] = std::max(0.0, pi[static_cast<Eigen::Index>(s)] / total);
  return out;
}

ExactPmf empirical_pmf(const WeightedTrace& trace, const Box& box) {
  if (trace.empty()) throw std::invalid_argument("empirical_pmf: empty trace");
  if (trace.dimension() != box.dimension()) throw std::invalid_argument("box and trace dimensions differ");
  ExactPmf out{box, std::vector<double>(box.volume(), 0.0), 0.0};
  double total = 0.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const CountSpan y = trace.sample(k);
    const double w = trace.weight(k);
    total += w;
    if (box.contains(y))
      out.probs[box.index(y)] += w;
    else
      out.overflow += w;
  }
  for (auto& p : out.probs) p /= total;
  out.overflow /= total;
  return out;
}

double tv_distance(const ExactPmf& p, const ExactPmf& q) {
  if (!(p.box == q.box)) throw std::invalid_argument("tv_distance: boxes differ");
  double acc = std::abs(p.overflow - q.overflow);
  for (std::size_t k = 0; k < p.probs.size(); ++k) acc += std::abs(p.probs[k] - q.probs[k]);
  return 0.5 * acc;
}

double two_time_symmetry(const WeightedTrace& trace, double lag, const Box& box) {
  if (!(lag >= 0.0)) throw std::invalid_argument("lag must be non-negative");
  if (trace.dimension() != box.dimension()) throw std::invalid_argument("box and trace dimensions differ");
  const std::size_t n = trace.size();
  std::vector<double> start(n + 1, 0.0);  // start[k] = time at which sample k begins
  for (std::size_t k = 0; k < n; ++k) start[k + 1] = start[k] + trace.weight(k);
  const double horizon = start[n] - lag;
  if (!(horizon > 0.0)) throw std::invalid_argument("trace is shorter than the lag");

  const std::size_t volume = box.volume();
  std::vector<double> joint(volume * volume, 0.0);
  auto slot = [&](std::size_t k) { return box.contains(trace.sample(k)) ? box.index(trace.sample(k)) : volume; };

  // Sweep t over [0, horizon) with i = state at t and j = state at t + lag.
  std::size_t i = 0;
  std::size_t j = 0;
  while (j + 1 < n && start[j + 1] <= lag) ++j;
  double t = 0.0;
  while (t < horizon && i < n && j < n) {
    const double end_i = start[i + 1];
    const double end_j = start[j + 1] - lag;
    const double end = std::min({end_i, end_j, horizon});
    const std::size_t a = slot(i);
    const std::size_t b = slot(j);
    if (a < volume && b < volume) joint[a * volume + b] += end - t;
    t = end;
    if (end_i <= end) ++i;
    if (end_j <= end) ++j;
  }

  double total = 0.0;
  for (double v : joint) total += v;
  if (!(total > 0.0)) return 0.0;
  double defect = 0.0;
  for (std::size_t a = 0; a < volume; ++a)
    for (std::size_t b = a + 1; b < volume; ++b) defect += std::abs(joint[a * volume + b] - joint[b * volume + a]);
  return defect / total;  // the 1/2 of TV cancels against counting each unordered pair once
}

Moments exact_moments(const ExactPmf& pmf) {
  const auto d = static_cast<Eigen::Index>(pmf.box.dimension());
  Moments out{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  double total = 0.0;
  CountVector y(pmf.box.dimension(), 0);
  do {
    const double p = pmf(y);
    for (Eigen::Index a = 0; a < d; ++a) out.mean[a] += p * y[static_cast<std::size_t>(a)];
    total += p;
  } while (pmf.box.next(y));
  out.mean /= total;
  y.assign(pmf.box.dimension(), 0);
  do {
    const double p = pmf(y);
    if (p == 0.0) continue;
    Eigen::VectorXd c(d);
    for (Eigen::Index a = 0; a < d; ++a) c[a] = y[static_cast<std::size_t>(a)] - out.mean[a];
    out.cov.noalias() += p * c * c.transpose();
  } while (pmf.box.next(y));
  out.cov /= total;
  return out;
}

}  // namespace tps
