#include <gtest/gtest.h>

#include <deque>

#include "support.hpp"
#include "tps/ess.hpp"
#include "tps/pps.hpp"

using namespace tps;

namespace {

TargetPtr poisson(double rate, std::size_t d = 1) { return std::make_shared<const PoissonTarget>(d, rate); }

struct CountingSink {
  std::size_t arrivals = 0, departures = 0;
  void push(CountSpan, const JumpEvent& e) { (e.delta > 0 ? arrivals : departures)++; }
};

}  // namespace

TEST(PpsInit, StartsEmptyAtTimeM) {
  PointProcessSampler s(poisson(1.0), 1.0);
  EXPECT_EQ(s.state().now, 1.0);
  EXPECT_EQ(s.state().counts, CountVector{0});
  EXPECT_TRUE(s.state().window.empty());
  PointProcessSampler t(poisson(1.0), 2.5);
  EXPECT_EQ(t.state().now, 2.5);
}

TEST(PpsInit, RejectsDegenerateInputs) {
  EXPECT_THROW(PointProcessSampler(poisson(1.0), 0.0), std::invalid_argument);
  EXPECT_THROW(PointProcessSampler(poisson(1.0), -1.0), std::invalid_argument);
  EXPECT_THROW(PointProcessSampler(nullptr), std::invalid_argument);
  auto singleton = std::make_shared<const TableTarget>(Box({0}), std::vector<double>{0.0});
  EXPECT_THROW(PointProcessSampler{singleton}, std::invalid_argument);
  auto singleton2 = std::make_shared<const TableTarget>(Box({1, 1}), std::vector<double>{0.0, -INFINITY, -INFINITY, -INFINITY});
  EXPECT_THROW(PointProcessSampler{singleton2}, std::invalid_argument);
}

TEST(PpsStep, EmptyWindowAlwaysArrivesAtRateLambda) {
  Rng rng(21);
  std::vector<double> waits;
  for (int rep = 0; rep < 20'000; ++rep) {
    PointProcessSampler s(poisson(2.0), 1.0);
    const JumpEvent e = s.propose(rng);
    ASSERT_EQ(e.delta, 1);
    waits.push_back(e.holding);
  }
  const double p = tps::testing::ks_pvalue(waits, [](double x) { return -std::expm1(-2.0 * x); });
  EXPECT_GT(p, 0.01);
}

TEST(PpsStep, FullCubeForcesDepartureOfHead) {
  Rng rng(22);
  auto sk = std::make_shared<const SKTarget>(0.5, random_sk_weights(3, rng));
  PointProcessSampler s(sk, 1.0);
  NullSink sink;
  while (s.state().counts != CountVector{1, 1, 1}) s.run(1, rng, sink);
  const JumpEvent e = s.propose(rng);
  for (double r : s.intensities()) EXPECT_EQ(r, 0.0);
  const WindowPoint head = s.state().window.front();
  EXPECT_EQ(e.delta, -1);
  EXPECT_EQ(e.component, head.component);
  s.apply(e);
  EXPECT_EQ(s.state().now, head.time + 1.0);
}

TEST(PpsRun, ZeroStepsLeavesStateAlone) {
  Rng rng(23);
  PointProcessSampler s(poisson(3.0), 1.0);
  WeightedTrace trace(1);
  s.run(0, rng, trace);
  EXPECT_TRUE(trace.empty());
  EXPECT_EQ(s.state().now, 1.0);
  EXPECT_TRUE(s.state().window.empty());
}

// Property: departures follow arrival order and happen exactly m after
// the matching arrival; counts always equal the window tally.
TEST(Property, FifoAndDeterministicService) {
  Rng rng(24);
  for (int rep = 0; rep < 10; ++rep) {
    const double m = 0.25 + 2.0 * uniform01(rng);
    auto target = tps::testing::shared_table(rng, {2, 3, 1}, 1.5, 0.3);
    PointProcessSampler s(target, m, rep % 2 ? EvalMode::incremental : EvalMode::full);
    std::deque<WindowPoint> shadow;
    for (int step = 0; step < 5'000; ++step) {
      const JumpEvent e = s.step(rng);
      ASSERT_GT(e.holding, 0.0);
      if (e.delta > 0) {
        shadow.push_back({s.state().now, e.component});
      } else {
        ASSERT_FALSE(shadow.empty());
        EXPECT_EQ(e.component, shadow.front().component);
        EXPECT_EQ(s.state().now, shadow.front().time + m);
        shadow.pop_front();
      }
      ASSERT_TRUE(s.invariants_hold());
      for (double r : s.intensities()) ASSERT_FALSE(std::isnan(r));
    }
    EXPECT_EQ(shadow.size(), s.state().window.size());
  }
}

TEST(PpsRun, ArrivalsMinusDeparturesIsFinalCount) {
  Rng rng(25);
  auto target = tps::testing::shared_table(rng, {2, 2}, 1.0);
  PointProcessSampler s(target);
  CountingSink sink;
  s.run(100'000, rng, sink);
  Count total = 0;
  for (auto c : s.state().counts) total += c;
  EXPECT_EQ(sink.arrivals - sink.departures, static_cast<std::size_t>(total));
  EXPECT_LE(total, 4);
}

TEST(PpsRun, PoissonMeanWithinThreeStandardErrors) {
  Rng rng(26);
  PointProcessSampler s(poisson(2.0));
  NullSink burn;
  s.run(10'000, rng, burn);
  WeightedTrace trace(1);
  trace.reserve(1'000'000);
  s.run(1'000'000, rng, trace);
  const auto est = tps::testing::time_average(trace, 0, 5'000);
  EXPECT_LT(std::abs(est.mean - 2.0), 3.0 * est.std_error) << est.mean << " +- " << est.std_error;
}

TEST(PpsRun, DeterministicPerSeedAndCopyable) {
  auto target = poisson(4.0, 3);
  PointProcessSampler a(target), b(target);
  Rng ra(27), rb(27);
  EventLog la(a.state().counts), lb(b.state().counts);
  a.run(5'000, ra, la);
  b.run(5'000, rb, lb);
  EXPECT_EQ(la.events(), lb.events());

  PointProcessSampler c(a);
  Rng rc = ra;
  EventLog ma(a.state().counts), mc(c.state().counts);
  a.run(1'000, ra, ma);
  c.run(1'000, rc, mc);
  EXPECT_EQ(ma.events(), mc.events());
}

TEST(PointWindow, TallyCountsComponents) {
  PointWindow w(1.0);
  w.push({0.1, 2});
  w.push({0.2, 0});
  w.push({0.3, 2});
  EXPECT_EQ(w.tally(3), (CountVector{1, 0, 2}));
  EXPECT_DOUBLE_EQ(w.next_expiry(), 1.1);
  EXPECT_EQ(w.pop().component, 2u);
  EXPECT_EQ(w.tally(3), (CountVector{1, 0, 1}));
}
