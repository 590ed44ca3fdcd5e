#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <sys/wait.h>
#include <unistd.h>

#include <boost/math/distributions/students_t.hpp>

#include "tps/bench.hpp"

using namespace tps;

namespace {

BenchConfig small(Family family) {
  BenchConfig c = BenchConfig::desk(family);
  c.steps = 20'000;
  c.burn_in = 2'000;
  c.batch_size = 1'000;
  c.reps = 2;
  return c;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("tps_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(DeriveSeed, StableAndSensitive) {
  EXPECT_EQ(derive_seed(1, 2, 3, 4), derive_seed(1, 2, 3, 4));
  for (std::uint64_t g = 0; g < 5; ++g)
    for (std::uint64_t s = 0; s < 5; ++s)
      for (std::uint64_t r = 0; r < 5; ++r) EXPECT_NE(derive_seed(7, g, s, r), derive_seed(8, g, s, r));
  EXPECT_NE(target_seed(1), target_seed(2));
}

TEST(DeriveSeed, NoCollisionsOverAMillionReplicates) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(2'000'000);
  for (std::uint64_t r = 0; r < 1'000'000; ++r) {
    ASSERT_TRUE(seen.insert(derive_seed(42, 3, 1, r)).second) << r;
    ASSERT_NE(derive_seed(42, 3, 1, r), derive_seed(42, 3, 1, r + 1));
  }
  for (std::uint64_t g = 0; g < 1000; ++g)
    for (std::uint64_t s = 0; s < 5; ++s)
      for (std::uint64_t r = 0; r < 200; ++r) ASSERT_TRUE(seen.insert(derive_seed(42, g + 10, s, r)).second);
}

TEST(BenchConfig, DefaultsAndValidation) {
  const BenchConfig sk = BenchConfig::desk(Family::sk);
  EXPECT_EQ(sk.dim, 20u);
  EXPECT_EQ(sk.steps, 300'000u);
  EXPECT_EQ(sk.burn_in, 30'000u);
  EXPECT_EQ(sk.batch_size, 3'000u);
  EXPECT_EQ(sk.reps, 5u);
  EXPECT_EQ(sk.samplers.size(), 5u);
  EXPECT_EQ(BenchConfig::desk(Family::poisson).dim, 1u);
  const BenchConfig full = BenchConfig::paper(Family::neural);
  EXPECT_EQ(full.dim, 100u);
  EXPECT_EQ(full.steps, 9'000'000u);
  EXPECT_EQ(full.burn_in, 1'000'000u);
  EXPECT_EQ(full.reps, 10u);

  BenchConfig c = small(Family::poisson);
  EXPECT_NO_THROW(c.validate());
  c.steps = 1'999;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small(Family::poisson);
  c.reps = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small(Family::sk);
  c.grid.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small(Family::table);
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Families, NamesRoundTrip) {
  for (auto f : {Family::poisson, Family::sk, Family::neural, Family::table}) EXPECT_EQ(parse_family(to_string(f)), f);
  EXPECT_THROW(parse_family("ising"), std::invalid_argument);
  for (auto s : kAllSamplers) EXPECT_EQ(parse_sampler(to_string(s)), s);
  EXPECT_THROW(parse_sampler("gibbs"), std::invalid_argument);
}

TEST(BuildTarget, FamiliesFollowTheirRecipes) {
  BenchConfig c = small(Family::sk);
  c.dim = 6;
  c.grid = {0.5};
  const auto sk = std::dynamic_pointer_cast<const SKTarget>(build_target(c, 0));
  ASSERT_TRUE(sk);
  EXPECT_EQ(sk->beta(), 0.5);
  EXPECT_EQ(sk->weights().diagonal(), Eigen::VectorXd::Zero(6));
  // Every run of a config shares one W.
  EXPECT_EQ(std::dynamic_pointer_cast<const SKTarget>(build_target(c, 0))->weights(), sk->weights());

  c.family = Family::neural;
  c.grid = {0.0, 2.0};
  const auto off = std::dynamic_pointer_cast<const NeuralTarget>(build_target(c, 0));
  const auto on = std::dynamic_pointer_cast<const NeuralTarget>(build_target(c, 1));
  ASSERT_TRUE(off && on);
  EXPECT_EQ(off->weights(), Eigen::MatrixXd::Zero(6, 6));
  EXPECT_EQ(on->bias(), Eigen::VectorXd::Constant(6, 5.0));
  EXPECT_EQ(on->a0(), 0.0);
  EXPECT_EQ(on->a1(), 1.0);
}

TEST(RunBenchmark, RecordCounts) {
  BenchConfig one = small(Family::poisson);
  one.grid = {2.0};
  one.samplers = {SamplerTag::pps};
  one.reps = 1;
  EXPECT_EQ(run_benchmark(one).size(), 1u);

  BenchConfig grid = small(Family::poisson);
  grid.reps = 3;
  const auto records = run_benchmark(grid);
  ASSERT_EQ(records.size(), 45u);
  std::size_t n = 0;
  for (std::size_t g = 0; g < 3; ++g)
    for (auto tag : kAllSamplers)
      for (std::size_t r = 0; r < 3; ++r, ++n) {
        EXPECT_EQ(records[n].param, grid.grid[g]);
        EXPECT_EQ(records[n].sampler, to_string(tag));
        EXPECT_EQ(records[n].replicate, r);
        EXPECT_TRUE(records[n].ok()) << records[n].status;
        EXPECT_EQ(records[n].k, 20'000u);
        EXPECT_NEAR(records[n].ess_per_second, records[n].ess / records[n].cpu_seconds, 1e-9 * records[n].ess_per_second);
      }
}

TEST(RunBenchmark, DeterministicAndScheduleIndependent) {
  BenchConfig c = small(Family::sk);
  c.dim = 8;
  c.grid = {0.5, 1.0};
  c.reps = 2;
  c.workers = 4;
  const auto serial = run_benchmark(c, Schedule::serial);
  const auto parallel = run_benchmark(c, Schedule::parallel);
  const auto again = run_benchmark(c, Schedule::parallel);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t k = 0; k < serial.size(); ++k) {
    EXPECT_EQ(serial[k].seed, parallel[k].seed);
    EXPECT_EQ(serial[k].ess, parallel[k].ess);
    EXPECT_EQ(parallel[k].ess, again[k].ess);
    EXPECT_EQ(serial[k].status, parallel[k].status);
  }
}

TEST(RunBenchmark, SingularRunsAreKeptWithStatus) {
  // The second component never leaves zero, so Xi is singular.
  const auto path = temp_file("frozen.table");
  std::ofstream(path) << "0 0 0\n1 0 0.5\n2 0 0.2\n";
  BenchConfig c = small(Family::table);
  c.table_file = path;
  c.samplers = {SamplerTag::pps, SamplerTag::bd};
  c.reps = 1;
  const auto records = run_benchmark(c);
  ASSERT_EQ(records.size(), 2u);
  for (const auto& r : records) {
    EXPECT_EQ(r.status, "xi-not-pd");
    EXPECT_FALSE(r.ok());
  }
  std::filesystem::remove(path);
}

TEST(RunBenchmark, PpsBeatsBirthDeathOnPoisson) {
  BenchConfig c = BenchConfig::desk(Family::poisson);
  c.samplers = {SamplerTag::pps, SamplerTag::bd};
  c.reps = 3;
  const auto rows = summarize(run_benchmark(c));
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t g = 0; g < 3; ++g) EXPECT_GT(rows[2 * g].ess_per_1000, rows[2 * g + 1].ess_per_1000) << rows[2 * g].param;
}

TEST(Summarize, Examples) {
  auto rec = [](double param, const char* sampler, double ess) {
    RunRecord r;
    r.family = "poisson";
    r.param = param;
    r.sampler = sampler;
    r.k = 1000;
    r.ess = ess;
    r.ess_per_second = 2 * ess;
    r.status = "ok";
    return r;
  };
  const auto rows = summarize({rec(1, "pps", 90), rec(1, "pps", 110), rec(2, "pps", 50), rec(2, "pps", 50),
                               rec(5, "bd", 10), [&] {
                                 auto r = rec(5, "bd", 0);
                                 r.status = "sigma-not-pd";
                                 return r;
                               }()});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].n, 2u);
  EXPECT_DOUBLE_EQ(rows[0].ess_per_1000, 100.0);
  const double t = boost::math::quantile(boost::math::students_t(1.0), 0.975);
  EXPECT_NEAR(*rows[0].ess_per_1000_ci, t * std::sqrt(200.0) / std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(t, 12.706204736, 1e-8);
  EXPECT_EQ(*rows[1].ess_per_1000_ci, 0.0);
  EXPECT_EQ(rows[2].n, 1u);
  EXPECT_FALSE(rows[2].ess_per_1000_ci.has_value());
  EXPECT_FALSE(rows[2].ess_per_second_ci.has_value());
}

TEST(Summarize, ScalesToThousandSamples) {
  RunRecord r;
  r.family = "sk";
  r.sampler = "bd";
  r.k = 300'000;
  r.ess = 60'000;
  r.status = "ok";
  EXPECT_DOUBLE_EQ(summarize({r})[0].ess_per_1000, 200.0);
}

// The plotting script reads this exact layout.
TEST(Csv, HeaderAndRoundTrip) {
  BenchConfig c = small(Family::poisson);
  c.grid = {1.0, 5.0};
  const auto records = run_benchmark(c);
  std::stringstream buf;
  write_csv(buf, records);
  std::string header;
  std::getline(buf, header);
  EXPECT_EQ(header, "family,param,sampler,replicate,seed,k,b,ess,cpu_seconds,ess_per_second,status");
  buf.seekg(0);
  const auto back = read_csv(buf);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    EXPECT_EQ(back[k].family, records[k].family);
    EXPECT_EQ(back[k].param, records[k].param);
    EXPECT_EQ(back[k].sampler, records[k].sampler);
    EXPECT_EQ(back[k].replicate, records[k].replicate);
    EXPECT_EQ(back[k].seed, records[k].seed);
    EXPECT_EQ(back[k].k, records[k].k);
    EXPECT_EQ(back[k].b, records[k].b);
    EXPECT_EQ(back[k].ess, records[k].ess);  // shortest round-trip formatting
    EXPECT_EQ(back[k].cpu_seconds, records[k].cpu_seconds);
    EXPECT_EQ(back[k].status, records[k].status);
  }
}

TEST(Csv, RejectsForeignLayouts) {
  std::istringstream wrong_header("family,param,sampler\npoisson,1,pps\n");
  EXPECT_THROW(read_csv(wrong_header), std::invalid_argument);
  std::istringstream short_row(
      "family,param,sampler,replicate,seed,k,b,ess,cpu_seconds,ess_per_second,status\npoisson,1,pps,0\n");
  EXPECT_THROW(read_csv(short_row), std::invalid_argument);
  std::istringstream bad_number(
      "family,param,sampler,replicate,seed,k,b,ess,cpu_seconds,ess_per_second,status\n"
      "poisson,one,pps,0,1,2,1,1,1,1,ok\n");
  EXPECT_THROW(read_csv(bad_number), std::invalid_argument);
}

TEST(Csv, SummaryLeavesMissingIntervalsBlank) {
  RunRecord r;
  r.family = "poisson";
  r.param = 5;
  r.sampler = "pps";
  r.k = 1000;
  r.ess = 100;
  r.ess_per_second = 7;
  r.status = "ok";
  std::stringstream out;
  write_summary_csv(out, summarize({r}));
  std::string header, row;
  std::getline(out, header);
  std::getline(out, row);
  EXPECT_EQ(header, "family,param,sampler,n,ess_per_1000,ess_per_1000_ci95,ess_per_second,ess_per_second_ci95");
  EXPECT_EQ(row, "poisson,5,pps,1,100,,7,");
}

TEST(Cli, WritesCsvAndReportsFailures) {
  const auto out = temp_file("cli.csv");
  const std::string exe = TPS_BENCH_EXE;
  const std::string ok = exe + " --target sk --dim 4 --grid 0.5 --samplers pps,zanella-min --steps 20000 --burnin 100 "
                               "--batch-size 1000 --reps 2 --recompute incremental --out " + out.string();
  ASSERT_EQ(std::system(ok.c_str()), 0);
  std::ifstream in(out);
  const auto records = read_csv(in);
  EXPECT_EQ(records.size(), 4u);
  EXPECT_EQ(records[2].sampler, "zanella-min");

  const auto table = temp_file("cli.table");
  std::ofstream(table) << "0 0 0\n1 0 0\n";
  const std::string bad = exe + " --target table --table-file " + table.string() + " --samplers bd --steps 4000 "
                                "--batch-size 1000 --reps 1 --out " + out.string() + " 2>/dev/null";
  const int status = std::system(bad.c_str());
  EXPECT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 1);
  std::filesystem::remove(out);
  std::filesystem::remove(table);
}
