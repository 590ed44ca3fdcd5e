#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tps/samplers.hpp"
#include "tps/targets.hpp"

namespace tps {

enum class Family { poisson, sk, neural, table };

std::string_view to_string(Family family);
Family parse_family(std::string_view text);

/// One benchmark sweep: every grid point x sampler x replicate.
struct BenchConfig {
  Family family = Family::poisson;
  std::vector<double> grid;  // Lambda, beta or alpha; ignored for tables
  std::vector<SamplerTag> samplers{kAllSamplers.begin(), kAllSamplers.end()};
  std::size_t dim = 1;
  std::size_t steps = 300'000;
  std::size_t burn_in = 30'000;
  std::size_t batch_size = 3'000;
  std::size_t reps = 5;
  std::uint64_t seed = 1;
  EvalMode mode = EvalMode::full;
  std::filesystem::path table_file;
  std::size_t workers = 0;  // 0: OpenMP default

  /// Desk-scale defaults: d = 20 for SK/neural (1 for Poisson), k = 3e5,
  /// burn-in 3e4, b = 3000, R = 5.
  static BenchConfig desk(Family family);
  /// Full-size protocol: d = 100 (1 for Poisson), k = 9e6, burn-in 1e6,
  /// b = 3000, R = 10.
  static BenchConfig paper(Family family);

  /// Throws std::invalid_argument when k < 2b, R = 0 or the grid is empty.
  void validate() const;
  std::size_t grid_size() const { return family == Family::table ? 1 : grid.size(); }
  std::size_t run_count() const { return grid_size() * samplers.size() * reps; }
};

struct RunRecord {
  std::string family;
  double param = 0.0;
  std::string sampler;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  std::size_t b = 0;
  double ess = 0.0;
  double cpu_seconds = 0.0;
  double ess_per_second = 0.0;
  std::string status;  // "ok", "ok-wall-clock", "<xi|sigma>-not-pd" or "error: ..."

  bool ok() const { return status.rfind("ok", 0) == 0; }
};

/// Fixed avalanche mix of the four indices (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t grid_index, std::uint64_t sampler_index,
                          std::uint64_t replicate);

/// Seed of the weight matrix shared by every run of a config.
std::uint64_t target_seed(std::uint64_t base);

/// Target for grid point `grid_index`. SK uses W with N(0, 4/d) entries and
/// beta = grid value; neural uses W = alpha * W_hat with W_hat entries
/// N(0, 1/d), b_i = 5, a0 = 0, a1 = 1.
TargetPtr build_target(const BenchConfig& config, std::size_t grid_index);

/// Serial is the reference order; parallel distributes runs over OpenMP
/// threads. Both produce identical records apart from cpu timings.
enum class Schedule { serial, parallel };

/// Burn-in from the zero vector, k timed steps, batch-means ESS. Records are
/// in config order (grid, sampler, replicate). Runs whose covariance
/// estimates are not positive definite are kept with a failure status.
std::vector<RunRecord> run_benchmark(const BenchConfig& config, Schedule schedule = Schedule::parallel);

/// A single run, as executed by run_benchmark.
RunRecord run_one(const BenchConfig& config, TargetPtr target, std::size_t grid_index, std::size_t sampler_index,
                  std::size_t replicate);

struct SummaryRow {
  std::string family;
  double param = 0.0;
  std::string sampler;
  std::size_t n = 0;  // successful replicates
  double ess_per_1000 = 0.0;  // mean ESS scaled to 1000 sequential samples
  std::optional<double> ess_per_1000_ci;
  double ess_per_second = 0.0;
  std::optional<double> ess_per_second_ci;
};

/// Student-t 95% half-width, t_{0.975, n-1} * sd / sqrt(n). Empty for n < 2.
std::optional<double> ci95_half_width(const std::vector<double>& values);

/// One row per (grid point, sampler) in first-seen order, over successful runs.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

/// CSV with header
/// family,param,sampler,replicate,seed,k,b,ess,cpu_seconds,ess_per_second,status
void write_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace tps
