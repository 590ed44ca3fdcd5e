#include "tps/bench.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "tps/ess.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tps {

namespace {

constexpr std::uint64_t kTargetStream = 0x7461726765747357ULL;  // "targetsW"

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, end);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("bad integer '" + s + "'");
  return v;
}

const char* kCsvHeader = "family,param,sampler,replicate,seed,k,b,ess,cpu_seconds,ess_per_second,status";

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::poisson: return "poisson";
    case Family::sk: return "sk";
    case Family::neural: return "neural";
    case Family::table: return "table";
  }
  return "?";
}

Family parse_family(std::string_view text) {
  for (auto f : {Family::poisson, Family::sk, Family::neural, Family::table})
    if (to_string(f) == text) return f;
  throw std::invalid_argument("unknown target family: " + std::string(text));
}

// BenchConfig

BenchConfig BenchConfig::desk(Family family) {
  BenchConfig c;
  c.family = family;
  c.dim = family == Family::poisson ? 1 : 20;
  switch (family) {
    case Family::poisson: c.grid = {1.0, 5.0, 10.0}; break;
    case Family::sk: c.grid = {0.25, 0.5, 1.0, 2.0}; break;
    case Family::neural: c.grid = {0.0, 0.5, 1.0, 2.0}; break;
    case Family::table: c.grid = {0.0}; break;
  }
  return c;
}

BenchConfig BenchConfig::paper(Family family) {
  BenchConfig c = desk(family);
  c.dim = family == Family::poisson ? 1 : 100;
  c.steps = 9'000'000;
  c.burn_in = 1'000'000;
  c.batch_size = 3'000;
  c.reps = 10;
  return c;
}

void BenchConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (steps < 2 * batch_size) throw std::invalid_argument("steps must be at least twice the batch size");
  if (reps == 0) throw std::invalid_argument("need at least one replicate");
  if (samplers.empty()) throw std::invalid_argument("no samplers selected");
  if (family == Family::table) {
    if (table_file.empty()) throw std::invalid_argument("table family needs a table file");
  } else {
    if (grid.empty()) throw std::invalid_argument("parameter grid is empty");
    if (dim == 0) throw std::invalid_argument("dimension must be positive");
  }
}

// Seeds and targets

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t grid_index, std::uint64_t sampler_index,
                          std::uint64_t replicate) {
  std::uint64_t h = mix64(base + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (grid_index + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (sampler_index + 0x85157af5ULL));
  h = mix64(h ^ (replicate + 0xd6e8feb86659fd93ULL));
  return h;
}

std::uint64_t target_seed(std::uint64_t base) { return derive_seed(base, kTargetStream, kTargetStream, kTargetStream); }

TargetPtr build_target(const BenchConfig& config, std::size_t grid_index) {
  if (config.family == Family::table) return std::make_shared<const TableTarget>(TableTarget::from_file(config.table_file));
  const double param = config.grid.at(grid_index);
  Rng rng(target_seed(config.seed));
  switch (config.family) {
    case Family::poisson: return std::make_shared<const PoissonTarget>(config.dim, param);
    case Family::sk: return std::make_shared<const SKTarget>(param, random_sk_weights(config.dim, rng));
    case Family::neural: {
      const auto n = static_cast<Eigen::Index>(config.dim);
      return std::make_shared<const NeuralTarget>(param * random_neural_weights(config.dim, rng),
                                                  Eigen::VectorXd::Constant(n, 5.0), 0.0, 1.0);
    }
    case Family::table: break;
  }
  throw std::invalid_argument("unknown family");
}

// Runs

RunRecord run_one(const BenchConfig& config, TargetPtr target, std::size_t grid_index, std::size_t sampler_index,
                  std::size_t replicate) {
  const SamplerTag tag = config.samplers.at(sampler_index);
  RunRecord rec;
  rec.family = std::string(to_string(config.family));
  rec.param = config.family == Family::table ? 0.0 : config.grid.at(grid_index);
  rec.sampler = std::string(to_string(tag));
  rec.replicate = replicate;
  rec.seed = derive_seed(config.seed, grid_index, static_cast<std::uint64_t>(tag), replicate);
  rec.b = config.batch_size;
  try {
    Rng rng(rec.seed);
    Chain chain(tag, std::move(target), config.mode);
    NullSink discard;
    chain.run(config.burn_in, rng, discard);
    const TimedLog timed = timed_run(chain, config.steps, rng, chain.state());

    BatchMeansAccumulator acc(timed.log.initial().size(), config.batch_size);
    timed.log.replay(acc);
    const EssReport report = acc.report();
    rec.k = report.k;
    rec.ess = report.ess;
    rec.cpu_seconds = timed.cpu_seconds;
    rec.ess_per_second = timed.cpu_seconds > 0.0 ? report.ess / timed.cpu_seconds : 0.0;
    rec.status = timed.wall_clock ? "ok-wall-clock" : "ok";
  } catch (const NotPositiveDefinite& e) {
    rec.status = e.which() + "-not-pd";
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (auto& ch : msg)
      if (ch == ',' || ch == '\n') ch = ';';
    rec.status = "error: " + msg;
  }
  return rec;
}

std::vector<RunRecord> run_benchmark(const BenchConfig& config, Schedule schedule) {
  config.validate();
  std::vector<TargetPtr> targets;
  for (std::size_t g = 0; g < config.grid_size(); ++g) targets.push_back(build_target(config, g));

  const std::size_t per_grid = config.samplers.size() * config.reps;
  const auto total = static_cast<std::ptrdiff_t>(config.run_count());
  std::vector<RunRecord> records(config.run_count());
  auto execute = [&](std::ptrdiff_t idx) {
    const auto n = static_cast<std::size_t>(idx);
    const std::size_t g = n / per_grid;
    const std::size_t s = (n % per_grid) / config.reps;
    const std::size_t r = n % config.reps;
    records[n] = run_one(config, targets[g], g, s, r);
  };

  if (schedule == Schedule::serial) {
    for (std::ptrdiff_t idx = 0; idx < total; ++idx) execute(idx);
    return records;
  }
#ifdef _OPENMP
  const int threads = config.workers > 0 ? static_cast<int>(config.workers) : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) execute(idx);
#else
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) execute(idx);
#endif
  return records;
}

// Summaries

std::optional<double> ci95_half_width(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return std::nullopt;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(n));
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  struct Group {
    SummaryRow row;
    std::vector<double> ess;
    std::vector<double> eps;
  };
  std::vector<Group> groups;
  std::map<std::tuple<std::string, double, std::string>, std::size_t> index;
  for (const auto& rec : records) {
    const auto key = std::make_tuple(rec.family, rec.param, rec.sampler);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      Group g;
      g.row.family = rec.family;
      g.row.param = rec.param;
      g.row.sampler = rec.sampler;
      groups.push_back(std::move(g));
    }
    if (rec.status.rfind("ok", 0) != 0 || rec.k == 0) continue;
    groups[it->second].ess.push_back(rec.ess * 1000.0 / static_cast<double>(rec.k));
    groups[it->second].eps.push_back(rec.ess_per_second);
  }
  std::vector<SummaryRow> out;
  for (auto& g : groups) {
    g.row.n = g.ess.size();
    if (g.row.n > 0) {
      double a = 0.0, b = 0.0;
      for (std::size_t k = 0; k < g.row.n; ++k) {
        a += g.ess[k];
        b += g.eps[k];
      }
      g.row.ess_per_1000 = a / static_cast<double>(g.row.n);
      g.row.ess_per_second = b / static_cast<double>(g.row.n);
    }
    g.row.ess_per_1000_ci = ci95_half_width(g.ess);
    g.row.ess_per_second_ci = ci95_half_width(g.eps);
    out.push_back(std::move(g.row));
  }
  return out;
}

// CSV

void write_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.family << ',' << format_double(r.param) << ',' << r.sampler << ',' << r.replicate << ',' << r.seed << ','
        << r.k << ',' << r.b << ',' << format_double(r.ess) << ',' << format_double(r.cpu_seconds) << ','
        << format_double(r.ess_per_second) << ',' << r.status << '\n';
  }
}

std::vector<RunRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("CSV header does not match the run schema");
  std::vector<RunRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 11) throw std::invalid_argument("CSV line " + std::to_string(lineno) + ": expected 11 columns");
    try {
      RunRecord r;
      r.family = cells[0];
      r.param = parse_double(cells[1]);
      r.sampler = cells[2];
      r.replicate = parse_u64(cells[3]);
      r.seed = parse_u64(cells[4]);
      r.k = parse_u64(cells[5]);
      r.b = parse_u64(cells[6]);
      r.ess = parse_double(cells[7]);
      r.cpu_seconds = parse_double(cells[8]);
      r.ess_per_second = parse_double(cells[9]);
      r.status = cells[10];
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::invalid_argument("CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "family,param,sampler,n,ess_per_1000,ess_per_1000_ci95,ess_per_second,ess_per_second_ci95\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    out << r.family << ',' << format_double(r.param) << ',' << r.sampler << ',' << r.n << ','
        << format_double(r.ess_per_1000) << ',' << opt(r.ess_per_1000_ci) << ',' << format_double(r.ess_per_second)
        << ',' << opt(r.ess_per_second_ci) << '\n';
  }
}

}  // namespace tps
