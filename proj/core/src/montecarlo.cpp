#include "rowswap/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "rowswap/rng.hpp"

namespace rowswap {

namespace {

constexpr std::uint64_t kMcStream = 0x6d63u;

std::uint64_t geometric_sample(double p, SplitMix64& rng) {
  if (p >= 1.0) return 1;
  const double u = rng.unit_open_closed();
  const double epochs = std::ceil(std::log(u) / std::log1p(-p));
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(epochs));
}

std::uint64_t binomial_sample(const AttackAnalysis& a, SuccessRule rule, SplitMix64& rng) {
  std::binomial_distribution<std::uint64_t> hits(a.guesses, a.row_probability);
  for (std::uint64_t epoch = 1;; ++epoch) {
    const auto x = hits(rng);
    if (rule == SuccessRule::AtLeastK ? x >= a.k : x == a.k) return epoch;
  }
}

}  // namespace

double McRun::standard_error_s() const {
  return iterations == 0 ? 0 : stddev_epochs * to_seconds(epoch) / std::sqrt(static_cast<double>(iterations));
}

std::uint64_t percentile(std::vector<std::uint64_t> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("percentile of no samples");
  if (!(q > 0 && q <= 1)) throw std::invalid_argument("percentile q must be in (0, 1]");
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
  const auto idx = std::min(samples.size(), std::max<std::size_t>(rank, 1)) - 1;
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(idx), samples.end());
  return samples[idx];
}

McRun mc_attack_time(const AttackAnalysis& analysis, std::uint64_t iterations, std::uint64_t master_seed,
                     const McOptions& options) {
  if (iterations == 0) throw std::invalid_argument("iterations must be >= 1");
  const bool certain = analysis.deterministic || analysis.p_success >= 1.0;
  if (!certain && !(analysis.p_success > 0)) {
    throw DegenerateProbabilityError("p_success is 0; the attack never succeeds");
  }
  if (!certain && options.mode == McMode::BinomialDraw) {
    if (analysis.p_success < kBinomialDrawMinP) {
      throw DegenerateProbabilityError("BinomialDraw needs p_success >= 1e-7; use GeometricEvent");
    }
    if (analysis.guesses == 0 || analysis.row_probability <= 0) {
      throw std::invalid_argument("BinomialDraw needs guesses and a row probability");
    }
  }

  McRun run;
  run.iterations = iterations;
  run.master_seed = master_seed;
  run.mode = options.mode;
  run.epoch = analysis.epoch;
  run.samples.assign(iterations, 1);

  if (!certain) {
    auto work = [&](std::uint64_t begin, std::uint64_t end) {
      for (std::uint64_t i = begin; i < end; ++i) {
        SplitMix64 rng(derive_seed(master_seed, kMcStream + options.stream, i));
        run.samples[i] = options.mode == McMode::GeometricEvent ? geometric_sample(analysis.p_success, rng)
                                                                : binomial_sample(analysis, options.rule, rng);
      }
    };
    const std::uint64_t jobs = std::clamp<std::uint64_t>(options.jobs, 1, iterations);
    if (jobs == 1) {
      work(0, iterations);
    } else {
      std::vector<std::jthread> pool;
      const std::uint64_t chunk = (iterations + jobs - 1) / jobs;
      for (std::uint64_t b = 0; b < iterations; b += chunk) pool.emplace_back(work, b, std::min(iterations, b + chunk));
    }
  }

  // Summed in iteration order so the result does not depend on jobs.
  long double sum = 0;
  for (const auto s : run.samples) sum += static_cast<long double>(s);
  const long double mean = sum / static_cast<long double>(iterations);
  long double sq = 0;
  for (const auto s : run.samples) {
    const long double d = static_cast<long double>(s) - mean;
    sq += d * d;
  }
  run.mean_epochs = static_cast<double>(mean);
  run.stddev_epochs = iterations > 1 ? static_cast<double>(std::sqrt(sq / static_cast<long double>(iterations - 1))) : 0;
  const double epoch_s = to_seconds(analysis.epoch);
  run.mean_s = run.mean_epochs * epoch_s;
  run.p50_s = static_cast<double>(percentile(run.samples, 0.50)) * epoch_s;
  run.p90_s = static_cast<double>(percentile(run.samples, 0.90)) * epoch_s;
  run.p99_s = static_cast<double>(percentile(run.samples, 0.99)) * epoch_s;
  return run;
}

std::vector<McSweepRow> mc_sweep(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                                 const std::vector<std::uint64_t>& n_values, std::uint64_t iterations,
                                 std::uint64_t master_seed, const McOptions& options) {
  if (cfg.kind != DefenseKind::RRS && cfg.kind != DefenseKind::SRS) {
    throw ValidationError("mc_sweep needs defense rrs or srs");
  }
  std::vector<McSweepRow> rows;
  for (const auto n : n_values) {
    AttackAnalysis a;
    try {
      a = analyze_attack(timing, geom, cfg, AttackPlan{n, AttackStrategy::JuggernautBias});
    } catch (const InfeasibleError&) {
      continue;
    }
    McOptions point = options;
    point.stream = n;
    const auto run = mc_attack_time(a, iterations, master_seed, point);
    rows.push_back({n, a.k, a.p_success, a.at_time_s, run.mean_s, run.p50_s, run.p90_s, run.p99_s, iterations,
                    master_seed});
  }
  return rows;
}

}  // namespace rowswap
