#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rowswap/analytic.hpp"

namespace rowswap {

class DegenerateProbabilityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class McMode {
  GeometricEvent,  // epochs-to-success drawn from Geometric(p_success)
  BinomialDraw,    // one Binomial(G, 1/R) draw per epoch until success
};

enum class SuccessRule {
  AtLeastK,  // an epoch succeeds when the target is hit k or more times
  ExactlyK,  // matches the analytic point probability
};

struct McOptions {
  McMode mode = McMode::GeometricEvent;
  SuccessRule rule = SuccessRule::AtLeastK;
  unsigned jobs = 1;
  // Sub-stream of the master seed; sweeps use the round count so each point
  // draws independent numbers.
  std::uint64_t stream = 0;
};

struct McRun {
  std::uint64_t iterations = 0;
  std::uint64_t master_seed = 0;
  McMode mode = McMode::GeometricEvent;
  Duration epoch{0};
  std::vector<std::uint64_t> samples;  // epochs to success, in iteration order
  double mean_epochs = 0;
  double stddev_epochs = 0;
  double mean_s = 0;
  double p50_s = 0;
  double p90_s = 0;
  double p99_s = 0;

  // Standard error of mean_s.
  double standard_error_s() const;
};

// BinomialDraw refuses p_success below this; expected epochs per sample would
// make it impractically slow.
inline constexpr double kBinomialDrawMinP = 1e-7;

McRun mc_attack_time(const AttackAnalysis& analysis, std::uint64_t iterations, std::uint64_t master_seed,
                     const McOptions& options = {});

// Nearest-rank percentile of unsorted samples; q in (0, 1].
std::uint64_t percentile(std::vector<std::uint64_t> samples, double q);

struct McSweepRow {
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  double p_success = 0;
  double analytic_s = 0;
  double mc_mean_s = 0;
  double mc_p50_s = 0;
  double mc_p90_s = 0;
  double mc_p99_s = 0;
  std::uint64_t iterations = 0;
  std::uint64_t seed = 0;
};

// Rounds with no feasible attack are skipped.
std::vector<McSweepRow> mc_sweep(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                                 const std::vector<std::uint64_t>& n_values, std::uint64_t iterations,
                                 std::uint64_t master_seed, const McOptions& options = {});

}  // namespace rowswap
