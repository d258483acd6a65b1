#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rowswap/params.hpp"

namespace rowswap {

// The requested rounds do not fit in the epoch (t_left < 0) or leave fewer
// guesses than required hits.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AttackAnalysis {
  std::uint64_t rounds = 0;  // effective N; always 0 for SRS
  double act_aggr = 0;
  double act_left = 0;
  std::uint64_t k = 0;
  Duration t_actual{0};
  Duration t_aggr{0};
  Duration t_left{0};
  Duration per_guess{0};
  std::uint64_t guesses = 0;
  double row_probability = 0;  // 1/R
  double p_success = 0;
  double log_p_success = 0;
  double at_iter = 0;
  Duration epoch{0};
  double at_time_s = 0;
  bool deterministic = false;

  bool operator==(const AttackAnalysis&) const = default;
};

// log of C(n,k) p^k (1-p)^(n-k), via lgamma.
double log_binomial_pmf(std::uint64_t n, std::uint64_t k, double p);

AttackAnalysis juggernaut_rrs(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                              const AttackPlan& plan);
AttackAnalysis juggernaut_srs(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                              const AttackPlan& plan);
// Dispatches on cfg.kind (RRS or SRS).
AttackAnalysis analyze_attack(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                              const AttackPlan& plan);

struct SweepPoint {
  std::uint64_t n = 0;
  std::optional<AttackAnalysis> analysis;
  std::string infeasible_reason;
};

struct RoundSweep {
  std::vector<SweepPoint> points;
  std::optional<std::uint64_t> argmin_n;

  const AttackAnalysis* best() const;
  // Largest N with a feasible analysis, if any.
  std::optional<std::uint64_t> feasibility_limit() const;
};

RoundSweep sweep_rounds(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                        std::uint64_t n_max);

enum class GuessAccounting {
  SwapLatency,       // each guessed row costs (T_S-1) t_RC + t_swap of usable time
  ActivationBudget,  // floor(ACT_max / T_S), latency ignored
};

struct OutlierAnalysis {
  std::uint64_t guesses = 0;
  std::uint64_t k_swaps = 0;
  double expected_rows_k = 0;  // R_K
  std::uint64_t m = 0;
  double log_p_m = 0;
  double p_m = 0;
  double time_to_appear_s = 0;
  double log10_time_to_appear_s = 0;
  bool beyond_horizon = false;  // p_m underflowed; log values remain valid
};

std::uint64_t outlier_guesses(const TimingParams& timing, const DefenseConfig& cfg, GuessAccounting mode);
OutlierAnalysis outlier_time(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                             std::uint64_t k_swaps, std::uint64_t m,
                             GuessAccounting mode = GuessAccounting::SwapLatency);

// Worst-case pins per epoch for Scale-SRS: a pinned location has at least
// (limit-1) T_S recorded activations and one epoch holds at most ACT_max.
std::uint64_t scale_srs_pin_bound(const TimingParams& timing, const DefenseConfig& cfg);

struct StorageCalibration {
  double rrs_entry_bits = 75;
  double srs_entry_bits = 75;
  double scale_srs_entry_bits = 41;
  std::uint64_t swap_buffer_bytes = 1024;
  std::uint64_t placeback_bytes = 0;  // 0: one row (row_size_bytes)
  std::uint64_t epoch_register_bits = 19;
  std::uint64_t pin_entry_bits = 35;
  std::uint64_t pin_entries = 0;  // 0: default_pin_entries(t_rh)
};

std::uint64_t default_pin_entries(std::uint32_t t_rh);

struct StorageLine {
  std::string structure;
  double bits = 0;
  double bytes() const { return bits / 8.0; }
};

struct StorageReport {
  DefenseKind kind = DefenseKind::RRS;
  std::uint64_t max_swaps = 0;
  std::uint64_t rit_entries = 0;
  std::vector<StorageLine> lines;

  double total_bits() const;
  double total_bytes() const { return total_bits() / 8.0; }
  // Bits of the named structure, 0 when absent.
  double bits_of(const std::string& structure) const;
};

inline constexpr const char* kRit = "rit";
inline constexpr const char* kSwapBuffer = "swap_buffer";
inline constexpr const char* kPlaceBackBuffer = "place_back_buffer";
inline constexpr const char* kEpochRegister = "epoch_register";
inline constexpr const char* kPinBuffer = "pin_buffer";

StorageReport storage_report(const DramGeometry& geom, const DefenseConfig& cfg, const TimingParams& timing = {},
                             const StorageCalibration& cal = {});

struct SwapCounterLayout {
  unsigned counter_bits = 32;
  unsigned epoch_bits = 19;
  unsigned act_bits = 13;
  std::uint64_t reserved_bytes_per_bank = 0;
  std::uint64_t counter_rows = 0;
  double fraction_of_dram = 0;
  Duration counter_epoch{0};
  double wraparound_period_s = 0;
  Duration reset_cost{0};
  // Reference figure quoted for the full counter reset, kept as metadata.
  Duration reported_reset_latency{41000};
};

SwapCounterLayout swap_counter_layout(const DramGeometry& geom, const TimingParams& timing = {});

double pinned_llc_fraction(std::uint64_t pinned_bytes, std::uint64_t llc_bytes = 8ull << 20);

}  // namespace rowswap
