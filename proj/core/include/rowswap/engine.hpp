#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "rowswap/indirection.hpp"
#include "rowswap/ledger.hpp"
#include "rowswap/params.hpp"
#include "rowswap/rng.hpp"
#include "rowswap/tracker.hpp"

namespace rowswap {

enum class TrackerKind { MisraGries, Exact };

enum class PinPolicy {
  // Freeze a location once one more T_S burst could take it to
  // outlier_swap_limit * T_S recorded activations.
  Projected,
  // Pin only after the recorded count reaches outlier_swap_limit * T_S.
  AtThreshold,
};

struct EngineOptions {
  TrackerKind tracker = TrackerKind::MisraGries;
  TriggerPolicy trigger_policy = TriggerPolicy::ResetCount;
  std::size_t tracker_capacity = 0;  // 0: MisraGriesTracker::default_capacity
  bool immediate_unswap = true;      // RRS only
  // The attacker splits its first burst around a tracker reset so the target
  // takes 2 T_S - 1 direct activations before the first swap.
  bool exploit_tracker_desync = true;
  // Run one unmeasured fill epoch first so the RIT starts populated.
  bool warm_start = false;
  PinPolicy pin_policy = PinPolicy::Projected;
  std::size_t pin_capacity = 0;  // 0: default_pin_entries(t_rh)
  unsigned rit_ways = RowIndirectionTable::kDefaultWays;
};

struct EpochReport {
  std::uint32_t max_physical_acts = 0;
  PhysicalRow hottest{};
  bool breached = false;
  std::uint64_t swaps = 0;
  std::uint64_t unswap_swaps = 0;
  std::uint64_t reswaps = 0;
  std::uint64_t pins = 0;
  std::uint64_t placeback_steps = 0;
  std::uint64_t evictions = 0;
  std::uint64_t demand_acts = 0;      // activations debited to the ledger by demand
  std::uint64_t mitigation_acts = 0;  // debited by swaps, reswaps and place-back
  std::uint64_t absorbed_acts = 0;    // served by pinned rows or the place-back buffer
  std::uint64_t bias_rounds = 0;
  std::uint64_t guesses = 0;
  std::optional<LogicalRow> target;
  std::uint32_t target_home_after_bias = 0;
  Duration act_time{0};
  Duration mitigation_time{0};
  Duration refresh_time{0};
  Duration idle_time{0};
  Duration deferred_time{0};  // end-of-epoch place-back burst, spills past the epoch
  bool truncated = false;     // a stream ran out of time before its end

  Duration overhead_time() const { return mitigation_time + deferred_time; }
  bool operator==(const EpochReport&) const = default;
};

// One bank under one defense. Demand activations go through activate();
// the simulator applies tracking, mitigation, latent activations and time.
class BankSimulator {
 public:
  BankSimulator(const DefenseConfig& defense, const TimingParams& timing, const DramGeometry& geom,
                std::uint64_t seed, const EngineOptions& options = {});
  ~BankSimulator();
  BankSimulator(const BankSimulator&) = delete;
  BankSimulator& operator=(const BankSimulator&) = delete;

  // Time the next activate(row) would take.
  Duration cost_of(LogicalRow row) const;
  // Upper estimate of a burst of n activations to `row`.
  Duration burst_cost(LogicalRow row, std::uint32_t n) const;
  // One demand activation. Returns false, changing nothing, when it does not
  // fit in the remaining epoch time.
  bool activate(LogicalRow row);
  // Activations issued; stops at the first that does not fit.
  std::uint32_t burst(LogicalRow row, std::uint32_t n);

  // The defense's periodic tracker reset.
  void reset_tracker();

  // Closes the epoch and returns its report; the next epoch starts at once.
  EpochReport end_epoch();
  EpochReport& report() { return report_; }

  const ActivationLedger& ledger() const { return ledger_; }
  const RowIndirectionTable* rit() const { return rit_.get(); }
  const PinBuffer& pin_buffer() const { return pins_; }
  const SwapCounterStore* counters() const { return counters_.get(); }
  const ActivationTracker* tracker() const { return tracker_.get(); }
  const DefenseConfig& defense() const { return defense_; }
  const TimingParams& timing() const { return timing_; }
  std::uint32_t rows() const { return rows_; }
  SplitMix64& rng() { return rng_; }
  bool pinned(LogicalRow row) const { return pins_.contains(row.value); }
  std::size_t max_pins() const { return max_pins_; }
  std::uint64_t receipt_debits() const { return receipt_debits_; }

 private:
  Duration mitigation_latency(LogicalRow row) const;
  std::uint32_t chain_steps_pending(LogicalRow row) const;
  void mitigate(LogicalRow row, std::uint32_t tracked);
  void mitigate_scale_srs(LogicalRow row, std::uint32_t tracked);
  LogicalRow pick_unswapped_partner(LogicalRow aggressor);
  LogicalRow pick_any_partner(LogicalRow aggressor);
  void account(const SwapReceipt& r);
  void account(const EvictProgress& p);
  void record_locations(const std::vector<LedgerDebit>& debits, const std::vector<RowMove>& moves,
                        std::optional<PhysicalRow> burst_at, std::uint32_t burst_acts);
  void check_pin(PhysicalRow p);
  void pin_row(LogicalRow row, PhysicalRow at);
  void run_due_placeback();
  void begin_epoch();

  DefenseConfig defense_;
  TimingParams timing_;
  EngineOptions options_;
  std::uint32_t rows_;
  SplitMix64 rng_;
  ActivationLedger ledger_;
  std::unique_ptr<ActivationTracker> tracker_;
  std::unique_ptr<RowIndirectionTable> rit_;
  PlaceBackBuffer placeback_;
  PinBuffer pins_;
  std::unique_ptr<SwapCounterStore> counters_;
  std::vector<bool> frozen_;
  std::uint64_t unswap_calls_ = 0;
  std::size_t max_pins_ = 0;
  std::uint64_t receipt_debits_ = 0;
  Duration placeback_interval_{0};
  Duration next_placeback_{0};
  EpochReport report_;
};

EpochReport run_epoch(const DefenseConfig& defense, const AttackPlan& plan, const TimingParams& timing,
                      const DramGeometry& geom, std::uint64_t seed, const EngineOptions& options = {});

struct BreachResult {
  std::uint64_t epochs = 0;
  bool breached = false;
};

BreachResult run_until_breach(const DefenseConfig& defense, const AttackPlan& plan, const TimingParams& timing,
                              const DramGeometry& geom, std::uint64_t seed, std::uint64_t max_epochs,
                              const EngineOptions& options = {});

// A fixed activation stream, optionally with a tracker reset before index
// `tracker_reset_at`.
struct Workload {
  std::vector<LogicalRow> acts;
  std::optional<std::size_t> tracker_reset_at;
};

// One decimal row id per line; '#' starts a comment; blank lines ignored.
Workload parse_trace(std::string_view text, std::uint32_t rows);
Workload load_trace(const std::filesystem::path& path, std::uint32_t rows);

// Fixed-stream version of the Juggernaut pattern: the split first burst
// around a tracker reset, `rounds` bursts to the target, then `guesses`
// bursts to uniformly random other rows.
Workload juggernaut_workload(std::uint32_t rows, std::uint32_t t_s, std::uint64_t rounds, std::uint64_t guesses,
                             std::uint64_t seed);
// `bursts` bursts of `burst_len` activations to uniformly random rows.
Workload random_burst_workload(std::uint32_t rows, std::uint32_t burst_len, std::uint64_t bursts, std::uint64_t seed);
// `acts` activations to uniformly random rows.
Workload uniform_workload(std::uint32_t rows, std::uint64_t acts, std::uint64_t seed);

EpochReport run_stream_epoch(const DefenseConfig& defense, const Workload& workload, const TimingParams& timing,
                             const DramGeometry& geom, std::uint64_t seed, const EngineOptions& options = {});
EpochReport run_scale_srs_epoch(const DefenseConfig& defense, const Workload& workload, const TimingParams& timing,
                                const DramGeometry& geom, std::uint64_t seed, const EngineOptions& options = {});

// Bandwidth-overhead proxy for mitigation cost; not an IPC model.
struct OverheadSummary {
  std::uint64_t epochs = 0;
  std::uint64_t swaps = 0;
  std::uint64_t unswap_swaps = 0;
  std::uint64_t reswaps = 0;
  std::uint64_t pins = 0;
  std::uint64_t placeback_steps = 0;
  Duration overhead_time{0};
  Duration deferred_time{0};
  double overhead_fraction = 0;  // overhead_time / (epochs * epoch)
};

OverheadSummary overhead_metrics(const std::vector<EpochReport>& reports, const TimingParams& timing);

}  // namespace rowswap
