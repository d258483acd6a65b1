#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rowswap/params.hpp"
#include "rowswap/rows.hpp"

namespace rowswap {

struct MitigationTrigger {
  LogicalRow row;
  std::uint32_t count = 0;  // tracked count when the trigger fired
};

enum class TriggerPolicy {
  ResetCount,   // tracked count drops to zero after a trigger
  KeepCounting, // count keeps growing; triggers at every multiple of T_S
};

class ActivationTracker {
 public:
  virtual ~ActivationTracker() = default;

  virtual std::optional<MitigationTrigger> observe(LogicalRow row) = 0;
  // True when the next observe(row) would trigger.
  virtual bool would_trigger(LogicalRow row) const = 0;
  virtual std::uint32_t count(LogicalRow row) const = 0;
  // Drops the row's count; used when its activations are accounted elsewhere.
  virtual void forget(LogicalRow row) = 0;
  virtual void reset() = 0;
  // Every (row, count) currently tracked, sorted by row.
  virtual std::vector<std::pair<LogicalRow, std::uint32_t>> snapshot() const = 0;
  std::string dump_csv() const;
};

// Misra-Gries heavy-hitter counter with a global decrement on overflow.
class MisraGriesTracker final : public ActivationTracker {
 public:
  MisraGriesTracker(std::size_t capacity, std::uint32_t t_s, TriggerPolicy policy = TriggerPolicy::ResetCount);

  // 2 * ceil(ACT_max / T_S).
  static std::size_t default_capacity(const TimingParams& timing, std::uint32_t t_s);

  std::optional<MitigationTrigger> observe(LogicalRow row) override;
  bool would_trigger(LogicalRow row) const override;
  std::uint32_t count(LogicalRow row) const override;
  void forget(LogicalRow row) override { entries_.erase(row.value); }
  void reset() override;
  std::vector<std::pair<LogicalRow, std::uint32_t>> snapshot() const override;

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Total decrement applied to every row so far; bounds undercounting.
  std::uint64_t spill() const { return spill_; }

 private:
  std::size_t capacity_;
  std::uint32_t t_s_;
  TriggerPolicy policy_;
  std::unordered_map<std::uint32_t, std::uint32_t> entries_;
  std::uint64_t spill_ = 0;
};

// Per-row exact counts; the idealized tracker.
class ExactTracker final : public ActivationTracker {
 public:
  ExactTracker(std::uint32_t t_s, TriggerPolicy policy = TriggerPolicy::ResetCount);

  std::optional<MitigationTrigger> observe(LogicalRow row) override;
  bool would_trigger(LogicalRow row) const override;
  std::uint32_t count(LogicalRow row) const override;
  void forget(LogicalRow row) override { counts_.erase(row.value); }
  void reset() override { counts_.clear(); }
  std::vector<std::pair<LogicalRow, std::uint32_t>> snapshot() const override;

 private:
  std::uint32_t t_s_;
  TriggerPolicy policy_;
  std::unordered_map<std::uint32_t, std::uint32_t> counts_;
};

struct CounterRecord {
  std::uint32_t total = 0;
  std::uint32_t counter_row = 0;
};

struct FullResetEvent {
  std::uint64_t counter_rows = 0;  // each read/written once
};

// Per-row 32-bit swap-tracking counters (19-bit epoch id, 13-bit saturating
// count) kept in reserved DRAM rows, plus the on-chip epoch register.
class SwapCounterStore {
 public:
  static constexpr unsigned kEpochBits = 19;
  static constexpr unsigned kCountBits = 13;
  static constexpr std::uint32_t kEpochMask = (1u << kEpochBits) - 1;
  static constexpr std::uint32_t kCountMax = (1u << kCountBits) - 1;

  SwapCounterStore(std::uint64_t rows, std::uint32_t row_size_bytes, std::uint32_t epoch_register = 0);

  CounterRecord record_swap(PhysicalRow row, std::uint32_t acts_at_swap);
  std::uint32_t read(PhysicalRow row) const;
  std::uint32_t counter_row_of(PhysicalRow row) const;
  std::optional<FullResetEvent> advance_epoch();

  std::uint32_t epoch_register() const { return epoch_register_; }
  std::uint64_t counter_rows() const { return counter_row_acts_.size(); }
  std::uint64_t counter_row_acts(std::uint32_t counter_row) const { return counter_row_acts_.at(counter_row); }
  std::uint32_t raw(PhysicalRow row) const { return counters_.at(row.value); }

 private:
  std::vector<std::uint32_t> counters_;
  std::uint32_t rows_per_counter_row_;
  std::vector<std::uint64_t> counter_row_acts_;
  std::uint32_t epoch_register_;
};

}  // namespace rowswap
