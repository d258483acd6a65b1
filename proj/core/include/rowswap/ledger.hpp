#pragma once

#include <cstdint>
#include <vector>

#include "rowswap/params.hpp"
#include "rowswap/rows.hpp"

namespace rowswap {

struct EpochTally {
  std::uint32_t max_acts = 0;
  PhysicalRow hottest{};
  std::uint64_t total_acts = 0;
  Duration elapsed{0};
};

// Ground-truth activations per physical row for the current epoch, plus the
// epoch's time cursor. This is what breach decisions are made from.
class ActivationLedger {
 public:
  ActivationLedger(std::uint64_t rows, Duration budget);

  void activate(PhysicalRow row, std::uint32_t n = 1);
  std::uint32_t count(PhysicalRow row) const { return counts_.at(row.value); }
  std::uint32_t max_count() const { return max_; }
  PhysicalRow hottest() const { return hottest_; }
  std::uint64_t total() const { return total_; }
  std::uint64_t rows() const { return counts_.size(); }

  Duration budget() const { return budget_; }
  Duration elapsed() const { return elapsed_; }
  Duration remaining() const { return budget_ - elapsed_; }
  bool fits(Duration d) const { return d <= remaining(); }
  // Moves the cursor; throws std::logic_error past the budget.
  void advance(Duration d);

  // Archives this epoch's tally and zeroes counts and cursor.
  void close_epoch();
  const std::vector<EpochTally>& history() const { return history_; }

 private:
  std::vector<std::uint32_t> counts_;
  std::uint32_t max_ = 0;
  PhysicalRow hottest_{};
  std::uint64_t total_ = 0;
  Duration budget_;
  Duration elapsed_{0};
  std::vector<EpochTally> history_;
};

}  // namespace rowswap
