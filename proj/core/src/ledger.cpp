#include "rowswap/ledger.hpp"

#include <algorithm>
#include <stdexcept>

namespace rowswap {

ActivationLedger::ActivationLedger(std::uint64_t rows, Duration budget) : counts_(rows, 0), budget_(budget) {
  if (rows == 0) throw std::invalid_argument("ledger needs at least one row");
  if (budget.count() < 0) throw std::invalid_argument("ledger budget must be non-negative");
}

void ActivationLedger::activate(PhysicalRow row, std::uint32_t n) {
  auto& c = counts_.at(row.value);
  c += n;
  total_ += n;
  if (c > max_) {
    max_ = c;
    hottest_ = row;
  }
}

void ActivationLedger::advance(Duration d) {
  if (d.count() < 0) throw std::logic_error("negative time step");
  if (d > remaining()) throw std::logic_error("time cursor would pass the epoch budget");
  elapsed_ += d;
}

void ActivationLedger::close_epoch() {
  history_.push_back({max_, hottest_, total_, elapsed_});
  std::fill(counts_.begin(), counts_.end(), 0u);
  max_ = 0;
  hottest_ = PhysicalRow{};
  total_ = 0;
  elapsed_ = Duration(0);
}

}  // namespace rowswap
