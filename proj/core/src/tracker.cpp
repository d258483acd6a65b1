#include "rowswap/tracker.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace rowswap {

namespace {

template <class Map>
std::vector<std::pair<LogicalRow, std::uint32_t>> sorted_snapshot(const Map& m) {
  std::vector<std::pair<LogicalRow, std::uint32_t>> out;
  out.reserve(m.size());
  for (const auto& [row, c] : m) out.emplace_back(LogicalRow{row}, c);
  std::sort(out.begin(), out.end());
  return out;
}

bool hits_threshold(std::uint32_t next, std::uint32_t t_s, TriggerPolicy policy) {
  return policy == TriggerPolicy::ResetCount ? next >= t_s : next % t_s == 0;
}

}  // namespace

std::string ActivationTracker::dump_csv() const {
  std::ostringstream out;
  out << "row,count\n";
  for (const auto& [row, c] : snapshot()) out << row.value << ',' << c << '\n';
  return out.str();
}

MisraGriesTracker::MisraGriesTracker(std::size_t capacity, std::uint32_t t_s, TriggerPolicy policy)
    : capacity_(capacity), t_s_(t_s), policy_(policy) {
  if (capacity == 0) throw std::invalid_argument("tracker capacity must be positive");
  if (t_s == 0) throw std::invalid_argument("t_s >= 1");
  entries_.reserve(capacity + 1);
}

std::size_t MisraGriesTracker::default_capacity(const TimingParams& timing, std::uint32_t t_s) {
  return 2 * ((timing.act_max() + t_s - 1) / t_s);
}

std::optional<MitigationTrigger> MisraGriesTracker::observe(LogicalRow row) {
  auto it = entries_.find(row.value);
  if (it == entries_.end()) {
    if (entries_.size() < capacity_) {
      it = entries_.emplace(row.value, 0).first;
    } else {
      // Table full: the newcomer and every tracked row lose one.
      ++spill_;
      for (auto e = entries_.begin(); e != entries_.end();) {
        if (--e->second == 0) {
          e = entries_.erase(e);
        } else {
          ++e;
        }
      }
      return std::nullopt;
    }
  }
  const std::uint32_t next = ++it->second;
  if (!hits_threshold(next, t_s_, policy_)) return std::nullopt;
  if (policy_ == TriggerPolicy::ResetCount) entries_.erase(it);
  return MitigationTrigger{row, next};
}

bool MisraGriesTracker::would_trigger(LogicalRow row) const {
  const auto it = entries_.find(row.value);
  if (it == entries_.end()) return entries_.size() < capacity_ && hits_threshold(1, t_s_, policy_);
  return hits_threshold(it->second + 1, t_s_, policy_);
}

std::uint32_t MisraGriesTracker::count(LogicalRow row) const {
  const auto it = entries_.find(row.value);
  return it == entries_.end() ? 0 : it->second;
}

void MisraGriesTracker::reset() {
  entries_.clear();
  spill_ = 0;
}

std::vector<std::pair<LogicalRow, std::uint32_t>> MisraGriesTracker::snapshot() const {
  return sorted_snapshot(entries_);
}

ExactTracker::ExactTracker(std::uint32_t t_s, TriggerPolicy policy) : t_s_(t_s), policy_(policy) {
  if (t_s == 0) throw std::invalid_argument("t_s >= 1");
}

std::optional<MitigationTrigger> ExactTracker::observe(LogicalRow row) {
  auto& c = counts_[row.value];
  const std::uint32_t next = ++c;
  if (!hits_threshold(next, t_s_, policy_)) return std::nullopt;
  if (policy_ == TriggerPolicy::ResetCount) counts_.erase(row.value);
  return MitigationTrigger{row, next};
}

bool ExactTracker::would_trigger(LogicalRow row) const { return hits_threshold(count(row) + 1, t_s_, policy_); }

std::uint32_t ExactTracker::count(LogicalRow row) const {
  const auto it = counts_.find(row.value);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::pair<LogicalRow, std::uint32_t>> ExactTracker::snapshot() const { return sorted_snapshot(counts_); }

SwapCounterStore::SwapCounterStore(std::uint64_t rows, std::uint32_t row_size_bytes, std::uint32_t epoch_register)
    : counters_(rows, 0), rows_per_counter_row_(row_size_bytes / 4), epoch_register_(epoch_register & kEpochMask) {
  if (rows == 0) throw std::invalid_argument("counter store needs rows");
  if (rows_per_counter_row_ == 0) throw std::invalid_argument("row size must hold at least one counter");
  counter_row_acts_.assign((rows + rows_per_counter_row_ - 1) / rows_per_counter_row_, 0);
}

std::uint32_t SwapCounterStore::counter_row_of(PhysicalRow row) const { return row.value / rows_per_counter_row_; }

std::uint32_t SwapCounterStore::read(PhysicalRow row) const {
  const auto raw = counters_.at(row.value);
  if ((raw >> kCountBits) != epoch_register_) return 0;
  return raw & kCountMax;
}

CounterRecord SwapCounterStore::record_swap(PhysicalRow row, std::uint32_t acts_at_swap) {
  const std::uint32_t current = read(row);
  const std::uint32_t total = static_cast<std::uint32_t>(std::min<std::uint64_t>(std::uint64_t{current} + acts_at_swap, kCountMax));
  counters_.at(row.value) = (epoch_register_ << kCountBits) | total;
  const auto cr = counter_row_of(row);
  ++counter_row_acts_[cr];
  return {total, cr};
}

std::optional<FullResetEvent> SwapCounterStore::advance_epoch() {
  epoch_register_ = (epoch_register_ + 1) & kEpochMask;
  if (epoch_register_ != kEpochMask) return std::nullopt;
  // Register is all ones: stale ids could alias after the wrap, so clear.
  std::fill(counters_.begin(), counters_.end(), 0u);
  for (auto& a : counter_row_acts_) ++a;
  return FullResetEvent{counter_row_acts_.size()};
}

}  // namespace rowswap
