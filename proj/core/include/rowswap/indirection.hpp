#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rowswap/cat.hpp"
#include "rowswap/ledger.hpp"
#include "rowswap/rng.hpp"
#include "rowswap/rows.hpp"

namespace rowswap {

// An insert needed a slot and every candidate victim was locked.
class CapacityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NotSwappedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class PinBufferFullError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class RitMode {
  TuplePaired,   // RRS: <A,B> and <B,A>
  RealMirrored,  // SRS: real logical->physical plus mirrored physical->logical
};

enum class UnswapOrder {
  AggressorFirst,  // naive: two latent activations at the aggressor's home
  PartnerFirst,    // one latent activation at the aggressor's home
};

struct LedgerDebit {
  PhysicalRow row;
  std::uint32_t acts = 0;
};

struct RowMove {
  LogicalRow row;
  PhysicalRow from;
  PhysicalRow to;
};

struct SwapReceipt {
  LogicalRow aggressor;
  LogicalRow partner;
  PhysicalRow aggressor_from;
  PhysicalRow aggressor_to;
  PhysicalRow partner_from;
  PhysicalRow partner_to;
  std::uint32_t latent_at_origin = 0;  // debited at home_of(aggressor)
  std::uint32_t evictions = 0;
  std::vector<LedgerDebit> debits;
  std::vector<RowMove> moves;
};

struct EvictProgress {
  bool did_work = false;
  bool chain_complete = false;
  std::vector<LogicalRow> placed_home;
  std::vector<LedgerDebit> debits;
  std::vector<RowMove> moves;
};

// One-row buffer that holds a displaced row while a place-back chain runs.
class PlaceBackBuffer {
 public:
  bool occupied() const { return slot_.has_value(); }
  std::optional<LogicalRow> slot() const { return slot_; }
  void hold(LogicalRow row);
  LogicalRow take();

 private:
  std::optional<LogicalRow> slot_;
};

class PinBuffer {
 public:
  static constexpr std::uint32_t kSetsPerRow = 16;
  static constexpr std::uint64_t kTagMask = (std::uint64_t{1} << 35) - 1;

  explicit PinBuffer(std::size_t capacity = 66) : capacity_(capacity) {}

  // Returns the LLC set base reserved for the row.
  std::uint32_t pin(std::uint64_t row_address);
  bool contains(std::uint64_t row_address) const;
  std::optional<std::uint32_t> set_base(std::uint64_t row_address) const;
  void clear() { tags_.clear(); }

  std::size_t size() const { return tags_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return tags_.size() >= capacity_; }

 private:
  std::size_t capacity_;
  std::vector<std::uint64_t> tags_;
};

class RowIndirectionTable {
 public:
  static constexpr unsigned kDefaultWays = 8;

  // `capacity` bounds each part: the tuple table, or each of the real and
  // mirrored tables.
  RowIndirectionTable(RitMode mode, std::uint32_t rows, std::size_t capacity, std::uint64_t seed,
                      unsigned ways_per_skew = kDefaultWays);

  RitMode mode() const { return mode_; }
  std::uint32_t rows() const { return rows_; }
  std::size_t capacity() const { return real_.capacity(); }
  std::size_t occupancy() const { return real_.size(); }
  std::uint32_t epoch() const { return epoch_; }

  // Sentinel location of a row parked in the place-back buffer.
  PhysicalRow placeback_location() const { return PhysicalRow{rows_}; }

  PhysicalRow resolve(LogicalRow logical) const;
  // Logical row stored at `p`; empty for the hole of an in-flight chain.
  std::optional<LogicalRow> occupant(PhysicalRow p) const;
  bool is_remapped(LogicalRow row) const;
  // Tuple partner of a swapped row (TuplePaired only).
  std::optional<LogicalRow> partner_of(LogicalRow row) const;

  // TuplePaired: both rows must be unswapped. RealMirrored: exchanges the
  // two rows' current locations.
  SwapReceipt swap(LogicalRow aggressor, LogicalRow partner, ActivationLedger& ledger);
  SwapReceipt unswap_swap(LogicalRow aggressor, LogicalRow new_partner, ActivationLedger& ledger,
                          UnswapOrder order);
  SwapReceipt srs_reswap(LogicalRow aggressor, LogicalRow new_partner, ActivationLedger& ledger);

  // One place-back step over previous-epoch entries (RealMirrored only).
  // A new chain never starts on a cycle holding a row for which `skip`
  // returns true.
  EvictProgress lazy_evict_step(PlaceBackBuffer& placeback, ActivationLedger& ledger,
                                const std::function<bool(LogicalRow)>& skip = {});
  // Runs steps until no chain is in flight.
  EvictProgress finish_chain(PlaceBackBuffer& placeback, ActivationLedger& ledger);
  bool chain_in_flight() const { return inflight_.has_value(); }
  bool in_chain(LogicalRow row) const;
  std::uint32_t chain_steps_remaining() const;
  std::size_t previous_epoch_entries() const;

  // Unlocks everything; all current entries become previous-epoch.
  void epoch_reset();

  bool is_bijection() const;
  bool parts_consistent() const;
  std::string dump_csv() const;

 private:
  struct Chain {
    PhysicalRow hole;
    LogicalRow parked;
    std::vector<LogicalRow> members;
    std::uint32_t steps_done = 0;
  };

  void check_row(LogicalRow row) const;
  CatEntry make_entry(std::uint32_t key, std::uint32_t value) const;
  void set_mapping(LogicalRow row, PhysicalRow p, ActivationLedger& ledger, SwapReceipt& receipt,
                   const std::vector<LogicalRow>& protect);
  void put(CollisionAvoidanceTable& table, std::uint32_t key, std::uint32_t value, ActivationLedger& ledger,
           SwapReceipt& receipt, const std::vector<LogicalRow>& protect);
  void evict_one(const CollisionAvoidanceTable& table, std::uint32_t key, ActivationLedger& ledger,
                 SwapReceipt& receipt, const std::vector<LogicalRow>& protect);
  std::vector<LogicalRow> cycle_of(LogicalRow row) const;
  bool cycle_evictable(const std::vector<LogicalRow>& cycle, const std::vector<LogicalRow>& protect) const;
  void drain_cycle_now(const std::vector<LogicalRow>& cycle, ActivationLedger& ledger, SwapReceipt& receipt);
  SwapReceipt transpose(LogicalRow a, LogicalRow c, ActivationLedger& ledger);

  RitMode mode_;
  std::uint32_t rows_;
  CollisionAvoidanceTable real_;
  CollisionAvoidanceTable mirror_;
  std::uint32_t epoch_ = 1;
  std::optional<Chain> inflight_;
  SplitMix64 victim_rng_;
};

}  // namespace rowswap
