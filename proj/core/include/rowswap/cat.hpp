#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace rowswap {

struct CatEntry {
  std::uint32_t key = 0;
  std::uint32_t value = 0;
  bool locked = false;
  std::uint32_t epoch_tag = 0;
};

// Collision Avoidance Table: two skews of set-associative storage, each
// indexed by its own keyed hash. Inserts go to the less loaded candidate
// set. Logical capacity is enforced exactly even when the slot array is
// rounded up to whole sets.
class CollisionAvoidanceTable {
 public:
  static constexpr unsigned kSkews = 2;

  CollisionAvoidanceTable(std::size_t capacity, std::uint64_t seed, unsigned ways_per_skew = 8);

  const CatEntry* find(std::uint32_t key) const;
  CatEntry* find(std::uint32_t key);

  // Updates in place when the key exists. Returns false when the table is at
  // capacity or both candidate sets are full; the caller evicts and retries.
  bool insert(const CatEntry& entry);
  bool erase(std::uint32_t key);

  // Valid entries living in the candidate sets of `key`.
  std::vector<CatEntry> candidates(std::uint32_t key) const;
  bool has_free_slot_for(std::uint32_t key) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  unsigned ways_per_skew() const { return ways_; }
  std::size_t sets_per_skew() const { return sets_; }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (valid_[i]) f(slots_[i]);
    }
  }

  void unlock_all();

 private:
  std::size_t set_index(unsigned skew, std::uint32_t key) const;
  std::size_t slot(unsigned skew, std::size_t set, unsigned way) const {
    return (skew * sets_ + set) * ways_ + way;
  }
  std::optional<std::size_t> locate(std::uint32_t key) const;
  unsigned free_ways(unsigned skew, std::size_t set) const;

  std::size_t capacity_;
  unsigned ways_;
  std::size_t sets_;
  std::uint64_t skew_keys_[kSkews];
  std::vector<CatEntry> slots_;
  std::vector<bool> valid_;
  std::size_t size_ = 0;
};

}  // namespace rowswap
