#include "rowswap/cat.hpp"

#include <stdexcept>

#include "rowswap/rng.hpp"

namespace rowswap {

CollisionAvoidanceTable::CollisionAvoidanceTable(std::size_t capacity, std::uint64_t seed, unsigned ways_per_skew)
    : capacity_(capacity), ways_(ways_per_skew) {
  if (capacity == 0) throw std::invalid_argument("CAT capacity must be positive");
  if (ways_per_skew == 0) throw std::invalid_argument("CAT needs at least one way");
  const std::size_t per_skew_slots = (capacity + kSkews - 1) / kSkews;
  sets_ = (per_skew_slots + ways_ - 1) / ways_;
  for (unsigned s = 0; s < kSkews; ++s) skew_keys_[s] = splitmix64(seed + 0x51ed27u * (s + 1));
  slots_.resize(kSkews * sets_ * ways_);
  valid_.assign(slots_.size(), false);
}

std::size_t CollisionAvoidanceTable::set_index(unsigned skew, std::uint32_t key) const {
  return static_cast<std::size_t>(splitmix64(skew_keys_[skew] ^ key) % sets_);
}

std::optional<std::size_t> CollisionAvoidanceTable::locate(std::uint32_t key) const {
  for (unsigned s = 0; s < kSkews; ++s) {
    const auto set = set_index(s, key);
    for (unsigned w = 0; w < ways_; ++w) {
      const auto i = slot(s, set, w);
      if (valid_[i] && slots_[i].key == key) return i;
    }
  }
  return std::nullopt;
}

unsigned CollisionAvoidanceTable::free_ways(unsigned skew, std::size_t set) const {
  unsigned n = 0;
  for (unsigned w = 0; w < ways_; ++w) n += valid_[slot(skew, set, w)] ? 0 : 1;
  return n;
}

const CatEntry* CollisionAvoidanceTable::find(std::uint32_t key) const {
  const auto i = locate(key);
  return i ? &slots_[*i] : nullptr;
}

CatEntry* CollisionAvoidanceTable::find(std::uint32_t key) {
  const auto i = locate(key);
  return i ? &slots_[*i] : nullptr;
}

bool CollisionAvoidanceTable::has_free_slot_for(std::uint32_t key) const {
  if (size_ >= capacity_) return false;
  for (unsigned s = 0; s < kSkews; ++s) {
    if (free_ways(s, set_index(s, key)) > 0) return true;
  }
  return false;
}

bool CollisionAvoidanceTable::insert(const CatEntry& entry) {
  if (auto i = locate(entry.key)) {
    slots_[*i] = entry;
    return true;
  }
  if (size_ >= capacity_) return false;
  unsigned best_skew = 0;
  unsigned best_free = 0;
  for (unsigned s = 0; s < kSkews; ++s) {
    const auto f = free_ways(s, set_index(s, entry.key));
    if (f > best_free) {
      best_free = f;
      best_skew = s;
    }
  }
  if (best_free == 0) return false;
  const auto set = set_index(best_skew, entry.key);
  for (unsigned w = 0; w < ways_; ++w) {
    const auto i = slot(best_skew, set, w);
    if (!valid_[i]) {
      slots_[i] = entry;
      valid_[i] = true;
      ++size_;
      return true;
    }
  }
  return false;
}

bool CollisionAvoidanceTable::erase(std::uint32_t key) {
  if (auto i = locate(key)) {
    valid_[*i] = false;
    --size_;
    return true;
  }
  return false;
}

std::vector<CatEntry> CollisionAvoidanceTable::candidates(std::uint32_t key) const {
  std::vector<CatEntry> out;
  for (unsigned s = 0; s < kSkews; ++s) {
    const auto set = set_index(s, key);
    for (unsigned w = 0; w < ways_; ++w) {
      const auto i = slot(s, set, w);
      if (valid_[i]) out.push_back(slots_[i]);
    }
  }
  return out;
}

void CollisionAvoidanceTable::unlock_all() {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (valid_[i]) slots_[i].locked = false;
  }
}

}  // namespace rowswap
