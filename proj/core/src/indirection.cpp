#include "rowswap/indirection.hpp"

#include <algorithm>
#include <sstream>

namespace rowswap {

namespace {

void debit(ActivationLedger& ledger, std::vector<LedgerDebit>& debits, PhysicalRow row, std::uint32_t n) {
  ledger.activate(row, n);
  for (auto& d : debits) {
    if (d.row == row) {
      d.acts += n;
      return;
    }
  }
  debits.push_back({row, n});
}

bool contains(const std::vector<LogicalRow>& v, LogicalRow r) { return std::find(v.begin(), v.end(), r) != v.end(); }

}  // namespace

void PlaceBackBuffer::hold(LogicalRow row) {
  if (slot_) throw std::logic_error("place-back buffer already holds a row");
  slot_ = row;
}

LogicalRow PlaceBackBuffer::take() {
  if (!slot_) throw std::logic_error("place-back buffer is empty");
  const auto r = *slot_;
  slot_.reset();
  return r;
}

std::uint32_t PinBuffer::pin(std::uint64_t row_address) {
  if (row_address > kTagMask) throw std::invalid_argument("row address exceeds 35 bits");
  if (contains(row_address)) throw std::invalid_argument("row already pinned");
  if (full()) throw PinBufferFullError("pin buffer full at " + std::to_string(capacity_) + " entries");
  tags_.push_back(row_address);
  return static_cast<std::uint32_t>((tags_.size() - 1) * kSetsPerRow);
}

bool PinBuffer::contains(std::uint64_t row_address) const {
  return std::find(tags_.begin(), tags_.end(), row_address & kTagMask) != tags_.end();
}

std::optional<std::uint32_t> PinBuffer::set_base(std::uint64_t row_address) const {
  const auto it = std::find(tags_.begin(), tags_.end(), row_address & kTagMask);
  if (it == tags_.end()) return std::nullopt;
  return static_cast<std::uint32_t>((it - tags_.begin()) * kSetsPerRow);
}

RowIndirectionTable::RowIndirectionTable(RitMode mode, std::uint32_t rows, std::size_t capacity, std::uint64_t seed,
                                         unsigned ways_per_skew)
    : mode_(mode),
      rows_(rows),
      real_(capacity, seed, ways_per_skew),
      mirror_(mode == RitMode::RealMirrored ? capacity : 1, splitmix64(seed ^ 0x6d6972726f72ull), ways_per_skew),
      victim_rng_(splitmix64(seed ^ 0x76696374696dull)) {
  if (rows < 2) throw std::invalid_argument("RIT needs at least two rows");
}

void RowIndirectionTable::check_row(LogicalRow row) const {
  if (row.value >= rows_) throw std::out_of_range("row " + std::to_string(row.value) + " outside the bank");
}

CatEntry RowIndirectionTable::make_entry(std::uint32_t key, std::uint32_t value) const {
  return CatEntry{key, value, true, epoch_};
}

PhysicalRow RowIndirectionTable::resolve(LogicalRow logical) const {
  check_row(logical);
  if (inflight_ && inflight_->parked == logical) return placeback_location();
  if (const auto* e = real_.find(logical.value)) return PhysicalRow{e->value};
  return home_of(logical);
}

std::optional<LogicalRow> RowIndirectionTable::occupant(PhysicalRow p) const {
  if (p.value >= rows_) throw std::out_of_range("location outside the bank");
  if (inflight_ && inflight_->hole == p) return std::nullopt;
  const auto& table = mode_ == RitMode::TuplePaired ? real_ : mirror_;
  if (const auto* e = table.find(p.value)) return LogicalRow{e->value};
  return native_of(p);
}

bool RowIndirectionTable::is_remapped(LogicalRow row) const {
  check_row(row);
  return real_.find(row.value) != nullptr || (inflight_ && inflight_->parked == row);
}

std::optional<LogicalRow> RowIndirectionTable::partner_of(LogicalRow row) const {
  check_row(row);
  if (mode_ != RitMode::TuplePaired) return std::nullopt;
  if (const auto* e = real_.find(row.value)) return LogicalRow{e->value};
  return std::nullopt;
}

bool RowIndirectionTable::in_chain(LogicalRow row) const {
  return inflight_ && contains(inflight_->members, row);
}

std::vector<LogicalRow> RowIndirectionTable::cycle_of(LogicalRow row) const {
  if (mode_ == RitMode::TuplePaired) {
    if (auto p = partner_of(row)) return {row, *p};
    return {row};
  }
  std::vector<LogicalRow> cycle{row};
  LogicalRow cur = row;
  for (std::uint32_t steps = 0; steps <= rows_; ++steps) {
    const auto* e = real_.find(cur.value);
    if (e == nullptr || e->value >= rows_) return {};
    const LogicalRow next{e->value};
    if (next == row) return cycle;
    cycle.push_back(next);
    cur = next;
  }
  return {};
}

bool RowIndirectionTable::cycle_evictable(const std::vector<LogicalRow>& cycle,
                                          const std::vector<LogicalRow>& protect) const {
  if (cycle.size() < 2) return false;
  for (const auto m : cycle) {
    if (contains(protect, m) || in_chain(m)) return false;
    const auto* e = real_.find(m.value);
    if (e == nullptr || e->locked) return false;
    if (mode_ == RitMode::RealMirrored) {
      const auto* mirrored = mirror_.find(e->value);
      if (mirrored == nullptr || mirrored->locked) return false;
    }
  }
  return true;
}

void RowIndirectionTable::drain_cycle_now(const std::vector<LogicalRow>& cycle, ActivationLedger& ledger,
                                          SwapReceipt& receipt) {
  if (mode_ == RitMode::TuplePaired) {
    for (const auto m : cycle) {
      const PhysicalRow from{real_.find(m.value)->value};
      receipt.moves.push_back({m, from, home_of(m)});
    }
    for (const auto m : cycle) {
      real_.erase(m.value);
      debit(ledger, receipt.debits, home_of(m), 1);
    }
    ++receipt.evictions;
    return;
  }
  // Same activation pattern as running the lazy steps back to back: read the
  // first row out of its slot, then open each home once.
  const PhysicalRow start{real_.find(cycle.front().value)->value};
  debit(ledger, receipt.debits, start, 1);
  for (const auto m : cycle) {
    const PhysicalRow from{real_.find(m.value)->value};
    receipt.moves.push_back({m, from, home_of(m)});
  }
  for (const auto m : cycle) {
    const auto at = real_.find(m.value)->value;
    real_.erase(m.value);
    mirror_.erase(at);
    debit(ledger, receipt.debits, home_of(m), 1);
  }
  ++receipt.evictions;
}

void RowIndirectionTable::evict_one(const CollisionAvoidanceTable& table, std::uint32_t key, ActivationLedger& ledger,
                                    SwapReceipt& receipt, const std::vector<LogicalRow>& protect) {
  std::vector<CatEntry> pool;
  if (table.size() >= table.capacity()) {
    table.for_each([&](const CatEntry& e) { pool.push_back(e); });
  } else {
    pool = table.candidates(key);
  }
  const bool keyed_by_logical = &table == &real_;
  std::vector<std::vector<LogicalRow>> victims;
  for (const auto& e : pool) {
    if (e.locked) continue;
    const LogicalRow row{keyed_by_logical ? e.key : e.value};
    if (contains(protect, row) || in_chain(row)) continue;
    auto cycle = cycle_of(row);
    if (!cycle_evictable(cycle, protect)) continue;
    victims.push_back(std::move(cycle));
  }
  if (victims.empty()) {
    throw CapacityError("RIT insert needs a slot but every candidate victim is locked (capacity " +
                        std::to_string(table.capacity()) + ")");
  }
  drain_cycle_now(victims[victim_rng_.below(victims.size())], ledger, receipt);
}

void RowIndirectionTable::put(CollisionAvoidanceTable& table, std::uint32_t key, std::uint32_t value,
                              ActivationLedger& ledger, SwapReceipt& receipt,
                              const std::vector<LogicalRow>& protect) {
  const auto entry = make_entry(key, value);
  while (!table.insert(entry)) evict_one(table, key, ledger, receipt, protect);
}

void RowIndirectionTable::set_mapping(LogicalRow row, PhysicalRow p, ActivationLedger& ledger, SwapReceipt& receipt,
                                      const std::vector<LogicalRow>& protect) {
  if (p == home_of(row)) {
    real_.erase(row.value);
    mirror_.erase(p.value);
    return;
  }
  put(real_, row.value, p.value, ledger, receipt, protect);
  put(mirror_, p.value, row.value, ledger, receipt, protect);
}

SwapReceipt RowIndirectionTable::swap(LogicalRow aggressor, LogicalRow partner, ActivationLedger& ledger) {
  check_row(aggressor);
  check_row(partner);
  if (aggressor == partner) throw std::invalid_argument("swap partner equals the aggressor");
  if (mode_ == RitMode::RealMirrored) return transpose(aggressor, partner, ledger);
  if (is_remapped(aggressor) || is_remapped(partner)) {
    throw std::logic_error("tuple swap needs two unswapped rows; use unswap_swap");
  }
  SwapReceipt r;
  r.aggressor = aggressor;
  r.partner = partner;
  r.aggressor_from = home_of(aggressor);
  r.aggressor_to = home_of(partner);
  r.partner_from = home_of(partner);
  r.partner_to = home_of(aggressor);
  const std::vector<LogicalRow> protect{aggressor, partner};
  put(real_, aggressor.value, partner.value, ledger, r, protect);
  put(real_, partner.value, aggressor.value, ledger, r, protect);
  debit(ledger, r.debits, r.aggressor_from, 1);
  debit(ledger, r.debits, r.partner_from, 1);
  r.latent_at_origin = 1;
  r.moves.push_back({aggressor, r.aggressor_from, r.aggressor_to});
  r.moves.push_back({partner, r.partner_from, r.partner_to});
  return r;
}

SwapReceipt RowIndirectionTable::unswap_swap(LogicalRow aggressor, LogicalRow new_partner, ActivationLedger& ledger,
                                             UnswapOrder order) {
  if (mode_ != RitMode::TuplePaired) throw std::logic_error("unswap_swap applies to tuple mode only");
  check_row(aggressor);
  check_row(new_partner);
  const auto old_partner = partner_of(aggressor);
  if (!old_partner) throw NotSwappedError("row " + std::to_string(aggressor.value) + " is not swapped");
  if (new_partner == aggressor || new_partner == *old_partner) {
    throw std::invalid_argument("new partner must differ from the aggressor and its current partner");
  }
  if (is_remapped(new_partner)) throw std::logic_error("new partner is already swapped");

  SwapReceipt r;
  r.aggressor = aggressor;
  r.partner = new_partner;
  r.aggressor_from = home_of(*old_partner);
  r.aggressor_to = home_of(new_partner);
  r.partner_from = home_of(new_partner);
  r.partner_to = home_of(aggressor);
  real_.erase(aggressor.value);
  real_.erase(old_partner->value);
  const std::vector<LogicalRow> protect{aggressor, *old_partner, new_partner};
  put(real_, aggressor.value, new_partner.value, ledger, r, protect);
  put(real_, new_partner.value, aggressor.value, ledger, r, protect);

  r.latent_at_origin = order == UnswapOrder::AggressorFirst ? 2 : 1;
  debit(ledger, r.debits, r.aggressor_from, 1);
  debit(ledger, r.debits, home_of(aggressor), r.latent_at_origin);
  debit(ledger, r.debits, r.partner_from, 1);
  r.moves.push_back({*old_partner, home_of(aggressor), home_of(*old_partner)});
  r.moves.push_back({aggressor, r.aggressor_from, r.aggressor_to});
  r.moves.push_back({new_partner, r.partner_from, r.partner_to});
  return r;
}

SwapReceipt RowIndirectionTable::srs_reswap(LogicalRow aggressor, LogicalRow new_partner, ActivationLedger& ledger) {
  if (mode_ != RitMode::RealMirrored) throw std::logic_error("srs_reswap applies to real/mirrored mode only");
  check_row(aggressor);
  check_row(new_partner);
  if (aggressor == new_partner) throw std::invalid_argument("swap partner equals the aggressor");
  return transpose(aggressor, new_partner, ledger);
}

SwapReceipt RowIndirectionTable::transpose(LogicalRow a, LogicalRow c, ActivationLedger& ledger) {
  if (in_chain(a) || in_chain(c)) throw std::logic_error("row is part of an in-flight place-back chain");
  SwapReceipt r;
  r.aggressor = a;
  r.partner = c;
  r.aggressor_from = resolve(a);
  r.partner_from = resolve(c);
  r.aggressor_to = r.partner_from;
  r.partner_to = r.aggressor_from;

  // Rows on either cycle must survive any eviction this insert triggers.
  auto protect = cycle_of(a);
  for (const auto m : cycle_of(c)) protect.push_back(m);
  protect.push_back(a);
  protect.push_back(c);

  set_mapping(a, r.aggressor_to, ledger, r, protect);
  set_mapping(c, r.partner_to, ledger, r, protect);
  debit(ledger, r.debits, r.aggressor_from, 1);
  debit(ledger, r.debits, r.partner_from, 1);
  r.latent_at_origin = r.aggressor_from == home_of(a) ? 1 : 0;
  r.moves.push_back({a, r.aggressor_from, r.aggressor_to});
  r.moves.push_back({c, r.partner_from, r.partner_to});
  return r;
}

std::size_t RowIndirectionTable::previous_epoch_entries() const {
  std::size_t n = 0;
  real_.for_each([&](const CatEntry& e) { n += e.epoch_tag < epoch_ ? 1 : 0; });
  return n;
}

std::uint32_t RowIndirectionTable::chain_steps_remaining() const {
  if (!inflight_) return 0;
  return static_cast<std::uint32_t>(inflight_->members.size() - 1) - inflight_->steps_done;
}

EvictProgress RowIndirectionTable::lazy_evict_step(PlaceBackBuffer& placeback, ActivationLedger& ledger,
                                                   const std::function<bool(LogicalRow)>& skip) {
  if (mode_ != RitMode::RealMirrored) throw std::logic_error("lazy eviction applies to real/mirrored mode only");
  EvictProgress progress;

  if (!inflight_) {
    if (placeback.occupied()) throw std::logic_error("place-back buffer busy with no chain in flight");
    std::optional<LogicalRow> start;
    real_.for_each([&](const CatEntry& e) {
      if (start || e.locked || e.epoch_tag >= epoch_) return;
      const auto cycle = cycle_of(LogicalRow{e.key});
      if (!cycle_evictable(cycle, {})) return;
      if (skip && std::any_of(cycle.begin(), cycle.end(), skip)) return;
      start = LogicalRow{e.key};
    });
    if (!start) return progress;

    const LogicalRow x = *start;
    auto members = cycle_of(x);
    const PhysicalRow hole{real_.find(x.value)->value};
    const PhysicalRow x_home = home_of(x);
    const LogicalRow y{mirror_.find(x_home.value)->value};

    progress.did_work = true;
    debit(ledger, progress.debits, hole, 1);
    debit(ledger, progress.debits, x_home, 1);
    real_.erase(x.value);
    real_.erase(y.value);
    mirror_.erase(hole.value);
    mirror_.erase(x_home.value);
    progress.placed_home.push_back(x);
    progress.moves.push_back({x, hole, x_home});

    if (home_of(y) == hole) {
      debit(ledger, progress.debits, hole, 1);
      progress.placed_home.push_back(y);
      progress.moves.push_back({y, x_home, hole});
      progress.chain_complete = true;
      return progress;
    }
    placeback.hold(y);
    progress.moves.push_back({y, x_home, placeback_location()});
    inflight_ = Chain{hole, y, std::move(members), 1};
    return progress;
  }

  const LogicalRow y = placeback.take();
  if (y != inflight_->parked) throw std::logic_error("place-back buffer out of sync with the in-flight chain");
  const PhysicalRow y_home = home_of(y);
  const LogicalRow z{mirror_.find(y_home.value)->value};
  progress.did_work = true;
  ++inflight_->steps_done;
  debit(ledger, progress.debits, y_home, 1);
  mirror_.erase(y_home.value);
  real_.erase(z.value);
  progress.placed_home.push_back(y);
  progress.moves.push_back({y, placeback_location(), y_home});

  if (home_of(z) == inflight_->hole) {
    debit(ledger, progress.debits, inflight_->hole, 1);
    progress.placed_home.push_back(z);
    progress.moves.push_back({z, y_home, inflight_->hole});
    progress.chain_complete = true;
    inflight_.reset();
    return progress;
  }
  inflight_->parked = z;
  placeback.hold(z);
  progress.moves.push_back({z, y_home, placeback_location()});
  return progress;
}

EvictProgress RowIndirectionTable::finish_chain(PlaceBackBuffer& placeback, ActivationLedger& ledger) {
  EvictProgress total;
  while (inflight_) {
    auto step = lazy_evict_step(placeback, ledger);
    total.did_work = true;
    total.chain_complete = step.chain_complete;
    for (auto r : step.placed_home) total.placed_home.push_back(r);
    for (auto m : step.moves) total.moves.push_back(m);
    for (auto d : step.debits) total.debits.push_back(d);
  }
  return total;
}

void RowIndirectionTable::epoch_reset() {
  ++epoch_;
  real_.unlock_all();
  mirror_.unlock_all();
}

bool RowIndirectionTable::is_bijection() const {
  if (inflight_) return false;
  std::vector<bool> seen(rows_, false);
  for (std::uint32_t l = 0; l < rows_; ++l) {
    const auto p = resolve(LogicalRow{l}).value;
    if (p >= rows_ || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

bool RowIndirectionTable::parts_consistent() const {
  bool ok = true;
  if (mode_ == RitMode::TuplePaired) {
    real_.for_each([&](const CatEntry& e) {
      const auto* back = real_.find(e.value);
      if (e.key == e.value || back == nullptr || back->value != e.key || back->locked != e.locked) ok = false;
    });
    return ok;
  }
  if (real_.size() != mirror_.size()) return false;
  real_.for_each([&](const CatEntry& e) {
    const auto* m = mirror_.find(e.value);
    if (e.key == e.value || m == nullptr || m->value != e.key || m->locked != e.locked) ok = false;
  });
  mirror_.for_each([&](const CatEntry& e) {
    const auto* r = real_.find(e.value);
    if (r == nullptr || r->value != e.key) ok = false;
  });
  return ok;
}

std::string RowIndirectionTable::dump_csv() const {
  std::vector<CatEntry> entries;
  real_.for_each([&](const CatEntry& e) { entries.push_back(e); });
  std::sort(entries.begin(), entries.end(), [](const CatEntry& a, const CatEntry& b) { return a.key < b.key; });
  std::ostringstream out;
  out << "logical,physical,locked,epoch_tag\n";
  for (const auto& e : entries) {
    out << e.key << ',' << e.value << ',' << (e.locked ? 1 : 0) << ',' << e.epoch_tag << '\n';
  }
  return out.str();
}

}  // namespace rowswap
