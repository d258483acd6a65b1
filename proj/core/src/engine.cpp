#include "rowswap/engine.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "rowswap/analytic.hpp"

namespace rowswap {

namespace {

constexpr std::uint64_t kSimStream = 0x51u;
constexpr std::uint64_t kEpochStream = 0xe90cu;

std::size_t rit_capacity(const DefenseConfig& d, const TimingParams& t) {
  const double need = d.rit_overprovision * 2.0 * static_cast<double>(t.act_max() / d.t_s);
  return std::max<std::size_t>(2, static_cast<std::size_t>(need + 0.5));
}

bool threshold_hit(std::uint32_t count, std::uint32_t t_s, TriggerPolicy policy) {
  return policy == TriggerPolicy::ResetCount ? count >= t_s : count % t_s == 0;
}

}  // namespace

BankSimulator::BankSimulator(const DefenseConfig& defense, const TimingParams& timing, const DramGeometry& geom,
                             std::uint64_t seed, const EngineOptions& options)
    : defense_(defense),
      timing_(timing),
      options_(options),
      rows_(static_cast<std::uint32_t>(geom.rows_per_bank)),
      rng_(derive_seed(seed, kSimStream, 0)),
      ledger_(geom.rows_per_bank, timing.usable_time()),
      pins_(options.pin_capacity != 0 ? options.pin_capacity : default_pin_entries(defense.t_rh)),
      frozen_(geom.rows_per_bank, false) {
  timing.validate();
  geom.validate();
  if (defense.kind != DefenseKind::None) {
    if (defense.t_s < 1 || defense.t_rh <= defense.t_s) throw ValidationError("invariant violated: t_rh > t_s >= 1");
    if (options.tracker == TrackerKind::Exact) {
      tracker_ = std::make_unique<ExactTracker>(defense.t_s, options.trigger_policy);
    } else {
      const auto cap = options.tracker_capacity != 0 ? options.tracker_capacity
                                                     : MisraGriesTracker::default_capacity(timing, defense.t_s);
      tracker_ = std::make_unique<MisraGriesTracker>(cap, defense.t_s, options.trigger_policy);
    }
    const bool tuples = defense.kind == DefenseKind::RRS && options.immediate_unswap;
    rit_ = std::make_unique<RowIndirectionTable>(tuples ? RitMode::TuplePaired : RitMode::RealMirrored, rows_,
                                                 rit_capacity(defense, timing), derive_seed(seed, kSimStream, 1),
                                                 options.rit_ways);
  }
  if (defense.kind == DefenseKind::ScaleSRS) {
    counters_ = std::make_unique<SwapCounterStore>(geom.rows_per_bank, geom.row_size_bytes);
  }
  begin_epoch();
}

BankSimulator::~BankSimulator() = default;

void BankSimulator::begin_epoch() {
  report_ = EpochReport{};
  report_.refresh_time = timing_.refresh_time();
  placeback_interval_ = Duration(0);
  next_placeback_ = Duration(0);
  const bool lazy = defense_.kind == DefenseKind::SRS || defense_.kind == DefenseKind::ScaleSRS;
  if (lazy && rit_) {
    const auto entries = rit_->previous_epoch_entries();
    if (entries > 0) {
      placeback_interval_ = std::max(Duration(1), ledger_.budget() / static_cast<std::int64_t>(entries));
      next_placeback_ = placeback_interval_;
    }
  }
}

Duration BankSimulator::mitigation_latency(LogicalRow row) const {
  if (rit_->mode() == RitMode::TuplePaired && rit_->is_remapped(row)) return timing_.t_reswap;
  return timing_.t_swap;
}

std::uint32_t BankSimulator::chain_steps_pending(LogicalRow row) const {
  return rit_->in_chain(row) ? rit_->chain_steps_remaining() : 0;
}

Duration BankSimulator::cost_of(LogicalRow row) const {
  if (defense_.kind == DefenseKind::None) return timing_.t_rc;
  if (pinned(row)) return Duration(0);
  if (rit_->resolve(row) == rit_->placeback_location()) return timing_.t_rc;
  if (!tracker_->would_trigger(row)) return timing_.t_rc;
  return mitigation_latency(row) + timing_.t_swap * static_cast<std::int64_t>(chain_steps_pending(row));
}

Duration BankSimulator::burst_cost(LogicalRow row, std::uint32_t n) const {
  if (defense_.kind == DefenseKind::None) return timing_.t_rc * static_cast<std::int64_t>(n);
  if (pinned(row)) return Duration(0);
  if (rit_->resolve(row) == rit_->placeback_location()) return timing_.t_rc * static_cast<std::int64_t>(n);
  Duration cost{0};
  std::uint32_t count = tracker_->count(row);
  for (std::uint32_t i = 0; i < n; ++i) {
    ++count;
    if (threshold_hit(count, defense_.t_s, options_.trigger_policy)) {
      cost += mitigation_latency(row) + timing_.t_swap * static_cast<std::int64_t>(chain_steps_pending(row));
      if (options_.trigger_policy == TriggerPolicy::ResetCount) count = 0;
    } else {
      cost += timing_.t_rc;
    }
  }
  return cost;
}

bool BankSimulator::activate(LogicalRow row) {
  if (row.value >= rows_) throw std::out_of_range("row outside the bank");
  run_due_placeback();
  const Duration cost = cost_of(row);
  if (!ledger_.fits(cost)) return false;

  if (defense_.kind == DefenseKind::None) {
    ledger_.activate(home_of(row));
    ledger_.advance(cost);
    report_.act_time += cost;
    ++report_.demand_acts;
    return true;
  }
  if (pinned(row)) {
    ++report_.absorbed_acts;
    return true;
  }
  const PhysicalRow at = rit_->resolve(row);
  if (at == rit_->placeback_location()) {
    ledger_.advance(cost);
    report_.act_time += cost;
    ++report_.absorbed_acts;
    return true;
  }
  ledger_.activate(at);
  ++report_.demand_acts;
  const auto trigger = tracker_->observe(row);
  ledger_.advance(cost);
  if (!trigger) {
    report_.act_time += cost;
    return true;
  }
  // The triggering activation's slot is folded into the mitigation latency.
  report_.mitigation_time += cost;
  mitigate(row, trigger->count);
  return true;
}

std::uint32_t BankSimulator::burst(LogicalRow row, std::uint32_t n) {
  std::uint32_t done = 0;
  while (done < n && activate(row)) ++done;
  return done;
}

void BankSimulator::account(const SwapReceipt& r) {
  for (const auto& d : r.debits) {
    receipt_debits_ += d.acts;
    report_.mitigation_acts += d.acts;
  }
  report_.evictions += r.evictions;
}

void BankSimulator::account(const EvictProgress& p) {
  for (const auto& d : p.debits) {
    receipt_debits_ += d.acts;
    report_.mitigation_acts += d.acts;
  }
}

LogicalRow BankSimulator::pick_unswapped_partner(LogicalRow aggressor) {
  auto ok = [&](LogicalRow c) { return c != aggressor && !rit_->is_remapped(c) && !rit_->in_chain(c); };
  for (std::uint64_t tries = 0; tries < 64ull * rows_; ++tries) {
    const LogicalRow c{static_cast<std::uint32_t>(rng_.below(rows_))};
    if (ok(c)) return c;
  }
  std::vector<LogicalRow> pool;
  for (std::uint32_t i = 0; i < rows_; ++i) {
    if (ok(LogicalRow{i})) pool.push_back(LogicalRow{i});
  }
  if (pool.empty()) throw CapacityError("no unswapped row left to act as a swap partner");
  return pool[rng_.below(pool.size())];
}

LogicalRow BankSimulator::pick_any_partner(LogicalRow aggressor) {
  auto ok = [&](LogicalRow c) {
    if (c == aggressor || rit_->in_chain(c)) return false;
    const auto at = rit_->resolve(c);
    if (at == rit_->placeback_location()) return false;
    if (defense_.kind == DefenseKind::ScaleSRS && (pinned(c) || frozen_[at.value])) return false;
    return true;
  };
  for (std::uint64_t tries = 0; tries < 64ull * rows_; ++tries) {
    const LogicalRow c{static_cast<std::uint32_t>(rng_.below(rows_))};
    if (ok(c)) return c;
  }
  std::vector<LogicalRow> pool;
  for (std::uint32_t i = 0; i < rows_; ++i) {
    if (ok(LogicalRow{i})) pool.push_back(LogicalRow{i});
  }
  if (pool.empty()) throw CapacityError("no eligible swap partner left");
  return pool[rng_.below(pool.size())];
}

void BankSimulator::mitigate(LogicalRow row, std::uint32_t tracked) {
  if (rit_->in_chain(row)) {
    report_.placeback_steps += rit_->chain_steps_remaining();
    const auto p = rit_->finish_chain(placeback_, ledger_);
    account(p);
    if (counters_) record_locations(p.debits, p.moves, std::nullopt, 0);
  }
  if (defense_.kind == DefenseKind::ScaleSRS) {
    mitigate_scale_srs(row, tracked);
    return;
  }
  if (rit_->mode() == RitMode::TuplePaired) {
    if (rit_->partner_of(row)) {
      const auto order = unswap_calls_++ % 2 == 0 ? UnswapOrder::AggressorFirst : UnswapOrder::PartnerFirst;
      account(rit_->unswap_swap(row, pick_unswapped_partner(row), ledger_, order));
      ++report_.unswap_swaps;
    } else {
      account(rit_->swap(row, pick_unswapped_partner(row), ledger_));
      ++report_.swaps;
    }
    return;
  }
  const bool again = rit_->is_remapped(row);
  account(rit_->srs_reswap(row, pick_any_partner(row), ledger_));
  ++(again ? report_.reswaps : report_.swaps);
}

void BankSimulator::mitigate_scale_srs(LogicalRow row, std::uint32_t tracked) {
  const PhysicalRow at = rit_->resolve(row);
  const std::uint64_t limit = std::uint64_t{defense_.outlier_swap_limit} * defense_.t_s;
  const std::uint64_t after_burst = std::uint64_t{counters_->read(at)} + tracked;
  const bool pin_now = options_.pin_policy == PinPolicy::Projected
                           ? after_burst + 1 + defense_.t_s >= limit  // the swap's latent, then a fresh burst
                           : after_burst >= limit;
  if (pin_now) {
    counters_->record_swap(at, tracked);
    tracker_->forget(row);
    pin_row(row, at);
    return;
  }
  const bool again = rit_->is_remapped(row);
  const auto receipt = rit_->srs_reswap(row, pick_any_partner(row), ledger_);
  ++(again ? report_.reswaps : report_.swaps);
  account(receipt);
  tracker_->forget(row);
  record_locations(receipt.debits, receipt.moves, at, tracked);
}

void BankSimulator::record_locations(const std::vector<LedgerDebit>& debits, const std::vector<RowMove>& moves,
                                     std::optional<PhysicalRow> burst_at, std::uint32_t burst_acts) {
  std::map<std::uint32_t, std::uint32_t> acts;
  if (burst_at) acts[burst_at->value] += burst_acts;
  for (const auto& m : moves) {
    // A row leaving a location takes its unrecorded demand count with it;
    // settle that count against the location it was earned at.
    if (m.from.value < rows_) {
      const auto c = tracker_->count(m.row);
      if (c > 0) acts[m.from.value] += c;
    }
    tracker_->forget(m.row);
  }
  for (const auto& d : debits) acts[d.row.value] += d.acts;
  for (const auto& [loc, n] : acts) counters_->record_swap(PhysicalRow{loc}, n);
  for (const auto& [loc, n] : acts) check_pin(PhysicalRow{loc});
}

void BankSimulator::check_pin(PhysicalRow p) {
  if (frozen_[p.value]) return;
  const auto occ = rit_->occupant(p);
  if (!occ || pinned(*occ)) return;
  const std::uint64_t limit = std::uint64_t{defense_.outlier_swap_limit} * defense_.t_s;
  const std::uint64_t recorded = counters_->read(p);
  const bool pin_now = options_.pin_policy == PinPolicy::Projected ? recorded + defense_.t_s >= limit
                                                                    : recorded >= limit;
  if (pin_now) pin_row(*occ, p);
}

void BankSimulator::pin_row(LogicalRow row, PhysicalRow at) {
  pins_.pin(row.value);
  frozen_[at.value] = true;
  tracker_->forget(row);
  ++report_.pins;
  max_pins_ = std::max(max_pins_, pins_.size());
}

void BankSimulator::reset_tracker() {
  if (!tracker_) return;
  if (counters_) {
    // Outstanding demand counts are settled into the location counters so
    // a reset cannot hide activations from the outlier check.
    std::map<std::uint32_t, std::uint32_t> acts;
    for (const auto& [row, c] : tracker_->snapshot()) {
      const auto at = rit_->resolve(row);
      if (c > 0 && at.value < rows_) acts[at.value] += c;
    }
    for (const auto& [loc, n] : acts) counters_->record_swap(PhysicalRow{loc}, n);
    for (const auto& [loc, n] : acts) check_pin(PhysicalRow{loc});
  }
  tracker_->reset();
}

void BankSimulator::run_due_placeback() {
  if (placeback_interval_.count() == 0) return;
  auto skip = [&](LogicalRow r) {
    return defense_.kind == DefenseKind::ScaleSRS && (pinned(r) || frozen_[rit_->resolve(r).value]);
  };
  while (ledger_.elapsed() >= next_placeback_) {
    if (!ledger_.fits(timing_.t_swap)) {
      placeback_interval_ = Duration(0);
      return;
    }
    const auto p = rit_->lazy_evict_step(placeback_, ledger_, skip);
    if (!p.did_work) {
      placeback_interval_ = Duration(0);
      return;
    }
    ledger_.advance(timing_.t_swap);
    report_.mitigation_time += timing_.t_swap;
    ++report_.placeback_steps;
    account(p);
    if (counters_) record_locations(p.debits, p.moves, std::nullopt, 0);
    next_placeback_ += placeback_interval_;
  }
}

EpochReport BankSimulator::end_epoch() {
  if (rit_ && defense_.kind == DefenseKind::RRS && !options_.immediate_unswap) {
    // Without immediate unswaps every displaced row goes home in one burst.
    rit_->epoch_reset();
    for (;;) {
      const auto p = rit_->lazy_evict_step(placeback_, ledger_);
      if (!p.did_work) break;
      report_.deferred_time += timing_.t_swap;
      ++report_.placeback_steps;
      account(p);
    }
  }
  report_.max_physical_acts = ledger_.max_count();
  report_.hottest = ledger_.hottest();
  report_.breached = defense_.t_rh > 0 && ledger_.max_count() >= defense_.t_rh;
  report_.idle_time = ledger_.remaining();
  EpochReport done = report_;

  ledger_.close_epoch();
  if (rit_ && !(defense_.kind == DefenseKind::RRS && !options_.immediate_unswap)) rit_->epoch_reset();
  pins_.clear();
  std::fill(frozen_.begin(), frozen_.end(), false);
  if (tracker_) tracker_->reset();
  if (counters_) counters_->advance_epoch();
  unswap_calls_ = 0;
  begin_epoch();
  return done;
}

namespace {

bool hammer_only(const AttackPlan& plan, const BankSimulator& sim) {
  return plan.strategy == AttackStrategy::LatentOnly || sim.defense().kind == DefenseKind::None;
}

void attack_program(BankSimulator& sim, const AttackPlan& plan, const EngineOptions& options) {
  auto& report = sim.report();
  auto& rng = sim.rng();
  const std::uint32_t rows = sim.rows();
  const std::uint32_t t_s = sim.defense().kind == DefenseKind::None && sim.defense().t_s == 0 ? 1 : sim.defense().t_s;

  auto full_burst = [&](LogicalRow r, std::uint32_t n) {
    if (!sim.ledger().fits(sim.burst_cost(r, n))) return false;
    return sim.burst(r, n) == n;
  };

  std::optional<LogicalRow> target;
  if (plan.strategy != AttackStrategy::RandomGuessOnly) {
    target = LogicalRow{static_cast<std::uint32_t>(rng.below(rows))};
    report.target = target;
    bool ok = true;
    if (options.exploit_tracker_desync && t_s > 1) {
      ok = full_burst(*target, t_s - 1);
      sim.reset_tracker();
    }
    ok = ok && full_burst(*target, t_s);
    if (ok) {
      // With no defense, or latents as the only lever, the target is hammered
      // for the whole window.
      const std::uint64_t rounds = hammer_only(plan, sim) ? std::numeric_limits<std::uint64_t>::max() : plan.rounds;
      for (std::uint64_t i = 0; i < rounds; ++i) {
        if (!full_burst(*target, t_s)) {
          ok = false;
          break;
        }
        ++report.bias_rounds;
      }
    }
    report.target_home_after_bias = sim.ledger().count(home_of(*target));
    if (!ok || hammer_only(plan, sim)) return;
  }

  const std::uint64_t max_guesses = sim.timing().act_max() + 1;
  for (std::uint64_t i = 0; i < max_guesses; ++i) {
    const LogicalRow x{static_cast<std::uint32_t>(rng.below(rows))};
    if (target && x == *target) continue;
    if (!full_burst(x, t_s)) break;
    ++report.guesses;
  }
}

}  // namespace

EpochReport run_epoch(const DefenseConfig& defense, const AttackPlan& plan, const TimingParams& timing,
                      const DramGeometry& geom, std::uint64_t seed, const EngineOptions& options) {
  plan.validate();
  BankSimulator sim(defense, timing, geom, seed, options);
  if (options.warm_start) {
    attack_program(sim, plan, options);
    sim.end_epoch();
  }
  attack_program(sim, plan, options);
  return sim.end_epoch();
}

BreachResult run_until_breach(const DefenseConfig& defense, const AttackPlan& plan, const TimingParams& timing,
                              const DramGeometry& geom, std::uint64_t seed, std::uint64_t max_epochs,
                              const EngineOptions& options) {
  for (std::uint64_t e = 0; e < max_epochs; ++e) {
    if (run_epoch(defense, plan, timing, geom, derive_seed(seed, kEpochStream, e), options).breached) {
      return {e + 1, true};
    }
  }
  return {max_epochs, false};
}

EpochReport run_stream_epoch(const DefenseConfig& defense, const Workload& workload, const TimingParams& timing,
                             const DramGeometry& geom, std::uint64_t seed, const EngineOptions& options) {
  BankSimulator sim(defense, timing, geom, seed, options);
  for (std::size_t i = 0; i < workload.acts.size(); ++i) {
    if (workload.tracker_reset_at == i) sim.reset_tracker();
    if (!sim.activate(workload.acts[i])) {
      sim.report().truncated = true;
      break;
    }
  }
  return sim.end_epoch();
}

EpochReport run_scale_srs_epoch(const DefenseConfig& defense, const Workload& workload, const TimingParams& timing,
                                const DramGeometry& geom, std::uint64_t seed, const EngineOptions& options) {
  if (defense.kind != DefenseKind::ScaleSRS) throw std::invalid_argument("run_scale_srs_epoch needs scale-srs");
  return run_stream_epoch(defense, workload, timing, geom, seed, options);
}

OverheadSummary overhead_metrics(const std::vector<EpochReport>& reports, const TimingParams& timing) {
  if (reports.empty()) throw std::invalid_argument("overhead_metrics needs at least one report");
  OverheadSummary s;
  s.epochs = reports.size();
  for (const auto& r : reports) {
    s.swaps += r.swaps;
    s.unswap_swaps += r.unswap_swaps;
    s.reswaps += r.reswaps;
    s.pins += r.pins;
    s.placeback_steps += r.placeback_steps;
    s.overhead_time += r.overhead_time();
    s.deferred_time += r.deferred_time;
  }
  s.overhead_fraction = static_cast<double>(s.overhead_time.count()) /
                        (static_cast<double>(timing.epoch.count()) * static_cast<double>(s.epochs));
  return s;
}

}  // namespace rowswap
