#include "rowswap/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rowswap {

namespace {

constexpr double kSecondsPerNs = 1e-9;

double lchoose(std::uint64_t n, std::uint64_t k) {
  const auto dn = static_cast<double>(n);
  const auto dk = static_cast<double>(k);
  return std::lgamma(dn + 1) - std::lgamma(dk + 1) - std::lgamma(dn - dk + 1);
}

Duration per_guess_time(const TimingParams& t, std::uint32_t t_s) {
  return t.t_rc * static_cast<std::int64_t>(t_s - 1) + t.t_swap;
}

Duration initial_swap_time(const TimingParams& t, std::uint32_t t_s) {
  return t.t_rc * static_cast<std::int64_t>(2 * std::int64_t{t_s} - 1) + t.t_swap;
}

void check_inputs(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg) {
  timing.validate();
  geom.validate();
  if (cfg.t_s < 1) throw ValidationError("invariant violated: t_s >= 1");
  if (cfg.t_rh <= cfg.t_s) throw ValidationError("invariant violated: t_rh > t_s");
  if (!(cfg.latent_per_reswap >= 0)) throw ValidationError("invariant violated: latent_per_reswap >= 0");
}

// Shared tail of the closed form once the bias phase is fixed.
AttackAnalysis finish(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                      std::uint64_t rounds, double act_aggr, Duration t_aggr, Duration bias_fixed_time,
                      bool any_location) {
  AttackAnalysis a;
  a.rounds = rounds;
  a.act_aggr = act_aggr;
  a.act_left = static_cast<double>(cfg.t_rh) - act_aggr;
  a.t_actual = timing.usable_time();
  a.t_aggr = t_aggr;
  a.t_left = a.t_actual - t_aggr - bias_fixed_time;
  a.per_guess = per_guess_time(timing, cfg.t_s);
  a.row_probability = 1.0 / static_cast<double>(geom.rows_per_bank);
  a.epoch = timing.epoch;
  if (a.t_left.count() < 0) {
    throw InfeasibleError("rounds do not fit in the epoch: t_left = " + std::to_string(a.t_left.count()) + "ns");
  }
  a.guesses = static_cast<std::uint64_t>(a.t_left / a.per_guess);

  if (a.act_left <= 0) {
    a.deterministic = true;
    a.k = 0;
    a.p_success = 1.0;
    a.log_p_success = 0.0;
    a.at_iter = 1.0;
    a.at_time_s = static_cast<double>(timing.epoch.count()) * kSecondsPerNs;
    return a;
  }
  a.k = static_cast<std::uint64_t>(std::ceil(a.act_left / cfg.t_s));
  if (a.guesses < a.k) {
    throw InfeasibleError("only " + std::to_string(a.guesses) + " guesses fit but k = " + std::to_string(a.k));
  }
  double log_p = log_binomial_pmf(a.guesses, a.k, a.row_probability);
  if (any_location) {
    // Some location among R collects k hits: 1 - (1 - p_k)^R.
    const double pk = std::exp(log_p);
    const double none = static_cast<double>(geom.rows_per_bank) * std::log1p(-pk);
    log_p = std::log(-std::expm1(none));
  }
  a.log_p_success = log_p;
  a.p_success = std::exp(log_p);
  a.at_iter = std::exp(-log_p);
  a.at_time_s = static_cast<double>(timing.epoch.count()) * kSecondsPerNs * a.at_iter;
  return a;
}

std::uint64_t latent_only_rounds(const DefenseConfig& cfg) {
  if (cfg.latent_per_reswap <= 0) throw InfeasibleError("latent-only attack needs latent_per_reswap > 0");
  const double deficit = static_cast<double>(cfg.t_rh) - 2.0 * cfg.t_s;
  if (deficit <= 0) return 0;
  return static_cast<std::uint64_t>(std::ceil(deficit / cfg.latent_per_reswap));
}

}  // namespace

double log_binomial_pmf(std::uint64_t n, std::uint64_t k, double p) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  if (p <= 0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  return lchoose(n, k) + static_cast<double>(k) * std::log(p) + static_cast<double>(n - k) * std::log1p(-p);
}

AttackAnalysis juggernaut_rrs(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                              const AttackPlan& plan) {
  if (cfg.kind != DefenseKind::RRS) throw std::invalid_argument("juggernaut_rrs requires an RRS defense");
  check_inputs(timing, geom, cfg);
  plan.validate();

  if (plan.strategy == AttackStrategy::RandomGuessOnly) {
    return finish(timing, geom, cfg, 0, 0.0, Duration(0), Duration(0), true);
  }
  const std::uint64_t n = plan.strategy == AttackStrategy::LatentOnly ? latent_only_rounds(cfg) : plan.rounds;
  const double act_aggr = 2.0 * cfg.t_s + cfg.latent_per_reswap * static_cast<double>(n);
  const Duration per_round = timing.t_rc * static_cast<std::int64_t>(cfg.t_s - 1) + timing.t_reswap;
  const Duration t_aggr = per_round * static_cast<std::int64_t>(n);
  auto a = finish(timing, geom, cfg, n, act_aggr, t_aggr, initial_swap_time(timing, cfg.t_s), false);
  if (plan.strategy == AttackStrategy::LatentOnly && !a.deterministic) {
    throw InfeasibleError("latent-only attack does not reach t_rh");
  }
  return a;
}

AttackAnalysis juggernaut_srs(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                              const AttackPlan& plan) {
  if (cfg.kind != DefenseKind::SRS) throw std::invalid_argument("juggernaut_srs requires an SRS defense");
  check_inputs(timing, geom, cfg);
  plan.validate();

  if (plan.strategy == AttackStrategy::RandomGuessOnly) {
    return finish(timing, geom, cfg, 0, 0.0, Duration(0), Duration(0), true);
  }
  auto a = finish(timing, geom, cfg, 0, 2.0 * cfg.t_s, Duration(0), initial_swap_time(timing, cfg.t_s), false);
  if (plan.strategy == AttackStrategy::LatentOnly && !a.deterministic) {
    throw InfeasibleError("latent-only attack does not reach t_rh: reswaps add no latent activations");
  }
  return a;
}

AttackAnalysis analyze_attack(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                              const AttackPlan& plan) {
  switch (cfg.kind) {
    case DefenseKind::RRS: return juggernaut_rrs(timing, geom, cfg, plan);
    case DefenseKind::SRS: return juggernaut_srs(timing, geom, cfg, plan);
    default: throw std::invalid_argument("attack analysis covers rrs and srs only");
  }
}

const AttackAnalysis* RoundSweep::best() const {
  if (!argmin_n) return nullptr;
  for (const auto& p : points) {
    if (p.n == *argmin_n) return &*p.analysis;
  }
  return nullptr;
}

std::optional<std::uint64_t> RoundSweep::feasibility_limit() const {
  std::optional<std::uint64_t> limit;
  for (const auto& p : points) {
    if (p.analysis) limit = p.n;
  }
  return limit;
}

RoundSweep sweep_rounds(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                        std::uint64_t n_max) {
  if (cfg.kind != DefenseKind::RRS && cfg.kind != DefenseKind::SRS) {
    throw std::invalid_argument("sweep_rounds covers rrs and srs only");
  }
  RoundSweep sweep;
  sweep.points.reserve(n_max + 1);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t n = 0; n <= n_max; ++n) {
    SweepPoint pt;
    pt.n = n;
    try {
      pt.analysis = analyze_attack(timing, geom, cfg, AttackPlan{n, AttackStrategy::JuggernautBias});
      if (pt.analysis->at_time_s < best) {
        best = pt.analysis->at_time_s;
        sweep.argmin_n = n;
      }
    } catch (const InfeasibleError& e) {
      pt.infeasible_reason = e.what();
    }
    sweep.points.push_back(std::move(pt));
  }
  return sweep;
}

std::uint64_t outlier_guesses(const TimingParams& timing, const DefenseConfig& cfg, GuessAccounting mode) {
  if (mode == GuessAccounting::SwapLatency) {
    return static_cast<std::uint64_t>(timing.usable_time() / per_guess_time(timing, cfg.t_s));
  }
  return timing.act_max() / cfg.t_s;
}

OutlierAnalysis outlier_time(const TimingParams& timing, const DramGeometry& geom, const DefenseConfig& cfg,
                             std::uint64_t k_swaps, std::uint64_t m, GuessAccounting mode) {
  if (cfg.kind != DefenseKind::ScaleSRS) throw std::invalid_argument("outlier_time requires a scale-srs defense");
  if (k_swaps < 1) throw std::invalid_argument("k_swaps >= 1");
  check_inputs(timing, geom, cfg);

  OutlierAnalysis o;
  o.guesses = outlier_guesses(timing, cfg, mode);
  o.k_swaps = k_swaps;
  o.m = m;
  const double rows = static_cast<double>(geom.rows_per_bank);
  o.expected_rows_k = rows * std::exp(log_binomial_pmf(o.guesses, k_swaps, 1.0 / rows));
  const double lam = o.expected_rows_k;
  const auto dm = static_cast<double>(m);
  if (lam > 0) {
    o.log_p_m = -lam + dm * std::log(lam) - std::lgamma(dm + 1);
  } else {
    o.log_p_m = m == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  o.p_m = std::exp(o.log_p_m);
  const double epoch_s = static_cast<double>(timing.epoch.count()) * kSecondsPerNs;
  o.log10_time_to_appear_s = std::log10(epoch_s) - o.log_p_m / std::log(10.0);
  if (o.p_m > 0) {
    o.time_to_appear_s = epoch_s / o.p_m;
  } else {
    o.beyond_horizon = true;
    o.time_to_appear_s = std::numeric_limits<double>::infinity();
  }
  if (!std::isfinite(o.time_to_appear_s)) o.beyond_horizon = true;
  return o;
}

std::uint64_t scale_srs_pin_bound(const TimingParams& timing, const DefenseConfig& cfg) {
  const std::uint64_t per_pin = std::uint64_t{cfg.outlier_swap_limit - 1} * cfg.t_s;
  if (per_pin == 0) return timing.act_max();
  return timing.act_max() / per_pin;
}

std::uint64_t default_pin_entries(std::uint32_t t_rh) { return t_rh >= 4800 ? 66 : 96; }

double StorageReport::total_bits() const {
  double sum = 0;
  for (const auto& l : lines) sum += l.bits;
  return sum;
}

double StorageReport::bits_of(const std::string& structure) const {
  for (const auto& l : lines) {
    if (l.structure == structure) return l.bits;
  }
  return 0;
}

StorageReport storage_report(const DramGeometry& geom, const DefenseConfig& cfg, const TimingParams& timing,
                             const StorageCalibration& cal) {
  if (cfg.kind == DefenseKind::None) throw std::invalid_argument("storage_report needs a row-swap defense");
  if (cfg.t_s < 1) throw ValidationError("invariant violated: t_s >= 1");
  StorageReport r;
  r.kind = cfg.kind;
  r.max_swaps = timing.act_max() / cfg.t_s;
  r.rit_entries = 2 * r.max_swaps;
  double entry_bits = cal.rrs_entry_bits;
  if (cfg.kind == DefenseKind::SRS) entry_bits = cal.srs_entry_bits;
  if (cfg.kind == DefenseKind::ScaleSRS) entry_bits = cal.scale_srs_entry_bits;

  r.lines.push_back({kRit, static_cast<double>(r.rit_entries) * entry_bits * cfg.rit_overprovision});
  r.lines.push_back({kSwapBuffer, static_cast<double>(cal.swap_buffer_bytes) * 8});
  if (cfg.kind == DefenseKind::SRS || cfg.kind == DefenseKind::ScaleSRS) {
    const std::uint64_t pb = cal.placeback_bytes != 0 ? cal.placeback_bytes : geom.row_size_bytes;
    r.lines.push_back({kPlaceBackBuffer, static_cast<double>(pb) * 8});
  }
  if (cfg.kind == DefenseKind::ScaleSRS) {
    r.lines.push_back({kEpochRegister, static_cast<double>(cal.epoch_register_bits)});
    const std::uint64_t entries = cal.pin_entries != 0 ? cal.pin_entries : default_pin_entries(cfg.t_rh);
    r.lines.push_back({kPinBuffer, static_cast<double>(entries * cal.pin_entry_bits)});
  }
  return r;
}

SwapCounterLayout swap_counter_layout(const DramGeometry& geom, const TimingParams& timing) {
  SwapCounterLayout l;
  l.reserved_bytes_per_bank = geom.rows_per_bank * (l.counter_bits / 8);
  l.counter_rows = (l.reserved_bytes_per_bank + geom.row_size_bytes - 1) / geom.row_size_bytes;
  l.fraction_of_dram = static_cast<double>(l.reserved_bytes_per_bank) /
                       (static_cast<double>(geom.rows_per_bank) * geom.row_size_bytes);
  l.counter_epoch = timing.epoch / 2;
  l.wraparound_period_s = std::ldexp(static_cast<double>(l.counter_epoch.count()) * kSecondsPerNs, 19);
  l.reset_cost = timing.t_rc * static_cast<std::int64_t>(l.counter_rows);
  return l;
}

double pinned_llc_fraction(std::uint64_t pinned_bytes, std::uint64_t llc_bytes) {
  return static_cast<double>(pinned_bytes) / static_cast<double>(llc_bytes);
}

}  // namespace rowswap
