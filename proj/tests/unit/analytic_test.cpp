#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "rowswap/analytic.hpp"

using namespace rowswap;

namespace {

DefenseConfig rrs(std::uint32_t t_rh, std::uint32_t rate) { return make_defense(DefenseKind::RRS, t_rh, rate); }
DefenseConfig srs(std::uint32_t t_rh, std::uint32_t rate) { return make_defense(DefenseKind::SRS, t_rh, rate); }

AttackAnalysis at_rounds(const DefenseConfig& cfg, std::uint64_t n) {
  return analyze_attack(TimingParams{}, DramGeometry{}, cfg, AttackPlan{n, AttackStrategy::JuggernautBias});
}

void check_against_oracle(const DefenseConfig& cfg, std::uint64_t n) {
  CAPTURE(cfg.t_rh);
  CAPTURE(n);
  const auto o = oracle::juggernaut(oracle::Dram{}, cfg.t_rh, cfg.t_s, 3, static_cast<std::int64_t>(n),
                                    cfg.kind == DefenseKind::SRS);
  if (!o) {
    CHECK_THROWS_AS(at_rounds(cfg, n), InfeasibleError);
    return;
  }
  const auto a = at_rounds(cfg, n);
  CHECK(a.deterministic == o->deterministic);
  CHECK(a.k == static_cast<std::uint64_t>(o->k));
  if (!o->deterministic) CHECK(a.guesses == static_cast<std::uint64_t>(o->g));
  CHECK(a.p_success == doctest::Approx(o->p).epsilon(1e-9));
  CHECK(a.at_time_s == doctest::Approx(o->at_time_s).epsilon(1e-9));
}

}  // namespace

TEST_CASE("timing budget") {
  const TimingParams t;
  CHECK(t.usable_time().count() == 61'132'800);
  CHECK(t.act_max() == 1'358'506);
}

TEST_CASE("rrs closed form matches the exact oracle") {
  for (std::uint64_t n : {0, 1, 250, 500, 501, 800, 1067, 1100, 1300, 1476, 1477, 1500}) {
    check_against_oracle(rrs(4800, 6), n);
  }
  for (std::uint64_t n : {0, 100, 400, 600}) check_against_oracle(rrs(2400, 6), n);
  for (std::uint64_t n : {0, 50, 200, 300}) check_against_oracle(rrs(1200, 6), n);
}

TEST_CASE("rrs at 1100 rounds needs two hits within 3.8 hours") {
  const auto a = at_rounds(rrs(4800, 6), 1100);
  CHECK(a.k == 2);
  CHECK(a.guesses == 402);
  CHECK(a.at_time_s / 3600 == doctest::Approx(3.8008634).epsilon(1e-6));
}

TEST_CASE("srs closed form matches the exact oracle") {
  const auto a = at_rounds(srs(4800, 6), 0);
  CHECK(a.rounds == 0);
  CHECK(a.k == 4);
  CHECK(a.guesses == 1579);
  check_against_oracle(srs(4800, 6), 0);
  const double years = a.at_time_s / (365.25 * 86400);
  CHECK(years > 2.0);
  CHECK(years == doctest::Approx(2.3478).epsilon(1e-3));
  // Rounds are meaningless for SRS and collapse to zero.
  CHECK(at_rounds(srs(4800, 6), 900) == a);
}

TEST_CASE("sweep minimum is under four hours") {
  const auto sweep = sweep_rounds(TimingParams{}, DramGeometry{}, rrs(4800, 6), 1500);
  REQUIRE(sweep.best() != nullptr);
  const double hours = sweep.best()->at_time_s / 3600;
  CHECK(hours >= 3.0);
  CHECK(hours <= 4.0);
  CHECK(*sweep.argmin_n == 1067);
  CHECK(*sweep.feasibility_limit() == 1474);

  // Independent minimum over the oracle.
  double best = INFINITY;
  for (std::int64_t n = 0; n <= 1500; ++n) {
    if (auto o = oracle::juggernaut(oracle::Dram{}, 4800, 800, 3, n, false)) best = std::min(best, o->at_time_s);
  }
  CHECK(sweep.best()->at_time_s == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("guess-count plateaus") {
  const auto sweep = sweep_rounds(TimingParams{}, DramGeometry{}, rrs(4800, 6), 1500);
  const auto limit = *sweep.feasibility_limit();
  for (const auto& p : sweep.points) {
    CAPTURE(p.n);
    if (p.n <= 500) {
      REQUIRE(p.analysis);
      CHECK(p.analysis->k == 4);
    }
    if (p.n >= 1100 && p.n <= limit) {
      REQUIRE(p.analysis);
      CHECK(p.analysis->k == 2);
    }
    if (p.n > limit) CHECK_FALSE(p.analysis);
  }
}

TEST_CASE("k never increases with rounds and time is monotone within a plateau") {
  for (std::uint32_t t_rh : {4800u, 2400u, 1200u}) {
    const auto sweep = sweep_rounds(TimingParams{}, DramGeometry{}, rrs(t_rh, 6), 1500);
    const AttackAnalysis* prev = nullptr;
    for (const auto& p : sweep.points) {
      if (!p.analysis) continue;
      if (prev != nullptr) {
        CHECK(p.analysis->k <= prev->k);
        // Fewer guesses at the same k only lowers the success chance.
        if (p.analysis->k == prev->k && !p.analysis->deterministic) {
          CHECK(p.analysis->guesses <= prev->guesses);
          CHECK(p.analysis->at_time_s >= prev->at_time_s * (1 - 1e-12));
        }
      }
      prev = &*p.analysis;
    }
  }
}

TEST_CASE("log binomial agrees with exact rationals") {
  for (std::uint64_t g : {1u, 10u, 402u, 1579u, 5000u}) {
    for (std::uint64_t k = 0; k <= 8 && k <= g; ++k) {
      CAPTURE(g);
      CAPTURE(k);
      const double exact = oracle::to_double(oracle::binomial_point(g, k, 131072));
      const double ours = std::exp(log_binomial_pmf(g, k, 1.0 / 131072));
      CHECK(ours == doctest::Approx(exact).epsilon(1e-9));
    }
  }
  CHECK(std::isinf(log_binomial_pmf(3, 4, 0.5)));
  CHECK(log_binomial_pmf(5, 0, 0.0) == 0.0);
  CHECK(log_binomial_pmf(5, 5, 1.0) == 0.0);
}

TEST_CASE("zero latent activations reduce rrs to the srs form") {
  auto cfg = rrs(4800, 6);
  cfg.latent_per_reswap = 0;
  const auto r = at_rounds(cfg, 0);
  const auto s = at_rounds(srs(4800, 6), 0);
  CHECK(r.k == s.k);
  CHECK(r.guesses == s.guesses);
  CHECK(r.at_time_s == doctest::Approx(s.at_time_s).epsilon(1e-12));
}

TEST_CASE("latent-only attack is deterministic in one epoch") {
  struct Case {
    std::uint32_t t_rh, rate;
  };
  for (auto c : {Case{2400, 6}, Case{1200, 6}, Case{3300, 10}}) {
    CAPTURE(c.t_rh);
    const auto a = analyze_attack(TimingParams{}, DramGeometry{}, rrs(c.t_rh, c.rate),
                                  AttackPlan{0, AttackStrategy::LatentOnly});
    CHECK(a.deterministic);
    CHECK(a.at_iter == 1.0);
    CHECK(a.at_time_s == doctest::Approx(0.064));
    const auto o = oracle::juggernaut(oracle::Dram{}, c.t_rh, c.t_rh / c.rate, 3, static_cast<std::int64_t>(a.rounds),
                                      false);
    REQUIRE(o);
    CHECK(o->deterministic);
  }
  // At 4800 the rounds needed do not fit.
  CHECK_THROWS_AS(analyze_attack(TimingParams{}, DramGeometry{}, rrs(4800, 6), AttackPlan{0, AttackStrategy::LatentOnly}),
                  InfeasibleError);
  CHECK_THROWS_AS(analyze_attack(TimingParams{}, DramGeometry{}, srs(2400, 6), AttackPlan{0, AttackStrategy::LatentOnly}),
                  InfeasibleError);
}

TEST_CASE("random guessing alone is far slower") {
  const auto cfg = rrs(4800, 6);
  const auto random = analyze_attack(TimingParams{}, DramGeometry{}, cfg, AttackPlan{0, AttackStrategy::RandomGuessOnly});
  CHECK(random.k == 6);
  CHECK(random.at_time_s > at_rounds(cfg, 1067).at_time_s);
}

TEST_CASE("ddr5 shortens the window") {
  const auto d4 = sweep_rounds(TimingParams{}, DramGeometry{}, rrs(4800, 6), 1500);
  const auto d5 = sweep_rounds(ddr5_preset(), DramGeometry{}, rrs(4800, 6), 1500);
  CHECK(*d5.feasibility_limit() < *d4.feasibility_limit());
  oracle::Dram d;
  d.epoch_ns = 32'000'000;
  d.refresh_ops = 4096;
  const auto o = oracle::juggernaut(d, 4800, 800, 3, 500, false);
  REQUIRE(o);
  CHECK(at_rounds(rrs(4800, 6), 500).k == 4);
  const auto a = analyze_attack(ddr5_preset(), DramGeometry{}, rrs(4800, 6), AttackPlan{500});
  CHECK(a.k == static_cast<std::uint64_t>(o->k));
  CHECK(a.at_time_s == doctest::Approx(o->at_time_s).epsilon(1e-9));
}

TEST_CASE("outlier horizon at swap rate 3") {
  const auto cfg = make_defense(DefenseKind::ScaleSRS, 4800, 3);
  const auto g = outlier_guesses(TimingParams{}, cfg, GuessAccounting::SwapLatency);
  CHECK(g == static_cast<std::uint64_t>(oracle::latency_guesses(oracle::Dram{}, 1600)));
  CHECK(outlier_guesses(TimingParams{}, cfg, GuessAccounting::ActivationBudget) == 1358506 / 1600);
  const double day = 86400, year = 365.25 * day;
  for (std::uint64_t m = 1; m <= 5; ++m) {
    CAPTURE(m);
    const auto a = outlier_time(TimingParams{}, DramGeometry{}, cfg, 3, m);
    const auto o = oracle::outlier(oracle::Dram{}, static_cast<std::int64_t>(g), 3, static_cast<std::int64_t>(m));
    CHECK(a.expected_rows_k == doctest::Approx(o.r_k).epsilon(1e-9));
    CHECK(a.p_m == doctest::Approx(o.p_m).epsilon(1e-9));
    CHECK(a.time_to_appear_s == doctest::Approx(o.time_s).epsilon(1e-9));
  }
  const auto m3 = outlier_time(TimingParams{}, DramGeometry{}, cfg, 3, 3);
  const auto m4 = outlier_time(TimingParams{}, DramGeometry{}, cfg, 3, 4);
  CHECK(m3.time_to_appear_s >= 10 * day);
  CHECK(m3.time_to_appear_s <= 60 * day);
  CHECK(m4.time_to_appear_s >= 10 * year);
  CHECK(m4.time_to_appear_s <= 100 * year);
}

TEST_CASE("outlier poisson probabilities sum to one") {
  const auto cfg = make_defense(DefenseKind::ScaleSRS, 4800, 3);
  double sum = 0;
  for (std::uint64_t m = 0; m <= 40; ++m) sum += outlier_time(TimingParams{}, DramGeometry{}, cfg, 3, m).p_m;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("far outliers report log time when the probability underflows") {
  const auto cfg = make_defense(DefenseKind::ScaleSRS, 4800, 3);
  const auto a = outlier_time(TimingParams{}, DramGeometry{}, cfg, 3, 200);
  CHECK(a.beyond_horizon);
  CHECK(std::isfinite(a.log10_time_to_appear_s));
  CHECK(a.log10_time_to_appear_s > 300);
}

TEST_CASE("pin bound") {
  const auto cfg = make_defense(DefenseKind::ScaleSRS, 4800, 3);
  CHECK(scale_srs_pin_bound(TimingParams{}, cfg) == 1358506 / 3200);
}

TEST_CASE("storage at 1200") {
  const auto r = storage_report(DramGeometry{}, rrs(1200, 6));
  const auto s = storage_report(DramGeometry{}, make_defense(DefenseKind::ScaleSRS, 1200, 3));
  CHECK(r.bits_of(kSwapBuffer) == 1024 * 8);
  CHECK(s.bits_of(kSwapBuffer) == 1024 * 8);
  CHECK(r.bits_of(kPlaceBackBuffer) == 0);
  CHECK(s.bits_of(kPlaceBackBuffer) == 8192 * 8);
  CHECK(s.bits_of(kEpochRegister) == 19);
  CHECK(s.bits_of(kPinBuffer) / 8 <= 420);
  const double ratio = r.total_bytes() / s.total_bytes();
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 3.6);
}

TEST_CASE("scale-srs storage stays below rrs") {
  for (std::uint32_t t_rh : {4800u, 2400u, 1200u, 3000u}) {
    CAPTURE(t_rh);
    const auto r = storage_report(DramGeometry{}, rrs(t_rh, 6));
    const auto s = storage_report(DramGeometry{}, make_defense(DefenseKind::ScaleSRS, t_rh, 3));
    CHECK(s.total_bytes() < r.total_bytes());
    CHECK(s.bits_of(kEpochRegister) == 19);
  }
}

TEST_CASE("swap counter layout") {
  const auto l = swap_counter_layout(DramGeometry{});
  CHECK(l.epoch_bits + l.act_bits == l.counter_bits);
  CHECK(l.reserved_bytes_per_bank == 131072 * 4);
  CHECK(l.counter_rows == 64);
  CHECK(l.fraction_of_dram == doctest::Approx(4.0 / 8192));
  CHECK(l.counter_epoch.count() == 32'000'000);
  // 48KB pinned in an 8MB LLC.
  CHECK(pinned_llc_fraction(48 * 1024) == doctest::Approx(0.005859375));
}

TEST_CASE("bad inputs") {
  auto cfg = rrs(4800, 6);
  cfg.t_s = 0;
  CHECK_THROWS_AS(at_rounds(cfg, 0), ValidationError);
  CHECK_THROWS_AS(analyze_attack(TimingParams{}, DramGeometry{}, make_defense(DefenseKind::ScaleSRS, 4800, 3), {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(outlier_time(TimingParams{}, DramGeometry{}, rrs(4800, 6), 3, 1), std::invalid_argument);
}
