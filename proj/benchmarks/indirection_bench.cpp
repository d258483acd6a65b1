#include <benchmark/benchmark.h>

#include <chrono>

#include "rowswap/indirection.hpp"
#include "rowswap/rng.hpp"
#include "rowswap/tracker.hpp"

using namespace rowswap;

static void BM_RitResolve(benchmark::State& state) {
  constexpr std::uint32_t rows = 131072;
  RowIndirectionTable rit(RitMode::TuplePaired, rows, 4096, 1);
  ActivationLedger ledger(rows, std::chrono::hours(1));
  for (std::uint32_t i = 0; i < 1000; ++i) rit.swap(LogicalRow{2 * i}, LogicalRow{2 * i + 1}, ledger);
  std::uint32_t r = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rit.resolve(LogicalRow{r}));
    r = (r + 7919) % rows;
  }
}
BENCHMARK(BM_RitResolve);

static void BM_RrsUnswapSwap(benchmark::State& state) {
  constexpr std::uint32_t rows = 131072;
  RowIndirectionTable rit(RitMode::TuplePaired, rows, 4096, 1);
  ActivationLedger ledger(rows, std::chrono::hours(1000));
  rit.swap(LogicalRow{0}, LogicalRow{1}, ledger);
  std::uint32_t partner = 2;
  for (auto _ : state) {
    rit.unswap_swap(LogicalRow{0}, LogicalRow{partner}, ledger, UnswapOrder::AggressorFirst);
    partner = partner + 1 < rows ? partner + 1 : 2;
  }
}
BENCHMARK(BM_RrsUnswapSwap);

static void BM_SrsReswap(benchmark::State& state) {
  constexpr std::uint32_t rows = 131072;
  RowIndirectionTable rit(RitMode::RealMirrored, rows, 1u << 16, 1);
  ActivationLedger ledger(rows, std::chrono::hours(1000));
  std::uint32_t partner = 1;
  std::uint64_t n = 0;
  for (auto _ : state) {
    rit.srs_reswap(LogicalRow{0}, LogicalRow{partner}, ledger);
    partner = partner + 1 < 2000 ? partner + 1 : 1;
    if (++n % 1000 == 0) {
      state.PauseTiming();
      rit = RowIndirectionTable(RitMode::RealMirrored, rows, 1u << 16, 1);
      state.ResumeTiming();
    }
  }
}
BENCHMARK(BM_SrsReswap);

static void BM_MisraGriesObserve(benchmark::State& state) {
  const auto cap = MisraGriesTracker::default_capacity(TimingParams{}, 800);
  MisraGriesTracker mg(cap, 800);
  SplitMix64 rng(3);
  for (auto _ : state) {
    // Half the stream hammers a few rows, half is spread across the bank.
    const auto row = rng.below(2) ? rng.below(8) : rng.below(131072);
    benchmark::DoNotOptimize(mg.observe(LogicalRow{static_cast<std::uint32_t>(row)}));
  }
}
BENCHMARK(BM_MisraGriesObserve);
