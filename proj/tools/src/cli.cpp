#include "rowswap_cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "rowswap/analytic.hpp"
#include "rowswap/engine.hpp"
#include "rowswap/format.hpp"
#include "rowswap/montecarlo.hpp"
#include "rowswap/svg.hpp"

#ifndef ROWSWAP_VERSION
#define ROWSWAP_VERSION "0.0.0"
#endif

namespace rowswap::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Common {
  std::string timing;
  bool ddr5 = false;
  std::string config;
  std::string out;
  unsigned jobs = 1;
};

struct Invocation {
  std::vector<std::string> args;
  std::optional<std::string> config_text;  // set when replaying a manifest
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  std::string resolved_config;
};

// ---- shared helpers ----

Config resolve_config(const Common& c, const Invocation& inv) {
  Config cfg;
  if (inv.config_text) {
    cfg = parse_config(*inv.config_text);
  } else if (!c.config.empty()) {
    cfg = load_config(c.config);
  } else {
    cfg = load_default_config();
  }
  if (c.ddr5 || c.timing == "ddr5") {
    cfg.timing = ddr5_preset();
  } else if (c.timing == "toy") {
    cfg.timing = toy_timing();
  } else if (c.timing == "ddr4") {
    cfg.timing = TimingParams{};
  }
  cfg.timing.validate();
  return cfg;
}

DefenseConfig defense_from(const Config& cfg, DefenseKind kind, std::optional<std::uint32_t> t_rh,
                           std::optional<std::uint32_t> swap_rate) {
  DefenseConfig d = cfg.defense;
  d.kind = kind;
  if (t_rh) d.t_rh = *t_rh;
  if (swap_rate) {
    if (*swap_rate == 0 || d.t_rh % *swap_rate != 0) {
      throw ValidationError("invariant violated: t_rh must be a positive multiple of the swap rate");
    }
    d.t_s = d.t_rh / *swap_rate;
  }
  if (kind == DefenseKind::ScaleSRS) d.outlier_swap_limit = d.swap_rate();
  if (kind != DefenseKind::None) d.validate();
  return d;
}

void write_file(const fs::path& path, const std::string& text, Invocation& inv) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
  inv.outputs.push_back(path.string());
}

fs::path svg_path(const std::string& out) { return fs::path(out).replace_extension(".svg"); }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_manifest(const std::string& subcommand, const std::string& out, const Invocation& inv) {
  json m;
  m["tool"] = "rowswap";
  m["version"] = ROWSWAP_VERSION;
  m["subcommand"] = subcommand;
  m["args"] = inv.args;
  m["config"] = inv.resolved_config;
  m["seed"] = inv.seed ? json(*inv.seed) : json(nullptr);
  m["outputs"] = inv.outputs;
  m["timestamp"] = utc_timestamp();
  std::ofstream f(out + ".manifest.json", std::ios::binary);
  if (!f) throw ConfigError("cannot write manifest for " + out);
  f << m.dump(2) << '\n';
}

std::string hours(double s) { return format_fixed(s / 3600.0, 4) + " h"; }

std::string years(double s) { return format_fixed(s / (365.25 * 86400.0), 4) + " y"; }

// ---- analyze ----

struct AnalyzeArgs {
  std::string defense;
  std::optional<std::uint32_t> t_rh;
  std::optional<std::uint32_t> swap_rate;
  std::optional<std::uint64_t> rounds;
  std::optional<std::uint64_t> sweep_max;
  std::vector<std::uint64_t> outliers;
  std::string attack;
  std::string accounting = "latency";
};

int cmd_analyze(const Common& c, const AnalyzeArgs& a, Invocation& inv, std::ostream& out) {
  Config cfg = resolve_config(c, inv);
  const auto kind = parse_defense_kind(a.defense);
  cfg.defense = defense_from(cfg, kind, a.t_rh, a.swap_rate);
  inv.resolved_config = serialize_config(cfg);
  std::ostringstream csv;

  if (kind == DefenseKind::ScaleSRS) {
    const auto mode = a.accounting == "budget" ? GuessAccounting::ActivationBudget : GuessAccounting::SwapLatency;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> points;
    if (!a.outliers.empty()) {
      points.emplace_back(a.outliers[0], a.outliers[1]);
    } else {
      for (std::uint64_t m = 1; m <= 5; ++m) points.emplace_back(cfg.defense.swap_rate(), m);
    }
    csv << "k_swaps,m,g,expected_rows_k,p_m,time_to_appear_s,log10_time_to_appear_s\n";
    for (const auto& [k, m] : points) {
      const auto o = outlier_time(cfg.timing, cfg.geometry, cfg.defense, k, m, mode);
      csv << k << ',' << m << ',' << o.guesses << ',' << format_number(o.expected_rows_k) << ','
          << format_number(o.p_m) << ',' << format_number(o.time_to_appear_s) << ','
          << format_number(o.log10_time_to_appear_s) << '\n';
      out << "k=" << k << " m=" << m << " time_to_appear=" << format_number(o.time_to_appear_s) << " s ("
          << years(o.time_to_appear_s) << ")\n";
    }
    write_file(c.out, csv.str(), inv);
    return kOk;
  }
  if (kind != DefenseKind::RRS && kind != DefenseKind::SRS) throw ValidationError("analyze needs rrs, srs or scale-srs");

  auto row = [&](const AttackAnalysis& r) {
    csv << r.rounds << ',' << r.k << ',' << r.guesses << ',' << format_number(r.p_success) << ','
        << format_number(r.at_time_s) << '\n';
  };
  csv << "n,k,g,p_success,at_time_s\n";
  if (a.sweep_max) {
    const auto sweep = sweep_rounds(cfg.timing, cfg.geometry, cfg.defense, *a.sweep_max);
    LineChart chart{"Attack time vs rounds (" + a.defense + ", T_RH=" + std::to_string(cfg.defense.t_rh) + ")",
                    "rounds N", "attack time (s)", true, {}};
    ChartSeries series{"analytic", {}, false};
    for (const auto& p : sweep.points) {
      if (!p.analysis) continue;
      row(*p.analysis);
      series.points.emplace_back(static_cast<double>(p.n), p.analysis->at_time_s);
    }
    chart.series.push_back(std::move(series));
    write_file(c.out, csv.str(), inv);
    write_file(svg_path(c.out), render_svg(chart), inv);
    if (const auto* best = sweep.best()) {
      out << "min at_time=" << format_number(best->at_time_s) << " s (" << hours(best->at_time_s) << ") at n="
          << best->rounds << " k=" << best->k << '\n';
    } else {
      out << "no feasible round count in 0.." << *a.sweep_max << '\n';
    }
    return kOk;
  }
  AttackPlan plan = cfg.plan;
  if (a.rounds) plan.rounds = *a.rounds;
  if (!a.attack.empty()) plan.strategy = parse_strategy(a.attack);
  if (plan.strategy == AttackStrategy::RandomGuessOnly) plan.rounds = 0;
  const auto r = analyze_attack(cfg.timing, cfg.geometry, cfg.defense, plan);
  row(r);
  write_file(c.out, csv.str(), inv);
  out << "at_time=" << format_number(r.at_time_s) << " s (" << hours(r.at_time_s) << ", " << years(r.at_time_s)
      << ") k=" << r.k << " g=" << r.guesses << (r.deterministic ? " deterministic" : "") << '\n';
  return kOk;
}

// ---- montecarlo ----

struct McArgs {
  std::string defense = "rrs";
  std::optional<std::uint32_t> t_rh;
  std::optional<std::uint32_t> swap_rate;
  std::uint64_t iterations = 100000;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> rounds;
  std::optional<std::uint64_t> sweep_max;
  std::uint64_t step = 1;
  std::string mode = "geometric";
  std::string rule = "at-least";
};

int cmd_montecarlo(const Common& c, const McArgs& a, Invocation& inv, std::ostream& out) {
  if (a.iterations == 0) throw CLI::ValidationError("--iterations", "must be >= 1");
  if (a.step == 0) throw CLI::ValidationError("--step", "must be >= 1");
  Config cfg = resolve_config(c, inv);
  cfg.defense = defense_from(cfg, parse_defense_kind(a.defense), a.t_rh, a.swap_rate);
  inv.resolved_config = serialize_config(cfg);
  inv.seed = a.seed;

  std::vector<std::uint64_t> ns;
  if (a.sweep_max) {
    for (std::uint64_t n = 0; n <= *a.sweep_max; n += a.step) ns.push_back(n);
  } else {
    ns.push_back(a.rounds.value_or(cfg.plan.rounds));
  }
  McOptions opt;
  opt.mode = a.mode == "binomial" ? McMode::BinomialDraw : McMode::GeometricEvent;
  opt.rule = a.rule == "exactly" ? SuccessRule::ExactlyK : SuccessRule::AtLeastK;
  opt.jobs = c.jobs;
  const auto rows = mc_sweep(cfg.timing, cfg.geometry, cfg.defense, ns, a.iterations, a.seed, opt);
  if (rows.empty()) throw InfeasibleError("no feasible round count among the requested values");

  std::ostringstream csv;
  csv << "n,analytic_s,mc_mean_s,mc_p50_s,mc_p90_s,mc_p99_s,iterations,seed\n";
  ChartSeries analytic{"analytic", {}, false};
  ChartSeries mc{"monte carlo mean", {}, true};
  double worst = 0;
  for (const auto& r : rows) {
    csv << r.n << ',' << format_number(r.analytic_s) << ',' << format_number(r.mc_mean_s) << ','
        << format_number(r.mc_p50_s) << ',' << format_number(r.mc_p90_s) << ',' << format_number(r.mc_p99_s) << ','
        << r.iterations << ',' << r.seed << '\n';
    analytic.points.emplace_back(static_cast<double>(r.n), r.analytic_s);
    mc.points.emplace_back(static_cast<double>(r.n), r.mc_mean_s);
    if (r.p_success >= 1e-8 && r.analytic_s > 0) {
      worst = std::max(worst, std::abs(r.mc_mean_s - r.analytic_s) / r.analytic_s);
    }
  }
  write_file(c.out, csv.str(), inv);
  LineChart chart{"Analytic vs Monte Carlo attack time (T_RH=" + std::to_string(cfg.defense.t_rh) + ")", "rounds N",
                  "attack time (s)", true, {analytic, mc}};
  write_file(svg_path(c.out), render_svg(chart), inv);
  out << rows.size() << " points, max relative deviation " << format_fixed(worst * 100.0, 3)
      << "% where p_success >= 1e-8\n";
  return kOk;
}

// ---- simulate ----

struct SimArgs {
  std::string defense;
  std::optional<std::uint64_t> rows;
  std::optional<std::uint32_t> t_rh;
  std::optional<std::uint32_t> swap_rate;
  std::string attack = "juggernaut";
  std::optional<std::uint64_t> rounds;
  std::string trace;
  std::uint64_t epochs = 1;
  std::uint64_t seeds = 1;
  std::uint64_t seed = 1;
  std::string tracker = "mg";
  bool no_immediate_unswap = false;
  bool no_desync = false;
  bool warm_start = false;
  std::string pin_policy = "projected";
};

struct SeedOutcome {
  std::vector<EpochReport> reports;
  bool breached = false;
};

int cmd_simulate(const Common& c, const SimArgs& a, Invocation& inv, std::ostream& out) {
  if (a.epochs == 0 || a.seeds == 0) throw CLI::ValidationError("--epochs/--seeds", "must be >= 1");
  Config cfg = resolve_config(c, inv);
  if (a.rows) cfg.geometry.rows_per_bank = *a.rows;
  cfg.geometry.validate();
  const auto kind = parse_defense_kind(a.defense);
  cfg.defense = defense_from(cfg, kind, a.t_rh, a.swap_rate);
  cfg.plan.strategy = parse_strategy(a.attack);
  if (a.rounds) {
    cfg.plan.rounds = *a.rounds;
  } else if (kind == DefenseKind::RRS && cfg.plan.strategy == AttackStrategy::JuggernautBias) {
    const auto sweep = sweep_rounds(cfg.timing, cfg.geometry, cfg.defense, cfg.timing.act_max() / cfg.defense.t_s);
    cfg.plan.rounds = sweep.argmin_n.value_or(0);
  } else {
    cfg.plan.rounds = 0;
  }
  if (cfg.plan.strategy != AttackStrategy::JuggernautBias) cfg.plan.rounds = 0;
  cfg.plan.validate();
  inv.resolved_config = serialize_config(cfg);
  inv.seed = a.seed;

  EngineOptions opt;
  opt.tracker = a.tracker == "exact" ? TrackerKind::Exact : TrackerKind::MisraGries;
  opt.immediate_unswap = !a.no_immediate_unswap;
  opt.exploit_tracker_desync = !a.no_desync;
  opt.warm_start = a.warm_start;
  opt.pin_policy = a.pin_policy == "at-threshold" ? PinPolicy::AtThreshold : PinPolicy::Projected;

  std::optional<Workload> trace;
  if (!a.trace.empty()) trace = load_trace(a.trace, static_cast<std::uint32_t>(cfg.geometry.rows_per_bank));

  std::vector<SeedOutcome> outcomes(a.seeds);
  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      const std::uint64_t s = a.seed + i;
      for (std::uint64_t e = 0; e < a.epochs; ++e) {
        const auto epoch_seed = derive_seed(s, 0xe90cu, e);
        auto r = trace ? run_stream_epoch(cfg.defense, *trace, cfg.timing, cfg.geometry, epoch_seed, opt)
                       : run_epoch(cfg.defense, cfg.plan, cfg.timing, cfg.geometry, epoch_seed, opt);
        outcomes[i].reports.push_back(r);
        if (r.breached) {
          outcomes[i].breached = true;
          break;
        }
      }
    }
  };
  const std::uint64_t jobs = std::clamp<std::uint64_t>(c.jobs, 1, a.seeds);
  if (jobs == 1) {
    work(0, a.seeds);
  } else {
    std::vector<std::exception_ptr> errors(jobs);
    {
      std::vector<std::jthread> pool;
      const std::uint64_t chunk = (a.seeds + jobs - 1) / jobs;
      for (std::uint64_t j = 0, b = 0; b < a.seeds; ++j, b += chunk) {
        pool.emplace_back([&, j, b] {
          try {
            work(b, std::min(a.seeds, b + chunk));
          } catch (...) {
            errors[j] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::ostringstream csv;
  csv << "seed,epoch,max_physical_acts,breached,swaps,unswap_swaps,pins,overhead_ns\n";
  std::uint64_t breached = 0;
  std::uint64_t breach_epochs = 0;
  std::vector<EpochReport> all;
  for (std::uint64_t i = 0; i < a.seeds; ++i) {
    const auto& o = outcomes[i];
    for (std::size_t e = 0; e < o.reports.size(); ++e) {
      const auto& r = o.reports[e];
      csv << a.seed + i << ',' << e + 1 << ',' << r.max_physical_acts << ',' << (r.breached ? 1 : 0) << ','
          << r.swaps << ',' << r.unswap_swaps << ',' << r.pins << ',' << r.overhead_time().count() << '\n';
      all.push_back(r);
    }
    if (o.breached) {
      ++breached;
      breach_epochs += o.reports.size();
    }
  }
  write_file(c.out, csv.str(), inv);
  const auto overhead = overhead_metrics(all, cfg.timing);
  out << "summary seeds=" << a.seeds << " breached=" << breached
      << " breach_rate=" << format_number(static_cast<double>(breached) / static_cast<double>(a.seeds))
      << " mean_epochs_to_breach="
      << (breached ? format_number(static_cast<double>(breach_epochs) / static_cast<double>(breached)) : "none")
      << " overhead_fraction=" << format_number(overhead.overhead_fraction) << " rounds=" << cfg.plan.rounds
      << '\n';
  return kOk;
}

// ---- storage ----

struct StorageArgs {
  std::uint32_t t_rh = 4800;
  std::uint32_t rrs_swap_rate = 6;
  std::uint32_t scale_srs_swap_rate = 3;
};

int cmd_storage(const Common& c, const StorageArgs& a, Invocation& inv, std::ostream& out) {
  Config cfg = resolve_config(c, inv);
  const auto rrs_cfg = defense_from(cfg, DefenseKind::RRS, a.t_rh, a.rrs_swap_rate);
  const auto scale_cfg = defense_from(cfg, DefenseKind::ScaleSRS, a.t_rh, a.scale_srs_swap_rate);
  cfg.defense = scale_cfg;
  inv.resolved_config = serialize_config(cfg);
  const auto rrs = storage_report(cfg.geometry, rrs_cfg, cfg.timing);
  const auto scale = storage_report(cfg.geometry, scale_cfg, cfg.timing);

  std::vector<std::string> names;
  for (const auto* r : {&rrs, &scale}) {
    for (const auto& l : r->lines) {
      if (std::find(names.begin(), names.end(), l.structure) == names.end()) names.push_back(l.structure);
    }
  }
  auto ratio = [](double num, double den) { return den > 0 ? format_number(num / den) : std::string(); };
  std::ostringstream csv;
  csv << "structure,rrs_bits,scale_srs_bits,rrs_bytes,scale_srs_bytes,ratio\n";
  for (const auto& n : names) {
    const double rb = rrs.bits_of(n);
    const double sb = scale.bits_of(n);
    csv << n << ',' << format_number(rb) << ',' << format_number(sb) << ',' << format_number(rb / 8) << ','
        << format_number(sb / 8) << ',' << ratio(rb, sb) << '\n';
  }
  csv << "total," << format_number(rrs.total_bits()) << ',' << format_number(scale.total_bits()) << ','
      << format_number(rrs.total_bytes()) << ',' << format_number(scale.total_bytes()) << ','
      << ratio(rrs.total_bits(), scale.total_bits()) << '\n';
  write_file(c.out, csv.str(), inv);
  out << "t_rh=" << a.t_rh << " rrs=" << format_fixed(rrs.total_bytes() / 1024.0, 2)
      << " KB scale-srs=" << format_fixed(scale.total_bytes() / 1024.0, 2)
      << " KB ratio=" << ratio(rrs.total_bits(), scale.total_bits()) << '\n';
  return kOk;
}

// ---- dispatch ----

int dispatch(Invocation& inv, std::ostream& out, std::ostream& err);

int replay(const std::string& path, std::ostream& out, std::ostream& err) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open manifest " + path);
  json m;
  try {
    m = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad manifest: ") + e.what());
  }
  Invocation inv;
  try {
    inv.args = m.at("args").get<std::vector<std::string>>();
    inv.config_text = m.at("config").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad manifest: ") + e.what());
  }
  return dispatch(inv, out, err);
}

template <class T>
CLI::Option* opt_value(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
  return app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

int dispatch(Invocation& inv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Row-swap Row Hammer defense lab: analytic models, Monte Carlo and activation-exact simulation"};
  app.name("rowswap");
  app.set_version_flag("--version", ROWSWAP_VERSION);
  app.require_subcommand(0, 1);
  std::string manifest;
  app.add_option("--from-manifest", manifest, "Re-run the invocation recorded in a manifest");

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--timing", common.timing, "Timing preset")->check(CLI::IsMember({"ddr4", "ddr5", "toy"}));
    sub->add_flag("--ddr5", common.ddr5, "Shorthand for --timing ddr5");
    sub->add_option("--config", common.config, "key = value config file (default: $ROWSWAP_CONFIG)");
    sub->add_option("--out", common.out, "Output CSV path")->required();
    sub->add_option("--jobs", common.jobs, "Worker threads; never changes output")->check(CLI::PositiveNumber);
  };

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Closed-form attack time and outlier horizons");
  add_common(analyze);
  analyze->add_option("--defense", an.defense, "rrs, srs or scale-srs")
      ->required()
      ->check(CLI::IsMember({"rrs", "srs", "scale-srs"}));
  opt_value(analyze, "--trh", an.t_rh, "Row Hammer threshold");
  opt_value(analyze, "--swap-rate", an.swap_rate, "T_RH / T_S");
  auto* rounds_opt = opt_value(analyze, "--rounds", an.rounds, "Latent-activation rounds N");
  auto* sweep_opt = opt_value(analyze, "--sweep-rounds", an.sweep_max, "Sweep N over 0..MAX and plot");
  rounds_opt->excludes(sweep_opt);
  analyze->add_option("--outliers", an.outliers, "K,M for the Scale-SRS outlier model")
      ->delimiter(',')
      ->expected(2);
  analyze->add_option("--attack", an.attack, "juggernaut, random or latent-only")
      ->check(CLI::IsMember({"juggernaut", "random", "latent-only"}));
  analyze->add_option("--guess-accounting", an.accounting, "Outlier guess count: latency or budget")
      ->check(CLI::IsMember({"latency", "budget"}));

  McArgs mc;
  auto* montecarlo = app.add_subcommand("montecarlo", "Monte Carlo attack time against the analytic curve");
  add_common(montecarlo);
  montecarlo->add_option("--defense", mc.defense, "rrs or srs")->check(CLI::IsMember({"rrs", "srs"}));
  opt_value(montecarlo, "--trh", mc.t_rh, "Row Hammer threshold");
  opt_value(montecarlo, "--swap-rate", mc.swap_rate, "T_RH / T_S");
  montecarlo->add_option("--iterations", mc.iterations, "Samples per point");
  montecarlo->add_option("--seed", mc.seed, "Master seed");
  auto* mc_rounds = opt_value(montecarlo, "--rounds", mc.rounds, "Single round count N");
  auto* mc_sweep_opt = opt_value(montecarlo, "--sweep-rounds", mc.sweep_max, "Sweep N over 0..MAX");
  mc_rounds->excludes(mc_sweep_opt);
  montecarlo->add_option("--step", mc.step, "Sweep step");
  montecarlo->add_option("--mode", mc.mode, "geometric or binomial")
      ->check(CLI::IsMember({"geometric", "binomial"}));
  montecarlo->add_option("--rule", mc.rule, "Binomial success rule: at-least or exactly")
      ->check(CLI::IsMember({"at-least", "exactly"}));

  SimArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Activation-exact single-bank simulation");
  add_common(simulate);
  simulate->add_option("--defense", sim.defense, "none, rrs, srs or scale-srs")
      ->required()
      ->check(CLI::IsMember({"none", "rrs", "srs", "scale-srs"}));
  opt_value(simulate, "--rows", sim.rows, "Rows per bank");
  opt_value(simulate, "--trh", sim.t_rh, "Row Hammer threshold");
  opt_value(simulate, "--swap-rate", sim.swap_rate, "T_RH / T_S");
  simulate->add_option("--attack", sim.attack, "juggernaut, random or latent-only")
      ->check(CLI::IsMember({"juggernaut", "random", "latent-only"}));
  opt_value(simulate, "--rounds", sim.rounds, "Bias rounds (default: analytic optimum for rrs)");
  simulate->add_option("--trace", sim.trace, "Replay a row-id trace each epoch instead of an attack");
  simulate->add_option("--epochs", sim.epochs, "Maximum epochs per seed");
  simulate->add_option("--seeds", sim.seeds, "Number of seeds");
  simulate->add_option("--seed", sim.seed, "First seed");
  simulate->add_option("--tracker", sim.tracker, "mg or exact")->check(CLI::IsMember({"mg", "exact"}));
  simulate->add_flag("--no-immediate-unswap", sim.no_immediate_unswap, "RRS: defer place-back to epoch end");
  simulate->add_flag("--no-desync", sim.no_desync, "Attacker does not split its first burst around a reset");
  simulate->add_flag("--warm-start", sim.warm_start, "Run one unmeasured epoch first");
  simulate->add_option("--pin-policy", sim.pin_policy, "projected or at-threshold")
      ->check(CLI::IsMember({"projected", "at-threshold"}));

  StorageArgs st;
  auto* storage = app.add_subcommand("storage", "Per-bank storage of RRS and Scale-SRS");
  add_common(storage);
  storage->add_option("--trh", st.t_rh, "Row Hammer threshold");
  storage->add_option("--rrs-swap-rate", st.rrs_swap_rate, "RRS swap rate");
  storage->add_option("--scale-srs-swap-rate", st.scale_srs_swap_rate, "Scale-SRS swap rate");

  std::vector<std::string> argv_store{"rowswap"};
  argv_store.insert(argv_store.end(), inv.args.begin(), inv.args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, eo;
    const int code = app.exit(e, o, eo);
    out << o.str();
    err << eo.str();
    return code == 0 ? kOk : kUsage;
  }

  if (!manifest.empty()) {
    if (!app.get_subcommands().empty()) {
      err << "--from-manifest takes no subcommand\n";
      return kUsage;
    }
    return replay(manifest, out, err);
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    return kUsage;
  }

  try {
    int code = kOk;
    std::string name;
    if (analyze->parsed()) {
      name = "analyze";
      code = cmd_analyze(common, an, inv, out);
    } else if (montecarlo->parsed()) {
      name = "montecarlo";
      code = cmd_montecarlo(common, mc, inv, out);
    } else if (simulate->parsed()) {
      name = "simulate";
      code = cmd_simulate(common, sim, inv, out);
    } else {
      name = "storage";
      code = cmd_storage(common, st, inv, out);
    }
    if (code == kOk) write_manifest(name, common.out, inv);
    return code;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Invocation inv;
  inv.args = args;
  try {
    return dispatch(inv, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const InfeasibleError& e) {
    err << "error: infeasible: " << e.what() << '\n';
    return kValidation;
  } catch (const DegenerateProbabilityError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace rowswap::cli
