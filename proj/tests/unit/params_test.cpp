#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "rowswap/params.hpp"

using namespace rowswap;
using namespace std::chrono_literals;

TEST_CASE("empty config gives the DDR4 baseline") {
  const auto cfg = parse_config("");
  CHECK(cfg.timing.t_rc == 45ns);
  CHECK(cfg.timing.t_rfc == 350ns);
  CHECK(cfg.timing.epoch == 64ms);
  CHECK(cfg.timing.refresh_ops_per_epoch == 8192);
  CHECK(cfg.geometry.rows_per_bank == 131072);
  CHECK(cfg.timing.act_max() == 1358506);
}

TEST_CASE("t_rh 4800 with t_s 800 is swap rate 6") {
  const auto cfg = parse_config("t_rh = 4800\nt_s = 800\n");
  CHECK(cfg.defense.swap_rate() == 6);
  CHECK(cfg.defense.swap_rate() * cfg.defense.t_s == cfg.defense.t_rh);
}

TEST_CASE("t_s = 0 names the violated invariant") {
  try {
    parse_config("t_s = 0\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("t_s >= 1") != std::string::npos);
  }
}

TEST_CASE("t_rh that is not a multiple of t_s is rejected") {
  CHECK_THROWS_AS(parse_config("t_rh = 4801\nt_s = 800\n"), ValidationError);
}

TEST_CASE("latent_per_reswap must lie in [1, 2]") {
  CHECK_THROWS_AS(parse_config("latent_per_reswap = 0.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("latent_per_reswap = 2.5\n"), ValidationError);
  CHECK_NOTHROW(parse_config("latent_per_reswap = 2\n"));
}

TEST_CASE("scale-srs outlier limit follows the swap rate") {
  const auto cfg = parse_config("defense = scale-srs\nt_rh = 4800\nt_s = 1600\n");
  CHECK(cfg.defense.outlier_swap_limit == 3);
  CHECK_THROWS_AS(parse_config("defense = scale-srs\nt_rh = 4800\nt_s = 1600\noutlier_swap_limit = 4\n"),
                  ValidationError);
}

TEST_CASE("random-guess-only plans force zero rounds") {
  CHECK_THROWS_AS(parse_config("strategy = random\nrounds = 3\n"), ValidationError);
  CHECK(parse_config("strategy = random\n").plan.strategy == AttackStrategy::RandomGuessOnly);
}

TEST_CASE("parse errors carry the line number") {
  try {
    parse_config("t_rc = 45ns\n# comment\nnot a pair\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_config("t_rc = 45ns\nt_rc = 46ns\n"), ParseError);
  CHECK_THROWS_AS(parse_config("bogus_key = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("t_rc = fast\n"), ParseError);
}

TEST_CASE("durations accept ns, us, ms and s") {
  CHECK(parse_duration("45") == 45ns);
  CHECK(parse_duration("45ns") == 45ns);
  CHECK(parse_duration("2.7us") == 2700ns);
  CHECK(parse_duration("64ms") == 64ms);
  CHECK(parse_duration("1s") == 1s);
  CHECK(parse_duration("0.5 us") == 500ns);
  CHECK_THROWS(parse_duration("1.0001ns"));
  CHECK_THROWS(parse_duration("-3ns"));
  CHECK(format_duration(2700ns) == "2700ns");
}

TEST_CASE("serialize and parse round trip") {
  Config cfg;
  cfg.timing = ddr5_preset();
  cfg.geometry.rows_per_bank = 64;
  cfg.defense = make_defense(DefenseKind::ScaleSRS, 2400, 3);
  cfg.defense.latent_per_reswap = 1.25;
  cfg.plan = AttackPlan{17, AttackStrategy::LatentOnly};
  CHECK(parse_config(serialize_config(cfg)) == cfg);

  const Config defaults;
  CHECK(parse_config(serialize_config(defaults)) == defaults);
}

TEST_CASE("ddr5 preset halves only the refresh cadence") {
  const auto t = ddr5_preset();
  CHECK(t.epoch == 32ms);
  CHECK(t.refresh_ops_per_epoch == 4096);
  CHECK(t.t_rc == 45ns);
  CHECK(t.t_swap == TimingParams{}.t_swap);
}

TEST_CASE("timing invariants") {
  TimingParams t;
  t.t_reswap = 1000ns;
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t = TimingParams{};
  t.epoch = Duration(8192 * 350);
  CHECK_THROWS_AS(t.validate(), ValidationError);
  DramGeometry g;
  g.rows_per_bank = 1;
  CHECK_THROWS_AS(g.validate(), ValidationError);
}

TEST_CASE("kind names round trip") {
  for (auto k : {DefenseKind::None, DefenseKind::RRS, DefenseKind::SRS, DefenseKind::ScaleSRS}) {
    CHECK(parse_defense_kind(to_string(k)) == k);
  }
  for (auto s : {AttackStrategy::JuggernautBias, AttackStrategy::RandomGuessOnly, AttackStrategy::LatentOnly}) {
    CHECK(parse_strategy(to_string(s)) == s);
  }
  CHECK_THROWS(parse_defense_kind("trr"));
}

TEST_CASE("load_config and ROWSWAP_CONFIG") {
  const auto dir = std::filesystem::temp_directory_path() / "rowswap_params_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "cfg.txt";
  {
    std::ofstream f(path);
    f << "# toy bank\nrows_per_bank = 64\nt_rh = 16\nt_s = 4\n";
  }
  CHECK(load_config(path).geometry.rows_per_bank == 64);
  CHECK_THROWS_AS(load_config(dir / "missing.txt"), ConfigError);

  ::setenv("ROWSWAP_CONFIG", path.c_str(), 1);
  CHECK(load_default_config().defense.t_rh == 16);
  ::unsetenv("ROWSWAP_CONFIG");
  CHECK(load_default_config() == Config{});
}
