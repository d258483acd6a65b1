#include "rowswap/params.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace rowswap {

ParseError::ParseError(std::size_t line, const std::string& what)
    : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

void require(bool ok, const char* invariant) {
  if (!ok) throw ValidationError(std::string("invariant violated: ") + invariant);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_real(std::string_view s) {
  // from_chars for double is missing from older libstdc++; strtod on a copy.
  std::string buf(s);
  if (buf.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return v;
}

}  // namespace

Duration TimingParams::refresh_time() const {
  return t_rfc * static_cast<std::int64_t>(refresh_ops_per_epoch);
}

Duration TimingParams::usable_time() const { return epoch - refresh_time(); }

std::uint64_t TimingParams::act_max() const {
  return static_cast<std::uint64_t>(usable_time() / t_rc);
}

void TimingParams::validate() const {
  require(t_rc.count() > 0, "t_rc > 0");
  require(t_rfc.count() > 0, "t_rfc > 0");
  require(epoch.count() > 0, "epoch > 0");
  require(t_swap.count() > 0, "t_swap > 0");
  require(t_reswap.count() > 0, "t_reswap > 0");
  require(t_reswap >= t_swap, "t_reswap >= t_swap");
  require(refresh_ops_per_epoch >= 1, "refresh_ops >= 1");
  require(epoch > refresh_time(), "epoch > refresh_ops * t_rfc");
}

void DramGeometry::validate() const {
  require(rows_per_bank >= 2, "rows_per_bank >= 2");
  require(rows_per_bank <= std::numeric_limits<std::uint32_t>::max(), "rows_per_bank < 2^32");
  require(banks >= 1, "banks >= 1");
  require(row_size_bytes >= 1, "row_size_bytes >= 1");
  require(channels >= 1, "channels >= 1");
}

void DefenseConfig::validate() const {
  require(t_s >= 1, "t_s >= 1");
  require(t_rh > t_s, "t_rh > t_s");
  require(t_rh % t_s == 0, "t_rh is a multiple of t_s");
  require(swap_rate() >= 2, "swap_rate >= 2");
  require(latent_per_reswap >= 1.0 && latent_per_reswap <= 2.0, "1.0 <= latent_per_reswap <= 2.0");
  require(rit_overprovision >= 1.0, "rit_overprovision >= 1.0");
  if (kind == DefenseKind::ScaleSRS) {
    require(outlier_swap_limit == swap_rate(), "outlier_swap_limit == swap_rate for scale-srs");
  }
}

void AttackPlan::validate() const {
  if (strategy == AttackStrategy::RandomGuessOnly) {
    require(rounds == 0, "random-guess-only plans have rounds == 0");
  }
}

void Config::validate() const {
  timing.validate();
  geometry.validate();
  defense.validate();
  plan.validate();
}

TimingParams ddr5_preset() {
  TimingParams t;
  t.epoch = std::chrono::milliseconds(32);
  t.refresh_ops_per_epoch = 4096;
  return t;
}

TimingParams toy_timing() {
  TimingParams t;
  t.refresh_ops_per_epoch = 8;
  t.epoch = Duration(36300);
  return t;
}

DefenseConfig make_defense(DefenseKind kind, std::uint32_t t_rh, std::uint32_t swap_rate) {
  DefenseConfig d;
  d.kind = kind;
  d.t_rh = t_rh;
  d.t_s = swap_rate == 0 ? 0 : t_rh / swap_rate;
  d.outlier_swap_limit = swap_rate;
  return d;
}

Duration parse_duration(std::string_view text) {
  text = trim(text);
  std::int64_t scale = 1;
  auto strip = [&](std::string_view suffix, std::int64_t s) {
    if (text.size() > suffix.size() && text.substr(text.size() - suffix.size()) == suffix) {
      text = trim(text.substr(0, text.size() - suffix.size()));
      scale = s;
      return true;
    }
    return false;
  };
  strip("ns", 1) || strip("us", 1000) || strip("ms", 1000000) || strip("s", 1000000000);

  // Exact decimal: integer part and fraction digits scaled separately.
  const auto dot = text.find('.');
  const auto whole = parse_u64(text.substr(0, dot));
  if (!whole) throw ConfigError("malformed duration '" + std::string(text) + "'");
  std::int64_t ns = static_cast<std::int64_t>(*whole) * scale;
  if (dot != std::string_view::npos) {
    const auto frac_text = text.substr(dot + 1);
    const auto frac = parse_u64(frac_text);
    if (!frac || frac_text.empty()) throw ConfigError("malformed duration '" + std::string(text) + "'");
    std::int64_t denom = 1;
    for (std::size_t i = 0; i < frac_text.size(); ++i) denom *= 10;
    const std::int64_t num = static_cast<std::int64_t>(*frac) * scale;
    if (num % denom != 0) throw ConfigError("duration '" + std::string(text) + "' is not a whole number of ns");
    ns += num / denom;
  }
  return Duration(ns);
}

std::string format_duration(Duration d) { return std::to_string(d.count()) + "ns"; }

std::string_view to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::None: return "none";
    case DefenseKind::RRS: return "rrs";
    case DefenseKind::SRS: return "srs";
    case DefenseKind::ScaleSRS: return "scale-srs";
  }
  return "?";
}

std::string_view to_string(AttackStrategy strategy) {
  switch (strategy) {
    case AttackStrategy::JuggernautBias: return "juggernaut";
    case AttackStrategy::RandomGuessOnly: return "random";
    case AttackStrategy::LatentOnly: return "latent-only";
  }
  return "?";
}

DefenseKind parse_defense_kind(std::string_view text) {
  for (auto k : {DefenseKind::None, DefenseKind::RRS, DefenseKind::SRS, DefenseKind::ScaleSRS}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown defense '" + std::string(text) + "'");
}

AttackStrategy parse_strategy(std::string_view text) {
  for (auto s : {AttackStrategy::JuggernautBias, AttackStrategy::RandomGuessOnly, AttackStrategy::LatentOnly}) {
    if (text == to_string(s)) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

Config parse_config(std::string_view text) {
  Config cfg;
  bool saw_outlier_limit = false;
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key");
    if (value.empty()) throw ParseError(line_no, "missing value for '" + key + "'");
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
      throw ParseError(line_no, "duplicate key '" + key + "' (first on line " + std::to_string(it->second) + ")");
    }

    auto count = [&]() -> std::uint64_t {
      auto v = parse_u64(value);
      if (!v) throw ParseError(line_no, "'" + key + "' expects a non-negative integer");
      return *v;
    };
    auto count32 = [&]() -> std::uint32_t {
      const auto v = count();
      if (v > std::numeric_limits<std::uint32_t>::max()) throw ParseError(line_no, "'" + key + "' out of range");
      return static_cast<std::uint32_t>(v);
    };
    auto real = [&]() -> double {
      auto v = parse_real(value);
      if (!v) throw ParseError(line_no, "'" + key + "' expects a number");
      return *v;
    };
    auto duration = [&]() -> Duration {
      try {
        return parse_duration(value);
      } catch (const ConfigError& e) {
        throw ParseError(line_no, e.what());
      }
    };

    if (key == "t_rc") cfg.timing.t_rc = duration();
    else if (key == "t_rfc") cfg.timing.t_rfc = duration();
    else if (key == "refresh_ops") cfg.timing.refresh_ops_per_epoch = count();
    else if (key == "epoch") cfg.timing.epoch = duration();
    else if (key == "t_swap") cfg.timing.t_swap = duration();
    else if (key == "t_reswap") cfg.timing.t_reswap = duration();
    else if (key == "rows_per_bank") cfg.geometry.rows_per_bank = count();
    else if (key == "banks") cfg.geometry.banks = count32();
    else if (key == "row_size_bytes") cfg.geometry.row_size_bytes = count32();
    else if (key == "channels") cfg.geometry.channels = count32();
    else if (key == "t_rh") cfg.defense.t_rh = count32();
    else if (key == "t_s") cfg.defense.t_s = count32();
    else if (key == "latent_per_reswap") cfg.defense.latent_per_reswap = real();
    else if (key == "rit_overprovision") cfg.defense.rit_overprovision = real();
    else if (key == "rounds") cfg.plan.rounds = count();
    else if (key == "outlier_swap_limit") {
      cfg.defense.outlier_swap_limit = count32();
      saw_outlier_limit = true;
    } else if (key == "defense") {
      try {
        cfg.defense.kind = parse_defense_kind(value);
      } catch (const ConfigError& e) {
        throw ParseError(line_no, e.what());
      }
    } else if (key == "strategy") {
      try {
        cfg.plan.strategy = parse_strategy(value);
      } catch (const ConfigError& e) {
        throw ParseError(line_no, e.what());
      }
    } else {
      throw ParseError(line_no, "unknown key '" + key + "'");
    }
  }
  if (!saw_outlier_limit && cfg.defense.t_s != 0) cfg.defense.outlier_swap_limit = cfg.defense.swap_rate();
  cfg.validate();
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Config load_default_config() {
  if (const char* env = std::getenv("ROWSWAP_CONFIG"); env != nullptr && *env != '\0') {
    return load_config(env);
  }
  Config cfg;
  cfg.validate();
  return cfg;
}

std::string serialize_config(const Config& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "t_rc = " << format_duration(cfg.timing.t_rc) << '\n'
      << "t_rfc = " << format_duration(cfg.timing.t_rfc) << '\n'
      << "refresh_ops = " << cfg.timing.refresh_ops_per_epoch << '\n'
      << "epoch = " << format_duration(cfg.timing.epoch) << '\n'
      << "t_swap = " << format_duration(cfg.timing.t_swap) << '\n'
      << "t_reswap = " << format_duration(cfg.timing.t_reswap) << '\n'
      << "rows_per_bank = " << cfg.geometry.rows_per_bank << '\n'
      << "banks = " << cfg.geometry.banks << '\n'
      << "row_size_bytes = " << cfg.geometry.row_size_bytes << '\n'
      << "channels = " << cfg.geometry.channels << '\n'
      << "defense = " << to_string(cfg.defense.kind) << '\n'
      << "t_rh = " << cfg.defense.t_rh << '\n'
      << "t_s = " << cfg.defense.t_s << '\n'
      << "latent_per_reswap = " << cfg.defense.latent_per_reswap << '\n'
      << "outlier_swap_limit = " << cfg.defense.outlier_swap_limit << '\n'
      << "rit_overprovision = " << cfg.defense.rit_overprovision << '\n'
      << "rounds = " << cfg.plan.rounds << '\n'
      << "strategy = " << to_string(cfg.plan.strategy) << '\n';
  return out.str();
}

}  // namespace rowswap
