#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rowswap {

using Duration = std::chrono::nanoseconds;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed config text; line() is 1-based.
class ParseError : public ConfigError {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A value that parsed but violates an invariant. The message names it.
class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct TimingParams {
  Duration t_rc{45};
  Duration t_rfc{350};
  std::uint64_t refresh_ops_per_epoch = 8192;
  Duration epoch{std::chrono::milliseconds(64)};
  Duration t_swap{2700};
  Duration t_reswap{5400};

  void validate() const;
  Duration refresh_time() const;
  // Epoch time left after refresh (t_actual).
  Duration usable_time() const;
  // Activations a bank can issue in usable_time (ACT_max).
  std::uint64_t act_max() const;

  bool operator==(const TimingParams&) const = default;
};

struct DramGeometry {
  std::uint64_t rows_per_bank = 131072;
  std::uint32_t banks = 16;
  std::uint32_t row_size_bytes = 8192;
  std::uint32_t channels = 2;

  void validate() const;
  bool operator==(const DramGeometry&) const = default;
};

enum class DefenseKind { None, RRS, SRS, ScaleSRS };

struct DefenseConfig {
  DefenseKind kind = DefenseKind::RRS;
  std::uint32_t t_rh = 4800;
  std::uint32_t t_s = 800;
  double latent_per_reswap = 1.5;
  std::uint32_t outlier_swap_limit = 3;
  double rit_overprovision = 2.0;

  // T_RH / T_S. Only meaningful once validate() has passed.
  std::uint32_t swap_rate() const { return t_s == 0 ? 0 : t_rh / t_s; }
  void validate() const;
  bool operator==(const DefenseConfig&) const = default;
};

enum class AttackStrategy { JuggernautBias, RandomGuessOnly, LatentOnly };

struct AttackPlan {
  std::uint64_t rounds = 0;
  AttackStrategy strategy = AttackStrategy::JuggernautBias;

  void validate() const;
  bool operator==(const AttackPlan&) const = default;
};

struct Config {
  TimingParams timing;
  DramGeometry geometry;
  DefenseConfig defense;
  AttackPlan plan;

  void validate() const;
  bool operator==(const Config&) const = default;
};

// DDR5 modeled as refresh at twice the rate: epoch and refresh ops halved.
TimingParams ddr5_preset();

// Scaled-down timing for desk-scale breach simulation on tiny banks:
// DDR4 latencies, 8 refresh ops and a 36.3us window (leftover slack after the toy guesses fits one reswap-priced guess).
TimingParams toy_timing();

// Defense config with outlier_swap_limit tied to the swap rate.
DefenseConfig make_defense(DefenseKind kind, std::uint32_t t_rh, std::uint32_t swap_rate);

Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);
// Reads the file named by ROWSWAP_CONFIG, or returns defaults when unset.
Config load_default_config();
std::string serialize_config(const Config& cfg);

// "250ns", "2.7us", "64ms", "1s"; a bare number is nanoseconds.
Duration parse_duration(std::string_view text);
std::string format_duration(Duration d);

std::string_view to_string(DefenseKind kind);
std::string_view to_string(AttackStrategy strategy);
DefenseKind parse_defense_kind(std::string_view text);
AttackStrategy parse_strategy(std::string_view text);

inline double to_seconds(Duration d) { return std::chrono::duration<double>(d).count(); }

}  // namespace rowswap
