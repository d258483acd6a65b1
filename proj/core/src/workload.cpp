#include <charconv>
#include <fstream>
#include <sstream>

#include "rowswap/engine.hpp"

namespace rowswap {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Workload parse_trace(std::string_view text, std::uint32_t rows) {
  Workload w;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc{} || end != line.data() + line.size()) {
      throw ParseError(line_no, "expected a decimal row id, got '" + std::string(line) + "'");
    }
    if (v >= rows) throw ParseError(line_no, "row id " + std::to_string(v) + " outside a bank of " + std::to_string(rows));
    w.acts.push_back(LogicalRow{static_cast<std::uint32_t>(v)});
  }
  return w;
}

Workload load_trace(const std::filesystem::path& path, std::uint32_t rows) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str(), rows);
}

Workload juggernaut_workload(std::uint32_t rows, std::uint32_t t_s, std::uint64_t rounds, std::uint64_t guesses,
                             std::uint64_t seed) {
  if (rows < 2 || t_s == 0) throw std::invalid_argument("juggernaut_workload needs rows >= 2 and t_s >= 1");
  SplitMix64 rng(seed);
  Workload w;
  const LogicalRow target{static_cast<std::uint32_t>(rng.below(rows))};
  w.acts.insert(w.acts.end(), t_s - 1, target);
  w.tracker_reset_at = w.acts.size();
  w.acts.insert(w.acts.end(), std::size_t{t_s} * (rounds + 1), target);
  for (std::uint64_t g = 0; g < guesses;) {
    const LogicalRow x{static_cast<std::uint32_t>(rng.below(rows))};
    if (x == target) continue;
    w.acts.insert(w.acts.end(), t_s, x);
    ++g;
  }
  return w;
}

Workload random_burst_workload(std::uint32_t rows, std::uint32_t burst_len, std::uint64_t bursts, std::uint64_t seed) {
  if (rows == 0 || burst_len == 0) throw std::invalid_argument("random_burst_workload needs rows and burst_len");
  SplitMix64 rng(seed);
  Workload w;
  w.acts.reserve(burst_len * bursts);
  for (std::uint64_t b = 0; b < bursts; ++b) {
    w.acts.insert(w.acts.end(), burst_len, LogicalRow{static_cast<std::uint32_t>(rng.below(rows))});
  }
  return w;
}

Workload uniform_workload(std::uint32_t rows, std::uint64_t acts, std::uint64_t seed) {
  if (rows == 0) throw std::invalid_argument("uniform_workload needs rows");
  SplitMix64 rng(seed);
  Workload w;
  w.acts.reserve(acts);
  for (std::uint64_t i = 0; i < acts; ++i) w.acts.push_back(LogicalRow{static_cast<std::uint32_t>(rng.below(rows))});
  return w;
}

}  // namespace rowswap
