#pragma once

#include <array>
#include <charconv>
#include <string>

namespace rowswap {

// Shortest round-trip decimal form; locale independent.
inline std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return ec == std::errc{} ? std::string(buf.data(), end) : std::string("nan");
}

// Fixed-point with `digits` decimals.
inline std::string format_fixed(double v, int digits) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, digits);
  return ec == std::errc{} ? std::string(buf.data(), end) : std::string("nan");
}

}  // namespace rowswap
