#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace rowswap {

// Row ids tagged by address space so logical and physical rows never mix.
template <class Tag>
struct RowId {
  std::uint32_t value = 0;

  constexpr RowId() = default;
  constexpr explicit RowId(std::uint32_t v) : value(v) {}
  constexpr auto operator<=>(const RowId&) const = default;
};

// Address the CPU issues (the memory controller's input).
using LogicalRow = RowId<struct LogicalTag>;
// Location inside the bank.
using PhysicalRow = RowId<struct PhysicalTag>;

constexpr PhysicalRow home_of(LogicalRow r) { return PhysicalRow{r.value}; }
constexpr LogicalRow native_of(PhysicalRow p) { return LogicalRow{p.value}; }

}  // namespace rowswap

template <class Tag>
struct std::hash<rowswap::RowId<Tag>> {
  std::size_t operator()(const rowswap::RowId<Tag>& r) const noexcept { return std::hash<std::uint32_t>{}(r.value); }
};
