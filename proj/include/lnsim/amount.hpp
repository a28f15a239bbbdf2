#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lnsim {

/// Millisatoshi. One msat is the smallest transferable unit.
using Msat = std::uint64_t;

inline constexpr Msat kMsatPerSat = 1'000;
inline constexpr Msat kMsatPerBtc = 100'000'000'000;

constexpr Msat btc(std::uint64_t whole) { return whole * kMsatPerBtc; }
constexpr Msat sat(std::uint64_t s) { return s * kMsatPerSat; }

/// "618.51" style decimal rendering, trailing zeros trimmed, no locale.
std::string format_btc(Msat amount);

/// Parses "<number> <unit>" with unit in {msat, sat, BTC}; a bare integer
/// is msat. Decimal BTC must resolve to a whole number of msat.
Msat parse_amount(std::string_view text);

}  // namespace lnsim
