#include "lnsim/amount.hpp"

#include <charconv>
#include <stdexcept>

#include "lnsim/rng.hpp"

namespace lnsim {

std::string format_btc(Msat amount) {
  std::string out = std::to_string(amount / kMsatPerBtc);
  Msat frac = amount % kMsatPerBtc;
  if (frac == 0) return out;
  std::string digits = std::to_string(frac);
  digits.insert(0, 11 - digits.size(), '0');
  while (digits.back() == '0') digits.pop_back();
  return out + "." + digits;
}

namespace {

std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
    throw std::invalid_argument("bad " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

}  // namespace

Msat parse_amount(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  auto space = text.find(' ');
  std::string_view number = text.substr(0, space);
  std::string_view unit = space == std::string_view::npos ? "msat" : text.substr(space + 1);
  while (!unit.empty() && unit.front() == ' ') unit.remove_prefix(1);

  Msat scale;
  if (unit == "msat") {
    scale = 1;
  } else if (unit == "sat") {
    scale = kMsatPerSat;
  } else if (unit == "BTC" || unit == "btc") {
    scale = kMsatPerBtc;
  } else {
    throw std::invalid_argument("unknown amount unit '" + std::string(unit) + "'");
  }

  auto dot = number.find('.');
  if (dot == std::string_view::npos) return parse_u64(number, "amount") * scale;

  Msat whole = parse_u64(number.substr(0, dot), "amount");
  std::string_view frac = number.substr(dot + 1);
  Msat frac_value = parse_u64(frac, "amount");
  Msat denom = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) denom *= 10;
  if ((frac_value * scale) % denom != 0)
    throw std::invalid_argument("amount is not a whole number of msat: '" +
                                std::string(text) + "'");
  return whole * scale + frac_value * scale / denom;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below(0)");
  // Rejection sampling keeps the draw unbiased.
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (;;) {
    std::uint64_t x = engine_();
    if (x < limit) return x % bound;
  }
}

std::uint64_t Rng::between(std::uint64_t lo, std::uint64_t hi) {
  if (hi < lo) throw std::invalid_argument("Rng::between: empty range");
  if (lo == 0 && hi == UINT64_MAX) return engine_();
  return lo + below(hi - lo + 1);
}

Hash256 Rng::hash() {
  Hash256 h;
  for (int i = 0; i < 4; ++i) {
    std::uint64_t x = engine_();
    for (int j = 0; j < 8; ++j) h.bytes[i * 8 + j] = static_cast<std::uint8_t>(x >> (8 * j));
  }
  return h;
}

}  // namespace lnsim
