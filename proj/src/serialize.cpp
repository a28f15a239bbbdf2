#include "lnsim/serialize.hpp"

#include <cstring>
#include <limits>

namespace lnsim {

void Writer::put_len(std::size_t n) {
  if (n > std::numeric_limits<std::uint32_t>::max())
    throw std::length_error("field too large");
  for (int shift = 24; shift >= 0; shift -= 8)
    buf_.push_back(static_cast<std::uint8_t>(n >> shift));
}

Writer& Writer::u64(std::uint64_t v) {
  put_len(8);
  for (int shift = 56; shift >= 0; shift -= 8)
    buf_.push_back(static_cast<std::uint8_t>(v >> shift));
  return *this;
}

Writer& Writer::bytes(std::span<const std::uint8_t> b) {
  put_len(b.size());
  buf_.insert(buf_.end(), b.begin(), b.end());
  return *this;
}

Writer& Writer::str(std::string_view s) {
  return bytes(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::span<const std::uint8_t> Reader::field() {
  if (data_.size() - pos_ < 4) throw DecodeError("truncated length prefix");
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n = n << 8 | data_[pos_ + i];
  pos_ += 4;
  if (data_.size() - pos_ < n) throw DecodeError("truncated field");
  auto f = data_.subspan(pos_, n);
  pos_ += n;
  return f;
}

std::uint64_t Reader::u64() {
  auto f = field();
  if (f.size() != 8) throw DecodeError("integer field must be 8 bytes");
  std::uint64_t v = 0;
  for (auto b : f) v = v << 8 | b;
  return v;
}

Bytes Reader::bytes() {
  auto f = field();
  return Bytes(f.begin(), f.end());
}

std::string Reader::str() {
  auto f = field();
  return std::string(f.begin(), f.end());
}

Hash256 Reader::hash() {
  auto f = field();
  if (f.size() != 32) throw DecodeError("hash field must be 32 bytes");
  Hash256 h;
  std::memcpy(h.bytes.data(), f.data(), 32);
  return h;
}

}  // namespace lnsim
