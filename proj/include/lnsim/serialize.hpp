#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lnsim/crypto.hpp"

namespace lnsim {

// Canonical encoding: every field is a 4-byte big-endian length followed by
// the payload. Integers are 8-byte big-endian payloads.
class Writer {
 public:
  Writer& u64(std::uint64_t v);
  Writer& bytes(std::span<const std::uint8_t> b);
  Writer& str(std::string_view s);
  Writer& hash(const Hash256& h) { return bytes(h.bytes); }

  const Bytes& data() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  void put_len(std::size_t n);
  Bytes buf_;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint64_t u64();
  Bytes bytes();
  std::string str();
  Hash256 hash();
  bool done() const { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> field();
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace lnsim
