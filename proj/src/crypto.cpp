#include "lnsim/crypto.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <stdexcept>

#include "lnsim/serialize.hpp"

namespace lnsim {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

bool Hash256::is_zero() const {
  for (auto b : bytes)
    if (b != 0) return false;
  return true;
}

std::string Hash256::hex() const { return to_hex(bytes); }

Hash256 Hash256::from_hex(std::string_view hex) {
  Bytes raw = lnsim::from_hex(hex);
  if (raw.size() != 32) throw std::invalid_argument("hash must be 32 bytes of hex");
  Hash256 h;
  std::memcpy(h.bytes.data(), raw.data(), 32);
  return h;
}

std::size_t Hash256Hasher::operator()(const Hash256& h) const noexcept {
  std::size_t v;
  std::memcpy(&v, h.bytes.data(), sizeof(v));
  return v;
}

Hash256 sha256(std::span<const std::uint8_t> data) {
  Hash256 out;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.bytes.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != 32)
    throw std::runtime_error("sha256 failed");
  return out;
}

Hash256 sha256(std::string_view data) {
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(data.data()),
                          data.size()));
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(data.size() * 2);
  for (auto b : data) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xf]);
  }
  return s;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

PublicKey public_key_of(const Hash256& secret) {
  Writer w;
  w.str("pub").hash(secret);
  return PublicKey{sha256(w.data())};
}

KeyPair SimulatedSigner::derive(std::string_view label) {
  Writer w;
  w.str("key").str(label);
  return from_secret(sha256(w.data()));
}

KeyPair SimulatedSigner::from_secret(const Hash256& secret) {
  KeyPair kp{secret, public_key_of(secret)};
  secrets_.emplace(kp.pub, secret);
  return kp;
}

Signature SimulatedSigner::sign(const KeyPair& key, const Hash256& msg) const {
  Writer w;
  w.hash(key.secret).hash(msg);
  return Signature{sha256(w.data())};
}

bool SimulatedSigner::verify(const PublicKey& key, const Hash256& msg,
                             const Signature& sig) const {
  auto it = secrets_.find(key);
  if (it == secrets_.end()) return false;
  Writer w;
  w.hash(it->second).hash(msg);
  return sha256(w.data()) == sig.digest;
}

Hash256 SimulatedSigner::onion_key(const PublicKey& node) const {
  auto it = secrets_.find(node);
  if (it == secrets_.end()) throw std::invalid_argument("unknown onion key");
  return onion_key(KeyPair{it->second, node});
}

Hash256 SimulatedSigner::onion_key(const KeyPair& node) {
  Writer w;
  w.str("onion").hash(node.secret);
  return sha256(w.data());
}

}  // namespace lnsim
