#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lnsim {

using Bytes = std::vector<std::uint8_t>;

struct Hash256 {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Hash256&) const = default;
  bool is_zero() const;
  std::string hex() const;
  static Hash256 from_hex(std::string_view hex);
};

struct Hash256Hasher {
  std::size_t operator()(const Hash256& h) const noexcept;
};

Hash256 sha256(std::span<const std::uint8_t> data);
Hash256 sha256(std::string_view data);

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view hex);

// Public keys and signatures share the digest representation; the
// simulated scheme never needs curve points.
struct PublicKey {
  Hash256 digest;
  auto operator<=>(const PublicKey&) const = default;
  bool empty() const { return digest.is_zero(); }
};

struct PublicKeyHasher {
  std::size_t operator()(const PublicKey& k) const noexcept {
    return Hash256Hasher{}(k.digest);
  }
};

struct Signature {
  Hash256 digest;
  auto operator<=>(const Signature&) const = default;
};

struct KeyPair {
  Hash256 secret;
  PublicKey pub;
};

/// Preimage of a payment hash: 32 opaque bytes.
struct Preimage {
  Hash256 value;
  Hash256 payment_hash() const { return sha256(value.bytes); }
  auto operator<=>(const Preimage&) const = default;
};

/// Signing backend. The ledger and channels only see this interface, so a
/// real signature scheme can replace the simulated one.
class Signer {
 public:
  virtual ~Signer() = default;
  virtual Signature sign(const KeyPair& key, const Hash256& msg) const = 0;
  virtual bool verify(const PublicKey& key, const Hash256& msg,
                      const Signature& sig) const = 0;
};

/// Deterministic stand-in for a signature scheme.
///
/// sign(key, msg) = SHA-256(secret || msg). Verification recomputes the
/// digest, which requires the secret behind the public key, so every key
/// pair is registered here when it is created. Possession of the secret is
/// what the rest of the system models; the registry only plays verifier.
class SimulatedSigner final : public Signer {
 public:
  /// Deterministic key from a label; the same label always yields the same
  /// key pair.
  KeyPair derive(std::string_view label);
  /// Key pair from explicit secret material (e.g. an RNG draw).
  KeyPair from_secret(const Hash256& secret);

  Signature sign(const KeyPair& key, const Hash256& msg) const override;
  bool verify(const PublicKey& key, const Hash256& msg,
              const Signature& sig) const override;

  /// Symmetric key a sender uses to seal an onion layer for `node`.
  /// Stands in for the ECDH step of a real onion construction.
  Hash256 onion_key(const PublicKey& node) const;
  /// The same key, derived by the holder of the secret.
  static Hash256 onion_key(const KeyPair& node);

  std::size_t size() const { return secrets_.size(); }

 private:
  std::unordered_map<PublicKey, Hash256, PublicKeyHasher> secrets_;
};

PublicKey public_key_of(const Hash256& secret);

}  // namespace lnsim
