#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "lnsim/amount.hpp"
#include "lnsim/crypto.hpp"

namespace lnsim {

using AssetId = std::string;
using Txid = Hash256;

inline constexpr Msat kDefaultChainFee = 1'000;
inline constexpr std::uint64_t kDefaultToSelfDelay = 144;

struct ChainParams {
  AssetId asset_id;
  std::uint64_t tps_cap = 7;
  std::uint64_t block_interval_secs = 600;
  Msat fee_msat = kDefaultChainFee;
  std::map<PublicKey, Msat> genesis_allocations;

  std::uint64_t block_capacity() const { return tps_cap * block_interval_secs; }
};

// ---- spend conditions -----------------------------------------------------

struct SingleKey {
  PublicKey key;
};

struct Multisig2of2 {
  PublicKey k1;
  PublicKey k2;
};

/// Holder's commitment output: spendable by the holder after the relative
/// delay, or at any time by whoever holds the revocation key.
struct CommitmentScript {
  PublicKey local_key;
  PublicKey revocation_key;
  std::uint64_t to_self_delay_blocks = kDefaultToSelfDelay;
};

/// HTLC output. An empty revocation_key disables the revocation path.
struct Hashlock {
  Hash256 payment_hash;
  PublicKey claim_key;
  PublicKey refund_key;
  std::uint64_t expiry_height = 0;
  PublicKey revocation_key;
};

using SpendCondition = std::variant<SingleKey, Multisig2of2, CommitmentScript, Hashlock>;

struct Output {
  Msat amount_msat = 0;
  SpendCondition condition;
};

// ---- witnesses --------------------------------------------------------------

struct SingleSig {
  Signature sig;
};
struct Sigs2of2 {
  Signature sig1;
  Signature sig2;
};
struct LocalAfterDelay {
  Signature sig;
};
struct Revocation {
  Signature sig;
};
struct HashlockClaim {
  Preimage preimage;
  Signature sig;
};
struct HashlockRefund {
  Signature sig;
};

using Witness = std::variant<std::monostate, SingleSig, Sigs2of2, LocalAfterDelay, Revocation,
                             HashlockClaim, HashlockRefund>;

struct OutPoint {
  Txid txid;
  std::uint32_t index = 0;
  auto operator<=>(const OutPoint&) const = default;
};

struct OutPointHasher {
  std::size_t operator()(const OutPoint& o) const noexcept {
    return Hash256Hasher{}(o.txid) * 31 + o.index;
  }
};

struct TxInput {
  OutPoint prevout;
  Witness witness;
};

struct Transaction {
  std::vector<TxInput> inputs;
  std::vector<Output> outputs;
  std::uint64_t locktime_height = 0;

  /// Canonical serialization. Witnesses are not part of it, so the id is
  /// also the message every input signs.
  Bytes serialize() const;
  Txid id() const;
  Msat output_total() const;
};

/// Context an output is evaluated in.
struct SpendContext {
  std::uint64_t height = 0;         ///< height of the block that would include the spend
  std::uint64_t output_height = 0;  ///< height at which the spent output confirmed
  Hash256 sighash;                  ///< id of the spending transaction
};

bool evaluate_spend(const Signer& signer, const Output& output, const Witness& witness,
                    const SpendContext& ctx);

// ---- ledger -----------------------------------------------------------------

enum class LedgerErrc {
  DuplicateAsset,
  UnknownAsset,
  InvalidParams,
  UnknownInput,
  DoubleSpend,
  BadWitness,
  ValueCreated,
  FeeMismatch,
  PrematureLocktime,
};

const char* to_string(LedgerErrc code);

class LedgerError : public std::runtime_error {
 public:
  LedgerError(LedgerErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  LedgerErrc code() const { return code_; }

 private:
  LedgerErrc code_;
};

struct UtxoEntry {
  Output output;
  std::uint64_t height = 0;
};

struct ConfirmedTx {
  Txid id;
  Transaction tx;
  std::uint64_t height = 0;
  Msat fee = 0;
};

struct DroppedTx {
  Txid id;
  LedgerErrc reason;
  std::uint64_t height = 0;
};

struct BlockRecord {
  std::uint64_t height = 0;
  std::size_t confirmed = 0;
  std::size_t dropped = 0;
  std::size_t mempool_after = 0;
};

/// One simulated base chain. Single writer; copies are independent except
/// for the shared signer.
class Ledger {
 public:
  Ledger(ChainParams params, std::shared_ptr<const Signer> signer);

  const ChainParams& params() const { return params_; }
  const AssetId& asset() const { return params_.asset_id; }
  std::uint64_t height() const { return height_; }
  const Signer& signer() const { return *signer_; }

  /// Validates against the confirmed UTXO set and queues the transaction.
  Txid submit(Transaction tx);
  /// Submits transactions that may spend each other's outputs, in order.
  /// Each member is validated as if the earlier ones were already in the
  /// next block; all are queued or none is.
  std::vector<Txid> submit_package(std::vector<Transaction> txs);
  /// Confirms up to block_capacity() queued transactions in FIFO order.
  std::vector<Txid> mine_block();

  Msat balance_of(const PublicKey& key) const;
  /// Confirmed single-key outputs of `key` not already claimed by a queued
  /// transaction, in outpoint order.
  std::vector<std::pair<OutPoint, Msat>> spendable_outputs(const PublicKey& key) const;

  const UtxoEntry* find_utxo(const OutPoint& op) const;
  bool is_spent(const OutPoint& op) const { return spent_.contains(op); }
  std::optional<std::uint64_t> confirmation_height(const Txid& id) const;
  const ConfirmedTx* find_confirmed(const Txid& id) const;
  bool in_mempool(const Txid& id) const { return mempool_ids_.contains(id); }
  std::size_t mempool_size() const { return mempool_.size(); }

  Msat genesis_total() const { return genesis_total_; }
  Msat cumulative_fees() const { return fees_; }
  /// Recomputed from the UTXO set, not a running counter.
  Msat utxo_total() const;
  bool conserves_supply() const { return utxo_total() + fees_ == genesis_total_; }

  const std::vector<ConfirmedTx>& confirmed() const { return confirmed_; }
  const std::vector<DroppedTx>& dropped() const { return dropped_; }
  const std::vector<BlockRecord>& blocks() const { return blocks_; }
  const Txid& genesis_txid() const { return genesis_txid_; }

 private:
  struct Queued {
    Txid id;
    Transaction tx;
  };

  using UtxoOverlay = std::unordered_map<OutPoint, UtxoEntry, OutPointHasher>;

  /// Returns the fee or throws. `height` is the prospective block height.
  Msat validate(const Transaction& tx, const Txid& id, std::uint64_t height,
                const UtxoOverlay* overlay = nullptr) const;
  void apply(const Transaction& tx, const Txid& id, std::uint64_t height, Msat fee);

  ChainParams params_;
  std::shared_ptr<const Signer> signer_;
  std::uint64_t height_ = 0;
  Txid genesis_txid_;
  Msat genesis_total_ = 0;
  Msat fees_ = 0;

  std::unordered_map<OutPoint, UtxoEntry, OutPointHasher> utxos_;
  std::unordered_set<OutPoint, OutPointHasher> spent_;
  std::unordered_map<PublicKey, std::set<OutPoint>, PublicKeyHasher> by_key_;
  std::unordered_map<Txid, std::size_t, Hash256Hasher> confirmed_index_;
  std::vector<ConfirmedTx> confirmed_;
  std::vector<DroppedTx> dropped_;
  std::vector<BlockRecord> blocks_;

  std::deque<Queued> mempool_;
  std::unordered_set<Txid, Hash256Hasher> mempool_ids_;
  std::unordered_map<OutPoint, std::size_t, OutPointHasher> mempool_claims_;
};

/// The set of base chains, keyed by asset.
class ChainRegistry {
 public:
  explicit ChainRegistry(std::shared_ptr<const Signer> signer) : signer_(std::move(signer)) {}

  Ledger& register_chain(ChainParams params);
  Ledger& at(const AssetId& asset);
  const Ledger& at(const AssetId& asset) const;
  bool contains(const AssetId& asset) const { return chains_.contains(asset); }

  std::map<AssetId, Ledger>& all() { return chains_; }
  const std::map<AssetId, Ledger>& all() const { return chains_; }

 private:
  std::shared_ptr<const Signer> signer_;
  std::map<AssetId, Ledger> chains_;
};

}  // namespace lnsim
