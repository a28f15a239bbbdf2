#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lnsim/basechain.hpp"
#include "lnsim/crypto.hpp"

namespace lnsim {

class Rng;

using NodeId = std::string;
using ChannelId = std::string;

enum class Side : std::uint8_t { A = 0, B = 1 };

constexpr Side other(Side s) { return s == Side::A ? Side::B : Side::A; }
constexpr std::size_t index_of(Side s) { return static_cast<std::size_t>(s); }
inline const char* to_string(Side s) { return s == Side::A ? "A" : "B"; }

struct HtlcParams {
  std::uint64_t htlc_id = 0;
  Hash256 payment_hash;
  Msat amount_msat = 0;
  std::uint64_t expiry_height = 0;
  Side offerer = Side::A;
};

/// Off-chain allocation of the funding output.
struct ChannelAllocation {
  std::array<Msat, 2> balance{};
  std::vector<HtlcParams> htlcs;
  std::uint64_t next_htlc_id = 0;

  Msat htlc_total() const;
  Msat total() const { return balance[0] + balance[1] + htlc_total(); }
  const HtlcParams* find_htlc(std::uint64_t id) const;
};

/// One party's commitment transaction for one version. Output 0 pays the
/// holder through a CommitmentScript, output 1 pays the counterparty
/// directly, outputs 2.. are HTLCs in allocation order.
struct CommitmentTx {
  std::uint64_t version_n = 0;
  Side holder = Side::A;
  Msat to_holder_msat = 0;
  Msat to_counterparty_msat = 0;
  std::vector<HtlcParams> htlc_outputs;
  PublicKey revocation_key;
  Transaction tx;
  Txid txid;
  Signature counterparty_signature;
};

struct RevocationSecret {
  std::uint64_t version_n = 0;
  Hash256 secret;
  Side owner = Side::A;
};

enum class ChannelStatus {
  Opening,
  Open,
  PendingUpdate,
  CooperativeClosing,
  CooperativeClosed,
  UnilateralClosing,
  Punished,
};

const char* to_string(ChannelStatus s);

enum class ChannelErrc {
  InvalidAmount,
  InsufficientFunds,
  FundingUnconfirmed,
  InsufficientChannelBalance,
  ChannelNotOpen,
  ConcurrentUpdate,
  PartyOffline,
  BothOffline,
  PendingHtlcs,
  NoSignedCommitment,
  NoRevocationSecret,
  CommitmentUnconfirmed,
  DelayElapsed,
  DelayNotElapsed,
  BadSignature,
  ConservationViolated,
  ExpiredBeforeAdd,
  WrongPreimage,
  UnknownHtlc,
  PastExpiry,
  NotYetExpired,
};

const char* to_string(ChannelErrc code);

class ChannelError : public std::runtime_error {
 public:
  ChannelError(ChannelErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ChannelErrc code() const { return code_; }

 private:
  ChannelErrc code_;
};

/// One line of the channel event trace.
struct ChannelEvent {
  std::uint64_t tick = 0;
  std::string event;
  std::uint64_t version = 0;
  Msat balance_a = 0;
  Msat balance_b = 0;
  std::string detail;
};

struct ChannelParty {
  NodeId id;
  KeyPair node_key;    ///< multisig, commitment and settlement outputs
  KeyPair wallet_key;  ///< on-chain coins the deposit is drawn from
  Hash256 secret_seed; ///< source of this party's per-version revocation secrets
};

struct ChannelConfig {
  std::uint64_t to_self_delay_blocks = kDefaultToSelfDelay;
};

/// Two-party payment channel. The driver executes both parties' halves of
/// every exchange in order; nothing here is shared with other channels.
class Channel {
 public:
  /// Builds the funding transaction, signs both version-0 commitments, then
  /// submits the funding. The channel stays Opening until confirm_funding.
  static Channel open(Ledger& ledger, std::shared_ptr<SimulatedSigner> signer, ChannelId id,
                      ChannelParty a, ChannelParty b, Msat fund_a, Msat fund_b,
                      ChannelConfig config = {});

  void confirm_funding(const Ledger& ledger);

  // -- off-chain updates ------------------------------------------------------

  /// The eight-step update: new commitments are exchanged and countersigned
  /// before either side reveals the secret for its previous version.
  void update_balance(Side payer, Msat amount);

  /// Stepwise form of the same exchange. begin_* validates and enters
  /// PendingUpdate; advance() runs one step and returns its number (1-8).
  void begin_update(Side payer, Msat amount);
  void begin_transition(Side initiator, ChannelAllocation next, std::string kind,
                        bool completes_transfer);
  int advance();
  bool update_in_flight() const { return pending_.has_value(); }

  /// Runs a whole transition. Used by the HTLC operations.
  void commit_transition(Side initiator, ChannelAllocation next, std::string kind,
                         bool completes_transfer);

  /// Two updates proposed at once. The party with the smaller node id goes
  /// first; the other is retried after it completes. Returns the order.
  std::vector<Side> update_balance_concurrent(std::optional<Msat> a_pays,
                                              std::optional<Msat> b_pays);

  // -- closing ----------------------------------------------------------------

  Txid cooperative_close(Ledger& ledger);
  Txid unilateral_close(Side party, Ledger& ledger);
  /// Broadcast an already revoked commitment (the cheat the penalty path
  /// exists for).
  Txid broadcast_revoked(Side cheater, std::uint64_t version, Ledger& ledger);
  Txid punish(const CommitmentTx& cheater_tx, Ledger& ledger);
  /// Sweeps the closer's time-locked output once the delay has elapsed.
  /// Returns nothing when that output is empty.
  std::optional<Txid> sweep_to_self(Ledger& ledger);
  Txid on_party_offline(Side offline, Ledger& ledger);

  /// On-chain HTLC resolution through the hashlock paths. If the channel is
  /// still open, the spender's latest commitment is broadcast together with
  /// the spend as one package.
  Txid claim_htlc_onchain(std::uint64_t htlc_id, const Preimage& preimage, Ledger& ledger);
  Txid refund_htlc_onchain(std::uint64_t htlc_id, Ledger& ledger);

  /// Picks up confirmations of the funding or closing transaction.
  void refresh(const Ledger& ledger);

  // -- accessors --------------------------------------------------------------

  const ChannelId& id() const { return id_; }
  const AssetId& asset() const { return asset_; }
  const ChannelParty& party(Side s) const { return parties_[index_of(s)]; }
  std::optional<Side> side_of(const NodeId& node) const;
  Msat capacity() const { return capacity_; }
  Msat balance(Side s) const { return alloc_.balance[index_of(s)]; }
  const ChannelAllocation& allocation() const { return alloc_; }
  const std::vector<HtlcParams>& pending_htlcs() const { return alloc_.htlcs; }
  std::uint64_t version() const { return version_; }
  ChannelStatus status() const { return status_; }
  bool is_open() const { return status_ == ChannelStatus::Open; }
  bool is_closed() const;
  const OutPoint& funding_outpoint() const { return funding_; }
  const Txid& funding_txid() const { return funding_.txid; }
  std::uint64_t to_self_delay() const { return config_.to_self_delay_blocks; }

  const CommitmentTx& latest_commitment(Side holder) const {
    return latest_[index_of(holder)];
  }
  const CommitmentTx* commitment(Side holder, std::uint64_t version) const;
  /// Secrets `holder` has received from its counterparty, by version.
  const std::map<std::uint64_t, RevocationSecret>& received_revocations(Side holder) const {
    return received_[index_of(holder)];
  }

  /// Set once a close transaction has been submitted.
  const std::optional<Txid>& closing_txid() const { return closing_txid_; }
  std::optional<std::uint64_t> close_confirm_height() const { return close_height_; }
  /// The commitment that closed the channel, if it closed unilaterally.
  const CommitmentTx* closing_commitment() const;
  std::optional<Side> closer() const { return closer_; }
  /// The party cheated by a revoked broadcast, if the channel closed with one.
  std::optional<Side> victim() const {
    if (!closer_ || !closed_with_revoked_commitment()) return std::nullopt;
    return other(*closer_);
  }
  bool closed_with_revoked_commitment() const;
  std::uint64_t broadcast_height() const { return broadcast_height_; }

  bool online(Side s) const { return online_[index_of(s)]; }
  void set_online(Side s, bool up) { online_[index_of(s)] = up; }

  void set_tick(std::uint64_t tick) { tick_ = tick; }
  const std::vector<ChannelEvent>& trace() const { return trace_; }
  void note(std::string event, std::string detail = {});

  /// Completed balance transfers (direct updates and settled HTLCs).
  std::uint64_t transfer_count() const { return transfers_; }
  bool conserves() const { return alloc_.total() == capacity_; }

 private:
  struct Pending {
    Side initiator;
    ChannelAllocation next;
    std::string kind;
    bool completes_transfer;
    int step = 0;
    CommitmentTx for_counterparty;
    CommitmentTx for_initiator;
  };

  Channel() = default;

  const ChannelParty& p(Side s) const { return parties_[index_of(s)]; }
  KeyPair revocation_keypair(Side owner, std::uint64_t version) const;
  CommitmentTx build_commitment(Side holder, std::uint64_t version,
                                const ChannelAllocation& alloc) const;
  void countersign(CommitmentTx& c, Side signer_side) const;
  void check_countersigned(const CommitmentTx& c) const;
  Transaction signed_commitment(const CommitmentTx& c) const;
  void require_open() const;
  void require_online() const;
  void require_ledger(const Ledger& ledger) const;
  Txid broadcast(const CommitmentTx& c, Ledger& ledger, bool revoked);
  void mark_closed(const CommitmentTx& c, const Ledger& ledger, bool revoked);
  Txid resolve_htlc_onchain(std::uint64_t htlc_id, const Preimage* preimage, Ledger& ledger);
  const UtxoEntry& confirmed_output(const Ledger& ledger, const Txid& txid, std::uint32_t index,
                                    ChannelErrc err) const;
  void record(std::string event, std::string detail = {});

  ChannelId id_;
  AssetId asset_;
  std::shared_ptr<SimulatedSigner> signer_;
  std::array<ChannelParty, 2> parties_;
  ChannelConfig config_;
  Msat chain_fee_ = kDefaultChainFee;
  Msat capacity_ = 0;
  OutPoint funding_;

  ChannelStatus status_ = ChannelStatus::Opening;
  ChannelAllocation alloc_;
  std::uint64_t version_ = 0;
  std::array<CommitmentTx, 2> latest_;
  std::array<std::map<std::uint64_t, CommitmentTx>, 2> history_;
  std::array<std::map<std::uint64_t, RevocationSecret>, 2> received_;
  std::unordered_map<Txid, std::pair<Side, std::uint64_t>, Hash256Hasher> commitment_index_;
  std::optional<Pending> pending_;

  std::optional<Txid> closing_txid_;
  std::optional<std::uint64_t> close_height_;
  std::optional<Side> closer_;
  std::optional<std::uint64_t> closing_version_;
  std::uint64_t broadcast_height_ = 0;

  std::array<bool, 2> online_{true, true};
  std::uint64_t tick_ = 0;
  std::uint64_t transfers_ = 0;
  std::vector<ChannelEvent> trace_;
};

/// Coin selection over a key's confirmed, unclaimed outputs: an exact
/// match if there is one, otherwise the smallest single output that
/// covers the target, otherwise largest-first accumulation.
std::vector<std::pair<OutPoint, Msat>> select_coins(const Ledger& ledger, const PublicKey& key,
                                                    Msat target);

}  // namespace lnsim
