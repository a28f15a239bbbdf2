#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lnsim/basechain.hpp"
#include "lnsim/channel.hpp"

namespace lnsim {

inline constexpr std::uint64_t kDefaultDeltaBlocks = 6;

struct Invoice {
  AssetId asset_id;
  Msat amount_msat = 0;
  Hash256 payment_hash;
  NodeId destination;

  /// `lninv1 asset=<id> amount_msat=<n> hash=<64 hex> dest=<node>`
  std::string encode() const;
  static Invoice parse(std::string_view line);

  bool operator==(const Invoice&) const = default;
};

class InvoiceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---- channel HTLC operations ---------------------------------------------------
//
// Each one is a full commitment exchange on the channel. `height` is the
// current height of the channel's chain.

/// Moves `amount_msat` from the offerer into a new pending HTLC and returns
/// its id. params.htlc_id and params.offerer are assigned here.
std::uint64_t add_htlc(Channel& ch, Side offerer, HtlcParams params, std::uint64_t height);

/// Credits the receiver. The receiver initiates the exchange.
void settle_htlc(Channel& ch, std::uint64_t htlc_id, const Preimage& preimage,
                 std::uint64_t height);

/// Cooperative removal; the amount returns to the offerer.
void fail_htlc(Channel& ch, std::uint64_t htlc_id);

enum class ExpiryResolution { RefundedOffChain, RefundedOnChain };

/// Refund once the expiry has been reached. Needs no help from the
/// counterparty: if it is offline, the offerer closes the channel and takes
/// the refund through the hashlock refund path in the same block.
ExpiryResolution expire_htlc(Channel& ch, std::uint64_t htlc_id, Ledger& ledger);

// ---- atomic swap -----------------------------------------------------------------

enum class SwapRole { Initiator, Responder };
enum class LegStatus { NotOffered, Pending, Settled, Refunded };
enum class SwapOutcome { InProgress, BothSettled, BothRefunded, Mixed };

const char* to_string(LegStatus s);
const char* to_string(SwapOutcome o);

enum class SwapErrc { SameAsset, BadTimeoutOrdering, ResponderDeclined };

class SwapError : public std::runtime_error {
 public:
  SwapError(SwapErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  SwapErrc code() const { return code_; }

 private:
  SwapErrc code_;
};

/// The channels and ledgers a swap runs over. Leg X carries the
/// initiator's payment, leg Y the responder's.
struct SwapLegs {
  Channel& x;
  Ledger& ledger_x;
  Channel& y;
  Ledger& ledger_y;
};

struct SwapTerms {
  NodeId initiator;
  NodeId responder;
  Msat amount_x = 0;
  Msat amount_y = 0;
  std::uint64_t expiry_long = 0;   ///< height on chain X
  std::uint64_t expiry_short = 0;  ///< height on chain Y
  std::uint64_t delta_blocks = kDefaultDeltaBlocks;
};

/// Expiry height on a chain converted to the shared tick clock (block h is
/// mined at tick h * interval).
std::uint64_t expiry_tick(const Ledger& ledger, std::uint64_t height);

/// Terms with the earliest expiries allowed from the legs' current heights:
/// the short one 2 * delta_blocks Y-blocks ahead, the long one as tight as
/// the ordering rule permits.
SwapTerms earliest_swap_terms(const SwapLegs& legs, NodeId initiator, NodeId responder,
                              Msat amount_x, Msat amount_y, std::uint64_t delta_blocks);

/// Checks the swap preconditions: distinct assets, each party on the right
/// side of each channel, and expiry_short + delta <= expiry_long on the
/// shared clock, where delta is delta_blocks of the slower chain.
void validate_swap(const SwapLegs& legs, const SwapTerms& terms);

/// Two HTLCs on different chains sharing one payment hash.
///
/// Every event takes the legs explicitly, so the protocol state is a plain
/// value and can be copied along with a copy of the channels and ledgers.
///
/// With honest timers each party reacts on time no matter which events the
/// environment schedules: the responder claims leg X as soon as it learns
/// the preimage, and each offerer takes its refund at expiry. Being offline
/// only stops a party from cooperating off-chain; it then goes on-chain.
/// Without honest timers a party acts only when an event tells it to.
class AtomicSwap {
 public:
  AtomicSwap(const SwapLegs& legs, SwapTerms terms, Preimage secret, bool honest_timers = true);

  // Environment events. Each returns whether it changed anything.
  bool initiator_offer(SwapLegs& legs);
  bool responder_offer(SwapLegs& legs);
  bool initiator_reveal(SwapLegs& legs);
  bool responder_claim(SwapLegs& legs);
  bool reach_short_expiry(SwapLegs& legs);
  bool reach_long_expiry(SwapLegs& legs);
  bool set_online(SwapLegs& legs, SwapRole who, bool online);

  /// Runs the cooperative happy path to completion.
  SwapOutcome run_to_completion(SwapLegs& legs);

  LegStatus leg_x() const { return leg_x_; }
  LegStatus leg_y() const { return leg_y_; }
  SwapOutcome outcome() const;
  bool responder_knows_preimage() const { return responder_knows_; }
  std::uint64_t tick() const { return tick_; }
  const SwapTerms& terms() const { return terms_; }
  const Hash256& payment_hash() const { return hash_; }

  /// Compact description of the protocol state, for memoizing searches.
  std::string state_key() const;

 private:
  bool online(SwapRole r) const { return online_[r == SwapRole::Initiator ? 0 : 1]; }
  Side side_in(const Channel& ch, SwapRole r) const;
  bool both_online() const { return online_[0] && online_[1]; }

  /// Mines every block due up to tick t, in tick order, reacting after each.
  void advance_to(SwapLegs& legs, std::uint64_t t);
  void observe(SwapLegs& legs);
  void react(SwapLegs& legs);
  bool claim_x(SwapLegs& legs);
  bool refund(SwapLegs& legs, bool leg_is_x);

  SwapTerms terms_;
  Preimage secret_;
  Hash256 hash_;
  bool honest_;
  std::array<bool, 2> online_{true, true};
  std::uint64_t tick_ = 0;
  std::uint64_t short_tick_ = 0;
  std::uint64_t long_tick_ = 0;
  std::uint64_t settle_ticks_ = 0;
  LegStatus leg_x_ = LegStatus::NotOffered;
  LegStatus leg_y_ = LegStatus::NotOffered;
  std::uint64_t htlc_x_ = 0;
  std::uint64_t htlc_y_ = 0;
  bool responder_knows_ = false;
  std::optional<Txid> claim_tx_x_, claim_tx_y_, refund_tx_x_, refund_tx_y_;
};

}  // namespace lnsim
