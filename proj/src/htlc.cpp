#include "lnsim/htlc.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace lnsim {

// ---- invoices -------------------------------------------------------------------

std::string Invoice::encode() const {
  return "lninv1 asset=" + asset_id + " amount_msat=" + std::to_string(amount_msat) +
         " hash=" + payment_hash.hex() + " dest=" + destination;
}

Invoice Invoice::parse(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string word;
  if (!(in >> word) || word != "lninv1") throw InvoiceError("invoice must start with lninv1");

  static constexpr std::array<std::string_view, 4> kFields{"asset", "amount_msat", "hash", "dest"};
  Invoice inv;
  for (auto field : kFields) {
    if (!(in >> word)) throw InvoiceError("invoice is missing " + std::string(field));
    auto eq = word.find('=');
    if (eq == std::string::npos || std::string_view(word).substr(0, eq) != field)
      throw InvoiceError("expected field " + std::string(field) + ", got '" + word + "'");
    std::string value = word.substr(eq + 1);
    if (value.empty()) throw InvoiceError("empty " + std::string(field));
    if (field == "asset") {
      inv.asset_id = value;
    } else if (field == "amount_msat") {
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), inv.amount_msat);
      if (ec != std::errc{} || p != value.data() + value.size())
        throw InvoiceError("bad amount_msat '" + value + "'");
    } else if (field == "hash") {
      if (value.size() != 64) throw InvoiceError("hash must be 64 hex digits");
      try {
        inv.payment_hash = Hash256::from_hex(value);
      } catch (const std::exception&) {
        throw InvoiceError("bad hash '" + value + "'");
      }
      if (inv.payment_hash.hex() != value) throw InvoiceError("hash must be lowercase hex");
    } else {
      inv.destination = value;
    }
  }
  if (in >> word) throw InvoiceError("trailing data in invoice: '" + word + "'");
  return inv;
}

// ---- channel operations ------------------------------------------------------------

namespace {

void require_idle_open(const Channel& ch) {
  if (ch.status() == ChannelStatus::PendingUpdate)
    throw ChannelError(ChannelErrc::ConcurrentUpdate, "an update is already in flight");
  if (!ch.is_open())
    throw ChannelError(ChannelErrc::ChannelNotOpen,
                       std::string("channel is ") + to_string(ch.status()));
}

const HtlcParams& pending_htlc(const Channel& ch, std::uint64_t id) {
  const HtlcParams* h = ch.allocation().find_htlc(id);
  if (!h) throw ChannelError(ChannelErrc::UnknownHtlc, "no pending HTLC " + std::to_string(id));
  return *h;
}

ChannelAllocation without(const ChannelAllocation& alloc, std::uint64_t id, Side credit) {
  ChannelAllocation next = alloc;
  auto it = std::find_if(next.htlcs.begin(), next.htlcs.end(),
                         [&](const HtlcParams& h) { return h.htlc_id == id; });
  next.balance[index_of(credit)] += it->amount_msat;
  next.htlcs.erase(it);
  return next;
}

}  // namespace

std::uint64_t add_htlc(Channel& ch, Side offerer, HtlcParams params, std::uint64_t height) {
  if (params.amount_msat < 1)
    throw ChannelError(ChannelErrc::InvalidAmount, "HTLC amount must be at least 1 msat");
  if (params.expiry_height <= height)
    throw ChannelError(ChannelErrc::ExpiredBeforeAdd, "HTLC expiry is not in the future");
  require_idle_open(ch);
  if (ch.balance(offerer) < params.amount_msat)
    throw ChannelError(ChannelErrc::InsufficientChannelBalance,
                       "offerer balance below " + std::to_string(params.amount_msat) + "msat");

  ChannelAllocation next = ch.allocation();
  params.htlc_id = next.next_htlc_id++;
  params.offerer = offerer;
  next.balance[index_of(offerer)] -= params.amount_msat;
  next.htlcs.push_back(params);
  ch.commit_transition(offerer, std::move(next), "htlc_add " + std::to_string(params.htlc_id),
                       false);
  return params.htlc_id;
}

void settle_htlc(Channel& ch, std::uint64_t htlc_id, const Preimage& preimage,
                 std::uint64_t height) {
  require_idle_open(ch);
  const HtlcParams& h = pending_htlc(ch, htlc_id);
  if (preimage.payment_hash() != h.payment_hash)
    throw ChannelError(ChannelErrc::WrongPreimage, "preimage does not match payment hash");
  if (height >= h.expiry_height)
    throw ChannelError(ChannelErrc::PastExpiry, "HTLC has expired");
  const Side receiver = other(h.offerer);
  ch.commit_transition(receiver, without(ch.allocation(), htlc_id, receiver),
                       "htlc_settle " + std::to_string(htlc_id), true);
}

void fail_htlc(Channel& ch, std::uint64_t htlc_id) {
  require_idle_open(ch);
  const HtlcParams& h = pending_htlc(ch, htlc_id);
  const Side offerer = h.offerer;
  ch.commit_transition(other(offerer), without(ch.allocation(), htlc_id, offerer),
                       "htlc_fail " + std::to_string(htlc_id), false);
}

ExpiryResolution expire_htlc(Channel& ch, std::uint64_t htlc_id, Ledger& ledger) {
  const HtlcParams& h = pending_htlc(ch, htlc_id);
  if (ledger.height() < h.expiry_height)
    throw ChannelError(ChannelErrc::NotYetExpired, "HTLC has not expired");
  const Side offerer = h.offerer;
  if (ch.is_open() && ch.online(Side::A) && ch.online(Side::B)) {
    ch.commit_transition(offerer, without(ch.allocation(), htlc_id, offerer),
                         "htlc_expire " + std::to_string(htlc_id), false);
    return ExpiryResolution::RefundedOffChain;
  }
  ch.refund_htlc_onchain(htlc_id, ledger);
  return ExpiryResolution::RefundedOnChain;
}

// ---- atomic swap -----------------------------------------------------------------------

const char* to_string(LegStatus s) {
  switch (s) {
    case LegStatus::NotOffered: return "NotOffered";
    case LegStatus::Pending: return "Pending";
    case LegStatus::Settled: return "Settled";
    case LegStatus::Refunded: return "Refunded";
  }
  return "?";
}

const char* to_string(SwapOutcome o) {
  switch (o) {
    case SwapOutcome::InProgress: return "InProgress";
    case SwapOutcome::BothSettled: return "BothSettled";
    case SwapOutcome::BothRefunded: return "BothRefunded";
    case SwapOutcome::Mixed: return "Mixed";
  }
  return "?";
}

std::uint64_t expiry_tick(const Ledger& ledger, std::uint64_t height) {
  return height * ledger.params().block_interval_secs;
}

SwapTerms earliest_swap_terms(const SwapLegs& legs, NodeId initiator, NodeId responder,
                              Msat amount_x, Msat amount_y, std::uint64_t delta_blocks) {
  const std::uint64_t ix = legs.ledger_x.params().block_interval_secs;
  const std::uint64_t iy = legs.ledger_y.params().block_interval_secs;
  const std::uint64_t now = std::max(legs.ledger_x.height() * ix, legs.ledger_y.height() * iy);
  SwapTerms t{std::move(initiator), std::move(responder), amount_x, amount_y, 0, 0, delta_blocks};
  t.expiry_short = now / iy + 2 * delta_blocks;
  const std::uint64_t long_tick = t.expiry_short * iy + delta_blocks * std::max(ix, iy);
  t.expiry_long = (long_tick + ix - 1) / ix;
  return t;
}

void validate_swap(const SwapLegs& legs, const SwapTerms& terms) {
  if (legs.ledger_x.asset() == legs.ledger_y.asset())
    throw SwapError(SwapErrc::SameAsset, "both legs are on " + legs.ledger_x.asset());
  if (legs.x.asset() != legs.ledger_x.asset() || legs.y.asset() != legs.ledger_y.asset())
    throw std::logic_error("swap channel and ledger assets disagree");
  for (const Channel* ch : {&legs.x, &legs.y})
    if (!ch->side_of(terms.initiator) || !ch->side_of(terms.responder) ||
        terms.initiator == terms.responder)
      throw SwapError(SwapErrc::ResponderDeclined,
                      "channel " + ch->id() + " does not join initiator and responder");
  if (terms.amount_x < 1 || terms.amount_y < 1)
    throw ChannelError(ChannelErrc::InvalidAmount, "swap amounts must be at least 1 msat");

  const std::uint64_t slow = std::max(legs.ledger_x.params().block_interval_secs,
                                      legs.ledger_y.params().block_interval_secs);
  const std::uint64_t short_tick = expiry_tick(legs.ledger_y, terms.expiry_short);
  const std::uint64_t long_tick = expiry_tick(legs.ledger_x, terms.expiry_long);
  if (terms.delta_blocks < 1 || short_tick + terms.delta_blocks * slow > long_tick)
    throw SwapError(SwapErrc::BadTimeoutOrdering,
                    "short expiry must precede long expiry by at least delta_blocks");
  if (terms.expiry_short <= legs.ledger_y.height())
    throw ChannelError(ChannelErrc::ExpiredBeforeAdd, "short expiry is not in the future");
}

AtomicSwap::AtomicSwap(const SwapLegs& legs, SwapTerms terms, Preimage secret,
                       bool honest_timers)
    : terms_(std::move(terms)),
      secret_(secret),
      hash_(secret.payment_hash()),
      honest_(honest_timers) {
  validate_swap(legs, terms_);
  short_tick_ = expiry_tick(legs.ledger_y, terms_.expiry_short);
  long_tick_ = expiry_tick(legs.ledger_x, terms_.expiry_long);
  settle_ticks_ = 2 * std::max(legs.ledger_x.params().block_interval_secs,
                               legs.ledger_y.params().block_interval_secs);
  tick_ = std::max(expiry_tick(legs.ledger_x, legs.ledger_x.height()),
                   expiry_tick(legs.ledger_y, legs.ledger_y.height()));
}

Side AtomicSwap::side_in(const Channel& ch, SwapRole r) const {
  return *ch.side_of(r == SwapRole::Initiator ? terms_.initiator : terms_.responder);
}

SwapOutcome AtomicSwap::outcome() const {
  const bool x = leg_x_ == LegStatus::Settled;
  const bool y = leg_y_ == LegStatus::Settled;
  if (x && y) return SwapOutcome::BothSettled;
  auto closed = [](LegStatus s) { return s == LegStatus::NotOffered || s == LegStatus::Refunded; };
  const bool over = tick_ >= long_tick_;
  if (x || y) return over ? SwapOutcome::Mixed : SwapOutcome::InProgress;
  if (over || (closed(leg_x_) && closed(leg_y_))) return SwapOutcome::BothRefunded;
  return SwapOutcome::InProgress;
}


// Events. Off-chain steps need both parties; everything else falls back to
// the chain.

bool AtomicSwap::initiator_offer(SwapLegs& legs) {
  if (leg_x_ != LegStatus::NotOffered || !both_online() || tick_ >= short_tick_) return false;
  try {
    HtlcParams p;
    p.payment_hash = hash_;
    p.amount_msat = terms_.amount_x;
    p.expiry_height = terms_.expiry_long;
    htlc_x_ = add_htlc(legs.x, side_in(legs.x, SwapRole::Initiator), p, legs.ledger_x.height());
  } catch (const ChannelError&) {
    return false;
  }
  leg_x_ = LegStatus::Pending;
  react(legs);
  return true;
}

bool AtomicSwap::responder_offer(SwapLegs& legs) {
  if (leg_y_ != LegStatus::NotOffered) return false;
  if (leg_x_ != LegStatus::Pending || claim_tx_x_ || refund_tx_x_)
    throw SwapError(SwapErrc::ResponderDeclined, "no matching HTLC offered on chain X");
  if (tick_ >= short_tick_)
    throw SwapError(SwapErrc::ResponderDeclined, "too late to offer before the short expiry");
  if (!both_online()) return false;
  try {
    HtlcParams p;
    p.payment_hash = hash_;
    p.amount_msat = terms_.amount_y;
    p.expiry_height = terms_.expiry_short;
    htlc_y_ = add_htlc(legs.y, side_in(legs.y, SwapRole::Responder), p, legs.ledger_y.height());
  } catch (const ChannelError&) {
    return false;
  }
  leg_y_ = LegStatus::Pending;
  react(legs);
  return true;
}

bool AtomicSwap::initiator_reveal(SwapLegs& legs) {
  if (leg_y_ != LegStatus::Pending || claim_tx_y_ || refund_tx_y_ ||
      !online(SwapRole::Initiator))
    return false;
  try {
    if (both_online() && legs.y.is_open()) {
      settle_htlc(legs.y, htlc_y_, secret_, legs.ledger_y.height());
      leg_y_ = LegStatus::Settled;
      responder_knows_ = true;
    } else {
      claim_tx_y_ = legs.y.claim_htlc_onchain(htlc_y_, secret_, legs.ledger_y);
    }
  } catch (const ChannelError&) {
    return false;
  } catch (const LedgerError&) {
    return false;
  }
  react(legs);
  return true;
}

bool AtomicSwap::responder_claim(SwapLegs& legs) {
  if (!responder_knows_ || !online(SwapRole::Responder)) return false;
  return claim_x(legs);
}

bool AtomicSwap::claim_x(SwapLegs& legs) {
  if (leg_x_ != LegStatus::Pending || claim_tx_x_ || refund_tx_x_) return false;
  try {
    if (both_online() && legs.x.is_open()) {
      settle_htlc(legs.x, htlc_x_, secret_, legs.ledger_x.height());
      leg_x_ = LegStatus::Settled;
    } else {
      claim_tx_x_ = legs.x.claim_htlc_onchain(htlc_x_, secret_, legs.ledger_x);
    }
  } catch (const ChannelError&) {
    return false;
  } catch (const LedgerError&) {
    return false;
  }
  return true;
}

bool AtomicSwap::refund(SwapLegs& legs, bool leg_is_x) {
  LegStatus& status = leg_is_x ? leg_x_ : leg_y_;
  auto& claim_tx = leg_is_x ? claim_tx_x_ : claim_tx_y_;
  auto& refund_tx = leg_is_x ? refund_tx_x_ : refund_tx_y_;
  Channel& ch = leg_is_x ? legs.x : legs.y;
  Ledger& ledger = leg_is_x ? legs.ledger_x : legs.ledger_y;
  const std::uint64_t id = leg_is_x ? htlc_x_ : htlc_y_;
  if (status != LegStatus::Pending || refund_tx) return false;
  if (claim_tx && ledger.in_mempool(*claim_tx)) return false;
  try {
    if (ch.is_open() && ch.online(Side::A) && ch.online(Side::B)) {
      if (expire_htlc(ch, id, ledger) == ExpiryResolution::RefundedOffChain) {
        status = LegStatus::Refunded;
        return true;
      }
    } else {
      refund_tx = ch.refund_htlc_onchain(id, ledger);
    }
  } catch (const ChannelError&) {
    return false;
  } catch (const LedgerError&) {
    return false;
  }
  return true;
}

bool AtomicSwap::reach_short_expiry(SwapLegs& legs) {
  if (tick_ >= short_tick_) return false;
  advance_to(legs, short_tick_);
  refund(legs, false);
  return true;
}

bool AtomicSwap::reach_long_expiry(SwapLegs& legs) {
  if (tick_ >= long_tick_) return false;
  advance_to(legs, long_tick_);
  refund(legs, true);
  refund(legs, false);
  // Let anything still queued confirm.
  advance_to(legs, long_tick_ + settle_ticks_);
  return true;
}

bool AtomicSwap::set_online(SwapLegs& legs, SwapRole who, bool up) {
  const std::size_t i = who == SwapRole::Initiator ? 0 : 1;
  if (online_[i] == up) return false;
  online_[i] = up;
  legs.x.set_online(side_in(legs.x, who), up);
  legs.y.set_online(side_in(legs.y, who), up);
  react(legs);
  return true;
}

SwapOutcome AtomicSwap::run_to_completion(SwapLegs& legs) {
  initiator_offer(legs);
  responder_offer(legs);
  initiator_reveal(legs);
  responder_claim(legs);
  return outcome();
}

void AtomicSwap::advance_to(SwapLegs& legs, std::uint64_t t) {
  const std::uint64_t ix = legs.ledger_x.params().block_interval_secs;
  const std::uint64_t iy = legs.ledger_y.params().block_interval_secs;
  for (;;) {
    const std::uint64_t nx = (legs.ledger_x.height() + 1) * ix;
    const std::uint64_t ny = (legs.ledger_y.height() + 1) * iy;
    const std::uint64_t next = std::min(nx, ny);
    if (next > t) break;
    if (nx == next) legs.ledger_x.mine_block();
    if (ny == next) legs.ledger_y.mine_block();
    tick_ = next;
    legs.x.refresh(legs.ledger_x);
    legs.y.refresh(legs.ledger_y);
    observe(legs);
    react(legs);
  }
  tick_ = std::max(tick_, t);
}

void AtomicSwap::observe(SwapLegs& legs) {
  auto track = [](std::optional<Txid>& tx, const Ledger& ledger, LegStatus& status,
                  LegStatus on_confirm) {
    if (!tx) return false;
    if (ledger.confirmation_height(*tx)) {
      status = on_confirm;
      tx.reset();
      return true;
    }
    if (!ledger.in_mempool(*tx)) tx.reset();  // dropped; may be retried
    return false;
  };
  if (track(claim_tx_y_, legs.ledger_y, leg_y_, LegStatus::Settled)) responder_knows_ = true;
  track(claim_tx_x_, legs.ledger_x, leg_x_, LegStatus::Settled);
  track(refund_tx_x_, legs.ledger_x, leg_x_, LegStatus::Refunded);
  track(refund_tx_y_, legs.ledger_y, leg_y_, LegStatus::Refunded);
}

void AtomicSwap::react(SwapLegs& legs) {
  if (!honest_) return;
  if (responder_knows_) claim_x(legs);
  if (legs.ledger_y.height() >= terms_.expiry_short) refund(legs, false);
  if (legs.ledger_x.height() >= terms_.expiry_long) refund(legs, true);
}

std::string AtomicSwap::state_key() const {
  std::string k;
  k += static_cast<char>('0' + static_cast<int>(leg_x_));
  k += static_cast<char>('0' + static_cast<int>(leg_y_));
  k += online_[0] ? '1' : '0';
  k += online_[1] ? '1' : '0';
  k += responder_knows_ ? '1' : '0';
  for (const auto* tx : {&claim_tx_x_, &claim_tx_y_, &refund_tx_x_, &refund_tx_y_})
    k += tx->has_value() ? '1' : '0';
  k += ':' + std::to_string(tick_);
  return k;
}

}  // namespace lnsim
