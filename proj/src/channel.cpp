#include "lnsim/channel.hpp"

#include <algorithm>

#include "lnsim/serialize.hpp"

namespace lnsim {

namespace {

std::string msat_detail(Msat m) { return std::to_string(m) + "msat"; }

}  // namespace

Msat ChannelAllocation::htlc_total() const {
  Msat total = 0;
  for (const auto& h : htlcs) total += h.amount_msat;
  return total;
}

const HtlcParams* ChannelAllocation::find_htlc(std::uint64_t id) const {
  for (const auto& h : htlcs)
    if (h.htlc_id == id) return &h;
  return nullptr;
}

const char* to_string(ChannelStatus s) {
  switch (s) {
    case ChannelStatus::Opening: return "Opening";
    case ChannelStatus::Open: return "Open";
    case ChannelStatus::PendingUpdate: return "PendingUpdate";
    case ChannelStatus::CooperativeClosing: return "CooperativeClosing";
    case ChannelStatus::CooperativeClosed: return "CooperativeClosed";
    case ChannelStatus::UnilateralClosing: return "UnilateralClosing";
    case ChannelStatus::Punished: return "Punished";
  }
  return "?";
}

const char* to_string(ChannelErrc code) {
  switch (code) {
    case ChannelErrc::InvalidAmount: return "InvalidAmount";
    case ChannelErrc::InsufficientFunds: return "InsufficientFunds";
    case ChannelErrc::FundingUnconfirmed: return "FundingUnconfirmed";
    case ChannelErrc::InsufficientChannelBalance: return "InsufficientChannelBalance";
    case ChannelErrc::ChannelNotOpen: return "ChannelNotOpen";
    case ChannelErrc::ConcurrentUpdate: return "ConcurrentUpdate";
    case ChannelErrc::PartyOffline: return "PartyOffline";
    case ChannelErrc::BothOffline: return "BothOffline";
    case ChannelErrc::PendingHtlcs: return "PendingHtlcs";
    case ChannelErrc::NoSignedCommitment: return "NoSignedCommitment";
    case ChannelErrc::NoRevocationSecret: return "NoRevocationSecret";
    case ChannelErrc::CommitmentUnconfirmed: return "CommitmentUnconfirmed";
    case ChannelErrc::DelayElapsed: return "DelayElapsed";
    case ChannelErrc::DelayNotElapsed: return "DelayNotElapsed";
    case ChannelErrc::BadSignature: return "BadSignature";
    case ChannelErrc::ConservationViolated: return "ConservationViolated";
    case ChannelErrc::ExpiredBeforeAdd: return "ExpiredBeforeAdd";
    case ChannelErrc::WrongPreimage: return "WrongPreimage";
    case ChannelErrc::UnknownHtlc: return "UnknownHtlc";
    case ChannelErrc::PastExpiry: return "PastExpiry";
    case ChannelErrc::NotYetExpired: return "NotYetExpired";
  }
  return "?";
}

std::vector<std::pair<OutPoint, Msat>> select_coins(const Ledger& ledger, const PublicKey& key,
                                                    Msat target) {
  auto coins = ledger.spendable_outputs(key);
  for (const auto& c : coins)
    if (c.second == target) return {c};

  const std::pair<OutPoint, Msat>* best = nullptr;
  for (const auto& c : coins)
    if (c.second >= target && (!best || c.second < best->second)) best = &c;
  if (best) return {*best};

  std::stable_sort(coins.begin(), coins.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  std::vector<std::pair<OutPoint, Msat>> picked;
  Msat sum = 0;
  for (const auto& c : coins) {
    picked.push_back(c);
    sum += c.second;
    if (sum >= target) return picked;
  }
  throw ChannelError(ChannelErrc::InsufficientFunds,
                     "on-chain balance does not cover " + msat_detail(target));
}

// ---- construction -------------------------------------------------------------

Channel Channel::open(Ledger& ledger, std::shared_ptr<SimulatedSigner> signer, ChannelId id,
                      ChannelParty a, ChannelParty b, Msat fund_a, Msat fund_b,
                      ChannelConfig config) {
  if (fund_a + fund_b == 0)
    throw ChannelError(ChannelErrc::InvalidAmount, "channel capacity must be positive");

  Channel ch;
  ch.id_ = std::move(id);
  ch.asset_ = ledger.asset();
  ch.signer_ = std::move(signer);
  ch.parties_ = {std::move(a), std::move(b)};
  ch.config_ = config;
  ch.chain_fee_ = ledger.params().fee_msat;
  ch.capacity_ = fund_a + fund_b;

  const auto& pa = ch.parties_[0];
  const auto& pb = ch.parties_[1];

  // The opener carries the funding fee.
  auto coins_a = select_coins(ledger, pa.wallet_key.pub, fund_a + ch.chain_fee_);
  std::vector<std::pair<OutPoint, Msat>> coins_b;
  if (fund_b > 0) coins_b = select_coins(ledger, pb.wallet_key.pub, fund_b);

  Transaction tx;
  Msat in_a = 0, in_b = 0;
  for (const auto& [op, amt] : coins_a) {
    tx.inputs.push_back(TxInput{op, {}});
    in_a += amt;
  }
  for (const auto& [op, amt] : coins_b) {
    tx.inputs.push_back(TxInput{op, {}});
    in_b += amt;
  }
  tx.outputs.push_back(Output{ch.capacity_, Multisig2of2{pa.node_key.pub, pb.node_key.pub}});
  if (Msat change = in_a - fund_a - ch.chain_fee_; change > 0)
    tx.outputs.push_back(Output{change, SingleKey{pa.wallet_key.pub}});
  if (Msat change = in_b - fund_b; change > 0)
    tx.outputs.push_back(Output{change, SingleKey{pb.wallet_key.pub}});

  Txid txid = tx.id();
  for (std::size_t i = 0; i < tx.inputs.size(); ++i) {
    const KeyPair& k = i < coins_a.size() ? pa.wallet_key : pb.wallet_key;
    tx.inputs[i].witness = SingleSig{ch.signer_->sign(k, txid)};
  }
  ch.funding_ = OutPoint{txid, 0};
  ch.alloc_.balance = {fund_a, fund_b};

  // Version-0 commitments are exchanged before the funding is broadcast.
  for (Side holder : {Side::A, Side::B}) {
    CommitmentTx c = ch.build_commitment(holder, 0, ch.alloc_);
    ch.countersign(c, other(holder));
    ch.commitment_index_.emplace(c.txid, std::make_pair(holder, std::uint64_t{0}));
    ch.history_[index_of(holder)].emplace(0, c);
    ch.latest_[index_of(holder)] = std::move(c);
  }

  ledger.submit(std::move(tx));
  ch.record("funding", "capacity=" + msat_detail(ch.capacity_));
  return ch;
}

void Channel::confirm_funding(const Ledger& ledger) {
  require_ledger(ledger);
  if (status_ != ChannelStatus::Opening) return;
  if (!ledger.confirmation_height(funding_.txid))
    throw ChannelError(ChannelErrc::FundingUnconfirmed, "funding transaction not yet mined");
  status_ = ChannelStatus::Open;
}

void Channel::refresh(const Ledger& ledger) {
  require_ledger(ledger);
  if (status_ == ChannelStatus::Opening && ledger.confirmation_height(funding_.txid))
    status_ = ChannelStatus::Open;
  if (closing_txid_ && !close_height_) {
    close_height_ = ledger.confirmation_height(*closing_txid_);
    if (close_height_ && status_ == ChannelStatus::CooperativeClosing) {
      status_ = ChannelStatus::CooperativeClosed;
      record("closed");
    }
  }
}

// ---- commitments ----------------------------------------------------------------

KeyPair Channel::revocation_keypair(Side owner, std::uint64_t version) const {
  Writer w;
  w.str("revocation").hash(p(owner).secret_seed).u64(version);
  return signer_->from_secret(sha256(w.data()));
}

CommitmentTx Channel::build_commitment(Side holder, std::uint64_t version,
                                       const ChannelAllocation& alloc) const {
  const Side cp = other(holder);
  CommitmentTx c;
  c.version_n = version;
  c.holder = holder;
  c.htlc_outputs = alloc.htlcs;
  c.revocation_key = revocation_keypair(holder, version).pub;

  // The broadcaster's side absorbs the on-chain fee.
  Msat fee = std::min(chain_fee_, capacity_);
  auto take = [&fee](Msat& from) {
    Msat t = std::min(fee, from);
    from -= t;
    fee -= t;
  };
  Msat to_holder = alloc.balance[index_of(holder)];
  Msat to_cp = alloc.balance[index_of(cp)];
  std::vector<Msat> htlc_amounts;
  for (const auto& h : alloc.htlcs) htlc_amounts.push_back(h.amount_msat);
  take(to_holder);
  take(to_cp);
  for (auto& amt : htlc_amounts) take(amt);

  c.to_holder_msat = to_holder;
  c.to_counterparty_msat = to_cp;

  Transaction& tx = c.tx;
  tx.inputs.push_back(TxInput{funding_, {}});
  tx.outputs.push_back(Output{to_holder, CommitmentScript{p(holder).node_key.pub, c.revocation_key,
                                                          config_.to_self_delay_blocks}});
  tx.outputs.push_back(Output{to_cp, SingleKey{p(cp).node_key.pub}});
  for (std::size_t i = 0; i < alloc.htlcs.size(); ++i) {
    const auto& h = alloc.htlcs[i];
    tx.outputs.push_back(Output{htlc_amounts[i],
                                Hashlock{h.payment_hash, p(other(h.offerer)).node_key.pub,
                                         p(h.offerer).node_key.pub, h.expiry_height,
                                         c.revocation_key}});
  }
  c.txid = tx.id();
  return c;
}

void Channel::countersign(CommitmentTx& c, Side signer_side) const {
  c.counterparty_signature = signer_->sign(p(signer_side).node_key, c.txid);
}

void Channel::check_countersigned(const CommitmentTx& c) const {
  if (!signer_->verify(p(other(c.holder)).node_key.pub, c.txid, c.counterparty_signature))
    throw ChannelError(ChannelErrc::BadSignature, "counterparty signature does not verify");
}

Transaction Channel::signed_commitment(const CommitmentTx& c) const {
  Transaction tx = c.tx;
  Signature own = signer_->sign(p(c.holder).node_key, c.txid);
  Sigs2of2 w = c.holder == Side::A ? Sigs2of2{own, c.counterparty_signature}
                                   : Sigs2of2{c.counterparty_signature, own};
  tx.inputs[0].witness = w;
  return tx;
}

const CommitmentTx* Channel::commitment(Side holder, std::uint64_t version) const {
  const auto& h = history_[index_of(holder)];
  auto it = h.find(version);
  return it == h.end() ? nullptr : &it->second;
}

// ---- updates ----------------------------------------------------------------------

void Channel::require_open() const {
  if (status_ == ChannelStatus::PendingUpdate)
    throw ChannelError(ChannelErrc::ConcurrentUpdate, "an update is already in flight");
  if (status_ != ChannelStatus::Open)
    throw ChannelError(ChannelErrc::ChannelNotOpen,
                       std::string("channel is ") + to_string(status_));
}

void Channel::require_online() const {
  if (!online_[0] || !online_[1])
    throw ChannelError(ChannelErrc::PartyOffline, "counterparty is not responding");
}

void Channel::require_ledger(const Ledger& ledger) const {
  if (ledger.asset() != asset_)
    throw std::logic_error("channel " + id_ + " lives on " + asset_ + ", not " + ledger.asset());
}

void Channel::update_balance(Side payer, Msat amount) {
  begin_update(payer, amount);
  while (pending_) advance();
}

void Channel::begin_update(Side payer, Msat amount) {
  require_open();
  if (amount > balance(payer))
    throw ChannelError(ChannelErrc::InsufficientChannelBalance,
                       "payer balance below " + msat_detail(amount));
  ChannelAllocation next = alloc_;
  next.balance[index_of(payer)] -= amount;
  next.balance[index_of(other(payer))] += amount;
  begin_transition(payer, std::move(next), "update " + msat_detail(amount), true);
}

void Channel::begin_transition(Side initiator, ChannelAllocation next, std::string kind,
                               bool completes_transfer) {
  require_open();
  require_online();
  if (next.total() != capacity_)
    throw ChannelError(ChannelErrc::ConservationViolated,
                       "proposed allocation does not sum to capacity");
  pending_ = Pending{initiator, std::move(next), std::move(kind), completes_transfer, 0, {}, {}};
  status_ = ChannelStatus::PendingUpdate;
}

int Channel::advance() {
  if (!pending_) throw std::logic_error("no update in flight");
  Pending& u = *pending_;
  const Side ini = u.initiator;
  const Side cp = other(ini);
  const std::uint64_t next_version = version_ + 1;
  const std::string who_i = p(ini).id;
  const std::string who_c = p(cp).id;
  const std::string v_now = std::to_string(version_);
  const std::string v_next = std::to_string(next_version);

  switch (++u.step) {
    case 1:
      u.for_counterparty = build_commitment(cp, next_version, u.next);
      record("step1", u.kind + ": " + who_i + " builds " + who_c + "'s commitment v" + v_next);
      break;
    case 2:
      countersign(u.for_counterparty, ini);
      record("step2", who_i + " signs " + who_c + "'s commitment v" + v_next + " and sends it");
      break;
    case 3: {
      // The counterparty rebuilds the transaction itself before accepting.
      CommitmentTx expected = build_commitment(cp, next_version, u.next);
      if (expected.txid != u.for_counterparty.txid)
        throw ChannelError(ChannelErrc::ConservationViolated, "commitment does not match proposal");
      check_countersigned(u.for_counterparty);
      record("step3", who_c + " countersigns and keeps its commitment v" + v_next);
      break;
    }
    case 4:
      u.for_initiator = build_commitment(ini, next_version, u.next);
      record("step4", who_c + " builds " + who_i + "'s commitment v" + v_next);
      break;
    case 5:
      countersign(u.for_initiator, cp);
      record("step5", who_c + " signs " + who_i + "'s commitment v" + v_next + " and sends it");
      break;
    case 6:
      check_countersigned(u.for_initiator);
      record("step6", who_i + " countersigns and keeps its commitment v" + v_next);
      break;
    case 7: {
      received_[index_of(cp)][version_] =
          RevocationSecret{version_, revocation_keypair(ini, version_).secret, ini};
      commitment_index_.emplace(u.for_initiator.txid, std::make_pair(ini, next_version));
      history_[index_of(ini)].emplace(next_version, u.for_initiator);
      latest_[index_of(ini)] = u.for_initiator;
      record("step7", who_i + " reveals revocation secret for its v" + v_now +
                          " commitment, which is now invalid");
      break;
    }
    case 8: {
      received_[index_of(ini)][version_] =
          RevocationSecret{version_, revocation_keypair(cp, version_).secret, cp};
      commitment_index_.emplace(u.for_counterparty.txid, std::make_pair(cp, next_version));
      history_[index_of(cp)].emplace(next_version, u.for_counterparty);
      latest_[index_of(cp)] = u.for_counterparty;
      alloc_ = std::move(u.next);
      version_ = next_version;
      if (u.completes_transfer) ++transfers_;
      status_ = ChannelStatus::Open;
      pending_.reset();
      record("step8", who_c + " reveals revocation secret for its v" + v_now +
                          " commitment, which is now invalid");
      return 8;
    }
  }
  return u.step;
}

void Channel::commit_transition(Side initiator, ChannelAllocation next, std::string kind,
                                bool completes_transfer) {
  begin_transition(initiator, std::move(next), std::move(kind), completes_transfer);
  while (pending_) advance();
}

std::vector<Side> Channel::update_balance_concurrent(std::optional<Msat> a_pays,
                                                     std::optional<Msat> b_pays) {
  std::vector<Side> order;
  if (a_pays) order.push_back(Side::A);
  if (b_pays) order.push_back(Side::B);
  if (order.size() == 2 && p(Side::B).id < p(Side::A).id) std::swap(order[0], order[1]);
  auto amount = [&](Side s) { return s == Side::A ? *a_pays : *b_pays; };

  if (order.size() == 2) {
    begin_update(order[0], amount(order[0]));
    try {
      begin_update(order[1], amount(order[1]));
    } catch (const ChannelError& e) {
      if (e.code() != ChannelErrc::ConcurrentUpdate) throw;
      record("deferred", p(order[1]).id + " retries after " + p(order[0]).id);
    }
    while (pending_) advance();
    update_balance(order[1], amount(order[1]));
  } else if (order.size() == 1) {
    update_balance(order[0], amount(order[0]));
  }
  return order;
}

// ---- closing ----------------------------------------------------------------------

bool Channel::is_closed() const {
  return status_ == ChannelStatus::CooperativeClosing ||
         status_ == ChannelStatus::CooperativeClosed ||
         status_ == ChannelStatus::UnilateralClosing || status_ == ChannelStatus::Punished;
}

Txid Channel::cooperative_close(Ledger& ledger) {
  require_ledger(ledger);
  require_open();
  if (!alloc_.htlcs.empty())
    throw ChannelError(ChannelErrc::PendingHtlcs, "HTLCs must resolve before a cooperative close");
  require_online();

  // Fee split pro rata to the final balances.
  Msat fee = std::min(chain_fee_, capacity_);
  Msat fee_a = static_cast<Msat>(static_cast<unsigned __int128>(fee) * alloc_.balance[0] /
                                 capacity_);
  Msat fee_b = fee - fee_a;

  Transaction tx;
  tx.inputs.push_back(TxInput{funding_, {}});
  if (Msat amt = alloc_.balance[0] - fee_a; amt > 0)
    tx.outputs.push_back(Output{amt, SingleKey{p(Side::A).node_key.pub}});
  if (Msat amt = alloc_.balance[1] - fee_b; amt > 0)
    tx.outputs.push_back(Output{amt, SingleKey{p(Side::B).node_key.pub}});
  Txid txid = tx.id();
  tx.inputs[0].witness = Sigs2of2{signer_->sign(p(Side::A).node_key, txid),
                                  signer_->sign(p(Side::B).node_key, txid)};
  ledger.submit(std::move(tx));

  closing_txid_ = txid;
  broadcast_height_ = ledger.height();
  status_ = ChannelStatus::CooperativeClosing;
  record("coop_close", "fee_a=" + msat_detail(fee_a) + " fee_b=" + msat_detail(fee_b));
  return txid;
}

Txid Channel::broadcast(const CommitmentTx& c, Ledger& ledger, bool revoked) {
  ledger.submit(signed_commitment(c));
  const CommitmentTx closing = c;
  mark_closed(closing, ledger, revoked);
  return closing.txid;
}

void Channel::mark_closed(const CommitmentTx& c, const Ledger& ledger, bool revoked) {
  const Txid txid = c.txid;
  pending_.reset();
  closing_txid_ = txid;
  closer_ = c.holder;
  closing_version_ = c.version_n;
  broadcast_height_ = ledger.height();
  status_ = ChannelStatus::UnilateralClosing;
  record(revoked ? "revoked_broadcast" : "unilateral_close",
         p(c.holder).id + " broadcasts commitment v" + std::to_string(c.version_n));
}

Txid Channel::unilateral_close(Side party, Ledger& ledger) {
  require_ledger(ledger);
  if (status_ == ChannelStatus::Opening)
    throw ChannelError(ChannelErrc::FundingUnconfirmed, "funding transaction not yet mined");
  if (status_ != ChannelStatus::Open && status_ != ChannelStatus::PendingUpdate)
    throw ChannelError(ChannelErrc::ChannelNotOpen,
                       std::string("channel is ") + to_string(status_));
  if (history_[index_of(party)].empty())
    throw ChannelError(ChannelErrc::NoSignedCommitment, "no countersigned commitment held");
  return broadcast(latest_[index_of(party)], ledger, false);
}

Txid Channel::broadcast_revoked(Side cheater, std::uint64_t version, Ledger& ledger) {
  require_ledger(ledger);
  if (status_ != ChannelStatus::Open && status_ != ChannelStatus::PendingUpdate)
    throw ChannelError(ChannelErrc::ChannelNotOpen,
                       std::string("channel is ") + to_string(status_));
  if (version >= version_)
    throw ChannelError(ChannelErrc::NoRevocationSecret,
                       "version " + std::to_string(version) + " has not been revoked");
  const CommitmentTx* c = commitment(cheater, version);
  if (!c) throw ChannelError(ChannelErrc::NoSignedCommitment, "no such commitment");
  return broadcast(*c, ledger, true);
}

const CommitmentTx* Channel::closing_commitment() const {
  if (!closer_ || !closing_version_) return nullptr;
  return commitment(*closer_, *closing_version_);
}

bool Channel::closed_with_revoked_commitment() const {
  return closing_version_ && *closing_version_ < version_;
}

const UtxoEntry& Channel::confirmed_output(const Ledger& ledger, const Txid& txid,
                                           std::uint32_t index, ChannelErrc err) const {
  if (!ledger.confirmation_height(txid))
    throw ChannelError(ChannelErrc::CommitmentUnconfirmed, "commitment not yet mined");
  const UtxoEntry* e = ledger.find_utxo(OutPoint{txid, index});
  if (!e) throw ChannelError(err, "output already spent");
  return *e;
}

Txid Channel::punish(const CommitmentTx& cheater_tx, Ledger& ledger) {
  require_ledger(ledger);
  const Side cheater = cheater_tx.holder;
  const Side victim = other(cheater);
  if (cheater_tx.version_n >= version_)
    throw ChannelError(ChannelErrc::NoRevocationSecret,
                       "commitment v" + std::to_string(cheater_tx.version_n) + " is not revoked");
  const auto& secrets = received_[index_of(victim)];
  auto it = secrets.find(cheater_tx.version_n);
  if (it == secrets.end())
    throw ChannelError(ChannelErrc::NoRevocationSecret, "victim holds no secret for that version");

  auto conf = ledger.confirmation_height(cheater_tx.txid);
  if (!conf) throw ChannelError(ChannelErrc::CommitmentUnconfirmed, "commitment not yet mined");
  // The penalty must confirm before the cheater's delay elapses.
  if (ledger.height() + 1 >= *conf + config_.to_self_delay_blocks) {
    record("cheat_succeeded", p(cheater).id + " kept revoked v" +
                                  std::to_string(cheater_tx.version_n));
    throw ChannelError(ChannelErrc::DelayElapsed, "revocable output is already claimable");
  }

  KeyPair rev = signer_->from_secret(it->second.secret);
  Transaction tx;
  Msat total = 0;
  for (std::uint32_t i = 0; i < cheater_tx.tx.outputs.size(); ++i) {
    if (i == 1) continue;  // already the victim's
    const UtxoEntry* e = ledger.find_utxo(OutPoint{cheater_tx.txid, i});
    if (!e) continue;
    tx.inputs.push_back(TxInput{OutPoint{cheater_tx.txid, i}, {}});
    total += e->output.amount_msat;
  }
  if (tx.inputs.empty())
    throw ChannelError(ChannelErrc::DelayElapsed, "revocable outputs already spent");
  Msat net = total - std::min(chain_fee_, total);
  if (net > 0) tx.outputs.push_back(Output{net, SingleKey{p(victim).node_key.pub}});
  Txid txid = tx.id();
  for (auto& in : tx.inputs) in.witness = Revocation{signer_->sign(rev, txid)};
  ledger.submit(std::move(tx));

  status_ = ChannelStatus::Punished;
  record("punished", p(victim).id + " sweeps " + msat_detail(net) + " from revoked v" +
                         std::to_string(cheater_tx.version_n));
  return txid;
}

std::optional<Txid> Channel::sweep_to_self(Ledger& ledger) {
  require_ledger(ledger);
  const CommitmentTx* c = closing_commitment();
  if (!c || status_ != ChannelStatus::UnilateralClosing)
    throw ChannelError(ChannelErrc::ChannelNotOpen, "channel has not been closed unilaterally");
  const UtxoEntry& e = confirmed_output(ledger, c->txid, 0, ChannelErrc::ChannelNotOpen);
  if (e.output.amount_msat == 0) return std::nullopt;
  if (ledger.height() + 1 < e.height + config_.to_self_delay_blocks)
    throw ChannelError(ChannelErrc::DelayNotElapsed, "to_self_delay has not elapsed");

  const KeyPair& key = p(c->holder).node_key;
  Transaction tx;
  tx.inputs.push_back(TxInput{OutPoint{c->txid, 0}, {}});
  Msat net = e.output.amount_msat - std::min(chain_fee_, e.output.amount_msat);
  if (net > 0) tx.outputs.push_back(Output{net, SingleKey{key.pub}});
  Txid txid = tx.id();
  tx.inputs[0].witness = LocalAfterDelay{signer_->sign(key, txid)};
  ledger.submit(std::move(tx));
  record("sweep", p(c->holder).id + " sweeps " + msat_detail(net));
  return txid;
}

Txid Channel::on_party_offline(Side offline, Ledger& ledger) {
  require_ledger(ledger);
  set_online(offline, false);
  if (!online(other(offline))) {
    record("frozen", "both parties offline");
    throw ChannelError(ChannelErrc::BothOffline, "no party available to close the channel");
  }
  record("party_offline", p(offline).id + " stopped responding");
  return unilateral_close(other(offline), ledger);
}

Txid Channel::claim_htlc_onchain(std::uint64_t htlc_id, const Preimage& preimage,
                                 Ledger& ledger) {
  return resolve_htlc_onchain(htlc_id, &preimage, ledger);
}

Txid Channel::refund_htlc_onchain(std::uint64_t htlc_id, Ledger& ledger) {
  return resolve_htlc_onchain(htlc_id, nullptr, ledger);
}

Txid Channel::resolve_htlc_onchain(std::uint64_t htlc_id, const Preimage* preimage,
                                   Ledger& ledger) {
  require_ledger(ledger);
  const bool claim = preimage != nullptr;
  const CommitmentTx* c = closing_commitment();
  bool close_now = false;
  if (!c) {
    if (status_ != ChannelStatus::Open && status_ != ChannelStatus::PendingUpdate)
      throw ChannelError(ChannelErrc::ChannelNotOpen, "no commitment on chain");
    const HtlcParams* h = alloc_.find_htlc(htlc_id);
    if (!h) throw ChannelError(ChannelErrc::UnknownHtlc, "no such pending HTLC");
    // Still open: the spender closes with its own commitment in the same package.
    c = &latest_[index_of(claim ? other(h->offerer) : h->offerer)];
    close_now = true;
  }
  auto it = std::find_if(c->htlc_outputs.begin(), c->htlc_outputs.end(),
                         [&](const HtlcParams& h) { return h.htlc_id == htlc_id; });
  if (it == c->htlc_outputs.end())
    throw ChannelError(ChannelErrc::UnknownHtlc, "HTLC not in the broadcast commitment");
  if (claim) {
    if (preimage->payment_hash() != it->payment_hash)
      throw ChannelError(ChannelErrc::WrongPreimage, "preimage does not match payment hash");
    if (ledger.height() + 1 >= it->expiry_height)
      throw ChannelError(ChannelErrc::PastExpiry, "HTLC expired before it could be claimed");
  } else if (ledger.height() + 1 < it->expiry_height) {
    throw ChannelError(ChannelErrc::NotYetExpired, "HTLC has not expired");
  }

  const auto index = static_cast<std::uint32_t>(2 + (it - c->htlc_outputs.begin()));
  Msat amount = close_now
                    ? c->tx.outputs[index].amount_msat
                    : confirmed_output(ledger, c->txid, index, ChannelErrc::UnknownHtlc)
                          .output.amount_msat;
  const KeyPair& key = p(claim ? other(it->offerer) : it->offerer).node_key;
  Transaction tx;
  tx.inputs.push_back(TxInput{OutPoint{c->txid, index}, {}});
  Msat net = amount - std::min(chain_fee_, amount);
  if (net > 0) tx.outputs.push_back(Output{net, SingleKey{key.pub}});
  Txid txid = tx.id();
  if (claim)
    tx.inputs[0].witness = HashlockClaim{*preimage, signer_->sign(key, txid)};
  else
    tx.inputs[0].witness = HashlockRefund{signer_->sign(key, txid)};

  if (close_now) {
    const CommitmentTx closing = *c;
    ledger.submit_package({signed_commitment(closing), std::move(tx)});
    mark_closed(closing, ledger, false);
  } else {
    ledger.submit(std::move(tx));
  }
  record(claim ? "htlc_claim_onchain" : "htlc_refund_onchain", "htlc " + std::to_string(htlc_id));
  return txid;
}

// ---- misc ---------------------------------------------------------------------------

std::optional<Side> Channel::side_of(const NodeId& node) const {
  if (parties_[0].id == node) return Side::A;
  if (parties_[1].id == node) return Side::B;
  return std::nullopt;
}

void Channel::note(std::string event, std::string detail) {
  record(std::move(event), std::move(detail));
}

void Channel::record(std::string event, std::string detail) {
  trace_.push_back(ChannelEvent{tick_, std::move(event), version_, alloc_.balance[0],
                                alloc_.balance[1], std::move(detail)});
}

}  // namespace lnsim
