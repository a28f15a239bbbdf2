#include "lnsim/basechain.hpp"

#include <algorithm>

#include "lnsim/serialize.hpp"

namespace lnsim {

namespace {

enum ConditionTag : std::uint64_t {
  kTagSingleKey = 1,
  kTagMultisig = 2,
  kTagCommitment = 3,
  kTagHashlock = 4,
};

void write_condition(Writer& w, const SpendCondition& cond) {
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SingleKey>) {
          w.u64(kTagSingleKey).hash(c.key.digest);
        } else if constexpr (std::is_same_v<T, Multisig2of2>) {
          w.u64(kTagMultisig).hash(c.k1.digest).hash(c.k2.digest);
        } else if constexpr (std::is_same_v<T, CommitmentScript>) {
          w.u64(kTagCommitment)
              .hash(c.local_key.digest)
              .hash(c.revocation_key.digest)
              .u64(c.to_self_delay_blocks);
        } else {
          w.u64(kTagHashlock)
              .hash(c.payment_hash)
              .hash(c.claim_key.digest)
              .hash(c.refund_key.digest)
              .u64(c.expiry_height)
              .hash(c.revocation_key.digest);
        }
      },
      cond);
}

template <typename W>
const Signature* sig_of(const Witness& w) {
  if (auto* p = std::get_if<W>(&w)) return &p->sig;
  return nullptr;
}

}  // namespace

Bytes Transaction::serialize() const {
  Writer w;
  w.u64(inputs.size());
  for (const auto& in : inputs) w.hash(in.prevout.txid).u64(in.prevout.index);
  w.u64(outputs.size());
  for (const auto& out : outputs) {
    w.u64(out.amount_msat);
    write_condition(w, out.condition);
  }
  w.u64(locktime_height);
  return w.take();
}

Txid Transaction::id() const { return sha256(serialize()); }

Msat Transaction::output_total() const {
  Msat total = 0;
  for (const auto& o : outputs) total += o.amount_msat;
  return total;
}

bool evaluate_spend(const Signer& signer, const Output& output, const Witness& witness,
                    const SpendContext& ctx) {
  const auto& msg = ctx.sighash;
  return std::visit(
      [&](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SingleKey>) {
          const auto* sig = sig_of<SingleSig>(witness);
          return sig && signer.verify(c.key, msg, *sig);
        } else if constexpr (std::is_same_v<T, Multisig2of2>) {
          const auto* w = std::get_if<Sigs2of2>(&witness);
          return w && signer.verify(c.k1, msg, w->sig1) && signer.verify(c.k2, msg, w->sig2);
        } else if constexpr (std::is_same_v<T, CommitmentScript>) {
          if (const auto* sig = sig_of<Revocation>(witness))
            return signer.verify(c.revocation_key, msg, *sig);
          if (const auto* sig = sig_of<LocalAfterDelay>(witness))
            return ctx.height >= ctx.output_height + c.to_self_delay_blocks &&
                   signer.verify(c.local_key, msg, *sig);
          return false;
        } else {
          if (const auto* w = std::get_if<HashlockClaim>(&witness))
            return ctx.height < c.expiry_height &&
                   w->preimage.payment_hash() == c.payment_hash &&
                   signer.verify(c.claim_key, msg, w->sig);
          if (const auto* sig = sig_of<HashlockRefund>(witness))
            return ctx.height >= c.expiry_height && signer.verify(c.refund_key, msg, *sig);
          if (const auto* sig = sig_of<Revocation>(witness))
            return !c.revocation_key.empty() && signer.verify(c.revocation_key, msg, *sig);
          return false;
        }
      },
      output.condition);
}

const char* to_string(LedgerErrc code) {
  switch (code) {
    case LedgerErrc::DuplicateAsset: return "DuplicateAsset";
    case LedgerErrc::UnknownAsset: return "UnknownAsset";
    case LedgerErrc::InvalidParams: return "InvalidParams";
    case LedgerErrc::UnknownInput: return "UnknownInput";
    case LedgerErrc::DoubleSpend: return "DoubleSpend";
    case LedgerErrc::BadWitness: return "BadWitness";
    case LedgerErrc::ValueCreated: return "ValueCreated";
    case LedgerErrc::FeeMismatch: return "FeeMismatch";
    case LedgerErrc::PrematureLocktime: return "PrematureLocktime";
  }
  return "?";
}

Ledger::Ledger(ChainParams params, std::shared_ptr<const Signer> signer)
    : params_(std::move(params)), signer_(std::move(signer)) {
  if (params_.asset_id.empty())
    throw LedgerError(LedgerErrc::InvalidParams, "asset_id must not be empty");
  if (params_.tps_cap < 1 || params_.block_interval_secs < 1)
    throw LedgerError(LedgerErrc::InvalidParams, "tps_cap and block_interval_secs must be >= 1");

  Writer w;
  w.str("genesis").str(params_.asset_id);
  genesis_txid_ = sha256(w.data());

  std::uint32_t index = 0;
  for (const auto& [key, amount] : params_.genesis_allocations) {
    OutPoint op{genesis_txid_, index++};
    utxos_.emplace(op, UtxoEntry{Output{amount, SingleKey{key}}, 0});
    by_key_[key].insert(op);
    genesis_total_ += amount;
  }
}

Msat Ledger::validate(const Transaction& tx, const Txid& id, std::uint64_t height,
                      const UtxoOverlay* overlay) const {
  if (tx.inputs.empty()) throw LedgerError(LedgerErrc::UnknownInput, "transaction has no inputs");
  if (tx.locktime_height > height)
    throw LedgerError(LedgerErrc::PrematureLocktime, "locktime not reached");

  Msat total_in = 0;
  std::unordered_set<OutPoint, OutPointHasher> seen;
  for (const auto& in : tx.inputs) {
    if (!seen.insert(in.prevout).second)
      throw LedgerError(LedgerErrc::DoubleSpend, "input repeated within transaction");
    const UtxoEntry* entry = find_utxo(in.prevout);
    if (!entry && overlay) {
      auto it = overlay->find(in.prevout);
      if (it != overlay->end()) entry = &it->second;
    }
    if (!entry) {
      if (spent_.contains(in.prevout))
        throw LedgerError(LedgerErrc::DoubleSpend, "input already spent");
      throw LedgerError(LedgerErrc::UnknownInput, "input does not reference a confirmed output");
    }
    SpendContext ctx{height, entry->height, id};
    if (!evaluate_spend(*signer_, entry->output, in.witness, ctx))
      throw LedgerError(LedgerErrc::BadWitness, "witness does not satisfy spend condition");
    total_in += entry->output.amount_msat;
  }

  Msat total_out = tx.output_total();
  if (total_out > total_in) throw LedgerError(LedgerErrc::ValueCreated, "outputs exceed inputs");
  Msat fee = total_in - total_out;
  if (fee != std::min(params_.fee_msat, total_in))
    throw LedgerError(LedgerErrc::FeeMismatch, "fee must equal the chain's fixed fee");
  return fee;
}

Txid Ledger::submit(Transaction tx) {
  Txid id = tx.id();
  if (mempool_ids_.contains(id) || confirmed_index_.contains(id))
    throw LedgerError(LedgerErrc::DoubleSpend, "transaction already submitted");
  validate(tx, id, height_ + 1);
  for (const auto& in : tx.inputs) ++mempool_claims_[in.prevout];
  mempool_ids_.insert(id);
  mempool_.push_back(Queued{id, std::move(tx)});
  return id;
}

std::vector<Txid> Ledger::submit_package(std::vector<Transaction> txs) {
  UtxoOverlay overlay;
  std::unordered_set<OutPoint, OutPointHasher> claimed;
  std::vector<Txid> ids;
  for (const auto& tx : txs) {
    Txid id = tx.id();
    if (mempool_ids_.contains(id) || confirmed_index_.contains(id) ||
        std::find(ids.begin(), ids.end(), id) != ids.end())
      throw LedgerError(LedgerErrc::DoubleSpend, "transaction already submitted");
    validate(tx, id, height_ + 1, &overlay);
    for (const auto& in : tx.inputs)
      if (!claimed.insert(in.prevout).second)
        throw LedgerError(LedgerErrc::DoubleSpend, "package spends an output twice");
    for (std::uint32_t i = 0; i < tx.outputs.size(); ++i)
      overlay.emplace(OutPoint{id, i}, UtxoEntry{tx.outputs[i], height_ + 1});
    ids.push_back(id);
  }
  for (std::size_t i = 0; i < txs.size(); ++i) {
    for (const auto& in : txs[i].inputs) ++mempool_claims_[in.prevout];
    mempool_ids_.insert(ids[i]);
    mempool_.push_back(Queued{ids[i], std::move(txs[i])});
  }
  return ids;
}

void Ledger::apply(const Transaction& tx, const Txid& id, std::uint64_t height, Msat fee) {
  for (const auto& in : tx.inputs) {
    auto it = utxos_.find(in.prevout);
    if (const auto* sk = std::get_if<SingleKey>(&it->second.output.condition)) {
      auto& set = by_key_[sk->key];
      set.erase(in.prevout);
      if (set.empty()) by_key_.erase(sk->key);
    }
    utxos_.erase(it);
    spent_.insert(in.prevout);
  }
  for (std::uint32_t i = 0; i < tx.outputs.size(); ++i) {
    OutPoint op{id, i};
    utxos_.emplace(op, UtxoEntry{tx.outputs[i], height});
    if (const auto* sk = std::get_if<SingleKey>(&tx.outputs[i].condition)) by_key_[sk->key].insert(op);
  }
  fees_ += fee;
  confirmed_index_.emplace(id, confirmed_.size());
  confirmed_.push_back(ConfirmedTx{id, tx, height, fee});
}

std::vector<Txid> Ledger::mine_block() {
  const std::uint64_t next = height_ + 1;
  const std::uint64_t cap = params_.block_capacity();
  std::vector<Txid> included;
  std::size_t dropped = 0;

  while (included.size() < cap && !mempool_.empty()) {
    Queued q = std::move(mempool_.front());
    mempool_.pop_front();
    mempool_ids_.erase(q.id);
    for (const auto& in : q.tx.inputs) {
      auto it = mempool_claims_.find(in.prevout);
      if (--it->second == 0) mempool_claims_.erase(it);
    }
    try {
      Msat fee = validate(q.tx, q.id, next);
      apply(q.tx, q.id, next, fee);
      included.push_back(q.id);
    } catch (const LedgerError& e) {
      dropped_.push_back(DroppedTx{q.id, e.code(), next});
      ++dropped;
    }
  }

  height_ = next;
  blocks_.push_back(BlockRecord{next, included.size(), dropped, mempool_.size()});
  return included;
}

Msat Ledger::balance_of(const PublicKey& key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return 0;
  Msat total = 0;
  for (const auto& op : it->second) total += utxos_.at(op).output.amount_msat;
  return total;
}

std::vector<std::pair<OutPoint, Msat>> Ledger::spendable_outputs(const PublicKey& key) const {
  std::vector<std::pair<OutPoint, Msat>> out;
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return out;
  for (const auto& op : it->second)
    if (!mempool_claims_.contains(op)) out.emplace_back(op, utxos_.at(op).output.amount_msat);
  return out;
}

const UtxoEntry* Ledger::find_utxo(const OutPoint& op) const {
  auto it = utxos_.find(op);
  return it == utxos_.end() ? nullptr : &it->second;
}

std::optional<std::uint64_t> Ledger::confirmation_height(const Txid& id) const {
  if (id == genesis_txid_) return 0;
  auto it = confirmed_index_.find(id);
  if (it == confirmed_index_.end()) return std::nullopt;
  return confirmed_[it->second].height;
}

const ConfirmedTx* Ledger::find_confirmed(const Txid& id) const {
  auto it = confirmed_index_.find(id);
  return it == confirmed_index_.end() ? nullptr : &confirmed_[it->second];
}

Msat Ledger::utxo_total() const {
  Msat total = 0;
  for (const auto& [op, entry] : utxos_) total += entry.output.amount_msat;
  return total;
}

Ledger& ChainRegistry::register_chain(ChainParams params) {
  if (chains_.contains(params.asset_id))
    throw LedgerError(LedgerErrc::DuplicateAsset, "asset already registered: " + params.asset_id);
  AssetId asset = params.asset_id;
  return chains_.emplace(asset, Ledger(std::move(params), signer_)).first->second;
}

Ledger& ChainRegistry::at(const AssetId& asset) {
  auto it = chains_.find(asset);
  if (it == chains_.end()) throw LedgerError(LedgerErrc::UnknownAsset, "unknown asset: " + asset);
  return it->second;
}

const Ledger& ChainRegistry::at(const AssetId& asset) const {
  auto it = chains_.find(asset);
  if (it == chains_.end()) throw LedgerError(LedgerErrc::UnknownAsset, "unknown asset: " + asset);
  return it->second;
}

}  // namespace lnsim
