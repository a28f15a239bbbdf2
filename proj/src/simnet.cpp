#include "lnsim/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace lnsim {

World::World(ScenarioConfig c)
    : cfg(std::move(c)),
      net(NetworkConfig{cfg.hop_penalty_msat, cfg.delta_blocks, cfg.payment_retries,
                        FeePolicy{cfg.fee_base_msat, cfg.fee_ppm},
                        ChannelConfig{cfg.to_self_delay_blocks}}),
      rng(cfg.seed) {}

// ---- metrics formatting ---------------------------------------------------------------

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::pair<std::string, std::string>> metric_fields(const Metrics& m) {
  auto u = [](std::uint64_t v) { return std::to_string(v); };
  return {
      {"payments_attempted", u(m.payments_attempted)},
      {"payments_succeeded", u(m.payments_succeeded)},
      {"payments_failed", u(m.payments_failed)},
      {"payments_inflight", u(m.payments_inflight)},
      {"mean_hops", fixed6(m.mean_hops)},
      {"mean_latency_ticks", fixed6(m.mean_latency_ticks)},
      {"total_fees_msat", u(m.total_fees_msat)},
      {"onchain_tx_count", u(m.onchain_tx_count)},
      {"offchain_update_count", u(m.offchain_update_count)},
      {"netting_ratio", fixed6(m.netting_ratio)},
      {"ln_capacity_msat", u(m.ln_capacity_msat)},
      {"ln_capacity_btc", format_btc(m.ln_capacity_msat)},
      {"reachable_nodes", u(m.reachable_nodes)},
      {"active_nodes", u(m.active_nodes)},
      {"cheat_attempts", u(m.cheat_attempts)},
      {"cheats_punished", u(m.cheats_punished)},
      {"cheats_succeeded", u(m.cheats_succeeded)},
      {"swaps_attempted", u(m.swaps_attempted)},
      {"swaps_settled", u(m.swaps_settled)},
  };
}

}  // namespace

const std::string& metrics_csv_header() {
  static const std::string header = [] {
    std::string out;
    for (const auto& [k, v] : metric_fields(Metrics{})) out += (out.empty() ? "" : ",") + k;
    return out;
  }();
  return header;
}

std::string metrics_csv_row(const Metrics& m) {
  std::string out;
  bool first = true;
  for (const auto& [k, v] : metric_fields(m)) {
    if (!first) out += ',';
    out += v;
    first = false;
  }
  return out;
}

std::string metrics_lines(const Metrics& m) {
  std::string out;
  for (const auto& [k, v] : metric_fields(m)) out += k + "=" + v + "\n";
  return out;
}

// ---- building -------------------------------------------------------------------------

namespace {

const ChainParams* find_chain(const ScenarioConfig& cfg, const AssetId& asset) {
  for (const auto& c : cfg.chains)
    if (c.asset_id == asset) return &c;
  return nullptr;
}

void validate_basics(const ScenarioConfig& cfg, const std::vector<NodeId>& nodes) {
  if (cfg.chains.empty()) throw ConfigError("chain", "at least one [chain] section is required");
  for (const auto& c : cfg.chains) {
    if (c.tps_cap < 1) throw ConfigError("chain " + c.asset_id + ".tps_cap", "must be positive");
    if (c.block_interval_secs < 1)
      throw ConfigError("chain " + c.asset_id + ".block_interval_secs", "must be positive");
  }
  if (nodes.size() < 2) throw ConfigError("nodes", "need at least two nodes (no peer)");
  std::set<NodeId> seen;
  for (const auto& n : nodes)
    if (!seen.insert(n).second) throw ConfigError("nodes.names", "duplicate node " + n);
  if (cfg.active_count && *cfg.active_count > nodes.size())
    throw ConfigError("nodes.active", "more active nodes than nodes");
  if (cfg.hop_penalty_msat < 1) throw ConfigError("hop_penalty_msat", "must be at least 1");
  if (cfg.delta_blocks < 1) throw ConfigError("delta_blocks", "must be positive");
  if (cfg.liveness_timeout_ticks < 1)
    throw ConfigError("liveness_timeout_ticks", "must be positive");
  if (cfg.topology != TopologyKind::Explicit) {
    if (cfg.resolved_edge_count() < 1) throw ConfigError("topology.edges", "must be positive");
    if (cfg.capacity_min < 2) throw ConfigError("topology.capacity_min", "must be at least 2 msat");
    if (cfg.capacity_max < cfg.capacity_min)
      throw ConfigError("topology.capacity_max", "below capacity_min");
    const auto n = static_cast<unsigned __int128>(nodes.size());
    if (cfg.resolved_edge_count() > n * (n - 1) / 2)
      throw ConfigError("topology.edges", "more edges than node pairs");
  }
  for (const auto& g : cfg.genesis) {
    if (!seen.contains(g.node)) throw ConfigError("chain " + g.asset + ".genesis", "unknown node " + g.node);
  }
}

/// Growth by preferential attachment: node i links to k_i distinct earlier
/// nodes, each drawn with probability proportional to degree + 1.
std::vector<std::pair<std::size_t, std::size_t>> attach(std::size_t n, std::uint64_t edges,
                                                        Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(edges);
  std::vector<std::size_t> pool{0};
  std::uint64_t carry = 0;
  auto quota = [&](std::size_t i) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(edges) * i / (n - 1));
  };
  for (std::size_t i = 1; i < n; ++i) {
    const std::uint64_t want = quota(i) - quota(i - 1) + carry;
    const std::uint64_t m = std::min<std::uint64_t>(want, i);
    carry = want - m;
    std::vector<std::size_t> chosen;
    if (m == i) {
      for (std::size_t j = 0; j < i; ++j) chosen.push_back(j);
    } else {
      std::set<std::size_t> picked;
      while (picked.size() < m) picked.insert(pool[rng.below(pool.size())]);
      chosen.assign(picked.begin(), picked.end());
    }
    for (std::size_t t : chosen) {
      out.emplace_back(i, t);
      pool.push_back(t);
      pool.push_back(i);
    }
    pool.push_back(i);
  }
  if (carry) throw ConfigError("topology.edges", "too many edges for the node count");
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> random_pairs(std::size_t n, std::uint64_t edges,
                                                              Rng& rng) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  while (out.size() < edges) {
    std::size_t a = rng.below(n);
    std::size_t b = rng.below(n - 1);
    if (b >= a) ++b;
    if (seen.insert({std::min(a, b), std::max(a, b)}).second) out.emplace_back(a, b);
  }
  return out;
}

/// Uniform raw capacities, scaled to sum exactly to `total` when given.
std::vector<Msat> capacities(const ScenarioConfig& cfg, std::size_t count, Rng& rng) {
  std::vector<Msat> caps(count);
  unsigned __int128 sum = 0;
  for (auto& c : caps) {
    c = rng.between(cfg.capacity_min, cfg.capacity_max);
    sum += c;
  }
  const Msat total = cfg.resolved_total_capacity();
  if (total == 0) return caps;
  Msat assigned = 0;
  for (auto& c : caps) {
    c = static_cast<Msat>(static_cast<unsigned __int128>(c) * total / sum);
    assigned += c;
  }
  const Msat remainder = total - assigned;  // < count
  for (Msat i = 0; i < remainder; ++i) ++caps[i];
  for (Msat c : caps)
    if (c < 2) throw ConfigError("topology.total_capacity", "too small for the channel count");
  return caps;
}

std::vector<ChannelSpec> channel_specs(const ScenarioConfig& cfg, const std::vector<NodeId>& nodes,
                                       Rng& rng) {
  if (cfg.topology == TopologyKind::Explicit) return cfg.channels;
  const std::uint64_t edges = cfg.resolved_edge_count();
  auto pairs = cfg.topology == TopologyKind::PaperSnapshot ? attach(nodes.size(), edges, rng)
                                                           : random_pairs(nodes.size(), edges, rng);
  auto caps = capacities(cfg, pairs.size(), rng);
  std::vector<ChannelSpec> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Msat cap = caps[i];
    out.push_back(ChannelSpec{channel_name(i), nodes[pairs[i].first], nodes[pairs[i].second],
                              cfg.chains.front().asset_id, cap - cap / 2, cap / 2});
  }
  return out;
}

void validate_channels(const ScenarioConfig& cfg, const std::set<NodeId>& nodes,
                       const std::vector<ChannelSpec>& specs) {
  std::set<ChannelId> ids;
  for (const auto& s : specs) {
    const std::string field = "topology.channel " + s.id;
    if (!ids.insert(s.id).second) throw ConfigError(field, "duplicate channel id");
    if (!nodes.contains(s.a) || !nodes.contains(s.b)) throw ConfigError(field, "unknown node");
    if (s.a == s.b) throw ConfigError(field, "joins a node to itself");
    if (!find_chain(cfg, s.asset)) throw ConfigError(field, "unknown asset " + s.asset);
    if (s.fund_a + s.fund_b < 2) throw ConfigError(field, "capacity must be at least 2 msat");
  }
}

std::vector<PaymentSpec> workload(const ScenarioConfig& cfg, const std::set<NodeId>& nodes,
                                  const std::vector<NodeId>& active, Rng& rng) {
  std::vector<PaymentSpec> out = cfg.payments;
  for (const auto& r : cfg.random_payments) {
    if (active.size() < 2) throw ConfigError("workload.random", "needs two active nodes");
    for (std::uint64_t i = 0; i < r.count; ++i) {
      PaymentSpec p;
      p.tick = rng.between(r.start_tick, r.end_tick);
      const std::size_t s = rng.below(active.size());
      std::size_t d = rng.below(active.size() - 1);
      if (d >= s) ++d;
      p.source = active[s];
      p.destination = active[d];
      p.amount_msat = rng.between(r.min_msat, r.max_msat);
      out.push_back(std::move(p));
    }
  }
  for (auto& p : out) {
    if (p.asset.empty()) p.asset = cfg.chains.front().asset_id;
    if (!nodes.contains(p.source) || !nodes.contains(p.destination))
      throw ConfigError("workload.payment", "unknown node");
    if (p.source == p.destination) throw ConfigError("workload.payment", "source equals destination");
    if (p.amount_msat < 1) throw ConfigError("workload.payment", "amount must be at least 1 msat");
    if (!find_chain(cfg, p.asset)) throw ConfigError("workload.payment", "unknown asset " + p.asset);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PaymentSpec& a, const PaymentSpec& b) { return a.tick < b.tick; });
  return out;
}

void validate_events(const std::vector<EventSpec>& events, const std::set<NodeId>& nodes,
                     const std::set<ChannelId>& channels) {
  auto need_node = [&](const NodeId& n, const char* field) {
    if (!nodes.contains(n)) throw ConfigError(field, "unknown node " + n);
  };
  auto need_channel = [&](const ChannelId& c, const char* field) {
    if (!channels.contains(c)) throw ConfigError(field, "unknown channel " + c);
  };
  for (const auto& ev : events) {
    switch (ev.kind) {
      case EventKind::NodeOffline:
      case EventKind::NodeOnline:
        for (const auto& n : ev.nodes) need_node(n, "events.offline");
        break;
      case EventKind::ForceBroadcastRevoked:
        need_node(ev.nodes.at(0), "events.force_revoked");
        need_channel(ev.channel, "events.force_revoked");
        break;
      case EventKind::Close: need_channel(ev.channel, "events.close"); break;
      case EventKind::OfflineFraction: break;
      case EventKind::Swap:
        need_node(ev.swap.initiator, "events.swap");
        need_node(ev.swap.responder, "events.swap");
        need_channel(ev.swap.channel_x, "events.swap");
        need_channel(ev.swap.channel_y, "events.swap");
        break;
    }
  }
}

std::string payment_wallet(std::size_t index) { return "pay/" + std::to_string(index); }

}  // namespace

std::unique_ptr<World> build_network(const ScenarioConfig& config) {
  const std::vector<NodeId> nodes = config.resolved_nodes();
  validate_basics(config, nodes);
  const std::set<NodeId> node_set(nodes.begin(), nodes.end());

  auto w = std::make_unique<World>(config);
  const ScenarioConfig& cfg = w->cfg;
  for (const auto& n : nodes) w->net.add_node(n);

  const auto specs = channel_specs(cfg, nodes, w->rng);
  validate_channels(cfg, node_set, specs);

  std::optional<std::uint64_t> active_count = cfg.active_count;
  if (!active_count && cfg.topology == TopologyKind::PaperSnapshot && nodes.size() >= kSnapshotActive)
    active_count = kSnapshotActive;
  if (active_count) {
    std::vector<NodeId> order = nodes;
    w->rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i)
      w->net.node(order[i]).active = i < *active_count;
  }
  std::vector<NodeId> active;
  for (const auto& n : nodes)
    if (w->net.node(n).active) active.push_back(n);

  w->failure_order = nodes;
  w->rng.shuffle(w->failure_order);

  const auto payments = workload(cfg, node_set, active, w->rng);

  std::set<ChannelId> channel_ids;
  for (const auto& s : specs) channel_ids.insert(s.id);
  validate_events(cfg.events, node_set, channel_ids);

  // Genesis: each channel's deposits, explicit allocations, and on-chain payment coins.
  std::map<AssetId, ChainParams> chains;
  for (const auto& c : cfg.chains) chains.emplace(c.asset_id, c);
  auto credit = [&](const AssetId& asset, const PublicKey& key, Msat amount) {
    if (amount) chains.at(asset).genesis_allocations[key] += amount;
  };
  for (const auto& s : specs) {
    credit(s.asset, w->net.wallet_key(s.a, s.id).pub, s.fund_a + chains.at(s.asset).fee_msat);
    credit(s.asset, w->net.wallet_key(s.b, s.id).pub, s.fund_b);
  }
  for (const auto& g : cfg.genesis) {
    if (!chains.contains(g.asset)) throw ConfigError("genesis", "unknown asset " + g.asset);
    credit(g.asset, w->net.wallet_key(g.node, "onchain").pub, g.amount_msat);
  }
  if (cfg.settlement == Settlement::Onchain)
    for (std::size_t i = 0; i < payments.size(); ++i)
      credit(payments[i].asset, w->net.wallet_key(payments[i].source, payment_wallet(i)).pub,
             payments[i].amount_msat + chains.at(payments[i].asset).fee_msat);
  for (auto& [asset, params] : chains) w->net.chains().register_chain(params);

  for (const auto& s : specs)
    w->net.open_channel(s.id, s.asset, s.a, s.b, s.fund_a, s.fund_b, w->rng);
  for (auto& [asset, ledger] : w->net.chains().all())
    while (ledger.mempool_size() > 0) ledger.mine_block();
  for (auto& [id, ch] : w->net.channels()) {
    ch.confirm_funding(w->net.chains().at(ch.asset()));
    w->net.sync_graph(id);
  }

  for (const auto& p : payments) {
    PaymentRecord rec;
    rec.spec = p;
    w->payments.push_back(std::move(rec));
  }
  w->events = cfg.events;
  std::stable_sort(w->events.begin(), w->events.end(),
                   [](const EventSpec& a, const EventSpec& b) { return a.tick < b.tick; });
  return w;
}

// ---- running --------------------------------------------------------------------------

namespace {

bool routable(const Channel& ch) {
  return ch.status() == ChannelStatus::Open || ch.status() == ChannelStatus::PendingUpdate;
}

/// Republishes a channel after a state change and watches it if it closed.
void track(World& w, const ChannelId& id) {
  w.net.sync_graph(id);
  const Channel& ch = w.net.channel(id);
  if (ch.status() == ChannelStatus::UnilateralClosing ||
      ch.status() == ChannelStatus::CooperativeClosing)
    w.watch.insert(id);
}

/// Closes a node's channels on behalf of its online peers. Returns the
/// channels closed and those left frozen with both ends offline.
void close_for_offline(World& w, const NodeId& node, FailureReport* report) {
  for (const auto& cid : w.net.channels_of(node)) {
    Channel& ch = w.net.channel(cid);
    if (!routable(ch)) continue;
    const Side side = *ch.side_of(node);
    const Msat cap = ch.capacity();
    bool frozen = false;
    try {
      ch.on_party_offline(side, w.net.chains().at(ch.asset()));
      if (report) {
        report->closed.push_back(cid);
        report->capacity_removed += cap;
      }
    } catch (const ChannelError& e) {
      frozen = e.code() == ChannelErrc::BothOffline;
      if (frozen && report &&
          std::find(report->frozen.begin(), report->frozen.end(), cid) == report->frozen.end()) {
        report->frozen.push_back(cid);
        report->capacity_removed += cap;
      }
    } catch (const LedgerError& e) {
      ch.note("close_rejected", e.what());
    }
    track(w, cid);
    if (frozen) w.net.graph().remove_edge(cid);
  }
}

void resolve_closed(World& w, Channel& ch, Ledger& ledger) {
  switch (ch.status()) {
    case ChannelStatus::CooperativeClosed:
    case ChannelStatus::Punished: w.watch.erase(ch.id()); return;
    case ChannelStatus::UnilateralClosing: break;
    default: return;
  }
  if (!ch.close_confirm_height()) return;
  const bool delay_elapsed = ledger.height() + 1 >= *ch.close_confirm_height() + ch.to_self_delay();

  if (ch.closed_with_revoked_commitment() && w.cheats.contains(ch.id())) {
    const NodeId& victim = ch.party(*ch.victim()).id;
    if (!delay_elapsed && w.cfg.auto_punish && w.net.node(victim).online) {
      try {
        ch.punish(*ch.closing_commitment(), ledger);
        ++w.cheats_punished;
        w.cheats.erase(ch.id());
        w.watch.erase(ch.id());
      } catch (const ChannelError& e) {
        ch.note("punish_failed", e.what());
      } catch (const LedgerError& e) {
        ch.note("punish_failed", e.what());
      }
      return;
    }
    if (!delay_elapsed) return;
    ++w.cheats_succeeded;
    w.cheats.erase(ch.id());
    ch.note("cheat_succeeded");
  }
  if (!delay_elapsed) return;
  try {
    ch.sweep_to_self(ledger);
  } catch (const ChannelError& e) {
    if (e.code() == ChannelErrc::DelayNotElapsed) return;
    ch.note("sweep_failed", e.what());
  } catch (const LedgerError& e) {
    ch.note("sweep_failed", e.what());
  }
  w.watch.erase(ch.id());
}

void finish(World& w, PaymentRecord& rec, PaymentStatus status) {
  rec.status = status;
  rec.done_tick = w.tick;
}

void on_block(World& w, Ledger& ledger) {
  const std::vector<ChannelId> watched(w.watch.begin(), w.watch.end());
  for (const auto& id : watched) {
    Channel& ch = w.net.channel(id);
    if (ch.asset() != ledger.asset()) continue;
    ch.refresh(ledger);
    resolve_closed(w, ch, ledger);
  }

  for (std::size_t idx : w.inflight) {
    PaymentRecord& rec = w.payments[idx];
    if (rec.spec.asset != ledger.asset() || rec.status != PaymentStatus::Pending) continue;
    if (rec.onchain_tx) {
      if (ledger.confirmation_height(*rec.onchain_tx)) finish(w, rec, PaymentStatus::Succeeded);
      continue;
    }
    if (rec.attempt->expire(w.net)) finish(w, rec, rec.attempt->result().status);
    for (const auto& hop : rec.attempt->result().route.hops) track(w, hop.channel);
  }
  std::erase_if(w.inflight,
                [&](std::size_t i) { return w.payments[i].status != PaymentStatus::Pending; });
}

void run_swap(World& w, const SwapSpec& s) {
  ++w.swaps_attempted;
  if (!w.net.node(s.initiator).online || !w.net.node(s.responder).online) return;
  Channel& cx = w.net.channel(s.channel_x);
  Channel& cy = w.net.channel(s.channel_y);
  Ledger& lx = w.net.chains().at(cx.asset());
  Ledger& ly = w.net.chains().at(cy.asset());
  SwapLegs legs{cx, lx, cy, ly};
  const SwapTerms terms = earliest_swap_terms(legs, s.initiator, s.responder, s.amount_x,
                                              s.amount_y, w.cfg.delta_blocks);
  try {
    AtomicSwap swap(legs, terms, Preimage{w.rng.hash()});
    if (swap.run_to_completion(legs) == SwapOutcome::BothSettled) ++w.swaps_settled;
  } catch (const SwapError& e) {
    cx.note("swap_declined", e.what());
  } catch (const ChannelError& e) {
    cx.note("swap_declined", e.what());
  }
}

void apply_event(World& w, const EventSpec& ev) {
  switch (ev.kind) {
    case EventKind::NodeOffline:
      for (const auto& n : ev.nodes)
        if (w.net.node(n).online) {
          w.net.set_online(n, false);
          w.offline_since[n] = w.tick;
        }
      break;
    case EventKind::NodeOnline:
      for (const auto& n : ev.nodes) {
        w.net.set_online(n, true);
        w.offline_since.erase(n);
        for (const auto& cid : w.net.channels_of(n)) w.net.sync_graph(cid);
      }
      break;
    case EventKind::ForceBroadcastRevoked: {
      Channel& ch = w.net.channel(ev.channel);
      const auto side = ch.side_of(ev.nodes.at(0));
      if (!side) {
        ch.note("cheat_rejected", ev.nodes[0] + " is not a party");
        break;
      }
      try {
        ch.broadcast_revoked(*side, ev.version, w.net.chains().at(ch.asset()));
        ++w.cheat_attempts;
        w.cheats.insert(ch.id());
      } catch (const ChannelError& e) {
        ch.note("cheat_rejected", e.what());
      } catch (const LedgerError& e) {
        ch.note("cheat_rejected", e.what());
      }
      track(w, ch.id());
      break;
    }
    case EventKind::Close: {
      Channel& ch = w.net.channel(ev.channel);
      if (!routable(ch)) break;
      Ledger& ledger = w.net.chains().at(ch.asset());
      try {
        if (ch.online(Side::A) && ch.online(Side::B) && ch.pending_htlcs().empty())
          ch.cooperative_close(ledger);
        else if (ch.online(Side::A))
          ch.unilateral_close(Side::A, ledger);
        else if (ch.online(Side::B))
          ch.unilateral_close(Side::B, ledger);
      } catch (const ChannelError& e) {
        ch.note("close_rejected", e.what());
      }
      track(w, ch.id());
      break;
    }
    case EventKind::OfflineFraction: apply_node_failures(w, ev.fraction); break;
    case EventKind::Swap: run_swap(w, ev.swap); break;
  }
}

void dispatch(World& w, std::size_t idx) {
  PaymentRecord& rec = w.payments[idx];
  const PaymentSpec& p = rec.spec;
  rec.issue_tick = w.tick;

  if (w.cfg.settlement == Settlement::Onchain) {
    Ledger& ledger = w.net.chains().at(p.asset);
    const Msat fee = ledger.params().fee_msat;
    const KeyPair key = w.net.wallet_key(p.source, payment_wallet(idx));
    try {
      Transaction tx;
      Msat in = 0;
      for (const auto& [op, amount] : select_coins(ledger, key.pub, p.amount_msat + fee)) {
        tx.inputs.push_back(TxInput{op, {}});
        in += amount;
      }
      tx.outputs.push_back(Output{p.amount_msat, SingleKey{w.net.node(p.destination).node_key.pub}});
      if (in > p.amount_msat + fee)
        tx.outputs.push_back(Output{in - p.amount_msat - fee, SingleKey{key.pub}});
      const Txid id = tx.id();
      for (auto& input : tx.inputs) input.witness = SingleSig{w.net.signer()->sign(key, id)};
      rec.onchain_tx = ledger.submit(std::move(tx));
      w.inflight.push_back(idx);
    } catch (const std::runtime_error&) {
      finish(w, rec, PaymentStatus::Failed);
    }
    return;
  }

  Invoice invoice = w.net.create_invoice(p.destination, p.asset, p.amount_msat, w.rng);
  rec.attempt = std::make_unique<PaymentAttempt>(p.source, std::move(invoice));
  const PaymentResult& r = rec.attempt->lock(w.net);
  if (r.status == PaymentStatus::Failed) {
    finish(w, rec, PaymentStatus::Failed);
    return;
  }
  rec.ready_tick = w.tick + r.hops * w.cfg.hop_latency_ticks;
  w.inflight.push_back(idx);
}

void settle_ready(World& w) {
  for (std::size_t idx : w.inflight) {
    PaymentRecord& rec = w.payments[idx];
    if (!rec.attempt || rec.status != PaymentStatus::Pending || w.tick < rec.ready_tick) continue;
    if (rec.attempt->settle(w.net)) finish(w, rec, PaymentStatus::Succeeded);
  }
  std::erase_if(w.inflight,
                [&](std::size_t i) { return w.payments[i].status != PaymentStatus::Pending; });
}

}  // namespace

void step(World& w) {
  const std::uint64_t t = w.tick;
  w.net.set_tick(t);
  w.started = true;

  if (t > 0)
    for (auto& [asset, ledger] : w.net.chains().all())
      if (t % ledger.params().block_interval_secs == 0) {
        ledger.mine_block();
        on_block(w, ledger);
      }

  for (auto it = w.offline_since.begin(); it != w.offline_since.end();) {
    if (t >= it->second + w.cfg.liveness_timeout_ticks) {
      close_for_offline(w, it->first, nullptr);
      it = w.offline_since.erase(it);
    } else {
      ++it;
    }
  }

  while (w.next_event < w.events.size() && w.events[w.next_event].tick <= t)
    apply_event(w, w.events[w.next_event++]);

  while (w.next_payment < w.payments.size() && w.payments[w.next_payment].spec.tick <= t)
    dispatch(w, w.next_payment++);
  settle_ready(w);

  ++w.tick;
}

Metrics run_scenario(World& w) {
  while (w.tick <= w.cfg.duration_ticks) step(w);
  return collect_metrics(w);
}

FailureReport apply_node_failures(World& w, double fraction) {
  if (!(fraction >= 0 && fraction <= 1))
    throw ConfigError("offline_fraction", "must be between 0 and 1");
  FailureReport report;
  const std::size_t n = w.failure_order.size();
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  const std::vector<NodeId> victims(w.failure_order.begin(),
                                    w.failure_order.begin() + std::min(k, n));
  for (const auto& v : victims)
    if (w.net.node(v).online) {
      w.net.set_online(v, false);
      report.offline.push_back(v);
    }
  for (const auto& v : report.offline) close_for_offline(w, v, &report);
  return report;
}

Metrics collect_metrics(const World& w) {
  Metrics m;
  std::uint64_t hops = 0;
  std::uint64_t latency = 0;
  for (std::size_t i = 0; i < w.next_payment; ++i) {
    const PaymentRecord& rec = w.payments[i];
    ++m.payments_attempted;
    switch (rec.status) {
      case PaymentStatus::Pending: ++m.payments_inflight; break;
      case PaymentStatus::Failed: ++m.payments_failed; break;
      case PaymentStatus::Succeeded:
        ++m.payments_succeeded;
        latency += rec.done_tick - rec.issue_tick;
        if (rec.attempt) {
          hops += rec.attempt->result().hops;
          m.total_fees_msat += rec.attempt->result().fees_msat;
        } else {
          hops += 1;
          m.total_fees_msat += w.net.chains().at(rec.spec.asset).params().fee_msat;
        }
        break;
    }
  }
  if (m.payments_succeeded) {
    m.mean_hops = static_cast<double>(hops) / static_cast<double>(m.payments_succeeded);
    m.mean_latency_ticks = static_cast<double>(latency) / static_cast<double>(m.payments_succeeded);
  }

  for (const auto& [asset, ledger] : w.net.chains().all())
    m.onchain_tx_count += ledger.confirmed().size();

  std::uint64_t settlements = 0;
  for (const auto& [id, ch] : w.net.channels()) {
    m.offchain_update_count += ch.transfer_count();
    if (ch.close_confirm_height()) ++settlements;
    if (routable(ch) && ch.online(Side::A) && ch.online(Side::B))
      m.ln_capacity_msat += ch.capacity();
  }
  if (settlements)
    m.netting_ratio =
        static_cast<double>(m.offchain_update_count) / static_cast<double>(settlements);

  for (const auto& [id, node] : w.net.nodes()) {
    if (!node.online) continue;
    ++m.reachable_nodes;
    if (node.active) ++m.active_nodes;
  }
  m.cheat_attempts = w.cheat_attempts;
  m.cheats_punished = w.cheats_punished;
  m.cheats_succeeded = w.cheats_succeeded;
  m.swaps_attempted = w.swaps_attempted;
  m.swaps_settled = w.swaps_settled;
  return m;
}

bool conservation_holds(const World& w) {
  for (const auto& [asset, ledger] : w.net.chains().all())
    if (!ledger.conserves_supply()) return false;
  for (const auto& [id, ch] : w.net.channels())
    if (routable(ch) && !ch.conserves()) return false;
  return true;
}

void write_trace(const Channel& ch, std::ostream& out) {
  for (const auto& ev : ch.trace())
    out << ev.tick << ' ' << ch.id() << ' ' << ev.event << ' ' << ev.version << ' '
        << ev.balance_a << ' ' << ev.balance_b << '\n';
}

}  // namespace lnsim
