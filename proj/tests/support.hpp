#pragma once

#include <string>

#include "lnsim/basechain.hpp"
#include "lnsim/channel.hpp"
#include "lnsim/htlc.hpp"
#include "lnsim/rng.hpp"
#include "lnsim/routing.hpp"

namespace lnsim::test {

/// A network with named nodes and one BTC-style chain whose genesis funds
/// every channel added through `channel()` before `start()`.
struct Fixture {
  struct Planned {
    ChannelId id;
    AssetId asset;
    NodeId a, b;
    Msat fund_a, fund_b;
  };

  Network net;
  Rng rng;
  std::vector<Planned> planned;
  std::map<AssetId, ChainParams> chains;

  explicit Fixture(std::uint64_t seed = 1, NetworkConfig cfg = {}) : net(cfg), rng(seed) {}

  Fixture& chain(const AssetId& asset, std::uint64_t interval = 600, std::uint64_t tps = 7,
                 Msat fee = kDefaultChainFee) {
    ChainParams p;
    p.asset_id = asset;
    p.block_interval_secs = interval;
    p.tps_cap = tps;
    p.fee_msat = fee;
    chains[asset] = p;
    return *this;
  }

  Fixture& node(const NodeId& id) {
    net.add_node(id);
    return *this;
  }

  Fixture& channel(const ChannelId& id, const NodeId& a, const NodeId& b, Msat fa, Msat fb,
                   const AssetId& asset = "BTC") {
    planned.push_back(Planned{id, asset, a, b, fa, fb});
    return *this;
  }

  /// Funds, opens and confirms every planned channel.
  Fixture& start() {
    for (const auto& p : planned) {
      auto& g = chains.at(p.asset).genesis_allocations;
      g[net.wallet_key(p.a, p.id).pub] += p.fund_a + chains.at(p.asset).fee_msat;
      if (p.fund_b) g[net.wallet_key(p.b, p.id).pub] += p.fund_b;
    }
    for (auto& [asset, params] : chains) net.chains().register_chain(params);
    for (const auto& p : planned)
      net.open_channel(p.id, p.asset, p.a, p.b, p.fund_a, p.fund_b, rng);
    for (auto& [asset, ledger] : net.chains().all())
      while (ledger.mempool_size()) ledger.mine_block();
    for (auto& [id, ch] : net.channels()) {
      ch.confirm_funding(net.chains().at(ch.asset()));
      net.sync_graph(id);
    }
    return *this;
  }

  Channel& ch(const ChannelId& id) { return net.channel(id); }
  Ledger& ledger(const AssetId& asset = "BTC") { return net.chains().at(asset); }
};

/// alice and bob with one channel `ch` on BTC.
inline Fixture alice_bob(Msat fa = btc(10), Msat fb = btc(10), std::uint64_t seed = 1,
                         std::uint64_t delay = kDefaultToSelfDelay) {
  NetworkConfig cfg;
  cfg.channel.to_self_delay_blocks = delay;
  Fixture f(seed, cfg);
  f.chain("BTC").node("alice").node("bob").channel("ch", "alice", "bob", fa, fb);
  f.start();
  return f;
}

#ifdef LNSIM_SCENARIO_DIR
inline std::string scenario_file(const std::string& name) {
  return std::string(LNSIM_SCENARIO_DIR) + "/" + name;
}
#endif

inline void mine(Ledger& ledger, std::uint64_t blocks = 1) {
  for (std::uint64_t i = 0; i < blocks; ++i) ledger.mine_block();
}

}  // namespace lnsim::test
