// Acceptance runs. One line per criterion; exit status is non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "lnsim/simnet.hpp"
#include "support.hpp"
#include "swap_search.hpp"

using namespace lnsim;
using namespace lnsim::test;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
  std::string digest;  ///< compared across reruns

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = "FAILED: " + what;
    }
  }
};

/// Conservation checks gathered from every world the runs build.
struct Conservation {
  std::uint64_t checked = 0;
  std::vector<std::string> broken;

  void world(const World& w, const std::string& label) {
    ++checked;
    if (!conservation_holds(w)) broken.push_back(label);
  }
  void channel(const Channel& ch, const Ledger& ledger, const std::string& label) {
    ++checked;
    if (!ledger.conserves_supply() || (ch.is_open() && !ch.conserves())) broken.push_back(label);
  }
};

std::string csv(const Metrics& m) { return metrics_csv_row(m) + "\n"; }

std::unique_ptr<World> load(const std::string& name) {
  return build_network(load_scenario(scenario_file(name)));
}

Msat fee_of(Msat amount, Msat base, std::uint64_t ppm) {
  return base + static_cast<Msat>(static_cast<unsigned __int128>(amount) * ppm / 1'000'000);
}

// 1 ------------------------------------------------------------------------------------

Verdict algorithm_trace(Conservation& cons) {
  Verdict v;
  auto f = alice_bob(btc(10), btc(10));
  Channel& ch = f.ch("ch");
  const std::size_t start = ch.trace().size();
  ch.begin_update(Side::A, btc(2));
  std::vector<std::string> steps;
  for (int done = 1; ch.update_in_flight(); ++done) {
    ch.advance();
    const bool revealed = !ch.received_revocations(Side::A).empty() ||
                          !ch.received_revocations(Side::B).empty();
    v.require(revealed == (done >= 7), "revocation secrets not disclosed exactly from step 7");
  }
  for (std::size_t i = start; i < ch.trace().size(); ++i) steps.push_back(ch.trace()[i].event);
  const std::vector<std::string> expected{"step1", "step2", "step3", "step4",
                                          "step5", "step6", "step7", "step8"};
  v.require(steps == expected, "trace steps out of order");
  v.require(ch.trace()[start + 6].detail.find("revocation") != std::string::npos &&
                ch.trace()[start + 7].detail.find("revocation") != std::string::npos,
            "steps 7 and 8 are not the revocations");
  v.require(ch.received_revocations(Side::A).contains(0) &&
                ch.received_revocations(Side::B).contains(0),
            "v0 not revoked on both sides");
  v.require(ch.balance(Side::A) == btc(8) && ch.balance(Side::B) == btc(12), "balances not 8/12");
  cons.channel(ch, f.ledger(), "algorithm trace");

  std::ostringstream trace;
  write_trace(ch, trace);
  v.digest = trace.str();
  v.detail = v.pass ? "steps 1-8 in order, revocations last, alice 8 BTC / bob 12 BTC" : v.detail;
  return v;
}

// 2 ------------------------------------------------------------------------------------

Verdict netting(Conservation& cons) {
  Verdict v;
  auto w = load("alice_bob.scn");
  const Metrics m = run_scenario(*w);
  const Channel& ch = w->net.channel("ch_ab");
  const Ledger& ledger = w->net.chains().at("BTC");
  std::uint64_t channel_txs = 0;
  for (const auto& tx : ledger.confirmed())
    if (tx.id == ch.funding_txid() || (ch.closing_txid() && tx.id == *ch.closing_txid()))
      ++channel_txs;
  v.require(m.offchain_update_count == 1000, "expected 1000 off-chain updates");
  v.require(channel_txs == 2 && m.onchain_tx_count == 2, "expected exactly 2 on-chain txs");
  v.require(m.netting_ratio == 1000.0, "netting ratio is not 1000");
  v.require(ch.status() == ChannelStatus::CooperativeClosed, "channel did not close cooperatively");
  cons.world(*w, "netting");
  v.digest = csv(m);
  if (v.pass)
    v.detail = "1000 updates, " + std::to_string(m.onchain_tx_count) +
               " on-chain txs, netting_ratio " + std::to_string(m.netting_ratio);
  return v;
}

// 3 ------------------------------------------------------------------------------------

/// Per-block confirmations of a FIFO queue of `n` txs arriving at once.
std::vector<std::uint64_t> queue_oracle(std::uint64_t n, std::uint64_t per_block) {
  std::vector<std::uint64_t> out;
  while (n) {
    out.push_back(std::min(n, per_block));
    n -= out.back();
  }
  return out;
}

Verdict throughput(Conservation& cons) {
  Verdict v;
  std::ostringstream digest;
  for (std::uint64_t tps : {7, 1}) {
    ScenarioConfig cfg = load_scenario(scenario_file("alice_bob_onchain.scn"));
    cfg.chains[0].tps_cap = tps;
    cfg.duration_ticks = 1800;
    auto w = build_network(cfg);
    const Metrics m = run_scenario(*w);
    const Ledger& ledger = w->net.chains().at("BTC");
    const std::uint64_t per_block = tps * 600;
    const auto expect = queue_oracle(1000, per_block);
    std::vector<std::uint64_t> got;
    for (const auto& b : ledger.blocks())
      if (b.confirmed) got.push_back(b.confirmed);
    const std::string tag = "tps " + std::to_string(tps) + ": ";
    v.require(got == expect, tag + "block confirmations differ from the queue arithmetic");
    std::uint64_t pending = 1000;
    for (std::size_t i = 0; i < ledger.blocks().size() && i < expect.size(); ++i) {
      pending -= expect[i];
      v.require(ledger.blocks()[i].mempool_after == pending, tag + "queue length mismatch");
    }
    // Payment j waits for block floor(j / per_block) + 1, 600 ticks each.
    std::uint64_t latency = 0;
    for (std::uint64_t j = 0; j < 1000; ++j) latency += 600 * (j / per_block + 1);
    v.require(m.payments_succeeded == 1000, tag + "not every on-chain payment confirmed");
    v.require(m.mean_latency_ticks == static_cast<double>(latency) / 1000.0,
              tag + "latency differs from the queue arithmetic");
    v.require(m.mean_latency_ticks >= 600, tag + "less than one block of delay");
    cons.world(*w, "throughput onchain");
    digest << csv(m);
    if (tps == 1)
      v.detail = "on-chain: 7 TPS confirms 1000 in 1 block (latency 600); 1 TPS confirms " +
                 std::to_string(expect[0]) + " then " + std::to_string(expect[1]) +
                 " (mean latency " + std::to_string(m.mean_latency_ticks) + ")";
  }

  auto ln = load("alice_bob.scn");
  const Metrics m = run_scenario(*ln);
  bool same_tick = true;
  for (const auto& rec : ln->payments)
    same_tick &= rec.status == PaymentStatus::Succeeded && rec.done_tick == rec.spec.tick;
  v.require(m.payments_succeeded == 1000 && same_tick,
            "lightning payments did not all finish in their issue tick");
  cons.world(*ln, "throughput lightning");
  digest << csv(m);
  v.digest = digest.str();
  if (v.pass) v.detail += "; lightning: 1000/1000 within the issue tick";
  return v;
}

// 4 ------------------------------------------------------------------------------------

struct CheatRun {
  Metrics metrics;
  Msat victim_onchain = 0;
  Msat cheater_onchain = 0;
  Msat fee = 0;
  std::uint64_t version = 0;
  std::array<Msat, 2> revoked_balance{};  ///< oracle: balances at the broadcast version
  bool oracle_exact = false;              ///< version without a pending HTLC
  bool conserved = false;
};

CheatRun cheat_run(std::uint64_t trial, bool victim_online) {
  Rng rng(1000 + trial);
  ScenarioConfig cfg;
  cfg.seed = trial + 1;
  ChainParams chain;
  chain.asset_id = "BTC";
  cfg.chains.push_back(chain);
  cfg.node_names = {"alice", "bob"};
  cfg.channels.push_back(ChannelSpec{"ch", "alice", "bob", "BTC", btc(10), btc(10)});
  cfg.to_self_delay_blocks = rng.between(2, 6);
  cfg.duration_ticks = (cfg.to_self_delay_blocks + 4) * 600;
  // One payment per tick, so each one's add and settle are consecutive versions.
  const std::uint64_t n = rng.between(1, 25);
  for (std::uint64_t i = 0; i < n; ++i) {
    const bool a_pays = rng.below(2) == 0;
    cfg.payments.push_back(PaymentSpec{1 + i, a_pays ? "alice" : "bob", a_pays ? "bob" : "alice",
                                       rng.between(1, btc(3)), "BTC"});
  }
  auto w = build_network(cfg);
  while (w->tick <= n) step(*w);
  const std::uint64_t cheat_tick = n + 1;

  Channel& ch = w->net.channel("ch");
  // Running balances: each payment is an HTLC add (odd version) then a settle.
  std::vector<std::array<Msat, 3>> by_version{{btc(10), btc(10), 0}};
  for (const auto& rec : w->payments) {
    if (rec.status != PaymentStatus::Succeeded) continue;
    const std::size_t payer = rec.spec.source == "alice" ? 0 : 1;
    auto s = by_version.back();
    s[payer] -= rec.spec.amount_msat;
    s[2] = rec.spec.amount_msat;
    by_version.push_back(s);
    s[1 - payer] += rec.spec.amount_msat;
    s[2] = 0;
    by_version.push_back(s);
  }

  CheatRun out;
  out.version = ch.version();
  const Side cheater = rng.below(2) ? Side::A : Side::B;
  const std::uint64_t revoked = rng.below(out.version);
  const auto& bal = by_version.at(revoked);
  out.revoked_balance = {bal[0], bal[1]};
  out.oracle_exact = bal[2] == 0 && by_version.size() == out.version + 1;
  const NodeId cheater_id = ch.party(cheater).id;
  const NodeId victim_id = ch.party(other(cheater)).id;

  if (!victim_online) {
    EventSpec off;
    off.tick = cheat_tick;
    off.kind = EventKind::NodeOffline;
    off.nodes = {victim_id};
    w->events.push_back(off);
  }
  EventSpec cheat;
  cheat.tick = cheat_tick;
  cheat.kind = EventKind::ForceBroadcastRevoked;
  cheat.nodes = {cheater_id};
  cheat.channel = "ch";
  cheat.version = revoked;
  w->events.push_back(cheat);

  out.metrics = run_scenario(*w);
  const Ledger& ledger = w->net.chains().at("BTC");
  out.fee = ledger.params().fee_msat;
  out.victim_onchain = ledger.balance_of(ch.party(other(cheater)).node_key.pub);
  out.cheater_onchain = ledger.balance_of(ch.party(cheater).node_key.pub);
  out.conserved = conservation_holds(*w);
  out.revoked_balance = {bal[cheater == Side::A ? 0 : 1], bal[cheater == Side::A ? 1 : 0]};
  return out;
}

Verdict cheat_punishment(Conservation& cons) {
  Verdict v;
  std::ostringstream digest;
  std::uint64_t punished = 0, succeeded = 0, exact = 0;
  constexpr std::uint64_t kTrials = 200;
  for (std::uint64_t t = 0; t < kTrials; ++t) {
    const CheatRun on = cheat_run(t, true);
    const std::string tag = "trial " + std::to_string(t) + " ";
    const bool ok_on = on.metrics.cheat_attempts == 1 && on.metrics.cheats_punished == 1 &&
                       on.metrics.cheats_succeeded == 0 &&
                       on.victim_onchain == btc(20) - 2 * on.fee && on.cheater_onchain == 0;
    v.require(ok_on, tag + "online victim was not made whole");
    punished += ok_on;

    const CheatRun off = cheat_run(t, false);
    bool ok_off = off.metrics.cheat_attempts == 1 && off.metrics.cheats_punished == 0 &&
                  off.metrics.cheats_succeeded == 1;
    if (off.oracle_exact) {
      // Cheater pays the commitment fee and the sweep fee from its own output.
      ok_off &= off.cheater_onchain == off.revoked_balance[0] - 2 * off.fee &&
                off.victim_onchain == off.revoked_balance[1];
      ++exact;
    }
    v.require(ok_off, tag + "offline-victim cheat was not counted as succeeded (attempts " +
                          std::to_string(off.metrics.cheat_attempts) + ", punished " +
                          std::to_string(off.metrics.cheats_punished) + ", succeeded " +
                          std::to_string(off.metrics.cheats_succeeded) + ", exact " +
                          std::to_string(off.oracle_exact) + ", cheater " +
                          std::to_string(off.cheater_onchain) + " vs " +
                          std::to_string(off.revoked_balance[0]) + ", victim " +
                          std::to_string(off.victim_onchain) + " vs " +
                          std::to_string(off.revoked_balance[1]) + ")");
    succeeded += ok_off;
    ++cons.checked;
    if (!on.conserved || !off.conserved) cons.broken.push_back("cheat " + tag);
    digest << on.version << ' ' << on.victim_onchain << ' ' << off.cheater_onchain << '\n';
  }
  v.digest = digest.str();
  if (v.pass)
    v.detail = "online victim punished " + std::to_string(punished) + "/200, offline victim cheat succeeded " +
               std::to_string(succeeded) + "/200 (" + std::to_string(exact) +
               " with exact balance oracle)";
  return v;
}

// 5 ------------------------------------------------------------------------------------

Verdict swap_atomicity(Conservation& cons) {
  Verdict v;
  std::ostringstream digest;
  std::uint64_t states = 0, settled = 0, refunded = 0;
  for (SwapSetup setup : {SwapSetup{600, 60, 2}, SwapSetup{600, 600, 1}, SwapSetup{60, 600, 1},
                          SwapSetup{600, 60, 1}}) {
    SearchResult r = search_swaps(setup);
    states += r.states;
    settled += r.final_outcomes[SwapOutcome::BothSettled];
    refunded += r.final_outcomes[SwapOutcome::BothRefunded];
    v.require(r.violations == 0 && r.final_outcomes[SwapOutcome::Mixed] == 0,
              "mixed outcome after " + [&] {
                std::string s;
                for (const auto& p : r.first_violation) s += p + " ";
                return s;
              }());
    v.require(r.final_outcomes[SwapOutcome::InProgress] == 0, "a swap never finished");
    ++cons.checked;
    if (!r.conserved) cons.broken.push_back("swap search");
    digest << r.states << ' ' << r.final_outcomes[SwapOutcome::BothSettled] << ' '
           << r.final_outcomes[SwapOutcome::BothRefunded] << '\n';
  }
  v.require(settled > 0 && refunded > 0, "search did not reach both honest outcomes");
  SwapSetup careless;
  careless.honest = false;
  const std::uint64_t control = search_swaps(careless).violations;
  v.require(control > 0, "control run without timers found no mixed outcome");
  v.digest = digest.str();
  if (v.pass)
    v.detail = std::to_string(states) + " distinct states over 4 timing configs; endings: " +
               std::to_string(settled) + " BothSettled, " + std::to_string(refunded) +
               " BothRefunded, 0 Mixed (control without timers: " + std::to_string(control) +
               " mixed)";
  return v;
}

// 6 ------------------------------------------------------------------------------------

Verdict onion_privacy(Conservation&) {
  Verdict v;
  auto w = build_network(parse_scenario(R"(
seed = 66
[chain BTC]
[nodes]
count = 300
[topology]
kind = random
edges = 700
)"));
  Network& net = w->net;
  Rng rng(606);
  const std::vector<NodeId> names = net.graph().nodes();
  std::ostringstream digest;
  std::uint64_t routes = 0, views = 0, attempts = 0;
  std::array<std::uint64_t, 7> by_length{};
  while (routes < 100 && attempts < 100'000) {
    ++attempts;
    const NodeId& src = names[rng.below(names.size())];
    const NodeId& dst = names[rng.below(names.size())];
    if (src == dst) continue;
    Route r;
    try {
      r = find_route(net.graph(), {src, dst, rng.between(1, 1'000'000), "BTC", 0});
    } catch (const RoutingError&) {
      continue;
    }
    const std::size_t k = r.hops.size();
    if (k < 2 || k > 6) continue;
    // Spread lengths rather than taking whatever is most common.
    if (by_length[k] >= 100 / 5 + 1 && routes < 90) continue;
    ++routes;
    ++by_length[k];
    const Hash256 ph = rng.hash();
    OnionPacket packet = build_onion(r, ph, *net.signer(),
                                     [&](const NodeId& n) { return net.node(n).node_key.pub; });
    const std::string& dest = r.destination;
    const auto& dest_key = net.node(dest).node_key.pub.digest.bytes;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      const PeeledOnion view = peel_onion(packet, net.node(r.hops[i].node).node_key);
      const Bytes& pt = view.plaintext;
      const bool has_id =
          std::search(pt.begin(), pt.end(), dest.begin(), dest.end()) != pt.end();
      const bool has_key =
          std::search(pt.begin(), pt.end(), dest_key.begin(), dest_key.end()) != pt.end();
      v.require(!has_id && !has_key,
                "hop " + std::to_string(i + 1) + " of " + src + "->" + dest + " sees the destination");
      ++views;
      packet = view.inner;
    }
    v.require(peel_onion(packet, net.node(dest).node_key).payload.final, "last layer not final");
    digest << r.source << '>' << dest << ' ' << k << '\n';
  }
  v.require(routes == 100, "could not sample 100 routes");
  v.digest = digest.str();
  if (v.pass) {
    std::string lengths;
    for (std::size_t k = 2; k <= 6; ++k)
      lengths += (k > 2 ? "," : "") + std::to_string(k) + ":" + std::to_string(by_length[k]);
    v.detail = "100 routes (hops " + lengths + "), " + std::to_string(views) +
               " intermediate views, destination absent from all";
  }
  return v;
}

// 7, 8 ---------------------------------------------------------------------------------

Verdict multi_hop(Conservation& cons) {
  Verdict v;
  auto w = load("trudy.scn");
  for (const auto& [id, ch] : w->net.channels()) {
    const bool at = ch.side_of("alice").has_value() && ch.side_of("trudy").has_value();
    v.require(!at, "an alice-trudy channel exists");
  }
  auto bob_total = [&] {
    return w->net.channel("ch_ab").balance(Side::B) + w->net.channel("ch_bt").balance(Side::A);
  };
  const Msat bob_before = bob_total();
  const Msat alice_before = w->net.channel("ch_ab").balance(Side::A);
  const Msat trudy_before = w->net.channel("ch_bt").balance(Side::B);
  const Metrics m = run_scenario(*w);
  const Msat fee = fee_of(btc(1), w->cfg.fee_base_msat, w->cfg.fee_ppm);
  v.require(m.payments_succeeded == 1, "payment failed");
  v.require(m.mean_hops == 2.0, "route is not two hops");
  v.require(bob_total() - bob_before == fee, "bob's gain is not his fee");
  v.require(alice_before - w->net.channel("ch_ab").balance(Side::A) == btc(1) + fee,
            "alice not debited amount plus fee");
  v.require(w->net.channel("ch_bt").balance(Side::B) - trudy_before == btc(1),
            "trudy not credited 1 BTC");
  v.require(m.onchain_tx_count == 2, "payment touched the chain");
  cons.world(*w, "multi-hop");
  v.digest = csv(m);
  if (v.pass)
    v.detail = "alice->bob->trudy 1 BTC; bob earns " + std::to_string(fee) + " msat = his fee";
  return v;
}

Verdict micropayment(Conservation& cons) {
  Verdict v;
  auto w = load("micro.scn");
  const Msat trudy_before = w->net.channel("ch_bt").balance(Side::B);
  const Metrics m = run_scenario(*w);
  v.require(m.payments_succeeded == 1, "1 msat payment failed");
  v.require(w->net.channel("ch_bt").balance(Side::B) - trudy_before == 1, "trudy not credited 1 msat");
  cons.world(*w, "micropayment");

  auto direct = alice_bob();
  PaymentAttempt pay("alice", direct.net.create_invoice("bob", "BTC", 1, direct.rng));
  pay.lock(direct.net);
  v.require(pay.settle(direct.net) && direct.ch("ch").balance(Side::B) == btc(10) + 1,
            "direct 1 msat payment failed");
  cons.channel(direct.ch("ch"), direct.ledger(), "direct micropayment");
  v.digest = csv(m);
  if (v.pass) v.detail = "1 msat delivered over 2 hops and over a direct channel";
  return v;
}

// 9 ------------------------------------------------------------------------------------

Verdict snapshot_scale(Conservation& cons) {
  Verdict v;
  auto w = load("snapshot.scn");
  const ChannelGraph& g = w->net.graph();
  const Metrics m = collect_metrics(*w);
  v.require(g.node_count() == 5788, "node count");
  v.require(g.edge_count() == 23021, "channel count");
  v.require(m.ln_capacity_msat == 61'851'000'000'000 && g.total_capacity() == m.ln_capacity_msat,
            "capacity is not 618.51 BTC");
  v.require(m.active_nodes == 2870, "active count");

  Rng rng(9);
  const std::vector<NodeId> names = g.nodes();
  std::uint64_t found = 0, no_route = 0, hops = 0;
  for (int q = 0; q < 1000; ++q) {
    const NodeId& src = names[rng.below(names.size())];
    NodeId dst;
    do dst = names[rng.below(names.size())]; while (dst == src);
    const Msat amount = rng.between(1, 10'000'000'000);
    try {
      const Route r = find_route(g, {src, dst, amount, "BTC", 0});
      ++found;
      hops += r.hops.size();
      bool valid = r.source == src && r.delivered() == amount && r.hops.back().node == dst;
      for (const auto& h : r.hops) valid &= g.edge(h.channel).capacity_msat >= h.amount_msat;
      v.require(valid, "invalid route " + src + "->" + dst);
    } catch (const RoutingError& e) {
      v.require(e.code() == RoutingErrc::NoRoute, "unexpected routing error");
      ++no_route;
    }
  }
  cons.world(*w, "snapshot");
  v.digest = csv(m) + std::to_string(found) + " " + std::to_string(hops) + "\n";
  if (v.pass) {
    char mean[32];
    std::snprintf(mean, sizeof mean, "%.2f", found ? double(hops) / double(found) : 0.0);
    v.detail = "5788 nodes, 23021 channels, 2870 active, 618.51 BTC; 1000 queries: " +
               std::to_string(found) + " routed (mean " + mean + " hops), " +
               std::to_string(no_route) + " NoRoute";
  }
  return v;
}

// 10 -----------------------------------------------------------------------------------

Verdict ddos(Conservation& cons) {
  Verdict v;
  std::ostringstream digest;
  {
    auto w = load("ddos.scn");
    const Msat before = collect_metrics(*w).ln_capacity_msat;
    const FailureReport r = apply_node_failures(*w, 0.2);
    const std::set<NodeId> down(r.offline.begin(), r.offline.end());
    Msat touching = 0;
    std::uint64_t closed = 0, frozen = 0;
    for (const auto& [id, ch] : w->net.channels()) {
      const bool a = down.contains(ch.party(Side::A).id);
      const bool b = down.contains(ch.party(Side::B).id);
      if (!a && !b) {
        v.require(ch.is_open() && w->net.graph().has_edge(id), "untouched channel affected");
        continue;
      }
      touching += ch.capacity();
      v.require(!w->net.graph().has_edge(id), "channel " + id + " still routable");
      if (a && b) {
        ++frozen;
      } else {
        v.require(ch.status() == ChannelStatus::UnilateralClosing, "channel " + id + " not closed");
        ++closed;
      }
    }
    const Msat after = collect_metrics(*w).ln_capacity_msat;
    v.require(down.size() == static_cast<std::size_t>(std::ceil(0.2 * 5788)), "offline count");
    v.require(before - after == touching, "capacity drop differs from the closed-set sum");
    v.require(r.capacity_removed == touching, "reported capacity differs from the closed-set sum");
    cons.world(*w, "ddos failure");
    digest << before << ' ' << after << ' ' << closed << ' ' << frozen << '\n';
    v.detail = std::to_string(down.size()) + " offline, " + std::to_string(closed) +
               " channels closed + " + std::to_string(frozen) + " with both ends down; capacity " +
               format_btc(before) + " -> " + format_btc(after) + " BTC (drop = closed-set sum)";
  }

  std::vector<std::uint64_t> success;
  for (double f : {0.0, 0.1, 0.2, 0.4}) {
    ScenarioConfig cfg = load_scenario(scenario_file("ddos.scn"));
    for (auto& ev : cfg.events)
      if (ev.kind == EventKind::OfflineFraction) ev.fraction = f;
    auto w = build_network(cfg);
    const Metrics m = run_scenario(*w);
    success.push_back(m.payments_succeeded);
    cons.world(*w, "ddos run");
    digest << csv(m);
  }
  for (std::size_t i = 1; i < success.size(); ++i)
    v.require(success[i] <= success[i - 1], "success rate increased with more nodes offline");
  v.digest = digest.str();
  if (v.pass) {
    v.detail += "; successes of 300 at 0/0.1/0.2/0.4 offline: ";
    for (std::size_t i = 0; i < success.size(); ++i)
      v.detail += (i ? "/" : "") + std::to_string(success[i]);
  }
  return v;
}

struct Criterion {
  int number;
  const char* title;
  double limit_secs;
  std::function<Verdict(Conservation&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "algorithm-1 trace", 1, algorithm_trace},
      {2, "netting", 5, netting},
      {3, "throughput contrast", 10, throughput},
      {4, "cheat punishment", 30, cheat_punishment},
      {5, "swap atomicity", 60, swap_atomicity},
      {6, "onion privacy", 10, onion_privacy},
      {7, "multi-hop payment", 1, multi_hop},
      {8, "micropayment floor", 1, micropayment},
      {9, "snapshot scale", 120, snapshot_scale},
      {10, "ddos degradation", 180, ddos},
  };

  bool all = true;
  auto report = [&](int n, const char* title, bool pass, double secs, const std::string& detail) {
    all &= pass;
    std::printf("criterion %2d %-22s %s (%.2f s) %s\n", n, title, pass ? "PASS" : "FAIL", secs,
                detail.c_str());
    std::fflush(stdout);
  };

  Conservation cons;
  std::vector<std::string> digests;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(cons);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("threw: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= c.limit_secs) {
      v.pass = false;
      v.detail += " [over the " + std::to_string(static_cast<int>(c.limit_secs)) + " s limit]";
    }
    report(c.number, c.title, v.pass, secs, v.detail);
    digests.push_back(v.digest);
  }

  report(11, "conservation", cons.broken.empty(), 0,
         cons.broken.empty()
             ? std::to_string(cons.checked) + " worlds and channels conserve supply and capacity"
             : "broken in " + cons.broken.front());

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<int> differing;
  Conservation scratch;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string again;
    try {
      again = criteria[i].run(scratch).digest;
    } catch (const std::exception&) {
      again = "threw";
    }
    if (again != digests[i] || digests[i].empty()) differing.push_back(criteria[i].number);
  }
  std::string detail = "criteria 1-10 rerun: ";
  if (differing.empty()) {
    detail += "byte-identical output";
  } else {
    detail += "output differs for";
    for (int n : differing) detail += " " + std::to_string(n);
  }
  report(12, "determinism", differing.empty(),
         std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), detail);

  return all ? 0 : 1;
}
