#include <doctest.h>

#include <sstream>

#include "lnsim/simnet.hpp"
#include "support.hpp"

using namespace lnsim;
using lnsim::test::scenario_file;

namespace {

const char* kAliceBob = R"(
seed = 9
duration_ticks = 5
[chain BTC]
[nodes]
names = alice bob
[topology]
kind = explicit
channel = ch_ab alice bob BTC 10BTC 10BTC
)";

/// The offending field's key, without its section prefix or item name.
std::string config_error_field(const std::string& text) {
  try {
    build_network(parse_scenario(text));
  } catch (const ConfigError& e) {
    std::string f = e.field();
    if (auto dot = f.find('.'); dot != std::string::npos) f = f.substr(dot + 1);
    return f.substr(0, f.find(' '));
  }
  FAIL("accepted: " << text);
  return "";
}

std::string run_csv(const ScenarioConfig& cfg) {
  auto w = build_network(cfg);
  return metrics_csv_row(run_scenario(*w));
}

}  // namespace

TEST_CASE("amount tokens") {
  CHECK(parse_amount_token("10BTC") == btc(10));
  CHECK(parse_amount_token("2.5BTC") == 250'000'000'000);
  CHECK(parse_amount_token("0.00000000001BTC") == 1);
  CHECK(parse_amount_token("1000sat") == 1'000'000);
  CHECK(parse_amount_token("42msat") == 42);
  CHECK(parse_amount_token("7") == 7);
  CHECK(parse_amount_token("1.5sat") == 1500);
  for (const char* bad : {"", "BTC", "0.000000000001BTC", "-3", "12xyz", "1e5"})
    CHECK_THROWS(parse_amount_token(bad));
}

TEST_CASE("scenario text maps onto the config") {
  const ScenarioConfig cfg = parse_scenario(R"(
# comment
seed = 7
duration_ticks = 1300
settlement = onchain
[chain BTC]
tps_cap = 3
block_interval_secs = 60
fee_msat = 500
[nodes]
names = alice bob
[topology]
kind = explicit
channel = ch_ab alice bob BTC 10BTC 2BTC
[workload]
repeat = 1 4 alice bob 1000
payment = 3 bob alice 5sat
[events]
close = 2 ch_ab
offline = 4 alice bob
)");
  CHECK(cfg.seed == 7);
  CHECK(cfg.duration_ticks == 1300);
  CHECK(cfg.settlement == Settlement::Onchain);
  REQUIRE(cfg.chains.size() == 1);
  CHECK(cfg.chains[0].tps_cap == 3);
  CHECK(cfg.chains[0].block_interval_secs == 60);
  CHECK(cfg.chains[0].fee_msat == 500);
  CHECK(cfg.resolved_nodes() == std::vector<NodeId>{"alice", "bob"});
  REQUIRE(cfg.channels.size() == 1);
  CHECK(cfg.channels[0].fund_b == btc(2));
  CHECK(cfg.payments.size() == 5);
  CHECK(cfg.payments[4].amount_msat == 5000);
  REQUIRE(cfg.events.size() == 2);
  CHECK(cfg.events[1].kind == EventKind::NodeOffline);
  CHECK(cfg.events[1].nodes.size() == 2);

  CHECK_THROWS_AS(parse_scenario("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("[nowhere]\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("seed = x\n"), ConfigError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/x.scn"), ScenarioNotFound);
}

TEST_CASE("invalid worlds are rejected naming the field") {
  CHECK(config_error_field("[chain BTC]\n[nodes]\nnames = alice\n") == "nodes");
  CHECK(config_error_field("[nodes]\nnames = a b\n") == "chain");
  CHECK(config_error_field(
            "[chain BTC]\n[nodes]\nnames = a b\n[topology]\nchannel = c a b BTC 1 0\n") ==
        "channel");
  CHECK(config_error_field(
            "[chain BTC]\n[nodes]\nnames = a b\n[topology]\nchannel = c a z BTC 5 5\n") ==
        "channel");
  CHECK(config_error_field(
            "[chain BTC]\n[nodes]\nnames = a b\n[topology]\nchannel = c a b SEC 5 5\n") ==
        "channel");
  CHECK(config_error_field("[chain BTC]\n[nodes]\nnames = a b\n[workload]\npayment = 0 a q 5\n") ==
        "payment");
  CHECK(config_error_field("[chain BTC]\n[nodes]\nnames = a b\n[events]\noffline_fraction = 1 1.5\n") ==
        "offline_fraction");
}

TEST_CASE("metrics straight after build") {
  auto w = build_network(parse_scenario(kAliceBob));
  const Metrics m = collect_metrics(*w);
  CHECK(m.payments_attempted == 0);
  CHECK(m.ln_capacity_msat == btc(20));
  CHECK(m.active_nodes == 2);
  CHECK(m.reachable_nodes == 2);
  CHECK(collect_metrics(*w) == m);
  CHECK(conservation_holds(*w));
}

TEST_CASE("a world with no workload reports zero payment metrics") {
  auto w = build_network(parse_scenario(kAliceBob));
  const Metrics m = run_scenario(*w);
  CHECK(m.payments_attempted == 0);
  CHECK(m.payments_succeeded == 0);
  CHECK(m.payments_failed == 0);
  CHECK(m.payments_inflight == 0);
  CHECK(m.mean_hops == 0);
  CHECK(m.mean_latency_ticks == 0);
  CHECK(m.total_fees_msat == 0);
  CHECK(m.offchain_update_count == 0);
  CHECK(collect_metrics(*w) == m);
}

TEST_CASE("csv header and row line up") {
  Metrics m;
  m.payments_attempted = 3;
  m.ln_capacity_msat = 61'851'000'000'000;
  m.netting_ratio = 1000;
  const std::string header = metrics_csv_header();
  const std::string row = metrics_csv_row(m);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
  CHECK(header.rfind("payments_attempted,", 0) == 0);
  CHECK(row.rfind("3,", 0) == 0);
  CHECK(row.find(",61851000000000,618.51,") != std::string::npos);
  CHECK(row.find(",1000.000000,") != std::string::npos);
  CHECK(metrics_lines(m).find("netting_ratio=1000.000000\n") != std::string::npos);
}

TEST_CASE("node failures take ceil(fraction * n) nodes offline") {
  ScenarioConfig cfg = parse_scenario(R"(
seed = 11
[chain BTC]
[nodes]
count = 1000
[topology]
kind = random
edges = 3000
)");
  auto w = build_network(cfg);
  const Msat before = collect_metrics(*w).ln_capacity_msat;

  SUBCASE("zero is a no-op") {
    const FailureReport r = apply_node_failures(*w, 0);
    CHECK(r.offline.empty());
    CHECK(r.capacity_removed == 0);
    CHECK(collect_metrics(*w).ln_capacity_msat == before);
  }
  SUBCASE("a fifth") {
    const FailureReport r = apply_node_failures(*w, 0.2);
    CHECK(r.offline.size() == 200);
    std::set<NodeId> down(r.offline.begin(), r.offline.end());
    CHECK(down.size() == 200);
    Msat touching = 0;
    for (const auto& [id, ch] : w->net.channels()) {
      const bool hit = down.contains(ch.party(Side::A).id) || down.contains(ch.party(Side::B).id);
      if (!hit) continue;
      touching += ch.capacity();
      CHECK_FALSE(w->net.graph().has_edge(id));
    }
    CHECK(r.capacity_removed == touching);
    CHECK(before - collect_metrics(*w).ln_capacity_msat == touching);
    CHECK(collect_metrics(*w).active_nodes == 800);
    CHECK(conservation_holds(*w));
  }
  SUBCASE("fractions are validated") {
    CHECK_THROWS_AS(apply_node_failures(*w, -0.1), ConfigError);
    CHECK_THROWS_AS(apply_node_failures(*w, 1.1), ConfigError);
  }
}

TEST_CASE("same config and seed give the same bytes") {
  const ScenarioConfig cfg = load_scenario(scenario_file("trudy.scn"));
  CHECK(run_csv(cfg) == run_csv(cfg));

  ScenarioConfig random = parse_scenario(R"(
seed = 3
duration_ticks = 20
[chain BTC]
[nodes]
count = 60
[topology]
kind = random
edges = 150
[workload]
random = 0 19 80 1000 5000000
[events]
offline_fraction = 10 0.1
)");
  const std::string a = run_csv(random);
  CHECK(a == run_csv(random));
  random.seed = 4;
  CHECK(a != run_csv(random));
}

TEST_CASE("bundled scenarios produce their expected metrics") {
  SUBCASE("alice and bob net a thousand updates into two transactions") {
    auto w = build_network(load_scenario(scenario_file("alice_bob.scn")));
    const Metrics m = run_scenario(*w);
    CHECK(m.payments_succeeded == 1000);
    CHECK(m.offchain_update_count == 1000);
    CHECK(m.onchain_tx_count == 2);
    CHECK(m.netting_ratio == 1000.0);
    CHECK(conservation_holds(*w));
  }
  SUBCASE("trudy") {
    auto w = build_network(load_scenario(scenario_file("trudy.scn")));
    const Metrics m = run_scenario(*w);
    CHECK(m.payments_succeeded == 1);
    CHECK(m.mean_hops == 2.0);
    CHECK(m.total_fees_msat == 101'000);
  }
  SUBCASE("punish") {
    auto w = build_network(load_scenario(scenario_file("punish.scn")));
    const Metrics m = run_scenario(*w);
    CHECK(m.cheat_attempts == 1);
    CHECK(m.cheats_punished == 1);
    CHECK(m.cheats_succeeded == 0);
    CHECK(w->net.channel("ch_ab").status() == ChannelStatus::Punished);
    CHECK(conservation_holds(*w));
  }
  SUBCASE("swap") {
    auto w = build_network(load_scenario(scenario_file("swap.scn")));
    const Metrics m = run_scenario(*w);
    CHECK(m.swaps_attempted == 1);
    CHECK(m.swaps_settled == 1);
    CHECK(w->net.channel("ch_btc").balance(Side::B) == btc(6));
    CHECK(conservation_holds(*w));
  }
}

TEST_CASE("an offline victim loses to a cheater once the delay passes") {
  ScenarioConfig cfg = load_scenario(scenario_file("punish.scn"));
  cfg.to_self_delay_blocks = 3;
  cfg.duration_ticks = 600 * 6;
  EventSpec off;
  off.tick = 2;
  off.kind = EventKind::NodeOffline;
  off.nodes = {"bob"};
  cfg.events.insert(cfg.events.begin(), off);
  auto w = build_network(cfg);
  const Metrics m = run_scenario(*w);
  CHECK(m.cheat_attempts == 1);
  CHECK(m.cheats_punished == 0);
  CHECK(m.cheats_succeeded == 1);
  CHECK(conservation_holds(*w));
}

TEST_CASE("payments still pending at the end are reported in flight") {
  ScenarioConfig cfg = parse_scenario(kAliceBob);
  cfg.hop_latency_ticks = 10;
  cfg.payments.push_back(PaymentSpec{1, "alice", "bob", 5000, ""});
  auto w = build_network(cfg);
  const Metrics m = run_scenario(*w);
  CHECK(m.payments_attempted == 1);
  CHECK(m.payments_inflight == 1);
  CHECK(m.payments_succeeded + m.payments_failed + m.payments_inflight == m.payments_attempted);
}

TEST_CASE("trace lines carry tick, channel, event, version and balances") {
  auto w = build_network(load_scenario(scenario_file("punish.scn")));
  run_scenario(*w);
  std::ostringstream out;
  write_trace(w->net.channel("ch_ab"), out);
  const std::string text = out.str();
  CHECK(text.rfind("0 ch_ab ", 0) == 0);
  CHECK(text.find(" punished ") != std::string::npos);
}
