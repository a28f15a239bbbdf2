#include "lnsim/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <optional>

#include "lnsim/simnet.hpp"

namespace lnsim {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;

std::string btc_text(Msat amount) { return format_btc(amount) + " BTC"; }

ScenarioConfig demo_config() {
  ScenarioConfig cfg;
  ChainParams btc_chain;
  btc_chain.asset_id = "BTC";
  cfg.chains.push_back(btc_chain);
  cfg.node_names = {"alice", "bob"};
  cfg.channels.push_back(ChannelSpec{"ch_ab", "alice", "bob", "BTC", btc(10), btc(10)});
  return cfg;
}

void print_event(const ChannelEvent& ev, std::ostream& out) {
  std::string name = ev.event;
  if (name.rfind("step", 0) == 0) name = "step " + name.substr(4);
  out << name << ": " << ev.detail << " [v" << ev.version << " alice " << btc_text(ev.balance_a)
      << ", bob " << btc_text(ev.balance_b) << "]\n";
}

}  // namespace

void write_demo(std::ostream& out) {
  auto world = build_network(demo_config());
  Channel& ch = world->net.channel("ch_ab");
  Ledger& ledger = world->net.chains().at("BTC");

  out << "alice and bob each deposit 10 BTC into a 2-of-2 funding output\n";
  out << "funding " << ch.funding_txid().hex() << " confirmed at height "
      << ledger.height() << "\n";
  out << "opening balances: alice " << btc_text(ch.balance(Side::A)) << ", bob "
      << btc_text(ch.balance(Side::B)) << "\n";

  out << "alice pays bob 2 BTC off-chain\n";
  ch.begin_update(Side::A, btc(2));
  const std::size_t seen = ch.trace().size();
  while (ch.update_in_flight()) ch.advance();
  for (std::size_t i = seen; i < ch.trace().size(); ++i) print_event(ch.trace()[i], out);
  out << "balances after update: alice " << btc_text(ch.balance(Side::A)) << ", bob "
      << btc_text(ch.balance(Side::B)) << "\n";

  const Txid close = ch.cooperative_close(ledger);
  ledger.mine_block();
  ch.refresh(ledger);
  const ConfirmedTx* tx = ledger.find_confirmed(close);
  out << "cooperative close " << close.hex() << " confirmed at height " << tx->height
      << ", fee " << tx->fee << " msat\n";
  for (const auto& o : tx->tx.outputs) {
    const auto& key = std::get<SingleKey>(o.condition).key;
    const char* who = key == ch.party(Side::A).node_key.pub ? "alice" : "bob";
    out << "settled to " << who << ": " << o.amount_msat << " msat (" << btc_text(o.amount_msat)
        << ")\n";
  }
  out << "channel status: " << to_string(ch.status()) << "\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Payment channel network simulator", "lnsim"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string channel_id;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string format = "csv";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Override the scenario seed");
    sub->add_option("--out", out_path, "Write output to this file instead of stdout");
  };

  CLI::App* run = app.add_subcommand("run", "Run a scenario and print its metrics");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  add_common(run);
  run->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "lines"}));

  CLI::App* stats = app.add_subcommand("stats", "Build a scenario and export its graph");
  stats->add_option("scenario", scenario_path, "Scenario file")->required();
  add_common(stats);

  CLI::App* trace = app.add_subcommand("trace", "Run a scenario and print one channel's log");
  trace->add_option("scenario", scenario_path, "Scenario file")->required();
  trace->add_option("channel", channel_id, "Channel id")->required();
  add_common(trace);

  CLI::App* demo = app.add_subcommand("demo", "Walk through one channel update step by step");
  demo->add_option("--out", out_path, "Write output to this file instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) {
      err << "error: cannot write " << out_path << "\n";
      return kExitUsage;
    }
  }
  std::ostream& sink = out_path.empty() ? out : file;

  try {
    if (demo->parsed()) {
      write_demo(sink);
      return kExitOk;
    }

    ScenarioConfig cfg = load_scenario(scenario_path);
    if (seed) cfg.seed = *seed;
    auto world = build_network(cfg);

    if (stats->parsed()) {
      const ChannelGraph& g = world->net.graph();
      std::uint64_t active = 0;
      for (const auto& [id, node] : world->net.nodes()) active += node.active ? 1 : 0;
      sink << g.node_count() << " nodes, " << g.edge_count() << " channels, " << active
           << " active, capacity " << g.total_capacity() << " msat ("
           << btc_text(g.total_capacity()) << ")\n";
      g.export_edges(sink);
      return kExitOk;
    }

    if (trace->parsed() && !world->net.has_channel(channel_id)) {
      err << "error: unknown channel " << channel_id << "\n";
      return kExitUsage;
    }
    const Metrics m = run_scenario(*world);
    if (trace->parsed()) {
      write_trace(world->net.channel(channel_id), sink);
      return kExitOk;
    }
    if (format == "lines")
      sink << metrics_lines(m);
    else
      sink << metrics_csv_header() << "\n" << metrics_csv_row(m) << "\n";
    return kExitOk;
  } catch (const ScenarioNotFound& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: invalid scenario: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lnsim
