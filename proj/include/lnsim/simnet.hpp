#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "lnsim/rng.hpp"
#include "lnsim/routing.hpp"
#include "lnsim/scenario.hpp"

namespace lnsim {

struct Metrics {
  std::uint64_t payments_attempted = 0;
  std::uint64_t payments_succeeded = 0;
  std::uint64_t payments_failed = 0;
  std::uint64_t payments_inflight = 0;
  double mean_hops = 0;
  double mean_latency_ticks = 0;
  Msat total_fees_msat = 0;
  std::uint64_t onchain_tx_count = 0;
  std::uint64_t offchain_update_count = 0;
  double netting_ratio = 0;
  Msat ln_capacity_msat = 0;
  std::uint64_t reachable_nodes = 0;
  std::uint64_t active_nodes = 0;
  std::uint64_t cheat_attempts = 0;
  std::uint64_t cheats_punished = 0;
  std::uint64_t cheats_succeeded = 0;
  std::uint64_t swaps_attempted = 0;
  std::uint64_t swaps_settled = 0;

  bool operator==(const Metrics&) const = default;
};

/// Fixed CSV header, one column per Metrics field plus ln_capacity_btc
/// after ln_capacity_msat.
const std::string& metrics_csv_header();
std::string metrics_csv_row(const Metrics& m);
/// `key=value` per line, same order as the CSV.
std::string metrics_lines(const Metrics& m);

struct FailureReport {
  std::vector<NodeId> offline;
  std::vector<ChannelId> closed;  ///< unilaterally closed by the online peer
  std::vector<ChannelId> frozen;  ///< both endpoints offline
  Msat capacity_removed = 0;
};

/// One payment of the workload and what became of it.
struct PaymentRecord {
  std::uint64_t issue_tick = 0;
  std::uint64_t ready_tick = 0;  ///< issue tick plus per-hop latency
  std::uint64_t done_tick = 0;
  PaymentSpec spec;
  std::unique_ptr<PaymentAttempt> attempt;  ///< lightning settlement
  std::optional<Txid> onchain_tx;           ///< on-chain settlement
  PaymentStatus status = PaymentStatus::Pending;
};

/// A network built from a scenario plus the simulation state driving it.
struct World {
  ScenarioConfig cfg;
  Network net;
  Rng rng{1};
  std::uint64_t tick = 0;
  bool started = false;

  std::vector<NodeId> failure_order;  ///< seeded permutation used for DDoS sampling
  std::map<NodeId, std::uint64_t> offline_since;
  std::vector<PaymentRecord> payments;  ///< sorted by issue tick
  std::size_t next_payment = 0;
  std::vector<std::size_t> inflight;    ///< indices into payments
  std::size_t next_event = 0;
  std::vector<EventSpec> events;  ///< sorted by tick, file order within a tick

  std::set<ChannelId> watch;     ///< closed channels with on-chain work left
  std::set<ChannelId> cheats;    ///< revoked broadcasts awaiting resolution
  std::uint64_t cheat_attempts = 0;
  std::uint64_t cheats_punished = 0;
  std::uint64_t cheats_succeeded = 0;
  std::uint64_t swaps_attempted = 0;
  std::uint64_t swaps_settled = 0;

  explicit World(ScenarioConfig c);
};

/// Registers the ledgers, funds and opens every channel, mines until all
/// fundings confirm, and publishes the graph. Throws ConfigError.
std::unique_ptr<World> build_network(const ScenarioConfig& cfg);

/// Runs one tick: blocks due at this tick and their consequences, then the
/// tick's events, then its payments.
void step(World& w);

/// Runs until cfg.duration_ticks and returns the metrics.
Metrics run_scenario(World& w);

/// Takes ceil(fraction * nodes) nodes offline at once (a prefix of the
/// world's seeded node permutation) and closes their channels.
FailureReport apply_node_failures(World& w, double fraction);

Metrics collect_metrics(const World& w);

/// Every ledger conserves supply and every open channel its capacity.
bool conservation_holds(const World& w);

/// `<tick> <channel_id> <event> <version> <balance_a> <balance_b>` per line.
void write_trace(const Channel& ch, std::ostream& out);

}  // namespace lnsim
