#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lnsim/basechain.hpp"
#include "lnsim/channel.hpp"

namespace lnsim {

/// Invalid scenario. `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& reason)
      : std::runtime_error(field + ": " + reason), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class ScenarioNotFound : public std::runtime_error {
 public:
  explicit ScenarioNotFound(const std::string& path)
      : std::runtime_error("scenario not found: " + path) {}
};

enum class TopologyKind { Explicit, Random, PaperSnapshot };
enum class Settlement { Lightning, Onchain };

struct GenesisSpec {
  AssetId asset;
  NodeId node;
  Msat amount_msat = 0;
};

struct ChannelSpec {
  ChannelId id;
  NodeId a;
  NodeId b;
  AssetId asset;
  Msat fund_a = 0;
  Msat fund_b = 0;
};

struct PaymentSpec {
  std::uint64_t tick = 0;
  NodeId source;
  NodeId destination;
  Msat amount_msat = 0;
  AssetId asset;  ///< empty: the first chain
};

/// `count` payments between random distinct active nodes, with ticks and
/// amounts drawn uniformly from the given ranges.
struct RandomWorkload {
  std::uint64_t start_tick = 0;
  std::uint64_t end_tick = 0;
  std::uint64_t count = 0;
  Msat min_msat = 1;
  Msat max_msat = 1;
};

struct SwapSpec {
  NodeId initiator;
  NodeId responder;
  ChannelId channel_x;
  ChannelId channel_y;
  Msat amount_x = 0;
  Msat amount_y = 0;
};

enum class EventKind { NodeOffline, NodeOnline, ForceBroadcastRevoked, Close, OfflineFraction, Swap };

struct EventSpec {
  std::uint64_t tick = 0;
  EventKind kind = EventKind::NodeOffline;
  std::vector<NodeId> nodes;
  ChannelId channel;
  std::uint64_t version = 0;
  double fraction = 0;
  SwapSpec swap;
};

inline constexpr std::uint64_t kSnapshotNodes = 5'788;
inline constexpr std::uint64_t kSnapshotChannels = 23'021;
inline constexpr std::uint64_t kSnapshotActive = 2'870;
inline constexpr Msat kSnapshotCapacity = 61'851'000'000'000;  // 618.51 BTC

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::uint64_t duration_ticks = 0;
  Settlement settlement = Settlement::Lightning;

  std::vector<ChainParams> chains;  ///< genesis allocations are filled in by the builder
  std::vector<GenesisSpec> genesis;

  std::vector<NodeId> node_names;  ///< explicit names; otherwise node_count generated ids
  std::uint64_t node_count = 0;
  std::optional<std::uint64_t> active_count;

  TopologyKind topology = TopologyKind::Explicit;
  std::vector<ChannelSpec> channels;
  std::uint64_t edge_count = 0;
  Msat capacity_min = 1'000'000;
  Msat capacity_max = 100'000'000;
  std::optional<Msat> total_capacity;

  std::vector<PaymentSpec> payments;
  std::vector<RandomWorkload> random_payments;
  std::vector<EventSpec> events;

  std::uint64_t liveness_timeout_ticks = 6;
  std::uint64_t to_self_delay_blocks = kDefaultToSelfDelay;
  std::uint64_t delta_blocks = 6;
  Msat hop_penalty_msat = 1;
  std::uint64_t payment_retries = 0;
  Msat fee_base_msat = 1'000;
  std::uint64_t fee_ppm = 1;
  std::uint64_t hop_latency_ticks = 0;
  bool auto_punish = true;

  /// Node ids the scenario will have, in creation order.
  std::vector<NodeId> resolved_nodes() const;
  std::uint64_t resolved_node_count() const;
  std::uint64_t resolved_edge_count() const;
  Msat resolved_total_capacity() const;
};

/// Parses the scenario text format:
///
///   # comment
///   seed = 7
///   duration_ticks = 1300
///   [chain BTC]
///   tps_cap = 7
///   block_interval_secs = 600
///   [nodes]
///   names = alice bob
///   [topology]
///   kind = explicit
///   channel = ch_ab alice bob BTC 10BTC 10BTC
///   [workload]
///   repeat = 1 1000 alice bob 1000
///   [events]
///   close = 2 ch_ab
///
/// Amounts are msat integers or carry a unit suffix (msat, sat, BTC).
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::string& path);

/// "10BTC", "2.5BTC", "1000sat", "42msat" or a bare msat integer.
Msat parse_amount_token(std::string_view token);

std::string node_name(std::uint64_t index);
std::string channel_name(std::uint64_t index);

}  // namespace lnsim
