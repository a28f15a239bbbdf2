#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lnsim/basechain.hpp"
#include "lnsim/channel.hpp"
#include "lnsim/htlc.hpp"

namespace lnsim {

class Rng;

inline constexpr Msat kDefaultBaseFee = 1'000;
inline constexpr std::uint64_t kDefaultFeePpm = 1;
inline constexpr Msat kDefaultHopPenalty = 1;

struct FeePolicy {
  Msat base_msat = kDefaultBaseFee;
  std::uint64_t proportional_ppm = kDefaultFeePpm;

  /// base + floor(amount * ppm / 1e6), computed without overflow.
  Msat fee(Msat amount) const;
  bool operator==(const FeePolicy&) const = default;
};

struct GraphEdge {
  ChannelId id;
  NodeId a;
  NodeId b;
  AssetId asset;
  Msat capacity_msat = 0;
  FeePolicy policy;

  const NodeId& peer_of(const NodeId& n) const { return n == a ? b : a; }
};

/// Public view of the network. Holds only routable channels; a channel is
/// removed once it stops being Open.
class ChannelGraph {
 public:
  void add_node(const NodeId& id, bool online = true);
  bool contains(const NodeId& id) const { return index_.contains(id); }
  bool online(const NodeId& id) const;
  void set_online(const NodeId& id, bool up);

  void add_edge(GraphEdge edge);
  bool remove_edge(const ChannelId& id);
  bool has_edge(const ChannelId& id) const { return edge_index_.contains(id); }
  const GraphEdge& edge(const ChannelId& id) const;

  std::size_t node_count() const { return names_.size(); }
  std::size_t edge_count() const { return edge_index_.size(); }
  Msat total_capacity() const;
  /// Node ids in lexicographic order.
  std::vector<NodeId> nodes() const;
  /// Live edges in channel id order.
  std::vector<const GraphEdge*> edges() const;

  /// One line per edge: channel_id node_a node_b asset capacity_msat base_fee ppm
  void export_edges(std::ostream& out) const;

  // Dense indices used by the pathfinder.
  std::size_t index_of(const NodeId& id) const;
  const NodeId& name(std::size_t i) const { return names_[i]; }
  bool online(std::size_t i) const { return online_[i]; }
  const std::vector<std::size_t>& adjacent(std::size_t node) const { return adjacency_[node]; }
  const GraphEdge& edge_at(std::size_t slot) const { return slots_[slot]; }
  bool slot_live(std::size_t slot) const { return live_[slot]; }

 private:
  std::vector<NodeId> names_;
  std::vector<bool> online_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<GraphEdge> slots_;
  std::vector<bool> live_;
  std::map<ChannelId, std::size_t> edge_index_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

struct RouteHop {
  NodeId node;        ///< node receiving over this hop
  ChannelId channel;
  Msat amount_msat = 0;
  std::uint64_t expiry_height = 0;
};

struct Route {
  NodeId source;
  NodeId destination;
  AssetId asset;
  std::vector<RouteHop> hops;

  Msat delivered() const { return hops.empty() ? 0 : hops.back().amount_msat; }
  Msat sent() const { return hops.empty() ? 0 : hops.front().amount_msat; }
  Msat fees() const { return sent() - delivered(); }
  Msat cost(Msat hop_penalty) const { return fees() + hops.size() * hop_penalty; }
  /// Source followed by every hop's node.
  std::vector<NodeId> node_path() const;
};

enum class RoutingErrc { NoRoute, UnknownNode, EmptyRoute, NotAddressee, BadOnion };

const char* to_string(RoutingErrc code);

class RoutingError : public std::runtime_error {
 public:
  RoutingError(RoutingErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  RoutingErrc code() const { return code_; }

 private:
  RoutingErrc code_;
};

struct RouteRequest {
  NodeId source;
  NodeId destination;
  Msat amount_msat = 0;
  AssetId asset;
  std::uint64_t current_height = 0;
  std::uint64_t delta_blocks = kDefaultDeltaBlocks;
  Msat hop_penalty = kDefaultHopPenalty;
  /// Channels to leave out (e.g. ones that already failed).
  const std::set<ChannelId>* exclude = nullptr;
};

/// Minimum cost route, cost = total fees + hops * hop_penalty, with every
/// channel's capacity covering the amount it forwards. Ties go to the
/// lexicographically smallest node sequence, then channel sequence.
///
/// Works backwards from the destination one hop count at a time. At each
/// hop count a node keeps the smallest amount it needs to receive; a label
/// is only kept if it beats that node's best at every smaller hop count.
/// Fees are monotone in the amount, so nothing dropped can do better.
Route find_route(const ChannelGraph& graph, const RouteRequest& req);

// ---- onion ------------------------------------------------------------------------

struct OnionPacket {
  Bytes sealed;
  bool operator==(const OnionPacket&) const = default;
};

/// What one hop learns when it opens its layer.
struct OnionPayload {
  bool final = false;
  /// Empty on the final layer. The next hop is the forwarder's peer on
  /// this channel; its id never appears in the layer.
  ChannelId next_channel;
  Msat amount_msat = 0;     ///< to forward, or to receive if final
  std::uint64_t expiry_height = 0;
  Hash256 payment_hash;     ///< final layer only
};

struct PeeledOnion {
  OnionPayload payload;
  OnionPacket inner;  ///< empty if final
  Bytes plaintext;    ///< everything the hop saw, byte for byte
};

/// Seals one layer per hop, innermost first. Layer keys come from the hop's
/// public key through `signer`.
OnionPacket build_onion(const Route& route, const Hash256& payment_hash,
                        const SimulatedSigner& signer,
                        const std::function<PublicKey(const NodeId&)>& node_key);

/// Opens the outermost layer with the node's own key. Throws NotAddressee if
/// the layer was sealed for someone else.
PeeledOnion peel_onion(const OnionPacket& packet, const KeyPair& node_key);

// ---- payments ---------------------------------------------------------------------

struct NodeState {
  NodeId id;
  KeyPair node_key;
  bool online = true;
  bool active = true;
  std::map<Hash256, Preimage> preimages;  ///< invoices this node issued
};

struct NetworkConfig {
  Msat hop_penalty = kDefaultHopPenalty;
  std::uint64_t delta_blocks = kDefaultDeltaBlocks;
  std::uint64_t payment_retries = 0;
  FeePolicy fee_policy;
  ChannelConfig channel;
};

/// Nodes, ledgers, channels and the public graph over them.
class Network {
 public:
  explicit Network(NetworkConfig config = {});

  std::shared_ptr<SimulatedSigner> signer() const { return signer_; }
  ChainRegistry& chains() { return chains_; }
  const ChainRegistry& chains() const { return chains_; }
  const NetworkConfig& config() const { return config_; }
  ChannelGraph& graph() { return graph_; }
  const ChannelGraph& graph() const { return graph_; }

  NodeState& add_node(const NodeId& id);
  NodeState& node(const NodeId& id);
  const NodeState& node(const NodeId& id) const;
  bool has_node(const NodeId& id) const { return nodes_.contains(id); }
  const std::map<NodeId, NodeState>& nodes() const { return nodes_; }
  void set_online(const NodeId& id, bool up);

  /// Wallet key a node uses to fund one particular channel.
  KeyPair wallet_key(const NodeId& node, const ChannelId& channel);
  ChannelParty party(const NodeId& node, const ChannelId& channel, Rng& rng);

  Channel& open_channel(const ChannelId& id, const AssetId& asset, const NodeId& a,
                        const NodeId& b, Msat fund_a, Msat fund_b, Rng& rng);
  Channel& channel(const ChannelId& id);
  const Channel& channel(const ChannelId& id) const;
  bool has_channel(const ChannelId& id) const { return channels_.contains(id); }
  /// Channels a node is party to, in opening order.
  const std::vector<ChannelId>& channels_of(const NodeId& node) const;
  std::map<ChannelId, Channel>& channels() { return channels_; }
  const std::map<ChannelId, Channel>& channels() const { return channels_; }

  /// Adds the channel to the graph if it is Open, removes it otherwise.
  void sync_graph(const ChannelId& id);

  Invoice create_invoice(const NodeId& dest, const AssetId& asset, Msat amount, Rng& rng);

  std::uint64_t tick() const { return tick_; }
  void set_tick(std::uint64_t t) { tick_ = t; }

 private:
  NetworkConfig config_;
  std::shared_ptr<SimulatedSigner> signer_;
  ChainRegistry chains_;
  ChannelGraph graph_;
  std::map<NodeId, NodeState> nodes_;
  std::map<ChannelId, Channel> channels_;
  std::map<NodeId, std::vector<ChannelId>> node_channels_;
  std::uint64_t tick_ = 0;
};

enum class PaymentStatus { Pending, Succeeded, Failed };
enum class PaymentErrc { None, NoRoute, HtlcLockFailed, PaymentTimeout, BadInvoice };

const char* to_string(PaymentStatus s);
const char* to_string(PaymentErrc e);

struct PaymentResult {
  PaymentStatus status = PaymentStatus::Pending;
  PaymentErrc error = PaymentErrc::None;
  std::size_t failed_hop = 0;  ///< 1-based hop that refused the HTLC
  std::string detail;
  Preimage preimage;
  Msat fees_msat = 0;
  std::size_t hops = 0;
  Route route;
};

/// One multi-hop payment, driven in phases so the simulator can interleave
/// failures: lock() adds HTLCs hop by hop using the onion; settle() lets the
/// destination reveal the preimage once every hop is reachable; expire()
/// refunds whatever is still locked when its expiry arrives.
class PaymentAttempt {
 public:
  PaymentAttempt(NodeId source, Invoice invoice);

  /// Routes and locks. Retries around refusing channels up to
  /// config.payment_retries times.
  const PaymentResult& lock(Network& net);
  /// Returns true once the payment has succeeded.
  bool settle(Network& net);
  /// Refunds locked hops whose expiry has been reached. Returns true once
  /// nothing is locked any more.
  bool expire(Network& net);

  const PaymentResult& result() const { return result_; }
  const Invoice& invoice() const { return invoice_; }
  const NodeId& source() const { return source_; }
  bool locked() const { return !locked_.empty(); }

 private:
  struct Locked {
    ChannelId channel;
    std::uint64_t htlc_id;
    bool resolved = false;
  };

  bool try_route(Network& net, const std::set<ChannelId>& exclude, ChannelId& refused);
  void fail_back(Network& net);

  NodeId source_;
  Invoice invoice_;
  PaymentResult result_;
  std::vector<Locked> locked_;
};

/// Lock and settle in one go. A payment whose path breaks after locking is
/// returned Pending; drive it further through PaymentAttempt.
PaymentResult send_payment(Network& net, const NodeId& source, const Invoice& invoice);

}  // namespace lnsim
