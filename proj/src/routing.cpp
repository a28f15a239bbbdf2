#include "lnsim/routing.hpp"

#include <algorithm>
#include <limits>

#include "lnsim/rng.hpp"
#include "lnsim/serialize.hpp"

namespace lnsim {

Msat FeePolicy::fee(Msat amount) const {
  const auto prop = static_cast<unsigned __int128>(amount) * proportional_ppm / 1'000'000;
  return base_msat + static_cast<Msat>(prop);
}

const char* to_string(RoutingErrc code) {
  switch (code) {
    case RoutingErrc::NoRoute: return "NoRoute";
    case RoutingErrc::UnknownNode: return "UnknownNode";
    case RoutingErrc::EmptyRoute: return "EmptyRoute";
    case RoutingErrc::NotAddressee: return "NotAddressee";
    case RoutingErrc::BadOnion: return "BadOnion";
  }
  return "?";
}

// ---- graph ---------------------------------------------------------------------------

void ChannelGraph::add_node(const NodeId& id, bool online) {
  if (index_.contains(id)) throw std::invalid_argument("duplicate node " + id);
  index_.emplace(id, names_.size());
  names_.push_back(id);
  online_.push_back(online);
  adjacency_.emplace_back();
}

std::size_t ChannelGraph::index_of(const NodeId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw RoutingError(RoutingErrc::UnknownNode, "unknown node " + id);
  return it->second;
}

bool ChannelGraph::online(const NodeId& id) const { return online_[index_of(id)]; }

void ChannelGraph::set_online(const NodeId& id, bool up) { online_[index_of(id)] = up; }

void ChannelGraph::add_edge(GraphEdge edge) {
  if (edge_index_.contains(edge.id)) throw std::invalid_argument("duplicate channel " + edge.id);
  const std::size_t a = index_of(edge.a);
  const std::size_t b = index_of(edge.b);
  const std::size_t slot = slots_.size();
  edge_index_.emplace(edge.id, slot);
  slots_.push_back(std::move(edge));
  live_.push_back(true);
  adjacency_[a].push_back(slot);
  adjacency_[b].push_back(slot);
}

bool ChannelGraph::remove_edge(const ChannelId& id) {
  auto it = edge_index_.find(id);
  if (it == edge_index_.end()) return false;
  const std::size_t slot = it->second;
  live_[slot] = false;
  for (const NodeId* n : {&slots_[slot].a, &slots_[slot].b}) {
    auto& adj = adjacency_[index_of(*n)];
    adj.erase(std::remove(adj.begin(), adj.end(), slot), adj.end());
  }
  edge_index_.erase(it);
  return true;
}

const GraphEdge& ChannelGraph::edge(const ChannelId& id) const {
  auto it = edge_index_.find(id);
  if (it == edge_index_.end()) throw std::out_of_range("no edge " + id);
  return slots_[it->second];
}

Msat ChannelGraph::total_capacity() const {
  Msat total = 0;
  for (const auto& [id, slot] : edge_index_) total += slots_[slot].capacity_msat;
  return total;
}

std::vector<NodeId> ChannelGraph::nodes() const {
  std::vector<NodeId> out = names_;
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<const GraphEdge*> ChannelGraph::edges() const {
  std::vector<const GraphEdge*> out;
  out.reserve(edge_index_.size());
  for (const auto& [id, slot] : edge_index_) out.push_back(&slots_[slot]);
  return out;
}

void ChannelGraph::export_edges(std::ostream& out) const {
  for (const GraphEdge* e : edges())
    out << e->id << ' ' << e->a << ' ' << e->b << ' ' << e->asset << ' ' << e->capacity_msat << ' '
        << e->policy.base_msat << ' ' << e->policy.proportional_ppm << '\n';
}

std::vector<NodeId> Route::node_path() const {
  std::vector<NodeId> out{source};
  for (const auto& h : hops) out.push_back(h.node);
  return out;
}

// ---- pathfinding ----------------------------------------------------------------------

namespace {

constexpr Msat kUnreachable = std::numeric_limits<Msat>::max();
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Label {
  Msat recv = kUnreachable;  ///< amount this node must receive
  std::size_t slot = kNone;  ///< outgoing edge towards the destination
  std::size_t next = kNone;  ///< node at the other end of it
};

using Layer = std::vector<Label>;

struct Candidate {
  Msat cost = kUnreachable;
  std::size_t layer = 0;  ///< hop count
  std::size_t slot = kNone;
  std::size_t next = kNone;
};

/// Node and channel sequence from `node` (at hop count `h`) to the destination.
void walk(const ChannelGraph& g, const std::vector<Layer>& layers, std::size_t h,
          std::size_t node, std::vector<const NodeId*>& nodes,
          std::vector<const ChannelId*>& channels) {
  while (true) {
    nodes.push_back(&g.name(node));
    if (h == 0) return;
    const Label& l = layers[h][node];
    channels.push_back(&g.edge_at(l.slot).id);
    node = l.next;
    --h;
  }
}

template <typename T>
int compare_seq(const std::vector<const T*>& x, const std::vector<const T*>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (*x[i] < *y[i]) return -1;
    if (*y[i] < *x[i]) return 1;
  }
  return x.size() < y.size() ? -1 : (x.size() > y.size() ? 1 : 0);
}

/// Orders two paths that both start with `head` and continue through
/// (slot, next) at hop count h-1.
bool path_less(const ChannelGraph& g, const std::vector<Layer>& layers, std::size_t head,
               std::size_t h1, std::size_t slot1, std::size_t next1, std::size_t h2,
               std::size_t slot2, std::size_t next2) {
  std::vector<const NodeId*> n1{&g.name(head)}, n2{&g.name(head)};
  std::vector<const ChannelId*> c1{&g.edge_at(slot1).id}, c2{&g.edge_at(slot2).id};
  walk(g, layers, h1 - 1, next1, n1, c1);
  walk(g, layers, h2 - 1, next2, n2, c2);
  if (int c = compare_seq(n1, n2)) return c < 0;
  return compare_seq(c1, c2) < 0;
}

}  // namespace

Route find_route(const ChannelGraph& g, const RouteRequest& req) {
  const std::size_t src = g.index_of(req.source);
  const std::size_t dst = g.index_of(req.destination);
  if (src == dst) throw RoutingError(RoutingErrc::NoRoute, "source and destination are the same");
  if (req.amount_msat == 0) throw RoutingError(RoutingErrc::NoRoute, "amount must be positive");
  if (req.hop_penalty < 1) throw std::invalid_argument("hop_penalty must be at least 1");
  if (!g.online(src) || !g.online(dst))
    throw RoutingError(RoutingErrc::NoRoute, "source or destination offline");

  auto usable = [&](std::size_t slot) {
    const GraphEdge& e = g.edge_at(slot);
    return g.slot_live(slot) && e.asset == req.asset &&
           !(req.exclude && req.exclude->contains(e.id));
  };

  Msat min_base = kUnreachable;
  for (const GraphEdge* e : g.edges())
    if (e->asset == req.asset) min_base = std::min(min_base, e->policy.base_msat);
  if (min_base == kUnreachable) throw RoutingError(RoutingErrc::NoRoute, "no channels for asset");

  const std::size_t n = g.node_count();
  std::vector<Layer> layers;
  layers.emplace_back(n);
  layers[0][dst].recv = req.amount_msat;
  std::vector<Msat> best_recv(n, kUnreachable);
  best_recv[dst] = req.amount_msat;
  std::vector<std::size_t> frontier{dst};
  Candidate best;

  for (std::size_t h = 1; !frontier.empty(); ++h) {
    // Any route with h or more hops costs at least this much.
    const unsigned __int128 bound =
        static_cast<unsigned __int128>(h) * req.hop_penalty +
        static_cast<unsigned __int128>(h - 1) * min_base;
    if (best.slot != kNone && bound > best.cost) break;

    layers.emplace_back(n);
    Layer& cur = layers[h];
    const Layer& prev = layers[h - 1];
    std::vector<std::size_t> touched;

    for (std::size_t v : frontier) {
      const Msat send = prev[v].recv;
      for (std::size_t slot : g.adjacent(v)) {
        if (!usable(slot)) continue;
        const GraphEdge& e = g.edge_at(slot);
        if (e.capacity_msat < send) continue;
        const std::size_t u = g.index_of(e.peer_of(g.name(v)));
        if (!g.online(u) || u == dst) continue;

        if (u == src) {
          const unsigned __int128 cost = static_cast<unsigned __int128>(send - req.amount_msat) +
                                         static_cast<unsigned __int128>(h) * req.hop_penalty;
          if (cost > kUnreachable) continue;
          const auto c = static_cast<Msat>(cost);
          if (best.slot == kNone || c < best.cost ||
              (c == best.cost &&
               path_less(g, layers, src, h, slot, v, best.layer, best.slot, best.next)))
            best = Candidate{c, h, slot, v};
          continue;
        }

        const Msat fee = e.policy.fee(send);
        if (send > kUnreachable - fee) continue;
        const Msat recv = send + fee;
        if (recv >= best_recv[u]) continue;
        Label& cur_u = cur[u];
        if (cur_u.slot == kNone) {
          touched.push_back(u);
        } else if (recv > cur_u.recv ||
                   (recv == cur_u.recv &&
                    !path_less(g, layers, u, h, slot, v, h, cur_u.slot, cur_u.next))) {
          continue;
        }
        cur_u = Label{recv, slot, v};
      }
    }
    for (std::size_t u : touched) best_recv[u] = std::min(best_recv[u], cur[u].recv);
    std::sort(touched.begin(), touched.end());
    frontier = std::move(touched);
  }

  if (best.slot == kNone)
    throw RoutingError(RoutingErrc::NoRoute,
                       "no route from " + req.source + " to " + req.destination);

  Route route{req.source, req.destination, req.asset, {}};
  const std::size_t k = best.layer;
  std::size_t slot = best.slot;
  std::size_t node = best.next;
  for (std::size_t i = 1; i <= k; ++i) {
    const std::size_t h = k - i;
    route.hops.push_back(RouteHop{g.name(node), g.edge_at(slot).id, layers[h][node].recv,
                                  req.current_height + req.delta_blocks * (h + 1)});
    if (h > 0) {
      slot = layers[h][node].slot;
      node = layers[h][node].next;
    }
  }
  return route;
}

// ---- onion --------------------------------------------------------------------------------

namespace {

constexpr std::size_t kMacSize = 16;

void apply_keystream(const Hash256& key, Bytes& data) {
  for (std::size_t block = 0; block * 32 < data.size(); ++block) {
    Writer w;
    w.str("onion-stream").hash(key).u64(block);
    const Hash256 pad = sha256(w.data());
    for (std::size_t i = 0; i < 32 && block * 32 + i < data.size(); ++i)
      data[block * 32 + i] ^= pad.bytes[i];
  }
}

std::array<std::uint8_t, kMacSize> mac_of(const Hash256& key, std::span<const std::uint8_t> ct) {
  Writer w;
  w.str("onion-mac").hash(key).bytes(ct);
  const Hash256 h = sha256(w.data());
  std::array<std::uint8_t, kMacSize> out{};
  std::copy_n(h.bytes.begin(), kMacSize, out.begin());
  return out;
}

Bytes encode_layer(const OnionPayload& p, const OnionPacket& inner) {
  Writer w;
  w.u64(p.final ? 1 : 0)
      .str(p.next_channel)
      .u64(p.amount_msat)
      .u64(p.expiry_height)
      .hash(p.payment_hash)
      .bytes(inner.sealed);
  return w.take();
}

OnionPacket seal(const Hash256& key, Bytes plaintext) {
  apply_keystream(key, plaintext);
  const auto mac = mac_of(key, plaintext);
  OnionPacket p;
  p.sealed.assign(mac.begin(), mac.end());
  p.sealed.insert(p.sealed.end(), plaintext.begin(), plaintext.end());
  return p;
}

}  // namespace

OnionPacket build_onion(const Route& route, const Hash256& payment_hash,
                        const SimulatedSigner& signer,
                        const std::function<PublicKey(const NodeId&)>& node_key) {
  if (route.hops.empty()) throw RoutingError(RoutingErrc::EmptyRoute, "route has no hops");
  OnionPacket packet;
  for (std::size_t i = route.hops.size(); i-- > 0;) {
    OnionPayload p;
    if (i + 1 == route.hops.size()) {
      p.final = true;
      p.amount_msat = route.hops[i].amount_msat;
      p.expiry_height = route.hops[i].expiry_height;
      p.payment_hash = payment_hash;
    } else {
      const RouteHop& next = route.hops[i + 1];
      p.next_channel = next.channel;
      p.amount_msat = next.amount_msat;
      p.expiry_height = next.expiry_height;
    }
    packet = seal(signer.onion_key(node_key(route.hops[i].node)), encode_layer(p, packet));
  }
  return packet;
}

PeeledOnion peel_onion(const OnionPacket& packet, const KeyPair& node_key) {
  if (packet.sealed.size() < kMacSize)
    throw RoutingError(RoutingErrc::BadOnion, "packet too short");
  const Hash256 key = SimulatedSigner::onion_key(node_key);
  std::span<const std::uint8_t> body(packet.sealed.data() + kMacSize,
                                     packet.sealed.size() - kMacSize);
  const auto mac = mac_of(key, body);
  if (!std::equal(mac.begin(), mac.end(), packet.sealed.begin()))
    throw RoutingError(RoutingErrc::NotAddressee, "layer is not addressed to this node");

  PeeledOnion out;
  out.plaintext.assign(body.begin(), body.end());
  apply_keystream(key, out.plaintext);
  try {
    Reader r(out.plaintext);
    out.payload.final = r.u64() == 1;
    out.payload.next_channel = r.str();
    out.payload.amount_msat = r.u64();
    out.payload.expiry_height = r.u64();
    out.payload.payment_hash = r.hash();
    out.inner.sealed = r.bytes();
    if (!r.done()) throw DecodeError("trailing bytes");
  } catch (const DecodeError& e) {
    throw RoutingError(RoutingErrc::BadOnion, e.what());
  }
  return out;
}

// ---- network --------------------------------------------------------------------------------

Network::Network(NetworkConfig config)
    : config_(config), signer_(std::make_shared<SimulatedSigner>()), chains_(signer_) {}

NodeState& Network::add_node(const NodeId& id) {
  if (nodes_.contains(id)) throw std::invalid_argument("duplicate node " + id);
  graph_.add_node(id);
  NodeState st;
  st.id = id;
  st.node_key = signer_->derive("node/" + id);
  return nodes_.emplace(id, std::move(st)).first->second;
}

NodeState& Network::node(const NodeId& id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw RoutingError(RoutingErrc::UnknownNode, "unknown node " + id);
  return it->second;
}

const NodeState& Network::node(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw RoutingError(RoutingErrc::UnknownNode, "unknown node " + id);
  return it->second;
}

void Network::set_online(const NodeId& id, bool up) {
  node(id).online = up;
  graph_.set_online(id, up);
  for (const auto& cid : channels_of(id)) {
    Channel& ch = channels_.at(cid);
    ch.set_online(*ch.side_of(id), up);
  }
}

const std::vector<ChannelId>& Network::channels_of(const NodeId& n) const {
  static const std::vector<ChannelId> kNone;
  auto it = node_channels_.find(n);
  return it == node_channels_.end() ? kNone : it->second;
}

KeyPair Network::wallet_key(const NodeId& node, const ChannelId& channel) {
  return signer_->derive("wallet/" + node + "/" + channel);
}

ChannelParty Network::party(const NodeId& n, const ChannelId& channel, Rng& rng) {
  return ChannelParty{n, node(n).node_key, wallet_key(n, channel), rng.hash()};
}

Channel& Network::open_channel(const ChannelId& id, const AssetId& asset, const NodeId& a,
                               const NodeId& b, Msat fund_a, Msat fund_b, Rng& rng) {
  if (channels_.contains(id)) throw std::invalid_argument("duplicate channel " + id);
  if (a == b) throw std::invalid_argument("channel " + id + " joins a node to itself");
  Ledger& ledger = chains_.at(asset);
  ChannelParty pa = party(a, id, rng);
  ChannelParty pb = party(b, id, rng);
  Channel ch = Channel::open(ledger, signer_, id, std::move(pa), std::move(pb), fund_a, fund_b,
                             config_.channel);
  ch.set_online(Side::A, node(a).online);
  ch.set_online(Side::B, node(b).online);
  node_channels_[a].push_back(id);
  node_channels_[b].push_back(id);
  return channels_.emplace(id, std::move(ch)).first->second;
}

Channel& Network::channel(const ChannelId& id) {
  auto it = channels_.find(id);
  if (it == channels_.end()) throw std::out_of_range("unknown channel " + id);
  it->second.set_tick(tick_);
  return it->second;
}

const Channel& Network::channel(const ChannelId& id) const {
  auto it = channels_.find(id);
  if (it == channels_.end()) throw std::out_of_range("unknown channel " + id);
  return it->second;
}

void Network::sync_graph(const ChannelId& id) {
  const Channel& ch = channel(id);
  const bool routable =
      ch.status() == ChannelStatus::Open || ch.status() == ChannelStatus::PendingUpdate;
  if (routable && !graph_.has_edge(id)) {
    graph_.add_edge(GraphEdge{id, ch.party(Side::A).id, ch.party(Side::B).id, ch.asset(),
                              ch.capacity(), config_.fee_policy});
  } else if (!routable) {
    graph_.remove_edge(id);
  }
}

Invoice Network::create_invoice(const NodeId& dest, const AssetId& asset, Msat amount,
                                Rng& rng) {
  Preimage pre{rng.hash()};
  node(dest).preimages.emplace(pre.payment_hash(), pre);
  return Invoice{asset, amount, pre.payment_hash(), dest};
}

// ---- payments ---------------------------------------------------------------------------------

const char* to_string(PaymentStatus s) {
  switch (s) {
    case PaymentStatus::Pending: return "Pending";
    case PaymentStatus::Succeeded: return "Succeeded";
    case PaymentStatus::Failed: return "Failed";
  }
  return "?";
}

const char* to_string(PaymentErrc e) {
  switch (e) {
    case PaymentErrc::None: return "None";
    case PaymentErrc::NoRoute: return "NoRoute";
    case PaymentErrc::HtlcLockFailed: return "HtlcLockFailed";
    case PaymentErrc::PaymentTimeout: return "PaymentTimeout";
    case PaymentErrc::BadInvoice: return "BadInvoice";
  }
  return "?";
}

PaymentAttempt::PaymentAttempt(NodeId source, Invoice invoice)
    : source_(std::move(source)), invoice_(std::move(invoice)) {}

const PaymentResult& PaymentAttempt::lock(Network& net) {
  auto fail = [this](PaymentErrc code, std::string detail) -> const PaymentResult& {
    result_.status = PaymentStatus::Failed;
    result_.error = code;
    result_.detail = std::move(detail);
    return result_;
  };
  if (invoice_.amount_msat < 1) return fail(PaymentErrc::BadInvoice, "amount below 1 msat");
  if (!net.has_node(invoice_.destination) || !net.has_node(source_) ||
      !net.chains().contains(invoice_.asset_id))
    return fail(PaymentErrc::BadInvoice, "unknown destination or asset");

  std::set<ChannelId> exclude;
  for (std::uint64_t attempt = 0; attempt <= net.config().payment_retries; ++attempt) {
    ChannelId refused;
    try {
      if (try_route(net, exclude, refused)) return result_;
    } catch (const RoutingError& e) {
      return fail(PaymentErrc::NoRoute, e.what());
    }
    if (result_.status == PaymentStatus::Failed) return result_;
    exclude.insert(refused);
  }
  return fail(PaymentErrc::HtlcLockFailed, result_.detail);
}

bool PaymentAttempt::try_route(Network& net, const std::set<ChannelId>& exclude,
                               ChannelId& refused) {
  Ledger& ledger = net.chains().at(invoice_.asset_id);
  const std::uint64_t height = ledger.height();
  RouteRequest req{source_,   invoice_.destination,      invoice_.amount_msat,
                   invoice_.asset_id, height, net.config().delta_blocks,
                   net.config().hop_penalty, &exclude};
  Route route = find_route(net.graph(), req);
  result_.route = route;
  result_.hops = route.hops.size();

  auto key_of = [&net](const NodeId& n) { return net.node(n).node_key.pub; };
  OnionPacket packet = build_onion(route, invoice_.payment_hash, *net.signer(), key_of);

  locked_.clear();
  NodeId holder = source_;
  Msat amount = route.hops[0].amount_msat;
  std::uint64_t expiry = route.hops[0].expiry_height;
  ChannelId channel_id = route.hops[0].channel;
  for (std::size_t i = 0;; ++i) {
    Channel& ch = net.channel(channel_id);
    try {
      const Side offerer = *ch.side_of(holder);
      HtlcParams p;
      p.payment_hash = invoice_.payment_hash;
      p.amount_msat = amount;
      p.expiry_height = expiry;
      std::uint64_t id = add_htlc(ch, offerer, p, height);
      locked_.push_back(Locked{channel_id, id});
    } catch (const ChannelError& e) {
      result_.failed_hop = i + 1;
      result_.detail = channel_id + ": " + e.what();
      refused = channel_id;
      fail_back(net);
      return false;
    }

    // The receiving node opens its layer to learn what to do next.
    const NodeState& receiver = net.node(route.hops[i].node);
    PeeledOnion peeled = peel_onion(packet, receiver.node_key);
    if (peeled.payload.final) {
      if (peeled.payload.payment_hash != invoice_.payment_hash ||
          peeled.payload.amount_msat != amount || !receiver.preimages.contains(invoice_.payment_hash) ||
          amount < invoice_.amount_msat) {
        fail_back(net);
        result_.status = PaymentStatus::Failed;
        result_.error = PaymentErrc::BadInvoice;
        result_.detail = "destination rejected the HTLC";
        return false;
      }
      result_.status = PaymentStatus::Pending;
      return true;
    }
    // A forwarder only passes on what its fee and timeout margin allow.
    const GraphEdge* out = net.graph().has_edge(peeled.payload.next_channel)
                               ? &net.graph().edge(peeled.payload.next_channel)
                               : nullptr;
    if (!out || (out->a != receiver.id && out->b != receiver.id) ||
        amount != peeled.payload.amount_msat + out->policy.fee(peeled.payload.amount_msat) ||
        expiry < peeled.payload.expiry_height + net.config().delta_blocks) {
      result_.failed_hop = i + 2;
      result_.detail = "forwarding instruction rejected at " + receiver.id;
      refused = peeled.payload.next_channel;
      fail_back(net);
      return false;
    }
    holder = receiver.id;
    channel_id = peeled.payload.next_channel;
    amount = peeled.payload.amount_msat;
    expiry = peeled.payload.expiry_height;
    packet = std::move(peeled.inner);
  }
}

void PaymentAttempt::fail_back(Network& net) {
  for (auto it = locked_.rbegin(); it != locked_.rend(); ++it) {
    try {
      fail_htlc(net.channel(it->channel), it->htlc_id);
      it->resolved = true;
    } catch (const ChannelError&) {
      // left for expiry
    }
  }
  std::erase_if(locked_, [](const Locked& l) { return l.resolved; });
}

bool PaymentAttempt::settle(Network& net) {
  if (result_.status == PaymentStatus::Succeeded) return true;
  if (result_.status != PaymentStatus::Pending || locked_.size() != result_.route.hops.size())
    return false;
  const Ledger& ledger = net.chains().at(invoice_.asset_id);
  for (const NodeId& n : result_.route.node_path())
    if (!net.node(n).online) return false;
  for (std::size_t i = 0; i < locked_.size(); ++i) {
    const Channel& ch = net.channel(locked_[i].channel);
    const HtlcParams* h = ch.allocation().find_htlc(locked_[i].htlc_id);
    if (!ch.is_open() || !h || ledger.height() >= h->expiry_height) return false;
  }

  const Preimage pre = net.node(invoice_.destination).preimages.at(invoice_.payment_hash);
  for (std::size_t i = locked_.size(); i-- > 0;)
    settle_htlc(net.channel(locked_[i].channel), locked_[i].htlc_id, pre, ledger.height());
  locked_.clear();
  result_.status = PaymentStatus::Succeeded;
  result_.preimage = pre;
  result_.fees_msat = result_.route.fees();
  return true;
}

bool PaymentAttempt::expire(Network& net) {
  Ledger& ledger = net.chains().at(invoice_.asset_id);
  for (auto& l : locked_) {
    Channel& ch = net.channel(l.channel);
    const HtlcParams* h = ch.allocation().find_htlc(l.htlc_id);
    if (!h) {
      l.resolved = true;
      continue;
    }
    if (ledger.height() < h->expiry_height) continue;
    try {
      expire_htlc(ch, l.htlc_id, ledger);
      l.resolved = true;
    } catch (const ChannelError&) {
    } catch (const LedgerError&) {
    }
  }
  std::erase_if(locked_, [](const Locked& l) { return l.resolved; });
  if (!locked_.empty()) return false;
  if (result_.status == PaymentStatus::Pending) {
    result_.status = PaymentStatus::Failed;
    result_.error = PaymentErrc::PaymentTimeout;
    result_.detail = "HTLCs expired before the payment could settle";
  }
  return true;
}

PaymentResult send_payment(Network& net, const NodeId& source, const Invoice& invoice) {
  PaymentAttempt attempt(source, invoice);
  attempt.lock(net);
  if (attempt.result().status == PaymentStatus::Pending) attempt.settle(net);
  return attempt.result();
}

}  // namespace lnsim
