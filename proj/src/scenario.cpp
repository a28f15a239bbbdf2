#include "lnsim/scenario.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lnsim {

std::string node_name(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "n%05llu", static_cast<unsigned long long>(index));
  return buf;
}

std::string channel_name(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ch%06llu", static_cast<unsigned long long>(index));
  return buf;
}

Msat parse_amount_token(std::string_view token) {
  std::size_t i = 0;
  while (i < token.size() && ((token[i] >= '0' && token[i] <= '9') || token[i] == '.')) ++i;
  if (i == token.size()) return parse_amount(token);
  return parse_amount(std::string(token.substr(0, i)) + " " + std::string(token.substr(i)));
}

std::vector<NodeId> ScenarioConfig::resolved_nodes() const {
  if (!node_names.empty()) return node_names;
  std::vector<NodeId> out;
  const std::uint64_t n = resolved_node_count();
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(node_name(i));
  return out;
}

std::uint64_t ScenarioConfig::resolved_node_count() const {
  if (!node_names.empty()) return node_names.size();
  if (node_count == 0 && topology == TopologyKind::PaperSnapshot) return kSnapshotNodes;
  return node_count;
}

std::uint64_t ScenarioConfig::resolved_edge_count() const {
  if (edge_count == 0 && topology == TopologyKind::PaperSnapshot) return kSnapshotChannels;
  return edge_count;
}

Msat ScenarioConfig::resolved_total_capacity() const {
  if (total_capacity) return *total_capacity;
  return topology == TopologyKind::PaperSnapshot ? kSnapshotCapacity : 0;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

class Parser {
 public:
  explicit Parser(std::string field) : field_(std::move(field)) {}

  [[noreturn]] void fail(const std::string& why) const { throw ConfigError(field_, why); }

  std::uint64_t u64(std::string_view s) const {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size())
      fail("expected a non-negative integer, got '" + std::string(s) + "'");
    return v;
  }

  Msat amount(std::string_view s) const {
    try {
      return s.find(' ') == std::string_view::npos ? parse_amount_token(s) : parse_amount(s);
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }

  double fraction(std::string_view s) const {
    double v = 0;
    std::istringstream in{std::string(s)};
    in.imbue(std::locale::classic());
    if (!(in >> v) || !in.eof() || v < 0 || v > 1)
      fail("expected a fraction in [0, 1], got '" + std::string(s) + "'");
    return v;
  }

  bool boolean(std::string_view s) const {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail("expected true or false, got '" + std::string(s) + "'");
  }

  void arity(const std::vector<std::string>& w, std::size_t lo, std::size_t hi,
             const char* usage) const {
    if (w.size() < lo || w.size() > hi) fail(std::string("expected: ") + usage);
  }

 private:
  std::string field_;
};

}  // namespace

ScenarioConfig parse_scenario(std::string_view text) {
  ScenarioConfig cfg;
  std::string section;
  ChainParams* chain = nullptr;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no), "unterminated section header");
      auto head = words(line.substr(1, line.size() - 2));
      if (head.empty()) throw ConfigError("line " + std::to_string(line_no), "empty section");
      section = head[0];
      chain = nullptr;
      if (section == "chain") {
        if (head.size() != 2) throw ConfigError("chain", "expected [chain <ASSET>]");
        for (const auto& c : cfg.chains)
          if (c.asset_id == head[1]) throw ConfigError("chain " + head[1], "duplicate chain");
        ChainParams p;
        p.asset_id = head[1];
        cfg.chains.push_back(p);
        chain = &cfg.chains.back();
      } else if (section != "nodes" && section != "topology" && section != "workload" &&
                 section != "events") {
        throw ConfigError(section, "unknown section");
      } else if (head.size() != 1) {
        throw ConfigError(section, "section takes no arguments");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const std::string field = section.empty() ? key
                              : chain          ? "chain " + chain->asset_id + "." + key
                                               : section + "." + key;
    Parser p(field);
    if (value.empty()) p.fail("missing value");
    const auto w = words(value);

    if (section.empty()) {
      if (key == "seed") cfg.seed = p.u64(value);
      else if (key == "duration_ticks") cfg.duration_ticks = p.u64(value);
      else if (key == "settlement") {
        if (value == "lightning") cfg.settlement = Settlement::Lightning;
        else if (value == "onchain") cfg.settlement = Settlement::Onchain;
        else p.fail("expected lightning or onchain");
      } else if (key == "liveness_timeout_ticks") cfg.liveness_timeout_ticks = p.u64(value);
      else if (key == "to_self_delay_blocks") cfg.to_self_delay_blocks = p.u64(value);
      else if (key == "delta_blocks") cfg.delta_blocks = p.u64(value);
      else if (key == "hop_penalty_msat") cfg.hop_penalty_msat = p.amount(value);
      else if (key == "payment_retries") cfg.payment_retries = p.u64(value);
      else if (key == "fee_base_msat") cfg.fee_base_msat = p.amount(value);
      else if (key == "fee_ppm") cfg.fee_ppm = p.u64(value);
      else if (key == "hop_latency_ticks") cfg.hop_latency_ticks = p.u64(value);
      else if (key == "auto_punish") cfg.auto_punish = p.boolean(value);
      else p.fail("unknown key");
    } else if (chain) {
      if (key == "tps_cap") chain->tps_cap = p.u64(value);
      else if (key == "block_interval_secs") chain->block_interval_secs = p.u64(value);
      else if (key == "fee_msat") chain->fee_msat = p.amount(value);
      else if (key == "genesis") {
        p.arity(w, 2, 2, "genesis = <node> <amount>");
        cfg.genesis.push_back(GenesisSpec{chain->asset_id, w[0], p.amount(w[1])});
      } else p.fail("unknown key");
    } else if (section == "nodes") {
      if (key == "names") {
        for (const auto& n : w) cfg.node_names.push_back(n);
      } else if (key == "count") cfg.node_count = p.u64(value);
      else if (key == "active") cfg.active_count = p.u64(value);
      else p.fail("unknown key");
    } else if (section == "topology") {
      if (key == "kind") {
        if (value == "explicit") cfg.topology = TopologyKind::Explicit;
        else if (value == "random") cfg.topology = TopologyKind::Random;
        else if (value == "paper_snapshot") cfg.topology = TopologyKind::PaperSnapshot;
        else p.fail("expected explicit, random or paper_snapshot");
      } else if (key == "channel") {
        p.arity(w, 6, 6, "channel = <id> <node_a> <node_b> <asset> <fund_a> <fund_b>");
        cfg.channels.push_back(
            ChannelSpec{w[0], w[1], w[2], w[3], p.amount(w[4]), p.amount(w[5])});
      } else if (key == "edges") cfg.edge_count = p.u64(value);
      else if (key == "capacity_min") cfg.capacity_min = p.amount(value);
      else if (key == "capacity_max") cfg.capacity_max = p.amount(value);
      else if (key == "total_capacity") cfg.total_capacity = p.amount(value);
      else p.fail("unknown key");
    } else if (section == "workload") {
      if (key == "payment") {
        p.arity(w, 4, 5, "payment = <tick> <src> <dst> <amount> [asset]");
        cfg.payments.push_back(
            PaymentSpec{p.u64(w[0]), w[1], w[2], p.amount(w[3]), w.size() == 5 ? w[4] : ""});
      } else if (key == "repeat") {
        p.arity(w, 5, 6, "repeat = <start_tick> <count> <src> <dst> <amount> [tick_step]");
        const std::uint64_t start = p.u64(w[0]);
        const std::uint64_t count = p.u64(w[1]);
        const Msat amount = p.amount(w[4]);
        const std::uint64_t step = w.size() == 6 ? p.u64(w[5]) : 0;
        for (std::uint64_t i = 0; i < count; ++i)
          cfg.payments.push_back(PaymentSpec{start + i * step, w[2], w[3], amount, ""});
      } else if (key == "random") {
        p.arity(w, 5, 5, "random = <start_tick> <end_tick> <count> <min_amount> <max_amount>");
        RandomWorkload r{p.u64(w[0]), p.u64(w[1]), p.u64(w[2]), p.amount(w[3]), p.amount(w[4])};
        if (r.end_tick < r.start_tick) p.fail("end_tick before start_tick");
        if (r.min_msat < 1 || r.max_msat < r.min_msat) p.fail("need 1 <= min_amount <= max_amount");
        cfg.random_payments.push_back(r);
      } else p.fail("unknown key");
    } else if (section == "events") {
      EventSpec ev;
      if (w.empty()) p.fail("missing tick");
      ev.tick = p.u64(w[0]);
      if (key == "offline" || key == "online") {
        p.arity(w, 2, SIZE_MAX, "offline|online = <tick> <node>...");
        ev.kind = key == "offline" ? EventKind::NodeOffline : EventKind::NodeOnline;
        ev.nodes.assign(w.begin() + 1, w.end());
      } else if (key == "force_revoked") {
        p.arity(w, 4, 4, "force_revoked = <tick> <node> <channel> <version>");
        ev.kind = EventKind::ForceBroadcastRevoked;
        ev.nodes = {w[1]};
        ev.channel = w[2];
        ev.version = p.u64(w[3]);
      } else if (key == "close") {
        p.arity(w, 2, 2, "close = <tick> <channel>");
        ev.kind = EventKind::Close;
        ev.channel = w[1];
      } else if (key == "offline_fraction") {
        p.arity(w, 2, 2, "offline_fraction = <tick> <fraction>");
        ev.kind = EventKind::OfflineFraction;
        ev.fraction = p.fraction(w[1]);
      } else if (key == "swap") {
        p.arity(w, 7, 7,
                "swap = <tick> <initiator> <responder> <channel_x> <channel_y> <amount_x> "
                "<amount_y>");
        ev.kind = EventKind::Swap;
        ev.swap = SwapSpec{w[1], w[2], w[3], w[4], p.amount(w[5]), p.amount(w[6])};
      } else {
        p.fail("unknown event");
      }
      cfg.events.push_back(std::move(ev));
    }
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ScenarioNotFound(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace lnsim
