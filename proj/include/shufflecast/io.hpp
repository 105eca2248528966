#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "shufflecast/controlplane.hpp"
#include "shufflecast/costmodel.hpp"
#include "shufflecast/error.hpp"
#include "shufflecast/flowsim.hpp"
#include "shufflecast/routing.hpp"
#include "shufflecast/topology.hpp"

namespace shufflecast {

using json = nlohmann::json;

// ---- CSV ----

/// Shortest round-trip text for a double, always with '.' as separator.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  check_invariant(res.ec == std::errc(), "number formatting failed");
  return {buf, res.ptr};
}

inline std::string format_number(std::uint64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Accumulates comma-separated rows under a header.
class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      if (!first) text_ += ',';
      text_ += h;
      first = false;
    }
    text_ += '\n';
  }

  CsvWriter& row() {
    if (open_) text_ += '\n';
    open_ = true;
    fresh_ = true;
    return *this;
  }

  CsvWriter& cell(const std::string& s) { return raw(csv_field(s)); }
  CsvWriter& cell(const char* s) { return raw(csv_field(s)); }
  CsvWriter& cell(double v) { return raw(format_number(v)); }
  CsvWriter& cell(std::uint64_t v) { return raw(format_number(v)); }
  CsvWriter& cell(std::uint32_t v) { return raw(format_number(static_cast<std::uint64_t>(v))); }
  CsvWriter& cell(bool v) { return raw(v ? "true" : "false"); }

  std::string str() const { return open_ ? text_ + '\n' : text_; }

 private:
  CsvWriter& raw(const std::string& s) {
    if (!fresh_) text_ += ',';
    text_ += s;
    fresh_ = false;
    return *this;
  }

  std::string text_;
  bool open_ = false;
  bool fresh_ = true;
};

// ---- files ----

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot read file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

/// Writes to a sibling temp file, then renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot write file '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw ValidationError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ValidationError("cannot replace '" + path.string() + "'");
  }
}

// ---- JSON field helpers ----

namespace detail {

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
  require(j.is_object(), where + ": expected a JSON object");
  const auto it = j.find(key);
  require(it != j.end(), where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + ": field '" + key + "' has the wrong type");
  }
}

inline std::uint32_t get_u32(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  require(it != j.end(), where + ": missing field '" + key + "'");
  require(it->is_number_unsigned() || (it->is_number_integer() && it->get<std::int64_t>() >= 0),
          where + ": field '" + key + "' must be a non-negative integer");
  const auto v = it->get<std::uint64_t>();
  require(v <= 0xffffffffULL, where + ": field '" + key + "' is too large");
  return static_cast<std::uint32_t>(v);
}

inline double get_number(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  require(it != j.end(), where + ": missing field '" + key + "'");
  require(it->is_number(), where + ": field '" + key + "' must be a number");
  return it->get<double>();
}

}  // namespace detail

// ---- topology ----

inline json to_json(const Topology& topo) {
  json tors = json::array();
  for (TorIndex i = 0; i < topo.size(); ++i) {
    const ToRId id = topo.decode(i);
    json nb = json::array();
    for (const TorIndex v : topo.neighbors(i)) nb.push_back(v);
    tors.push_back({{"id", i}, {"column", id.column}, {"row_digits", id.digits}, {"neighbors", std::move(nb)}});
  }
  return {{"p", topo.p()}, {"k", topo.k()}, {"n", topo.size()}, {"tors", std::move(tors)}};
}

/// Rebuilds the topology from its export and checks every listed ToR against
/// it, so a tampered file is rejected rather than silently regenerated.
inline Topology topology_from_json(const json& j) {
  const Params params{detail::get_u32(j, "p", "topology"), detail::get_u32(j, "k", "topology")};
  Topology topo(params);
  require(detail::get_u32(j, "n", "topology") == topo.size(), "topology: n does not equal k*p^k");
  require(j.contains("tors"), "topology: missing field 'tors'");
  const auto& tors = j["tors"];
  require(tors.is_array() && tors.size() == topo.size(), "topology: tors must list all N ToRs");
  for (TorIndex i = 0; i < topo.size(); ++i) {
    const json& t = tors[i];
    const std::string where = "topology ToR " + std::to_string(i);
    require(detail::get_u32(t, "id", where) == i, where + ": ids must be listed in order");
    const ToRId id{detail::get_u32(t, "column", where), detail::get_field<std::vector<std::uint32_t>>(t, "row_digits", where)};
    require(topo.encode(id) == i, where + ": column/row_digits do not match the id");
    const auto nb = detail::get_field<std::vector<TorIndex>>(t, "neighbors", where);
    const auto expect = topo.neighbors(i);
    require(std::equal(nb.begin(), nb.end(), expect.begin(), expect.end()),
            where + ": neighbors differ from the splitter wiring");
  }
  return topo;
}

// ---- routing ----

inline json to_json(const MulticastTree& tree) {
  json parents = json::array();
  for (TorIndex v = 0; v < tree.parent.size(); ++v) {
    parents.push_back({{"tor", v}, {"parent", tree.parent[v] == kNoTor ? json(nullptr) : json(tree.parent[v])}});
  }
  return {{"src", tree.src}, {"parents", std::move(parents)}, {"relays", tree.relays}, {"max_depth", tree.max_depth}};
}

inline std::string routes_csv(const std::vector<Route>& routes) {
  CsvWriter csv({"src", "dst", "hop_index", "tor"});
  for (const auto& r : routes) {
    for (std::size_t h = 0; h < r.hops.size(); ++h) {
      csv.row().cell(r.src).cell(r.dst).cell(static_cast<std::uint64_t>(h)).cell(r.hops[h]);
    }
  }
  return csv.str();
}

inline json to_json(const Route& r) {
  return {{"src", r.src}, {"dst", r.dst}, {"hops", r.hops}, {"hop_count", r.hop_count()}};
}

// ---- control plane ----

inline json to_json(const RuleDelta& d) {
  auto pairs = [](const std::vector<RulePair>& v) {
    json a = json::array();
    for (const auto& r : v) a.push_back({{"owner", r.owner}, {"source", r.source}});
    return a;
  };
  return {{"deactivate", pairs(d.deactivate)}, {"activate", pairs(d.activate)}};
}

inline RuleDelta rule_delta_from_json(const json& j) {
  auto pairs = [](const json& a, const char* key) {
    require(a.is_array(), std::string("rule delta: '") + key + "' must be an array");
    std::vector<RulePair> v;
    for (const auto& e : a) v.push_back({detail::get_u32(e, "owner", "rule delta"), detail::get_u32(e, "source", "rule delta")});
    return v;
  };
  require(j.is_object() && j.contains("deactivate") && j.contains("activate"),
          "rule delta: needs 'deactivate' and 'activate' arrays");
  return {pairs(j["deactivate"], "deactivate"), pairs(j["activate"], "activate")};
}

inline json to_json(const RecoveryPlan& plan) {
  return {{"failed", plan.failed},
          {"mirror_failed", plan.mirror_failed},
          {"precedent_relay", plan.precedent_relay},
          {"mirror_precedent", plan.mirror_precedent},
          {"y", plan.y},
          {"y_prime", plan.y_prime},
          {"moved_sources", plan.moved_sources},
          {"delta", to_json(plan.delta)}};
}

/// Every (owner, source) rule in the state, including deactivated ones.
inline std::string rules_csv(const NetworkState& state) {
  CsvWriter csv({"owner", "source", "active"});
  for (TorIndex u = 0; u < state.topology().size(); ++u) {
    for (const auto& r : state.rule_table(u)) csv.row().cell(r.owner).cell(r.source).cell(r.active);
  }
  return csv.str();
}

inline json to_json(const GroupMembership& g) {
  json members = json::object();
  for (const auto& [tor, ports] : g.members) members[std::to_string(tor)] = ports;
  return {{"name", g.group}, {"members", std::move(members)}};
}

inline GroupMembership group_from_json(const json& j) {
  GroupMembership g;
  g.group = detail::get_field<std::string>(j, "name", "group");
  const auto it = j.find("members");
  require(it != j.end() && it->is_object(), "group '" + g.group + "': members must map ToR ids to port lists");
  for (const auto& [key, ports] : it->items()) {
    TorIndex tor = 0;
    const auto res = std::from_chars(key.data(), key.data() + key.size(), tor);
    require(res.ec == std::errc() && res.ptr == key.data() + key.size(),
            "group '" + g.group + "': member key '" + key + "' is not a ToR index");
    require(ports.is_array(), "group '" + g.group + "': ports of ToR " + key + " must be an array");
    for (const auto& port : ports) {
      require(port.is_number_integer() && port.get<std::int64_t>() >= 0 && port.get<std::int64_t>() <= 0xffffffffLL,
              "group '" + g.group + "': ports must be non-negative integers");
      g.members[tor].insert(static_cast<std::uint32_t>(port.get<std::int64_t>()));
    }
  }
  return g;
}

// ---- cost model ----

inline ComponentCatalog catalog_from_json(const json& j) {
  ComponentCatalog c;
  const auto rates = j.find("rates");
  require(rates != j.end() && rates->is_object(), "catalog: 'rates' must be an object");
  for (const auto& [label, e] : rates->items()) {
    const std::string where = "catalog rate '" + label + "'";
    c.rates[label] = {detail::get_number(e, "port_w", where), detail::get_number(e, "xcvr_w", where),
                      detail::get_number(e, "port_usd", where), detail::get_number(e, "xcvr_usd", where)};
  }
  const auto split = j.find("splitter_usd");
  if (split != j.end()) {
    require(split->is_object(), "catalog: 'splitter_usd' must be an object");
    for (const auto& [key, usd] : split->items()) {
      std::uint32_t fanout = 0;
      const auto res = std::from_chars(key.data(), key.data() + key.size(), fanout);
      require(res.ec == std::errc() && res.ptr == key.data() + key.size(),
              "catalog: splitter key '" + key + "' is not a fanout");
      require(usd.is_number(), "catalog: splitter price for fanout " + key + " must be a number");
      c.splitter_usd[fanout] = usd.get<double>();
    }
  }
  if (j.contains("fiber_usd_per_100m")) c.fiber_usd_per_100m = detail::get_number(j, "fiber_usd_per_100m", "catalog");
  validate_catalog(c);
  return c;
}

inline json to_json(const ComponentCatalog& c) {
  json rates = json::object();
  for (const auto& [label, e] : c.rates) {
    rates[label] = {{"port_w", e.port_w}, {"xcvr_w", e.xcvr_w}, {"port_usd", e.port_usd}, {"xcvr_usd", e.xcvr_usd}};
  }
  json split = json::object();
  for (const auto& [fanout, usd] : c.splitter_usd) split[std::to_string(fanout)] = usd;
  return {{"rates", std::move(rates)}, {"splitter_usd", std::move(split)}, {"fiber_usd_per_100m", c.fiber_usd_per_100m}};
}

// ---- flow schedules ----

/// A parsed schedule: the flows plus any groups defined inline.
struct Schedule {
  std::vector<FlowSpec> flows;
  std::vector<GroupMembership> groups;
};

/// Accepts a JSON array of flows, or {"groups": [...], "flows": [...]}.
/// A flow's "group" is "all", the name of a known group, or an inline group
/// object.
inline Schedule schedule_from_json(const json& j) {
  Schedule s;
  const json* flows = &j;
  if (j.is_object()) {
    if (const auto g = j.find("groups"); g != j.end()) {
      require(g->is_array(), "schedule: 'groups' must be an array");
      for (const auto& e : *g) s.groups.push_back(group_from_json(e));
    }
    const auto f = j.find("flows");
    require(f != j.end(), "schedule: missing 'flows'");
    flows = &*f;
  }
  require(flows->is_array(), "schedule: flows must be a JSON array");
  for (const auto& e : *flows) {
    FlowSpec f;
    f.id = detail::get_field<std::string>(e, "id", "schedule flow");
    const std::string where = "schedule flow '" + f.id + "'";
    f.source = detail::get_u32(e, "source", where);
    if (e.contains("source_port") && !e.at("source_port").is_null()) f.source_port = detail::get_u32(e, "source_port", where);
    if (const auto g = e.find("group"); g != e.end()) {
      if (g->is_string()) {
        f.group = g->get<std::string>();
      } else {
        GroupMembership inline_group = group_from_json(*g);
        f.group = inline_group.group;
        s.groups.push_back(std::move(inline_group));
      }
    }
    f.volume_bytes = detail::get_number(e, "volume_bytes", where);
    f.start_s = e.contains("start_s") ? detail::get_number(e, "start_s", where) : 0.0;
    require(f.volume_bytes >= 0, where + ": volume_bytes must be >= 0");
    require(f.start_s >= 0, where + ": start_s must be >= 0");
    s.flows.push_back(std::move(f));
  }
  return s;
}

inline json to_json(const Schedule& s) {
  json groups = json::array();
  for (const auto& g : s.groups) groups.push_back(to_json(g));
  json flows = json::array();
  for (const auto& f : s.flows) {
    json e = {{"id", f.id}, {"source", f.source}, {"group", f.group}, {"volume_bytes", f.volume_bytes}, {"start_s", f.start_s}};
    if (f.source_port) e["source_port"] = *f.source_port;
    flows.push_back(std::move(e));
  }
  return {{"groups", std::move(groups)}, {"flows", std::move(flows)}};
}

inline std::string trace_csv(const SimulationTrace& t) {
  CsvWriter csv({"time_s", "flow_id", "rate_bps"});
  for (const auto& r : t.rows) csv.row().cell(r.time_s).cell(r.flow_id).cell(r.rate_bps);
  return csv.str();
}

inline std::string summary_csv(const SimulationTrace& t) {
  CsvWriter csv({"flow_id", "start", "completion", "mean_rate"});
  for (const auto& s : t.summaries) csv.row().cell(s.flow_id).cell(s.start_s).cell(s.completion_s).cell(s.mean_rate_bps);
  return csv.str();
}

inline std::string epochs_csv(const SimulationTrace& t) {
  CsvWriter csv({"begin_s", "end_s", "active_flows", "aggregate_bps", "bottleneck_utilization"});
  for (const auto& e : t.epochs) {
    csv.row().cell(e.begin_s).cell(e.end_s).cell(e.active_flows).cell(e.aggregate_bps).cell(e.bottleneck_utilization);
  }
  return csv.str();
}

inline json to_json(const SimulationTrace& t) {
  json rows = json::array();
  for (const auto& r : t.rows) rows.push_back({{"time_s", r.time_s}, {"flow_id", r.flow_id}, {"rate_bps", r.rate_bps}});
  json sums = json::array();
  for (const auto& s : t.summaries) {
    sums.push_back({{"flow_id", s.flow_id}, {"start", s.start_s}, {"completion", s.completion_s}, {"mean_rate", s.mean_rate_bps}});
  }
  json epochs = json::array();
  for (const auto& e : t.epochs) {
    epochs.push_back({{"begin_s", e.begin_s},
                      {"end_s", e.end_s},
                      {"active_flows", e.active_flows},
                      {"aggregate_bps", e.aggregate_bps},
                      {"bottleneck_utilization", e.bottleneck_utilization}});
  }
  return {{"trace", std::move(rows)}, {"summary", std::move(sums)}, {"epochs", std::move(epochs)}};
}

}  // namespace shufflecast
