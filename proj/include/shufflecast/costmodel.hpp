#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "shufflecast/error.hpp"
#include "shufflecast/topology.hpp"

namespace shufflecast {

/// Per-rate electrical figures for one switch port and one transceiver.
struct RateEntry {
  double port_w = 0;
  double xcvr_w = 0;
  double port_usd = 0;
  double xcvr_usd = 0;

  friend bool operator==(const RateEntry&, const RateEntry&) = default;
};

inline constexpr double kDefaultFiberUsdPer100m = 37.37;

/// User-supplied component prices and power draws, keyed by rate label
/// ("10G", "25G", ...) and splitter fanout.
struct ComponentCatalog {
  std::map<std::string, RateEntry> rates;
  std::map<std::uint32_t, double> splitter_usd;
  double fiber_usd_per_100m = kDefaultFiberUsdPer100m;

  const RateEntry& rate(const std::string& label) const {
    const auto it = rates.find(label);
    require(it != rates.end(), "catalog has no entry for rate '" + label + "'");
    return it->second;
  }

  double splitter(std::uint32_t fanout) const {
    const auto it = splitter_usd.find(fanout);
    require(it != splitter_usd.end(), "catalog has no price for a 1:" + std::to_string(fanout) + " splitter");
    return it->second;
  }

  /// Every value multiplied by `factor`.
  ComponentCatalog scaled(double factor) const {
    ComponentCatalog c = *this;
    for (auto& [label, e] : c.rates) e = {e.port_w * factor, e.xcvr_w * factor, e.port_usd * factor, e.xcvr_usd * factor};
    for (auto& [fanout, usd] : c.splitter_usd) usd *= factor;
    c.fiber_usd_per_100m *= factor;
    return c;
  }

  friend bool operator==(const ComponentCatalog&, const ComponentCatalog&) = default;
};

inline void validate_catalog(const ComponentCatalog& c) {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0; };
  for (const auto& [label, e] : c.rates) {
    require(ok(e.port_w) && ok(e.xcvr_w) && ok(e.port_usd) && ok(e.xcvr_usd),
            "catalog rate '" + label + "' has a negative or non-finite value");
  }
  for (const auto& [fanout, usd] : c.splitter_usd) {
    require(fanout >= 1, "catalog splitter fanout must be >= 1");
    require(ok(usd), "catalog splitter 1:" + std::to_string(fanout) + " has a negative or non-finite price");
  }
  require(ok(c.fiber_usd_per_100m), "catalog fiber price must be >= 0");
}

/// Splitter insertion loss in dB.
inline double insertion_loss_db(double fanout) {
  require(std::isfinite(fanout) && fanout >= 1, "splitter fanout must be >= 1");
  return 0.8 + 3.4 * std::log2(fanout);
}

/// Minimal-layer packet-switched multicast core over N ToR uplinks built from
/// radix-R switches.
struct CoreBuild {
  std::uint64_t n = 0;
  std::uint32_t radix = 0;
  std::uint64_t extra_used_ports = 0;
  std::uint64_t switches = 0;
  std::uint32_t layers = 0;

  double excess_ratio() const { return static_cast<double>(extra_used_ports) / static_cast<double>(n); }
};

/// Greedy layering: below the root, every switch takes up to R-1 children
/// and one uplink; once at most R links remain a root switch absorbs them.
/// Only used ports are counted.
inline CoreBuild build_minimal_layer_core(std::uint64_t n, std::uint32_t radix) {
  require(n >= 2, "core needs at least 2 ToRs");
  require(radix >= 2, "switch radix must be >= 2");
  // With R=2 each aggregation switch has one child and the layering never
  // shrinks.
  require(radix > 2 || n <= 2, "radix 2 switches cannot aggregate more than 2 ToRs");
  CoreBuild b{n, radix, 0, 0, 0};
  std::uint64_t links = n;
  while (links > radix) {
    const std::uint64_t sw = (links + radix - 2) / (radix - 1);
    b.extra_used_ports += links + sw;
    b.switches += sw;
    ++b.layers;
    links = sw;
  }
  b.extra_used_ports += links;
  ++b.switches;
  ++b.layers;
  return b;
}

enum class Architecture : std::uint8_t { shufflecast, p2p_chain, ip_multicast };

inline Architecture parse_architecture(std::string_view tag) {
  if (tag == "shufflecast") return Architecture::shufflecast;
  if (tag == "p2p_chain") return Architecture::p2p_chain;
  if (tag == "ip_multicast") return Architecture::ip_multicast;
  throw ValidationError("unknown architecture '" + std::string(tag) + "' (expected shufflecast, p2p_chain or ip_multicast)");
}

inline const char* to_string(Architecture a) {
  switch (a) {
    case Architecture::shufflecast: return "shufflecast";
    case Architecture::p2p_chain: return "p2p_chain";
    case Architecture::ip_multicast: return "ip_multicast";
  }
  return "?";
}

/// Active ports and transceivers of one one-to-all multicast tree. Every
/// active port carries one transceiver.
struct PortCount {
  Architecture architecture = Architecture::shufflecast;
  std::uint64_t ports = 0;
  std::uint64_t transceivers = 0;
};

namespace detail {

inline std::uint64_t tor_count(Params params) {
  return static_cast<std::uint64_t>(validated_rows(params, Topology::kDefaultMaxNodes)) * params.k;
}

/// k * p^(k-1), the relay count of every one-to-all tree.
inline std::uint64_t relays_per_tree(Params params) {
  return static_cast<std::uint64_t>(validated_rows(params, Topology::kDefaultMaxNodes)) / params.p * params.k;
}

}  // namespace detail

/// Relays use a receive and a transmit port, every other ToR only receives.
inline PortCount shufflecast_ports(Params params) {
  const std::uint64_t relays = detail::relays_per_tree(params);
  const std::uint64_t ports = relays * 2 + (detail::tor_count(params) - relays);
  return {Architecture::shufflecast, ports, ports};
}

/// Best case for an overlay: a chain through every ToR at line rate.
inline PortCount p2p_chain_ports(std::uint64_t n) {
  require(n >= 2, "p2p chain needs at least 2 ToRs");
  return {Architecture::p2p_chain, 2 * n, 2 * n};
}

inline PortCount ip_multicast_ports(std::uint64_t n, std::uint32_t radix) {
  const std::uint64_t ports = n + build_minimal_layer_core(n, radix).extra_used_ports;
  return {Architecture::ip_multicast, ports, ports};
}

/// Inputs for count_ports. Shufflecast uses `params`; the others use `n`
/// (defaulting to the Shufflecast size when zero) and `radix`.
struct PortInputs {
  Params params;
  std::uint64_t n = 0;
  std::uint32_t radix = 0;
};

inline PortCount count_ports(Architecture arch, const PortInputs& in) {
  const std::uint64_t n = in.n != 0 ? in.n : detail::tor_count(in.params);
  switch (arch) {
    case Architecture::shufflecast: return shufflecast_ports(in.params);
    case Architecture::p2p_chain: return p2p_chain_ports(n);
    case Architecture::ip_multicast:
      require(in.radix != 0, "ip_multicast port count needs a switch radix");
      return ip_multicast_ports(n, in.radix);
  }
  throw ValidationError("unknown architecture");
}

inline PortCount count_ports(std::string_view arch, const PortInputs& in) {
  return count_ports(parse_architecture(arch), in);
}

inline double power_per_tree(const ComponentCatalog& catalog, const std::string& rate, const PortCount& pc) {
  const RateEntry& e = catalog.rate(rate);
  return static_cast<double>(pc.ports) * e.port_w + static_cast<double>(pc.transceivers) * e.xcvr_w;
}

/// How many times less `candidate` draws than `baseline`.
inline double power_improvement(double baseline_w, double candidate_w) {
  require(candidate_w > 0, "candidate power must be > 0");
  return baseline_w / candidate_w;
}

/// Catalog-free form: the per-port figures cancel.
inline double power_improvement(const PortCount& baseline, const PortCount& candidate) {
  require(candidate.ports > 0, "candidate uses no ports");
  return static_cast<double>(baseline.ports) / static_cast<double>(candidate.ports);
}

struct CapitalCost {
  Architecture architecture = Architecture::shufflecast;
  double ports_usd = 0;
  double xcvr_usd = 0;
  double splitter_usd = 0;
  double fiber_usd = 0;
  std::uint64_t ports = 0;
  std::uint64_t fiber_runs = 0;

  double total() const { return ports_usd + xcvr_usd + splitter_usd + fiber_usd; }
};

inline double fiber_run_usd(const ComponentCatalog& catalog, double length_m) {
  require(std::isfinite(length_m) && length_m >= 0, "fiber length must be >= 0");
  return catalog.fiber_usd_per_100m * length_m / 100.0;
}

/// Components of one Shufflecast one-to-all tree: the tree's active ports and
/// transceivers, plus the splitter and p outgoing fiber runs of each relay.
inline CapitalCost shufflecast_tree_cost(const ComponentCatalog& catalog, const std::string& rate, Params params,
                                         double fiber_length_m) {
  const RateEntry& e = catalog.rate(rate);
  const PortCount pc = shufflecast_ports(params);
  const std::uint64_t relays = detail::relays_per_tree(params);
  CapitalCost c{Architecture::shufflecast};
  c.ports = pc.ports;
  c.ports_usd = static_cast<double>(pc.ports) * e.port_usd;
  c.xcvr_usd = static_cast<double>(pc.transceivers) * e.xcvr_usd;
  c.splitter_usd = static_cast<double>(relays) * catalog.splitter(params.p);
  c.fiber_runs = relays * params.p;
  c.fiber_usd = static_cast<double>(c.fiber_runs) * fiber_run_usd(catalog, fiber_length_m);
  return c;
}

/// Hardware one ToR adds: 1 splitter, p transceivers, p ports, p fiber runs.
inline CapitalCost shufflecast_per_tor_cost(const ComponentCatalog& catalog, const std::string& rate, Params params,
                                            double fiber_length_m) {
  const RateEntry& e = catalog.rate(rate);
  CapitalCost c{Architecture::shufflecast};
  c.ports = params.p;
  c.ports_usd = params.p * e.port_usd;
  c.xcvr_usd = params.p * e.xcvr_usd;
  c.splitter_usd = catalog.splitter(params.p);
  c.fiber_runs = params.p;
  c.fiber_usd = params.p * fiber_run_usd(catalog, fiber_length_m);
  return c;
}

/// One IP-multicast tree over the minimal-layer core: every used port with
/// its transceiver, and one duplex run per used link (two ports per link).
inline CapitalCost ip_multicast_tree_cost(const ComponentCatalog& catalog, const std::string& rate, std::uint64_t n,
                                          std::uint32_t radix, double fiber_length_m) {
  const RateEntry& e = catalog.rate(rate);
  const PortCount pc = ip_multicast_ports(n, radix);
  CapitalCost c{Architecture::ip_multicast};
  c.ports = pc.ports;
  c.ports_usd = static_cast<double>(pc.ports) * e.port_usd;
  c.xcvr_usd = static_cast<double>(pc.transceivers) * e.xcvr_usd;
  c.fiber_runs = pc.ports / 2;
  c.fiber_usd = static_cast<double>(c.fiber_runs) * fiber_run_usd(catalog, fiber_length_m);
  return c;
}

struct CapitalComparison {
  CapitalCost shufflecast;
  CapitalCost ip_multicast;
  CapitalCost shufflecast_per_tor;

  double improvement() const { return ip_multicast.total() / shufflecast.total(); }
};

/// Per-tree capital cost of Shufflecast against IP multicast over the same
/// number of ToRs.
inline CapitalComparison capital_cost(const ComponentCatalog& catalog, const std::string& rate, Params params,
                                      std::uint32_t radix, double fiber_length_m) {
  validate_catalog(catalog);
  const std::uint64_t n = detail::tor_count(params);
  CapitalComparison out{shufflecast_tree_cost(catalog, rate, params, fiber_length_m),
                        ip_multicast_tree_cost(catalog, rate, n, radix, fiber_length_m),
                        shufflecast_per_tor_cost(catalog, rate, params, fiber_length_m)};
  require(out.shufflecast.total() > 0, "catalog prices a Shufflecast tree at zero");
  return out;
}

}  // namespace shufflecast
