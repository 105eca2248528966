#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "shufflecast/controlplane.hpp"
#include "shufflecast/error.hpp"
#include "shufflecast/topology.hpp"

namespace shufflecast {

inline constexpr double kFillEpsilon = 1e-9;

/// Link capacities in bits/s. Zero means "use line_rate_bps".
struct CapacityModel {
  double line_rate_bps = 10e9;
  double transmit_bps = 0;
  double receive_bps = 0;
  /// Server downlinks are only modeled when set.
  std::optional<double> server_downlink_bps;

  double transmit() const { return transmit_bps > 0 ? transmit_bps : line_rate_bps; }
  double receive() const { return receive_bps > 0 ? receive_bps : line_rate_bps; }

  static CapacityModel uniform(double line_rate_bps, bool with_server_downlinks = false) {
    CapacityModel m;
    m.line_rate_bps = line_rate_bps;
    if (with_server_downlinks) m.server_downlink_bps = line_rate_bps;
    return m;
  }
};

inline void validate_capacity(const CapacityModel& m) {
  require(std::isfinite(m.line_rate_bps) && m.line_rate_bps > 0, "line rate must be > 0");
  require(std::isfinite(m.transmit_bps) && m.transmit_bps >= 0, "transmit capacity must be >= 0");
  require(std::isfinite(m.receive_bps) && m.receive_bps >= 0, "receive capacity must be >= 0");
  if (m.server_downlink_bps) {
    require(std::isfinite(*m.server_downlink_bps) && *m.server_downlink_bps > 0, "server downlink capacity must be > 0");
  }
}

enum class ResourceKind : std::uint8_t { transmit, receive, server_downlink };

inline const char* to_string(ResourceKind kind) {
  switch (kind) {
    case ResourceKind::transmit: return "transmit";
    case ResourceKind::receive: return "receive";
    case ResourceKind::server_downlink: return "server_downlink";
  }
  return "?";
}

/// A capacity-limited resource. `port` is the splitter output digit for a
/// receive lane and the server port for a downlink.
struct ResourceId {
  ResourceKind kind = ResourceKind::transmit;
  TorIndex tor = 0;
  std::uint32_t port = 0;

  friend auto operator<=>(const ResourceId&, const ResourceId&) = default;
};

inline std::string to_string(const ResourceId& r) {
  std::string s = std::string(to_string(r.kind)) + ":" + std::to_string(r.tor);
  if (r.kind != ResourceKind::transmit) s += "/" + std::to_string(r.port);
  return s;
}

struct FillingResult {
  std::vector<double> rate;
  /// Index of the resource that froze each flow.
  std::vector<std::uint32_t> binding;
  std::vector<double> load;
};

/// Max-min fair allocation by progressive filling.
///
/// `usage[f]` lists the resources flow f consumes one unit of rate on, with no
/// duplicates. Every flow must use at least one resource. A resource counts as
/// saturated once its residual drops to eps * capacity.
inline FillingResult progressive_filling(const std::vector<double>& capacity,
                                         const std::vector<std::vector<std::uint32_t>>& usage,
                                         double eps = kFillEpsilon) {
  const std::size_t nr = capacity.size();
  const std::size_t nf = usage.size();
  for (const double c : capacity) require(c > 0 && std::isfinite(c), "resource capacity must be positive");

  std::vector<std::vector<std::uint32_t>> users(nr);
  for (std::size_t f = 0; f < nf; ++f) {
    check_invariant(!usage[f].empty(), "flow " + std::to_string(f) + " uses no resource");
    for (const std::uint32_t r : usage[f]) {
      require(r < nr, "flow uses an unknown resource");
      users[r].push_back(static_cast<std::uint32_t>(f));
    }
  }

  FillingResult out;
  out.rate.assign(nf, 0.0);
  out.binding.assign(nf, std::numeric_limits<std::uint32_t>::max());
  out.load.assign(nr, 0.0);
  std::vector<double> residual = capacity;
  std::vector<std::uint32_t> unfrozen(nr, 0);
  std::vector<char> frozen(nf, 0);
  std::vector<std::uint32_t> live;
  for (std::uint32_t r = 0; r < nr; ++r) {
    unfrozen[r] = static_cast<std::uint32_t>(users[r].size());
    if (unfrozen[r] > 0) live.push_back(r);
  }
  std::size_t remaining = nf;
  double level = 0.0;

  while (remaining > 0) {
    double step = std::numeric_limits<double>::infinity();
    for (const std::uint32_t r : live) step = std::min(step, residual[r] / unfrozen[r]);
    check_invariant(std::isfinite(step), "progressive filling: unfrozen flows but no live resource");
    level += step;
    for (const std::uint32_t r : live) residual[r] -= step * unfrozen[r];

    std::vector<std::uint32_t> saturated;
    for (const std::uint32_t r : live) {
      if (residual[r] <= eps * capacity[r]) saturated.push_back(r);
    }
    check_invariant(!saturated.empty(), "progressive filling made no progress");
    for (const std::uint32_t r : saturated) {
      for (const std::uint32_t f : users[r]) {
        if (frozen[f]) continue;
        frozen[f] = 1;
        out.rate[f] = level;
        out.binding[f] = r;
        --remaining;
        for (const std::uint32_t q : usage[f]) --unfrozen[q];
      }
    }
    std::erase_if(live, [&](std::uint32_t r) { return unfrozen[r] == 0; });
  }
  for (std::size_t f = 0; f < nf; ++f) {
    for (const std::uint32_t r : usage[f]) out.load[r] += out.rate[f];
  }
  return out;
}

/// A multicast flow. `group` is "all" (every ToR, no server fanout) or the
/// name of a group installed on the NetworkState.
struct FlowSpec {
  std::string id;
  TorIndex source = 0;
  std::optional<std::uint32_t> source_port;
  std::string group = "all";
  double volume_bytes = 0;
  double start_s = 0;

  friend bool operator==(const FlowSpec&, const FlowSpec&) = default;
};

inline void validate_flow(const Topology& topo, const FlowSpec& f) {
  require(!f.id.empty(), "flow needs an id");
  require(topo.contains(f.source), "flow '" + f.id + "' source " + std::to_string(f.source) + " out of range");
  require(std::isfinite(f.volume_bytes) && f.volume_bytes >= 0, "flow '" + f.id + "' volume must be >= 0");
  require(std::isfinite(f.start_s) && f.start_s >= 0, "flow '" + f.id + "' start time must be >= 0");
}

struct FairShareResult {
  std::vector<double> rate_bps;
  std::vector<ResourceId> binding;
  double aggregate_bps = 0;
  /// Highest load/capacity over all resources in use.
  double bottleneck_utilization = 0;
  std::uint32_t saturated_resources = 0;
};

namespace detail {

/// Interns resources and builds per-flow usage lists.
class ResourceMap {
 public:
  std::uint32_t intern(const ResourceId& id, double capacity) {
    const auto [it, inserted] = index_.try_emplace(id, static_cast<std::uint32_t>(ids_.size()));
    if (inserted) {
      ids_.push_back(id);
      capacity_.push_back(capacity);
    }
    return it->second;
  }

  const std::vector<ResourceId>& ids() const noexcept { return ids_; }
  const std::vector<double>& capacity() const noexcept { return capacity_; }

 private:
  std::map<ResourceId, std::uint32_t> index_;
  std::vector<ResourceId> ids_;
  std::vector<double> capacity_;
};

/// Transmitters of each distinct source's tree under `state`, cached.
class TreeCache {
 public:
  explicit TreeCache(const NetworkState& state) : scanner_(state) {}

  const std::vector<TorIndex>& transmitters(TorIndex src) {
    auto it = cache_.find(src);
    if (it != cache_.end()) return it->second;
    scanner_.run(src);
    std::vector<TorIndex> tx(scanner_.transmitters().begin(), scanner_.transmitters().end());
    std::sort(tx.begin(), tx.end());
    return cache_.emplace(src, std::move(tx)).first->second;
  }

  /// Runs the delivery scan of `src`; valid until the next call.
  const ReachScanner& scan(TorIndex src) {
    scanner_.run(src);
    return scanner_;
  }

 private:
  ReachScanner scanner_;
  std::unordered_map<TorIndex, std::vector<TorIndex>> cache_;
};

inline std::vector<std::uint32_t> flow_usage(const NetworkState& state, const CapacityModel& cap, const FlowSpec& f,
                                             TreeCache& trees, ResourceMap& resources) {
  const Topology& topo = state.topology();
  validate_flow(topo, f);
  if (state.failed() && *state.failed() == f.source) {
    throw ValidationError("flow '" + f.id + "' is sourced at failed relay " + std::to_string(f.source));
  }
  const GroupMembership* group = nullptr;
  if (f.group != "all") {
    const auto it = state.groups().find(f.group);
    require(it != state.groups().end(), "flow '" + f.id + "' names unknown group '" + f.group + "'");
    group = &it->second;
  }

  const ReachScanner& scan = trees.scan(f.source);
  if (group == nullptr) {
    require(scan.reached_count() == topo.size(),
            "flow '" + f.id + "': source " + std::to_string(f.source) + " cannot reach every ToR under the current rules");
  } else {
    for (const auto& [tor, ports] : group->members) {
      require(scan.reached(tor), "flow '" + f.id + "': member ToR " + std::to_string(tor) +
                                     " is unreachable under the current rules");
    }
  }

  std::vector<std::uint32_t> use;
  const bool lanes = cap.receive() < cap.transmit();
  for (const TorIndex u : trees.transmitters(f.source)) {
    use.push_back(resources.intern({ResourceKind::transmit, u, 0}, cap.transmit()));
    if (lanes) {
      // The splitter copies everything u sends onto all p outgoing fibers.
      for (std::uint32_t m = 0; m < topo.p(); ++m) {
        use.push_back(resources.intern({ResourceKind::receive, u, m}, cap.receive()));
      }
    }
  }
  if (group != nullptr && cap.server_downlink_bps) {
    for (const auto& [tor, ports] : group->members) {
      for (const std::uint32_t port : ports) {
        if (tor == f.source && f.source_port && *f.source_port == port) continue;
        use.push_back(resources.intern({ResourceKind::server_downlink, tor, port}, *cap.server_downlink_bps));
      }
    }
  }
  return use;
}

inline FairShareResult summarize(const FillingResult& fill, const ResourceMap& resources) {
  FairShareResult out;
  out.rate_bps = fill.rate;
  for (const std::uint32_t b : fill.binding) out.binding.push_back(resources.ids()[b]);
  for (const double r : fill.rate) out.aggregate_bps += r;
  for (std::size_t r = 0; r < fill.load.size(); ++r) {
    const double u = fill.load[r] / resources.capacity()[r];
    out.bottleneck_utilization = std::max(out.bottleneck_utilization, u);
    if (fill.load[r] >= (1 - kFillEpsilon) * resources.capacity()[r]) ++out.saturated_resources;
  }
  return out;
}

}  // namespace detail

/// Max-min fair rates of concurrently active flows.
///
/// A multicast flow uses the transmit link of every ToR that relays it (the
/// splitter replicates for free), the receive lanes behind those splitters
/// when they are slower than the transmit link, and the downlink of every
/// member server other than the sender itself.
inline FairShareResult max_min_fair_rates(const std::vector<FlowSpec>& flows, const CapacityModel& cap,
                                          const NetworkState& state) {
  validate_capacity(cap);
  detail::TreeCache trees(state);
  detail::ResourceMap resources;
  std::vector<std::vector<std::uint32_t>> usage;
  usage.reserve(flows.size());
  for (const auto& f : flows) usage.push_back(detail::flow_usage(state, cap, f, trees, resources));
  return detail::summarize(progressive_filling(resources.capacity(), usage), resources);
}

/// Zero-volume one-to-all flows, one per source, named "tor<index>".
inline std::vector<FlowSpec> one_to_all_flows(const std::vector<TorIndex>& sources) {
  std::vector<FlowSpec> flows;
  for (const TorIndex s : sources) flows.push_back({"tor" + std::to_string(s), s, std::nullopt, "all", 0, 0});
  return flows;
}

enum class SchedulingMode : std::uint8_t { fair_share, fcfs };

inline SchedulingMode parse_scheduling_mode(const std::string& s) {
  if (s == "fair" || s == "fair_share") return SchedulingMode::fair_share;
  if (s == "fcfs") return SchedulingMode::fcfs;
  throw ValidationError("unknown scheduling mode '" + s + "' (expected fair or fcfs)");
}

struct TraceRow {
  double time_s = 0;
  std::string flow_id;
  double rate_bps = 0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct FlowSummary {
  std::string flow_id;
  double start_s = 0;
  double completion_s = 0;
  double mean_rate_bps = 0;

  friend bool operator==(const FlowSummary&, const FlowSummary&) = default;
};

/// Constant-rate interval between two events.
struct Epoch {
  double begin_s = 0;
  double end_s = 0;
  std::uint32_t active_flows = 0;
  double aggregate_bps = 0;
  double bottleneck_utilization = 0;
  std::uint32_t saturated_resources = 0;

  friend bool operator==(const Epoch&, const Epoch&) = default;
};

struct SimulationTrace {
  std::vector<TraceRow> rows;
  std::vector<FlowSummary> summaries;
  std::vector<Epoch> epochs;

  friend bool operator==(const SimulationTrace&, const SimulationTrace&) = default;
};

/// Event-driven fluid simulation. Rates are recomputed at every arrival and
/// completion and held constant in between.
///
/// In fcfs mode flows are admitted in (start time, schedule order) and a flow
/// waits while any resource it needs is held by an earlier admitted flow.
inline SimulationTrace run_flow_simulation(const std::vector<FlowSpec>& schedule, const CapacityModel& cap,
                                           const NetworkState& state,
                                           SchedulingMode mode = SchedulingMode::fair_share) {
  require(!schedule.empty(), "schedule has no flows");
  validate_capacity(cap);
  {
    std::vector<std::string> ids;
    for (const auto& f : schedule) ids.push_back(f.id);
    std::sort(ids.begin(), ids.end());
    const auto dup = std::adjacent_find(ids.begin(), ids.end());
    require(dup == ids.end(), "duplicate flow id '" + (dup == ids.end() ? std::string() : *dup) + "'");
  }

  const std::size_t n = schedule.size();
  detail::TreeCache trees(state);
  detail::ResourceMap resources;
  std::vector<std::vector<std::uint32_t>> usage(n);
  for (std::size_t i = 0; i < n; ++i) usage[i] = detail::flow_usage(state, cap, schedule[i], trees, resources);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return schedule[a].start_s < schedule[b].start_s; });

  std::vector<double> remaining(n);
  std::vector<double> completion(n, -1);
  for (std::size_t i = 0; i < n; ++i) remaining[i] = schedule[i].volume_bytes * 8.0;

  SimulationTrace trace;
  std::size_t next_arrival = 0;
  std::vector<std::size_t> active;  // in admission order
  double now = schedule[order.front()].start_s;
  std::size_t done = 0;

  auto finish = [&](std::size_t i, double t) {
    completion[i] = t;
    remaining[i] = 0;
    trace.rows.push_back({t, schedule[i].id, 0.0});
    ++done;
  };

  while (done < n) {
    while (next_arrival < n && schedule[order[next_arrival]].start_s <= now) {
      const std::size_t i = order[next_arrival++];
      if (remaining[i] <= 0) {
        finish(i, schedule[i].start_s);
      } else {
        active.push_back(i);
      }
    }
    if (active.empty()) {
      if (next_arrival >= n) break;
      now = schedule[order[next_arrival]].start_s;
      continue;
    }

    // Flows that get a rate this epoch.
    std::vector<std::size_t> running;
    if (mode == SchedulingMode::fair_share) {
      running = active;
    } else {
      std::vector<char> held(resources.ids().size(), 0);
      for (const std::size_t i : active) {
        const bool clash = std::any_of(usage[i].begin(), usage[i].end(), [&](std::uint32_t r) { return held[r]; });
        if (clash) continue;
        for (const std::uint32_t r : usage[i]) held[r] = 1;
        running.push_back(i);
      }
    }
    std::vector<std::vector<std::uint32_t>> run_usage;
    for (const std::size_t i : running) run_usage.push_back(usage[i]);
    const FillingResult fill = progressive_filling(resources.capacity(), run_usage);
    const FairShareResult share = detail::summarize(fill, resources);

    std::vector<double> rate(n, 0.0);
    for (std::size_t j = 0; j < running.size(); ++j) rate[running[j]] = fill.rate[j];
    for (const std::size_t i : active) trace.rows.push_back({now, schedule[i].id, rate[i]});

    double next = next_arrival < n ? schedule[order[next_arrival]].start_s : std::numeric_limits<double>::infinity();
    for (const std::size_t i : running) {
      if (rate[i] > 0) next = std::min(next, now + remaining[i] / rate[i]);
    }
    check_invariant(std::isfinite(next), "simulation stalled with active flows and no progress");

    trace.epochs.push_back({now, next, static_cast<std::uint32_t>(active.size()), share.aggregate_bps,
                            share.bottleneck_utilization, share.saturated_resources});

    const double dt = next - now;
    std::vector<std::size_t> still;
    for (const std::size_t i : active) {
      remaining[i] -= rate[i] * dt;
      // Completion within rounding of the epoch end.
      if (rate[i] > 0 && remaining[i] <= 1e-9 * schedule[i].volume_bytes * 8.0) {
        finish(i, next);
      } else {
        still.push_back(i);
      }
    }
    active = std::move(still);
    now = next;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = schedule[i];
    const double span = completion[i] - f.start_s;
    trace.summaries.push_back({f.id, f.start_s, completion[i], span > 0 ? f.volume_bytes * 8.0 / span : 0.0});
  }
  return trace;
}

}  // namespace shufflecast
