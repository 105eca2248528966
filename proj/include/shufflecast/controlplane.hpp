#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "shufflecast/error.hpp"
#include "shufflecast/parallel.hpp"
#include "shufflecast/routing.hpp"
#include "shufflecast/topology.hpp"

namespace shufflecast {

/// "Relay packets of `source` into my splitter", installed on `owner`.
struct RelayRule {
  TorIndex owner = 0;
  TorIndex source = 0;
  bool active = true;

  friend bool operator==(const RelayRule&, const RelayRule&) = default;
};

struct RulePair {
  TorIndex owner = 0;
  TorIndex source = 0;

  friend auto operator<=>(const RulePair&, const RulePair&) = default;
};

/// Precomputed ToR-to-ToR relaying state, indexed both ways.
class RuleTables {
 public:
  RuleTables() = default;

  /// `relays_by_source[s]` must be sorted ascending.
  RuleTables(std::uint32_t n, const std::vector<std::vector<TorIndex>>& relays_by_source) : n_(n) {
    require(relays_by_source.size() == n, "RuleTables: need one relay list per source");
    src_offsets_.assign(n + 1, 0);
    own_offsets_.assign(n + 1, 0);
    for (TorIndex s = 0; s < n; ++s) {
      src_offsets_[s + 1] = src_offsets_[s] + relays_by_source[s].size();
      for (const TorIndex u : relays_by_source[s]) {
        require(u < n, "RuleTables: relay out of range");
        ++own_offsets_[u + 1];
      }
    }
    src_relays_.reserve(src_offsets_[n]);
    for (const auto& list : relays_by_source) src_relays_.insert(src_relays_.end(), list.begin(), list.end());
    for (TorIndex u = 0; u < n; ++u) own_offsets_[u + 1] += own_offsets_[u];
    own_sources_.resize(own_offsets_[n]);
    std::vector<std::uint64_t> fill(own_offsets_.begin(), own_offsets_.end() - 1);
    // Sources visited in ascending order, so each owner's list comes out sorted.
    for (TorIndex s = 0; s < n; ++s) {
      for (const TorIndex u : relays_by_source[s]) own_sources_[fill[u]++] = s;
    }
  }

  std::uint32_t size() const noexcept { return n_; }
  std::uint64_t total() const noexcept { return src_relays_.size(); }

  std::span<const TorIndex> relays_of(TorIndex source) const {
    return {src_relays_.data() + src_offsets_[source], src_relays_.data() + src_offsets_[source + 1]};
  }

  std::span<const TorIndex> sources_of(TorIndex owner) const {
    return {own_sources_.data() + own_offsets_[owner], own_sources_.data() + own_offsets_[owner + 1]};
  }

  bool has(TorIndex owner, TorIndex source) const {
    const auto list = sources_of(owner);
    return std::binary_search(list.begin(), list.end(), source);
  }

 private:
  std::uint32_t n_ = 0;
  std::vector<std::uint64_t> src_offsets_;
  std::vector<TorIndex> src_relays_;
  std::vector<std::uint64_t> own_offsets_;
  std::vector<TorIndex> own_sources_;
};

/// Relays every source's tree through its non-leaf ToRs. Each owner ends up
/// with exactly k * p^(k-1) rules.
inline RuleTables generate_static_rules(const Topology& topo, unsigned jobs = 1) {
  const std::uint32_t n = topo.size();
  std::vector<std::vector<TorIndex>> relays(n);
  parallel_for(n, jobs, [&](unsigned, std::size_t s) {
    relays[s] = multicast_tree(topo, static_cast<TorIndex>(s)).relays;
  });
  RuleTables tables(n, relays);
  const std::uint64_t expected = static_cast<std::uint64_t>(topo.k()) * topo.pow(topo.k() - 1);
  for (TorIndex u = 0; u < n; ++u) {
    if (tables.sources_of(u).size() != expected) {
      throw InvariantViolation("ToR " + std::to_string(u) + " holds " + std::to_string(tables.sources_of(u).size()) +
                               " relay rules, expected k*p^(k-1) = " + std::to_string(expected));
    }
  }
  return tables;
}

/// Servers (by switch port) under each ToR that belong to a multicast group.
struct GroupMembership {
  std::string group;
  std::map<TorIndex, std::set<std::uint32_t>> members;

  std::size_t port_count() const {
    std::size_t total = 0;
    for (const auto& [tor, ports] : members) total += ports.size();
    return total;
  }

  friend bool operator==(const GroupMembership&, const GroupMembership&) = default;
};

/// Every ToR with ports [0, servers_per_tor).
inline GroupMembership all_servers_group(const Topology& topo, std::uint32_t servers_per_tor,
                                         std::string name = "all_servers") {
  require(servers_per_tor >= 1, "servers per ToR must be >= 1");
  GroupMembership g{std::move(name), {}};
  for (TorIndex t = 0; t < topo.size(); ++t) {
    for (std::uint32_t port = 0; port < servers_per_tor; ++port) g.members[t].insert(port);
  }
  return g;
}

inline void validate_membership(const Topology& topo, const GroupMembership& m) {
  require(!m.group.empty(), "group membership needs a group name");
  require(!m.members.empty(), "group '" + m.group + "' has no members");
  for (const auto& [tor, ports] : m.members) {
    require(topo.contains(tor), "group '" + m.group + "' names unknown ToR " + std::to_string(tor));
    require(!ports.empty(), "group '" + m.group + "' lists ToR " + std::to_string(tor) + " with no server ports");
  }
}

/// Rule activations/deactivations produced by failure recovery.
struct RuleDelta {
  std::vector<RulePair> deactivate;
  std::vector<RulePair> activate;

  std::set<TorIndex> owners() const {
    std::set<TorIndex> out;
    for (const auto& r : deactivate) out.insert(r.owner);
    for (const auto& r : activate) out.insert(r.owner);
    return out;
  }

  friend bool operator==(const RuleDelta&, const RuleDelta&) = default;
};

/// The four ToRs single-relay recovery touches, plus the resulting delta.
struct RecoveryPlan {
  TorIndex failed = 0;
  TorIndex mirror_failed = 0;
  TorIndex precedent_relay = 0;
  TorIndex mirror_precedent = 0;
  std::uint32_t y = 0;
  std::uint32_t y_prime = 0;
  /// n_1..n_{k-1}: sources whose relaying moves from the precedent relay to
  /// its mirror.
  std::vector<TorIndex> moved_sources;
  RuleDelta delta;
};

/// Computes the single-relay recovery for `failed` against the static rules.
///
/// The failed relay's rules move to its mirror (same row, partition digit
/// advanced by one). The mirror's own feeder in the previous column (the
/// precedent relay) then hands the sources n_i, which reach the mirror only
/// through it, over to the precedent's mirror.
inline RecoveryPlan plan_single_failure_recovery(const Topology& topo, const RuleTables& rules, TorIndex failed) {
  require(topo.contains(failed), "failed relay " + std::to_string(failed) + " out of range");
  const std::uint32_t k = topo.k();
  const std::uint32_t p = topo.p();
  const std::uint32_t c = topo.column(failed);
  const std::uint32_t r = topo.row(failed);
  const std::uint32_t lead = topo.pow(k - 1);
  const std::uint32_t prev_col = (c + k - 1) % k;

  RecoveryPlan plan;
  plan.failed = failed;
  plan.y = (r / lead + 1) % p;
  const std::uint32_t mirror_row = plan.y * lead + r % lead;
  plan.mirror_failed = topo.index(c, mirror_row);

  // Circular right shift of the mirror's row: r_0 y r_{k-2} .. r_1.
  const std::uint32_t r0 = r % p;
  plan.precedent_relay = topo.index(prev_col, r0 * lead + mirror_row / p);
  plan.y_prime = (r0 + 1) % p;
  plan.mirror_precedent = topo.index(prev_col, plan.y_prime * lead + mirror_row / p);

  for (std::uint32_t i = 1; i < k; ++i) {
    const std::uint32_t rotated = (r % topo.pow(i)) * topo.pow(k - i) + r / topo.pow(i);
    plan.moved_sources.push_back(topo.index((c + k - i) % k, rotated));
  }

  for (const TorIndex s : rules.sources_of(failed)) {
    plan.delta.deactivate.push_back({failed, s});
    plan.delta.activate.push_back({plan.mirror_failed, s});
    if (rules.has(plan.mirror_failed, s)) {
      throw InvariantViolation("mirror relay " + std::to_string(plan.mirror_failed) + " already relays source " +
                               std::to_string(s));
    }
  }
  for (const TorIndex n : plan.moved_sources) {
    check_invariant(rules.has(plan.precedent_relay, n), "precedent relay " + std::to_string(plan.precedent_relay) +
                                                            " holds no rule for source " + std::to_string(n));
    check_invariant(!rules.has(plan.mirror_precedent, n), "mirror precedent " +
                                                              std::to_string(plan.mirror_precedent) +
                                                              " already relays source " + std::to_string(n));
    plan.delta.deactivate.push_back({plan.precedent_relay, n});
    plan.delta.activate.push_back({plan.mirror_precedent, n});
  }
  return plan;
}

/// Topology + static rules + at most one failed relay and its recovery.
///
/// A value type: copies share the immutable topology and rule tables, so a
/// state can be forked cheaply per failure scenario. Mutation goes through
/// mark_failed / recover / apply_group_membership only.
class NetworkState {
 public:
  struct Override {
    TorIndex source = 0;
    TorIndex owner = 0;
    bool active = false;

    friend auto operator<=>(const Override& a, const Override& b) {
      return std::tie(a.source, a.owner) <=> std::tie(b.source, b.owner);
    }
    friend bool operator==(const Override& a, const Override& b) { return a.source == b.source && a.owner == b.owner; }
  };

  NetworkState(std::shared_ptr<const Topology> topo, std::shared_ptr<const RuleTables> rules)
      : topo_(std::move(topo)), rules_(std::move(rules)) {
    require(topo_ && rules_, "NetworkState needs a topology and rule tables");
    require(rules_->size() == topo_->size(), "rule tables do not match the topology size");
  }

  static NetworkState healthy(Params params, unsigned jobs = 1) {
    auto topo = std::make_shared<const Topology>(params);
    auto rules = std::make_shared<const RuleTables>(generate_static_rules(*topo, jobs));
    return NetworkState(std::move(topo), std::move(rules));
  }

  const Topology& topology() const noexcept { return *topo_; }
  const RuleTables& static_rules() const noexcept { return *rules_; }
  std::shared_ptr<const Topology> shared_topology() const noexcept { return topo_; }
  std::shared_ptr<const RuleTables> shared_rules() const noexcept { return rules_; }

  std::optional<TorIndex> failed() const noexcept { return failed_; }
  const std::optional<RecoveryPlan>& recovery() const noexcept { return recovery_; }

  /// Records a failed relay without rerouting around it.
  void mark_failed(TorIndex relay) {
    require(topo_->contains(relay), "failed relay " + std::to_string(relay) + " out of range");
    require(!failed_, "a relay failure is already recorded; only single failures are supported");
    failed_ = relay;
  }

  /// Records the failure and applies single-relay recovery.
  const RecoveryPlan& recover(TorIndex relay) {
    require(!failed_, "a relay failure is already recorded; only single failures are supported");
    RecoveryPlan plan = plan_single_failure_recovery(*topo_, *rules_, relay);
    failed_ = relay;
    for (const auto& r : plan.delta.deactivate) overrides_.push_back({r.source, r.owner, false});
    for (const auto& r : plan.delta.activate) overrides_.push_back({r.source, r.owner, true});
    std::sort(overrides_.begin(), overrides_.end());
    check_invariant(std::adjacent_find(overrides_.begin(), overrides_.end()) == overrides_.end(),
                    "recovery delta activates and deactivates the same rule");
    recovery_ = std::move(plan);
    return *recovery_;
  }

  /// Overrides of the static rules for one source, sorted by owner.
  std::span<const Override> overrides_for(TorIndex source) const {
    const auto lo = std::lower_bound(overrides_.begin(), overrides_.end(), Override{source, 0, false});
    const auto hi = std::lower_bound(lo, overrides_.end(), Override{source + 1, 0, false});
    return {lo, hi};
  }

  bool is_active(TorIndex owner, TorIndex source) const {
    const auto it = std::lower_bound(overrides_.begin(), overrides_.end(), Override{source, owner, false});
    if (it != overrides_.end() && it->source == source && it->owner == owner) return it->active;
    return rules_->has(owner, source);
  }

  /// A failed ToR still receives on its input fibers but never relays.
  bool forwards(TorIndex owner, TorIndex source) const {
    return owner != failed_ && is_active(owner, source);
  }

  /// Every rule `owner` holds, including deactivated static ones, by source.
  std::vector<RelayRule> rule_table(TorIndex owner) const {
    require(topo_->contains(owner), "owner out of range");
    std::map<TorIndex, bool> by_source;
    for (const TorIndex s : rules_->sources_of(owner)) by_source[s] = true;
    for (const auto& o : overrides_) {
      if (o.owner == owner) by_source[o.source] = o.active;
    }
    std::vector<RelayRule> out;
    out.reserve(by_source.size());
    for (const auto& [s, active] : by_source) out.push_back({owner, s, active});
    return out;
  }

  std::uint64_t active_rule_count() const {
    std::uint64_t total = rules_->total();
    for (const auto& o : overrides_) {
      const bool base = rules_->has(o.owner, o.source);
      if (base && !o.active) --total;
      if (!base && o.active) ++total;
    }
    return total;
  }

  const std::map<std::string, GroupMembership>& groups() const noexcept { return groups_; }

  void set_group(const GroupMembership& m) {
    validate_membership(*topo_, m);
    groups_[m.group] = m;
  }

 private:
  std::shared_ptr<const Topology> topo_;
  std::shared_ptr<const RuleTables> rules_;
  std::optional<TorIndex> failed_;
  std::optional<RecoveryPlan> recovery_;
  std::vector<Override> overrides_;
  std::map<std::string, GroupMembership> groups_;
};

/// Installs (or replaces) a group's ToR-to-server fanout. ToR-to-ToR rules are
/// untouched, and applying the same membership twice is a no-op.
inline NetworkState apply_group_membership(NetworkState state, const GroupMembership& membership) {
  state.set_group(membership);
  return state;
}

/// Injects `failed` into `state` and reroutes around it. A second failure is
/// rejected.
inline RuleDelta recover_single_failure(NetworkState& state, TorIndex failed) {
  return state.recover(failed).delta;
}

/// Breadth-first delivery of one source's packets under a NetworkState.
///
/// Holds scratch buffers so that repeated runs over many sources do not
/// allocate. Results stay valid until the next run().
class ReachScanner {
 public:
  explicit ReachScanner(const NetworkState& state)
      : state_(state),
        relay_stamp_(state.topology().size(), 0),
        visit_stamp_(state.topology().size(), 0),
        depth_(state.topology().size(), 0),
        parent_(state.topology().size(), kNoTor) {
    order_.reserve(state.topology().size());
  }

  /// Returns the number of ToRs that receive the source's packets.
  std::uint32_t run(TorIndex src) {
    const Topology& topo = state_.topology();
    require(topo.contains(src), "source out of range");
    if (++stamp_ == 0) {
      std::fill(relay_stamp_.begin(), relay_stamp_.end(), 0);
      std::fill(visit_stamp_.begin(), visit_stamp_.end(), 0);
      stamp_ = 1;
    }
    for (const TorIndex u : state_.static_rules().relays_of(src)) relay_stamp_[u] = stamp_;
    for (const auto& o : state_.overrides_for(src)) relay_stamp_[o.owner] = o.active ? stamp_ : 0;
    if (const auto f = state_.failed()) relay_stamp_[*f] = 0;

    order_.clear();
    transmitters_.clear();
    max_depth_ = 0;
    visit_stamp_[src] = stamp_;
    depth_[src] = 0;
    parent_[src] = kNoTor;
    order_.push_back(src);
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const TorIndex u = order_[head];
      if (relay_stamp_[u] != stamp_) continue;
      transmitters_.push_back(u);
      for (const TorIndex v : topo.neighbors(u)) {
        if (visit_stamp_[v] == stamp_) continue;
        visit_stamp_[v] = stamp_;
        depth_[v] = depth_[u] + 1;
        parent_[v] = u;
        max_depth_ = std::max(max_depth_, depth_[v]);
        order_.push_back(v);
      }
    }
    return static_cast<std::uint32_t>(order_.size());
  }

  bool reached(TorIndex v) const { return visit_stamp_[v] == stamp_; }
  std::uint32_t depth(TorIndex v) const { return depth_[v]; }
  /// First relay that delivered to v; kNoTor for the source.
  TorIndex parent(TorIndex v) const { return parent_[v]; }
  std::uint32_t reached_count() const noexcept { return static_cast<std::uint32_t>(order_.size()); }
  std::uint32_t max_depth() const noexcept { return max_depth_; }
  /// Reached ToRs in delivery order.
  std::span<const TorIndex> order() const noexcept { return order_; }
  /// Reached ToRs that relayed the packets into their splitter.
  std::span<const TorIndex> transmitters() const noexcept { return transmitters_; }

 private:
  const NetworkState& state_;
  std::vector<std::uint32_t> relay_stamp_;
  std::vector<std::uint32_t> visit_stamp_;
  std::vector<std::uint32_t> depth_;
  std::vector<TorIndex> parent_;
  std::vector<TorIndex> order_;
  std::vector<TorIndex> transmitters_;
  std::uint32_t stamp_ = 0;
  std::uint32_t max_depth_ = 0;
};

/// ToRs that receive `src`'s packets: a ToR receives on every input fiber,
/// and relays onward only if it holds an active rule for `src`.
inline std::vector<TorIndex> reachable_set(const NetworkState& state, TorIndex src) {
  ReachScanner scanner(state);
  scanner.run(src);
  std::vector<TorIndex> out(scanner.order().begin(), scanner.order().end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace shufflecast
