#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "shufflecast/controlplane.hpp"

using namespace shufflecast;

namespace {

std::vector<Params> instances_up_to(std::uint64_t limit) {
  std::vector<Params> out;
  for (std::uint32_t k = 2; k < 20; ++k) {
    for (std::uint32_t p = 2; k * oracle::ipow(p, k) <= limit; ++p) out.push_back({p, k});
  }
  return out;
}

TorIndex enc(const oracle::Node& n, std::uint32_t p) { return static_cast<TorIndex>(oracle::encode(n, p)); }

/// Reachability straight from the rule definition: forward iff the owner
/// has an active rule and is not the failed ToR.
using Table = std::vector<std::vector<std::uint64_t>>;

Table adjacency(const Topology& t) {
  Table table(t.size());
  for (TorIndex u = 0; u < t.size(); ++u) table[u] = oracle::neighbors(u, t.p(), t.k());
  return table;
}

std::vector<int> oracle_reach(const NetworkState& st, const Table& table, TorIndex src) {
  return oracle::bfs(
      table.size(), src, [&](std::uint64_t u) -> const std::vector<std::uint64_t>& { return table[u]; },
      [&](std::uint64_t u) {
        const auto owner = static_cast<TorIndex>(u);
        return st.failed() != owner && st.is_active(owner, src);
      });
}

}  // namespace

TEST(ControlPlane, StaticRuleCounts) {
  for (const Params pr : {Params{2, 2}, Params{2, 3}, Params{3, 2}, Params{4, 4}}) {
    const Topology t(pr);
    const auto rules = generate_static_rules(t);
    const std::uint64_t per_owner = pr.k * t.pow(pr.k - 1);
    for (TorIndex u = 0; u < t.size(); ++u) ASSERT_EQ(rules.sources_of(u).size(), per_owner);
    EXPECT_EQ(rules.total(), per_owner * t.size());
  }
  EXPECT_EQ(generate_static_rules(Topology({4, 4})).sources_of(0).size(), 256u);
  EXPECT_EQ(generate_static_rules(Topology({2, 2})).sources_of(5).size(), 4u);
  EXPECT_EQ(generate_static_rules(Topology({2, 3})).sources_of(7).size(), 12u);
}

TEST(ControlPlane, RulesAreTreeRelaysAndJobsIndependent) {
  const Topology t({3, 3});
  const auto one = generate_static_rules(t, 1);
  const auto many = generate_static_rules(t, 4);
  for (TorIndex s = 0; s < t.size(); ++s) {
    const auto tree = multicast_tree(t, s);
    const auto r1 = one.relays_of(s);
    const auto r4 = many.relays_of(s);
    ASSERT_TRUE(std::equal(r1.begin(), r1.end(), tree.relays.begin(), tree.relays.end()));
    ASSERT_TRUE(std::equal(r1.begin(), r1.end(), r4.begin(), r4.end()));
  }
}

TEST(ControlPlane, GroupMembership) {
  const auto base = NetworkState::healthy({2, 2});
  const auto g1 = all_servers_group(base.topology(), 2, "g1");
  const auto st = apply_group_membership(base, g1);
  ASSERT_EQ(st.groups().size(), 1u);
  EXPECT_EQ(st.groups().at("g1").members.size(), 8u);
  EXPECT_EQ(st.groups().at("g1").port_count(), 16u);
  EXPECT_EQ(st.active_rule_count(), base.active_rule_count());

  const auto again = apply_group_membership(st, g1);
  EXPECT_EQ(again.groups(), st.groups());

  GroupMembership bad{"g2", {{99, {0}}}};
  EXPECT_THROW(apply_group_membership(base, bad), ValidationError);
  EXPECT_THROW(apply_group_membership(base, GroupMembership{"g3", {}}), ValidationError);
  EXPECT_THROW(apply_group_membership(base, GroupMembership{"g4", {{0, {}}}}), ValidationError);
}

TEST(ControlPlane, RecoveryWorkedExample) {
  auto st = NetworkState::healthy({2, 3});
  const auto before = st.active_rule_count();
  const RecoveryPlan plan = st.recover(8);
  EXPECT_EQ(plan.mirror_failed, 12u);
  EXPECT_EQ(plan.precedent_relay, 2u);
  EXPECT_EQ(plan.mirror_precedent, 6u);
  EXPECT_EQ(plan.y, 1u);
  EXPECT_EQ(plan.y_prime, 1u);
  std::set<TorIndex> moved(plan.moved_sources.begin(), plan.moved_sources.end());
  EXPECT_EQ(moved, (std::set<TorIndex>{0, 16}));
  EXPECT_LE(plan.delta.owners().size(), 4u);
  EXPECT_EQ(plan.delta.owners(), (std::set<TorIndex>{8, 12, 2, 6}));
  EXPECT_EQ(st.active_rule_count(), before);
  EXPECT_THROW(st.recover(8), ValidationError);
  EXPECT_THROW(st.recover(3), ValidationError);
}

TEST(ControlPlane, RecoverySmallExample) {
  auto st = NetworkState::healthy({2, 2});
  const RecoveryPlan plan = st.recover(4);
  EXPECT_EQ(plan.mirror_failed, 6u);
  EXPECT_EQ(plan.y, 1u);
  EXPECT_EQ(plan.y_prime, 1u);
  EXPECT_EQ(plan.precedent_relay, 1u);
  EXPECT_EQ(plan.mirror_precedent, 3u);
  EXPECT_EQ(plan.moved_sources, (std::vector<TorIndex>{0}));
  for (TorIndex s = 0; s < 8; ++s) {
    if (s == 4) continue;
    EXPECT_EQ(reachable_set(st, s).size(), 8u) << s;
  }
}

TEST(ControlPlane, ReachabilityExamples) {
  const auto healthy = NetworkState::healthy({2, 3});
  EXPECT_EQ(reachable_set(healthy, 0).size(), 24u);

  auto broken = healthy;
  broken.mark_failed(8);
  EXPECT_EQ(reachable_set(broken, 0).size(), 9u);
  EXPECT_THROW(broken.mark_failed(9), ValidationError);

  auto fixed = healthy;
  recover_single_failure(fixed, 8);
  EXPECT_EQ(reachable_set(fixed, 0).size(), 24u);
  EXPECT_EQ(reachable_set(healthy, 0).size(), 24u);  // copies are independent
}

TEST(ControlPlane, RuleTableExport) {
  auto st = NetworkState::healthy({2, 3});
  st.recover(8);
  for (const auto& r : st.rule_table(8)) EXPECT_FALSE(r.active);
  const auto mirror = st.rule_table(12);
  EXPECT_EQ(std::count_if(mirror.begin(), mirror.end(), [](const RelayRule& r) { return r.active; }), 24);
}

TEST(ControlPlaneProperty, RecoveryMatchesLiteralDigits) {
  for (const Params pr : instances_up_to(5'000)) {
    const Topology t(pr);
    const auto rules = generate_static_rules(t);
    for (TorIndex f = 0; f < t.size(); f += std::max<TorIndex>(1, t.size() / 97)) {
      const auto plan = plan_single_failure_recovery(t, rules, f);
      const auto o = oracle::recovery(oracle::decode(f, pr.p, pr.k), pr.p, pr.k);
      ASSERT_EQ(plan.mirror_failed, enc(o.mirror_failed, pr.p));
      ASSERT_EQ(plan.precedent_relay, enc(o.precedent, pr.p));
      ASSERT_EQ(plan.mirror_precedent, enc(o.mirror_precedent, pr.p));
      ASSERT_EQ(plan.moved_sources.size(), o.moved.size());
      for (std::size_t i = 0; i < o.moved.size(); ++i) ASSERT_EQ(plan.moved_sources[i], enc(o.moved[i], pr.p));
      // Deactivations and activations never name the same rule.
      std::set<RulePair> off(plan.delta.deactivate.begin(), plan.delta.deactivate.end());
      for (const auto& r : plan.delta.activate) ASSERT_FALSE(off.count(r));
      ASSERT_LE(plan.delta.owners().size(), 4u);
    }
  }
}

TEST(ControlPlaneProperty, RecoveredReachabilityAgainstOracle) {
  for (const Params pr : instances_up_to(400)) {
    const auto healthy = NetworkState::healthy(pr);
    const Topology& t = healthy.topology();
    const Table table = adjacency(t);
    for (TorIndex f = 0; f < t.size(); ++f) {
      auto st = healthy;
      st.recover(f);
      ASSERT_EQ(st.active_rule_count(), healthy.active_rule_count());
      ReachScanner scan(st);
      for (TorIndex s = 0; s < t.size(); ++s) {
        if (s == f) continue;
        const auto depth = oracle_reach(st, table, s);
        ASSERT_EQ(scan.run(s), t.size()) << "p=" << pr.p << " k=" << pr.k << " f=" << f << " s=" << s;
        int deepest = 0;
        for (TorIndex v = 0; v < t.size(); ++v) {
          ASSERT_GE(depth[v], 0);
          ASSERT_EQ(static_cast<int>(scan.depth(v)), depth[v]);
          deepest = std::max(deepest, depth[v]);
        }
        ASSERT_LE(deepest, static_cast<int>(3 * pr.k - 1));
      }
    }
  }
}

TEST(ControlPlaneProperty, UnrecoveredReachabilityAgainstOracle) {
  const auto healthy = NetworkState::healthy({3, 2});
  const Topology& t = healthy.topology();
  const Table table = adjacency(t);
  for (TorIndex f = 0; f < t.size(); f += 5) {
    auto st = healthy;
    st.mark_failed(f);
    for (TorIndex s = 0; s < t.size(); ++s) {
      const auto depth = oracle_reach(st, table, s);
      const auto got = reachable_set(st, s);
      ASSERT_EQ(got.size(), static_cast<std::size_t>(std::count_if(depth.begin(), depth.end(), [](int d) { return d >= 0; })));
      for (const TorIndex v : got) ASSERT_GE(depth[v], 0);
    }
  }
}
