#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "shufflecast/costmodel.hpp"
#include "shufflecast/io.hpp"
#include "shufflecast/routing.hpp"

using namespace shufflecast;

namespace {

ComponentCatalog sample_catalog() { return catalog_from_json(read_json_file(SHUFFLECAST_SHARE_DIR "/catalog.json")); }

}  // namespace

TEST(CostModel, InsertionLoss) {
  EXPECT_NEAR(insertion_loss_db(1024), 34.8, 1e-6);
  EXPECT_NEAR(insertion_loss_db(1), 0.8, 1e-6);
  EXPECT_NEAR(insertion_loss_db(2), 4.2, 1e-6);
  EXPECT_THROW(insertion_loss_db(0.5), ValidationError);
  EXPECT_THROW(insertion_loss_db(std::nan("")), ValidationError);
}

TEST(CostModel, CoreAnchors) {
  const auto a = build_minimal_layer_core(8, 4);
  EXPECT_EQ(a.extra_used_ports, 14u);
  EXPECT_DOUBLE_EQ(a.excess_ratio(), 1.75);
  const auto b = build_minimal_layer_core(192, 32);
  EXPECT_EQ(b.extra_used_ports, 206u);
  EXPECT_NEAR(b.excess_ratio(), 206.0 / 192.0, 1e-12);
  EXPECT_GE(b.excess_ratio(), 1.07);
  const auto c = build_minimal_layer_core(4, 4);
  EXPECT_EQ(c.extra_used_ports, 4u);
  EXPECT_EQ(c.switches, 1u);
  EXPECT_THROW(build_minimal_layer_core(1, 4), ValidationError);
  EXPECT_THROW(build_minimal_layer_core(8, 1), ValidationError);
  EXPECT_THROW(build_minimal_layer_core(8, 2), ValidationError);
  EXPECT_EQ(build_minimal_layer_core(2, 2).extra_used_ports, 2u);
}

TEST(CostModel, CoreAgainstExplicitBuild) {
  for (std::uint64_t r = 3; r <= 40; ++r) {
    for (std::uint64_t n = 2; n <= 600; ++n) {
      ASSERT_EQ(build_minimal_layer_core(n, static_cast<std::uint32_t>(r)).extra_used_ports, oracle::core_extra_ports(n, r))
          << "n=" << n << " R=" << r;
    }
  }
}

TEST(CostModel, PortCountAnchors) {
  EXPECT_EQ(count_ports("shufflecast", {{2, 2}}).ports, 12u);
  EXPECT_EQ(count_ports("p2p_chain", {{2, 2}, 8}).ports, 16u);
  EXPECT_EQ(count_ports("ip_multicast", {{2, 2}, 8, 4}).ports, 22u);
  EXPECT_EQ(count_ports(Architecture::ip_multicast, {{2, 2}, 0, 4}).ports, 22u);
  EXPECT_THROW(count_ports("ring", {{2, 2}}), ValidationError);
  EXPECT_THROW(count_ports("ip_multicast", {{2, 2}}), ValidationError);
  for (const auto a : {Architecture::shufflecast, Architecture::p2p_chain, Architecture::ip_multicast}) {
    const auto pc = count_ports(a, {{3, 2}, 0, 8});
    EXPECT_EQ(pc.ports, pc.transceivers);
    EXPECT_EQ(parse_architecture(to_string(a)), a);
  }
}

TEST(CostModel, ShufflecastPortsMatchTreeCounting) {
  for (std::uint32_t k = 2; k < 20; ++k) {
    for (std::uint32_t p = 2; k * oracle::ipow(p, k) <= 10'000; ++p) {
      const Topology t({p, k});
      const auto tree = multicast_tree(t, t.size() / 2);
      std::vector<char> relay(t.size(), 0);
      for (const TorIndex u : tree.relays) relay[u] = 1;
      std::uint64_t ports = 0;
      for (TorIndex u = 0; u < t.size(); ++u) ports += relay[u] ? 2 : 1;
      ASSERT_EQ(shufflecast_ports({p, k}).ports, ports);
      ASSERT_EQ(ports, k * oracle::ipow(p, k - 1) * (p + 1));
    }
  }
}

TEST(CostModel, PowerRatios) {
  for (std::uint32_t p = 2; p <= 10; ++p) {
    const Params pr{p, 2};
    const auto sc = shufflecast_ports(pr);
    const auto p2p = p2p_chain_ports(2 * p * p);
    EXPECT_NEAR(power_improvement(p2p, sc), 2.0 * p / (p + 1), 1e-12);
  }
  EXPECT_NEAR(power_improvement(p2p_chain_ports(18), shufflecast_ports({3, 2})), 1.5, 0.015);
  EXPECT_NEAR(power_improvement(p2p_chain_ports(128), shufflecast_ports({8, 2})), 16.0 / 9.0, 16.0 / 9.0 * 0.01);
  EXPECT_NEAR(power_improvement(ip_multicast_ports(8, 4), shufflecast_ports({2, 2})), 22.0 / 12.0, 0.01);

  const auto cat = sample_catalog();
  const auto sc = shufflecast_ports({2, 2});
  const auto ip = ip_multicast_ports(8, 4);
  const double ratio = power_improvement(power_per_tree(cat, "25G", ip), power_per_tree(cat, "25G", sc));
  EXPECT_NEAR(ratio, power_improvement(ip, sc), 1e-12);
  EXPECT_DOUBLE_EQ(power_improvement(power_per_tree(cat, "10G", sc), power_per_tree(cat, "10G", sc)), 1.0);
  EXPECT_DOUBLE_EQ(power_per_tree(cat, "10G", sc), 12 * (3.0 + 1.0));
  EXPECT_THROW(power_per_tree(cat, "400G", sc), ValidationError);
}

TEST(CostModel, CapitalCostComponents) {
  const auto cat = sample_catalog();
  const auto cmp = capital_cost(cat, "10G", {2, 2}, 4, 100.0);
  // 12 ports, 4 relays each with a 1:2 splitter and 2 outgoing runs.
  EXPECT_DOUBLE_EQ(cmp.shufflecast.ports_usd, 12 * 100.0);
  EXPECT_DOUBLE_EQ(cmp.shufflecast.xcvr_usd, 12 * 20.0);
  EXPECT_DOUBLE_EQ(cmp.shufflecast.splitter_usd, 4 * 12.0);
  EXPECT_EQ(cmp.shufflecast.fiber_runs, 8u);
  EXPECT_NEAR(cmp.shufflecast.fiber_usd, 8 * 37.37, 1e-9);
  EXPECT_EQ(cmp.ip_multicast.fiber_runs, 11u);
  EXPECT_NEAR(cmp.ip_multicast.total(), 22 * 120.0 + 11 * 37.37, 1e-9);
  EXPECT_NEAR(cmp.shufflecast_per_tor.total(), 2 * 120.0 + 12.0 + 2 * 37.37, 1e-9);

  const auto bare = capital_cost(cat, "10G", {2, 2}, 4, 0.0);
  EXPECT_EQ(bare.shufflecast.fiber_usd, 0.0);
  EXPECT_DOUBLE_EQ(bare.shufflecast.total(), 12 * 120.0 + 4 * 12.0);
  EXPECT_THROW(capital_cost(cat, "10G", {2, 2}, 4, -1.0), ValidationError);
  EXPECT_THROW(capital_cost(cat, "10G", {7, 2}, 4, 10.0), ValidationError);
}

TEST(CostModel, CapitalRatioBracket) {
  const auto cat = sample_catalog();
  struct Case {
    Params params;
    std::uint32_t radix;
  };
  for (const Case c : {Case{{2, 2}, 4}, Case{{5, 2}, 32}, Case{{8, 2}, 32}}) {
    for (const char* rate : {"10G", "25G", "100G"}) {
      const double r = capital_cost(cat, rate, c.params, c.radix, 100.0).improvement();
      EXPECT_GE(r, 1.5) << c.params.p << " " << rate;
      EXPECT_LE(r, 1.95) << c.params.p << " " << rate;
    }
  }
}

TEST(CostModel, ScalingInvariance) {
  const auto cat = sample_catalog();
  for (const double f : {0.001, 3.0, 1e6}) {
    const auto scaled = cat.scaled(f);
    for (const char* rate : {"10G", "100G"}) {
      const double a = capital_cost(cat, rate, {4, 2}, 8, 50.0).improvement();
      const double b = capital_cost(scaled, rate, {4, 2}, 8, 50.0).improvement();
      EXPECT_NEAR(a, b, 1e-12 * a);
      const auto sc = shufflecast_ports({4, 2});
      const auto ip = ip_multicast_ports(32, 8);
      EXPECT_NEAR(power_improvement(power_per_tree(cat, rate, ip), power_per_tree(cat, rate, sc)),
                  power_improvement(power_per_tree(scaled, rate, ip), power_per_tree(scaled, rate, sc)), 1e-12);
    }
  }
}

TEST(CostModel, ConvergesToPortRatio) {
  const auto cat = sample_catalog();
  const Params pr{4, 4};
  const std::uint32_t radix = 32;
  const double target = power_improvement(ip_multicast_ports(1024, radix), shufflecast_ports(pr));
  double prev_gap = 1e300;
  for (const double scale : {1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6}) {
    ComponentCatalog c = cat;
    for (auto& [label, e] : c.rates) {
      e.port_usd *= scale;
      e.xcvr_usd *= scale;
    }
    const double gap = std::abs(capital_cost(c, "10G", pr, radix, 100.0).improvement() - target);
    EXPECT_LE(gap, prev_gap + 1e-12);
    prev_gap = gap;
  }
  EXPECT_LE(prev_gap, target * 1e-3);
}

TEST(CostModel, CatalogValidation) {
  ComponentCatalog c = sample_catalog();
  EXPECT_NO_THROW(validate_catalog(c));
  EXPECT_DOUBLE_EQ(c.fiber_usd_per_100m, 37.37);
  c.rates["10G"].port_usd = -1;
  EXPECT_THROW(validate_catalog(c), ValidationError);
  EXPECT_THROW(sample_catalog().splitter(7), ValidationError);
}
