// Walks through a small network: relay sets, one failure and its repair,
// and a few concurrent one-to-all flows.
#include <cstdio>

#include "shufflecast/shufflecast.hpp"

using namespace shufflecast;

static void print_relays(const Topology& topo, TorIndex src) {
  const auto tree = multicast_tree(topo, src);
  std::printf("relays of ToR %u %s:", src, to_string(topo.decode(src)).c_str());
  for (const TorIndex r : tree.relays) std::printf(" %u", r);
  std::printf("  (depth %u)\n", tree.max_depth);
}

int main() {
  const Topology small(Params{2, 2});
  print_relays(small, 0);
  print_relays(small, 3);

  NetworkState state = NetworkState::healthy(Params{2, 3});
  const RecoveryPlan& plan = state.recover(8);
  std::printf("\nrelay 8 fails: mirror %u, precedent %u -> %u, moved sources:", plan.mirror_failed,
              plan.precedent_relay, plan.mirror_precedent);
  for (const TorIndex s : plan.moved_sources) std::printf(" %u", s);
  std::printf("\n");
  std::uint32_t full = 0;
  ReachScanner scan(state);
  for (TorIndex s = 0; s < state.topology().size(); ++s) {
    if (s != 8 && scan.run(s) == state.topology().size()) ++full;
  }
  std::printf("sources still reaching all %u ToRs: %u of %u\n", state.topology().size(), full,
              state.topology().size() - 1);

  const NetworkState healthy = NetworkState::healthy(Params{3, 2});
  std::vector<TorIndex> sources;
  for (std::uint32_t j = 0; j < 3; ++j) sources.push_back(linerate_group(healthy.topology(), 0, j));
  sources.push_back(1);
  const auto share = max_min_fair_rates(one_to_all_flows(sources), CapacityModel::uniform(10e9), healthy);
  std::printf("\nfair share in 3,2 with sources");
  for (const TorIndex s : sources) std::printf(" %u", s);
  std::printf(":\n");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    std::printf("  ToR %u: %.2f Gb/s, bound by %s\n", sources[i], share.rate_bps[i] / 1e9,
                to_string(share.binding[i]).c_str());
  }
  return 0;
}
