#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "shufflecast/error.hpp"
#include "shufflecast/topology.hpp"

namespace shufflecast {

/// Column-difference parameters of the next-hop computation.
///
/// `x` is the column distance from the current ToR to the destination, with
/// x == k when they share a column. `x_prime` is the distance from the source
/// to the current ToR.
struct ColumnDiff {
  std::uint32_t x = 0;
  std::uint32_t x_prime = 0;

  friend bool operator==(const ColumnDiff&, const ColumnDiff&) = default;
};

inline ColumnDiff column_diff(const Topology& topo, TorIndex src, TorIndex dst, TorIndex cur) {
  const std::uint32_t k = topo.k();
  const std::uint32_t cs = topo.column(src);
  const std::uint32_t cd = topo.column(dst);
  const std::uint32_t cc = topo.column(cur);
  return {cd == cc ? k : (k + cd - cc) % k, (k + cc - cs) % k};
}

namespace detail {

/// Per-(src, dst) precomputation so that each hop costs one modulo.
class HopPlanner {
 public:
  HopPlanner(const Topology& topo, TorIndex src) : topo_(topo), src_col_(topo.column(src)) {
    const std::uint32_t k = topo.k();
    const std::uint32_t rs = topo.row(src);
    src_digit_.resize(k);
    for (std::uint32_t j = 0; j < k; ++j) src_digit_[j] = topo.digit(rs, j);
    dst_high_.resize(k + 1);
    dst_digit_.resize(k);
  }

  void set_destination(TorIndex dst) {
    const std::uint32_t k = topo_.k();
    dst_col_ = topo_.column(dst);
    const std::uint32_t rd = topo_.row(dst);
    for (std::uint32_t x = 0; x <= k; ++x) dst_high_[x] = rd / topo_.pow(x);
    for (std::uint32_t j = 0; j < k; ++j) dst_digit_[j] = dst_high_[j] % topo_.p();
  }

  /// Next hop from (cur_col, cur_row) toward the current destination.
  std::uint32_t next_digit(std::uint32_t cur_col, std::uint32_t cur_row) const noexcept {
    const std::uint32_t k = topo_.k();
    const std::uint32_t x = dst_col_ > cur_col ? dst_col_ - cur_col : dst_col_ + k - cur_col;
    // Top k-x digits of dst against bottom k-x digits of cur.
    if (x == k || dst_high_[x] == topo_.pow_divisor(k - x).mod(cur_row)) return dst_digit_[x - 1];
    const std::uint32_t x_prime = cur_col >= src_col_ ? cur_col - src_col_ : cur_col + k - src_col_;
    return src_digit_[k - x_prime - 1];
  }

 private:
  const Topology& topo_;
  std::uint32_t src_col_;
  std::uint32_t dst_col_ = 0;
  std::vector<std::uint32_t> src_digit_;
  std::vector<std::uint32_t> dst_high_;
  std::vector<std::uint32_t> dst_digit_;
};

}  // namespace detail

/// Next relay on the path from `src` toward `dst`, currently at `cur`.
///
/// When the destination's leading row digits already match the trailing
/// digits of `cur` (or the two share a column) the destination digit
/// r^d_{x-1} is shifted in; otherwise the source digit r^s_{k-x'-1} is, which
/// keeps relays inside the source's partitions for the second traversal.
inline TorIndex next_hop(const Topology& topo, TorIndex src, TorIndex dst, TorIndex cur) {
  require(topo.contains(src) && topo.contains(dst) && topo.contains(cur), "next_hop: ToR index out of range");
  require(cur != dst, "next_hop: current ToR already is the destination");
  detail::HopPlanner planner(topo, src);
  planner.set_destination(dst);
  const std::uint32_t cc = topo.column(cur);
  return topo.index((cc + 1) % topo.k(), topo.shift_in(topo.row(cur), planner.next_digit(cc, topo.row(cur))));
}

inline ToRId next_hop(const Topology& topo, const ToRId& src, const ToRId& dst, const ToRId& cur) {
  return topo.decode(next_hop(topo, topo.encode(src), topo.encode(dst), topo.encode(cur)));
}

struct Route {
  TorIndex src = 0;
  TorIndex dst = 0;
  /// ToRs from src to dst inclusive.
  std::vector<TorIndex> hops;

  std::size_t hop_count() const noexcept { return hops.empty() ? 0 : hops.size() - 1; }
};

/// Longest possible route in a healthy p,k-Shufflecast.
inline std::uint32_t hop_bound(const Params& params) { return 2 * params.k - 1; }

inline Route route(const Topology& topo, TorIndex src, TorIndex dst) {
  require(topo.contains(src) && topo.contains(dst), "route: ToR index out of range");
  Route r{src, dst, {src}};
  if (src == dst) return r;
  detail::HopPlanner planner(topo, src);
  planner.set_destination(dst);
  const std::uint32_t bound = hop_bound(topo.params());
  TorIndex cur = src;
  while (cur != dst) {
    if (r.hops.size() > bound) {
      throw InvariantViolation("route " + std::to_string(src) + "->" + std::to_string(dst) + " exceeded 2k-1 hops");
    }
    const std::uint32_t cc = topo.column(cur);
    const std::uint32_t rc = topo.row(cur);
    cur = topo.index((cc + 1) % topo.k(), topo.shift_in(rc, planner.next_digit(cc, rc)));
    r.hops.push_back(cur);
  }
  return r;
}

/// One-to-all multicast tree rooted at `src`: the union of all routes.
struct MulticastTree {
  TorIndex src = 0;
  /// parent[v] is the relay that delivers to v; kNoTor for the source.
  std::vector<TorIndex> parent;
  std::vector<std::uint16_t> depth;
  /// ToRs with at least one child, sorted ascending.
  std::vector<TorIndex> relays;
  std::uint32_t max_depth = 0;
};

/// Builds the tree from per-destination routes and checks they agree on every parent.
inline MulticastTree multicast_tree(const Topology& topo, TorIndex src) {
  require(topo.contains(src), "multicast_tree: source out of range");
  const std::uint32_t n = topo.size();
  const std::uint32_t k = topo.k();
  const std::uint32_t bound = hop_bound(topo.params());

  MulticastTree tree;
  tree.src = src;
  tree.parent.assign(n, kNoTor);
  tree.depth.assign(n, 0);
  std::vector<char> has_child(n, 0);
  std::vector<char> placed(n, 0);
  placed[src] = 1;

  detail::HopPlanner planner(topo, src);
  for (TorIndex dst = 0; dst < n; ++dst) {
    if (dst == src) continue;
    planner.set_destination(dst);
    TorIndex cur = src;
    std::uint32_t cc = topo.column(src);
    std::uint32_t rc = topo.row(src);
    std::uint32_t hops = 0;
    while (cur != dst) {
      if (hops >= bound) {
        throw InvariantViolation("route from " + std::to_string(src) + " to " + std::to_string(dst) +
                                 " exceeded 2k-1 hops");
      }
      const std::uint32_t next_col = cc + 1 == k ? 0 : cc + 1;
      const std::uint32_t next_row = topo.shift_in(rc, planner.next_digit(cc, rc));
      const TorIndex next = topo.index(next_col, next_row);
      ++hops;
      if (placed[next]) {
        if (tree.parent[next] != cur || tree.depth[next] != hops) {
          throw InvariantViolation("routes from source " + std::to_string(src) + " disagree on the parent of ToR " +
                                   std::to_string(next));
        }
      } else {
        placed[next] = 1;
        tree.parent[next] = cur;
        tree.depth[next] = static_cast<std::uint16_t>(hops);
        has_child[cur] = 1;
      }
      cur = next;
      cc = next_col;
      rc = next_row;
    }
  }
  for (TorIndex v = 0; v < n; ++v) {
    if (has_child[v]) tree.relays.push_back(v);
    tree.max_depth = std::max<std::uint32_t>(tree.max_depth, tree.depth[v]);
  }
  return tree;
}

/// Partition each column's relays must come from: column (c_s + t) mod k maps
/// to source digit r_{k-1-t}. Indexed by column.
inline std::vector<std::uint32_t> partition_signature(const Topology& topo, TorIndex src) {
  require(topo.contains(src), "partition_signature: source out of range");
  const std::uint32_t k = topo.k();
  const std::uint32_t cs = topo.column(src);
  const std::uint32_t rs = topo.row(src);
  std::vector<std::uint32_t> sig(k);
  for (std::uint32_t t = 0; t < k; ++t) sig[(cs + t) % k] = topo.digit(rs, k - 1 - t);
  return sig;
}

/// Throws InvariantViolation if any relay of `tree` lies outside its column's
/// signature partition.
inline void verify_partition_criteria(const Topology& topo, const MulticastTree& tree) {
  const auto sig = partition_signature(topo, tree.src);
  for (const TorIndex u : tree.relays) {
    if (topo.partition(u) != sig[topo.column(u)]) {
      throw InvariantViolation("relay " + std::to_string(u) + " of source " + std::to_string(tree.src) +
                               " violates the partition criteria");
    }
  }
}

/// Same-column ToR with every row digit advanced by j (mod p). The p results
/// for j in [0, p) have pairwise-disjoint relay sets.
inline TorIndex linerate_group(const Topology& topo, TorIndex base, std::uint32_t j) {
  require(topo.contains(base), "linerate_group: base out of range");
  require(j < topo.p(), "linerate_group: shift must be in [0, p)");
  const std::uint32_t rb = topo.row(base);
  std::uint32_t row = 0;
  for (std::uint32_t d = topo.k(); d-- > 0;) row = row * topo.p() + (topo.digit(rb, d) + j) % topo.p();
  return topo.index(topo.column(base), row);
}

inline ToRId linerate_group(const Topology& topo, const ToRId& base, std::uint32_t j) {
  return topo.decode(linerate_group(topo, topo.encode(base), j));
}

/// Deepest hop of the source's tree. Always 2k-1 in a healthy network.
inline std::uint32_t max_hop(const Topology& topo, TorIndex src) {
  const auto tree = multicast_tree(topo, src);
  check_invariant(tree.max_depth == hop_bound(topo.params()),
                  "tree of source " + std::to_string(src) + " has depth " + std::to_string(tree.max_depth) +
                      ", expected 2k-1");
  return tree.max_depth;
}

}  // namespace shufflecast
