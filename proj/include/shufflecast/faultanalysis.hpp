#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "shufflecast/controlplane.hpp"
#include "shufflecast/error.hpp"
#include "shufflecast/flowsim.hpp"
#include "shufflecast/parallel.hpp"
#include "shufflecast/routing.hpp"
#include "shufflecast/topology.hpp"

namespace shufflecast {

/// SplitMix64 evaluated at (seed, stream, counter). Any draw can be
/// recomputed independently, so per-sample streams do not depend on the
/// order samples run in.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

  std::uint64_t next() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform in [0, bound), bias-free (Lemire's multiply-and-reject).
  std::uint64_t uniform(std::uint64_t bound) {
    require(bound > 0, "uniform: empty range");
    detail::uint128 m = static_cast<detail::uint128>(next()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = -bound % bound;
      while (low < threshold) {
        m = static_cast<detail::uint128>(next()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Lost-ToR count -> number of sources, for one failed relay without recovery.
struct ImpactHistogram {
  Params params;
  TorIndex failed = 0;
  std::map<std::uint64_t, std::uint64_t> counts;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& [loss, n] : counts) t += n;
    return t;
  }

  double zero_loss_fraction() const {
    const auto it = counts.find(0);
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total());
  }
};

/// Reachability loss of every source when `failed` stops relaying and nothing
/// is rerouted. Only sources that use `failed` as a relay can lose anything.
inline ImpactHistogram failure_impact_distribution(const NetworkState& healthy, TorIndex failed) {
  const Topology& topo = healthy.topology();
  require(topo.contains(failed), "failed relay " + std::to_string(failed) + " out of range");
  require(!healthy.failed(), "impact analysis needs a healthy network state");
  NetworkState broken = healthy;
  broken.mark_failed(failed);

  ImpactHistogram h{topo.params(), failed, {}};
  const auto users = healthy.static_rules().sources_of(failed);
  ReachScanner scanner(broken);
  for (const TorIndex s : users) ++h.counts[topo.size() - scanner.run(s)];
  h.counts[0] += topo.size() - users.size();
  if (h.counts[0] == 0) h.counts.erase(0);
  return h;
}

inline ImpactHistogram failure_impact_distribution(Params params, TorIndex failed, unsigned jobs = 1) {
  return failure_impact_distribution(NetworkState::healthy(params, jobs), failed);
}

/// Predicted histogram from the tree shape: the failed relay sits on the
/// spine of some trees and inside a perfect p-ary island of others.
///
/// At island height h, k(p-1)p^(k-1-h) sources lose p + p^2 + .. + p^h ToRs.
/// At spine distance t in [1, k), one source loses (k-t)p^k - 1. The failed
/// ToR itself reaches nobody else.
inline std::map<std::uint64_t, std::uint64_t> closed_form_impact(Params params) {
  const std::uint64_t rows = detail::validated_rows(params, Topology::kDefaultMaxNodes);
  const std::uint64_t p = params.p;
  const std::uint64_t k = params.k;
  std::map<std::uint64_t, std::uint64_t> out;
  std::uint64_t lost = 0;
  std::uint64_t pj = 1;
  for (std::uint64_t h = 0; h < k; ++h) {
    if (h > 0) {
      pj *= p;
      lost += pj;
    }
    std::uint64_t sources = k * (p - 1);
    for (std::uint64_t e = 0; e + 1 + h < k; ++e) sources *= p;
    out[lost] += sources;
  }
  for (std::uint64_t t = 1; t < k; ++t) out[(k - t) * rows - 1] += 1;
  out[k * rows - 1] += 1;
  return out;
}

/// Per-source max hop count after recovery from one failed relay.
struct HopCdf {
  Params params;
  TorIndex failed = 0;
  /// Max hop -> number of sources (the failed ToR is not a source).
  std::map<std::uint32_t, std::uint64_t> counts;
  std::uint64_t sources = 0;
  std::uint32_t healthy_max_hop = 0;
  std::uint32_t worst = 0;

  double unchanged_fraction() const {
    const auto it = counts.find(healthy_max_hop);
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(sources);
  }

  /// (max_hop, cumulative fraction) rows, ascending.
  std::vector<std::pair<std::uint32_t, double>> cdf() const {
    std::vector<std::pair<std::uint32_t, double>> out;
    std::uint64_t acc = 0;
    for (const auto& [hop, n] : counts) {
      acc += n;
      out.emplace_back(hop, static_cast<double>(acc) / static_cast<double>(sources));
    }
    return out;
  }
};

inline HopCdf post_recovery_hop_cdf(const NetworkState& healthy, TorIndex failed, unsigned jobs = 1) {
  const Topology& topo = healthy.topology();
  require(topo.contains(failed), "failed relay " + std::to_string(failed) + " out of range");
  require(!healthy.failed(), "hop analysis needs a healthy network state");
  NetworkState recovered = healthy;
  recovered.recover(failed);

  const std::uint32_t n = topo.size();
  std::vector<std::uint32_t> max_hop(n, 0);
  std::vector<ReachScanner> scanners;
  const unsigned workers = std::max(1u, std::min(jobs, n));
  for (unsigned w = 0; w < workers; ++w) scanners.emplace_back(recovered);
  parallel_for(n, workers, [&](unsigned w, std::size_t s) {
    if (s == failed) return;
    if (scanners[w].run(static_cast<TorIndex>(s)) != n) {
      throw InvariantViolation("source " + std::to_string(s) + " does not reach every ToR after recovering from " +
                               std::to_string(failed));
    }
    max_hop[s] = scanners[w].max_depth();
  });

  HopCdf out{topo.params(), failed, {}, n - 1, hop_bound(topo.params()), 0};
  for (TorIndex s = 0; s < n; ++s) {
    if (s == failed) continue;
    ++out.counts[max_hop[s]];
    out.worst = std::max(out.worst, max_hop[s]);
  }
  return out;
}

inline HopCdf post_recovery_hop_cdf(Params params, TorIndex failed, unsigned jobs = 1) {
  return post_recovery_hop_cdf(NetworkState::healthy(params, jobs), failed, jobs);
}

namespace detail {

/// Max-min rates (in line-rate units) of one-to-all flows that share only
/// transmit links. Exact for a uniform capacity model without server fanout.
inline std::vector<double> transmit_rates(std::uint32_t n, const std::vector<std::vector<TorIndex>>& transmitters) {
  const std::vector<double> capacity(n, 1.0);
  return progressive_filling(capacity, transmitters).rate;
}

inline std::vector<TorIndex> transmitters_of(ReachScanner& scanner, TorIndex src, std::uint32_t n) {
  if (scanner.run(src) != n) {
    throw InvariantViolation("source " + std::to_string(src) + " does not reach every ToR");
  }
  std::vector<TorIndex> tx(scanner.transmitters().begin(), scanner.transmitters().end());
  std::sort(tx.begin(), tx.end());
  return tx;
}

}  // namespace detail

/// Mean over `sources` of (rate before - rate after) / rate before, where
/// every source runs a one-to-all flow under max-min sharing in both states.
inline double mean_rate_degradation(const NetworkState& before, const NetworkState& after,
                                    const std::vector<TorIndex>& sources) {
  require(!sources.empty(), "degradation needs at least one source");
  require(before.topology().params() == after.topology().params(), "states describe different topologies");
  const std::uint32_t n = before.topology().size();
  ReachScanner sb(before);
  ReachScanner sa(after);
  std::vector<std::vector<TorIndex>> tb;
  std::vector<std::vector<TorIndex>> ta;
  for (const TorIndex s : sources) {
    require(before.topology().contains(s), "source out of range");
    require(s != before.failed() && s != after.failed(), "a failed relay cannot act as a source");
    tb.push_back(detail::transmitters_of(sb, s, n));
    ta.push_back(detail::transmitters_of(sa, s, n));
  }
  const auto rb = detail::transmit_rates(n, tb);
  const auto ra = detail::transmit_rates(n, ta);
  double sum = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) sum += (rb[i] - ra[i]) / rb[i];
  return sum / static_cast<double>(sources.size());
}

struct DegradationReport {
  Params params;
  double fraction_active = 1.0;
  std::uint32_t samples = 0;
  std::uint64_t seed = 0;
  std::uint32_t sources_per_sample = 0;
  std::optional<TorIndex> fixed_failed;
  double mean_degradation = 0;
  double max_sample_degradation = 0;
};

inline constexpr std::uint32_t kDefaultDegradationSamples = 1000;

/// Number of concurrent sources drawn for a given active fraction. The failed
/// relay never sources, so at most N-1.
inline std::uint32_t active_source_count(std::uint32_t n, double fraction_active) {
  require(std::isfinite(fraction_active) && fraction_active > 0 && fraction_active <= 1,
          "fraction of active sources must be in (0, 1]");
  const auto count = static_cast<std::uint64_t>(std::llround(fraction_active * n));
  require(count >= 1, "fraction " + std::to_string(fraction_active) + " of " + std::to_string(n) +
                          " ToRs selects no source");
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(count, n - 1));
}

/// Sampled throughput loss from a single relay failure after recovery.
///
/// Each sample draws a failed relay (unless fixed) and a uniform set of
/// source ToRs other than it; all sources run one-to-all flows concurrently
/// and the sample's degradation is the per-source mean relative rate loss.
/// Sample i uses RNG stream i, so results do not depend on `jobs`.
inline DegradationReport throughput_degradation(const NetworkState& healthy, double fraction_active,
                                                std::uint32_t samples = kDefaultDegradationSamples,
                                                std::uint64_t seed = 1, unsigned jobs = 1,
                                                std::optional<TorIndex> failed = std::nullopt) {
  const Topology& topo = healthy.topology();
  const std::uint32_t n = topo.size();
  require(!healthy.failed(), "degradation analysis needs a healthy network state");
  require(samples >= 1, "need at least one sample");
  if (failed) require(topo.contains(*failed), "failed relay " + std::to_string(*failed) + " out of range");
  const std::uint32_t count = active_source_count(n, fraction_active);

  std::vector<double> per_sample(samples, 0.0);
  parallel_for(samples, jobs, [&](unsigned, std::size_t i) {
    CounterRng rng(seed, i);
    const TorIndex f = failed ? *failed : static_cast<TorIndex>(rng.uniform(n));
    // Partial Fisher-Yates over every ToR except f.
    std::vector<TorIndex> pool;
    pool.reserve(n - 1);
    for (TorIndex t = 0; t < n; ++t) {
      if (t != f) pool.push_back(t);
    }
    for (std::uint32_t j = 0; j < count; ++j) {
      const auto pick = j + static_cast<std::uint32_t>(rng.uniform(pool.size() - j));
      std::swap(pool[j], pool[pick]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());

    NetworkState recovered = healthy;
    recovered.recover(f);
    std::vector<char> touched(n, 0);
    for (const auto& r : recovered.recovery()->delta.deactivate) touched[r.source] = 1;
    for (const auto& r : recovered.recovery()->delta.activate) touched[r.source] = 1;

    ReachScanner scanner(recovered);
    std::vector<std::vector<TorIndex>> before;
    std::vector<std::vector<TorIndex>> after;
    before.reserve(count);
    after.reserve(count);
    for (const TorIndex s : pool) {
      const auto relays = healthy.static_rules().relays_of(s);
      before.emplace_back(relays.begin(), relays.end());
      // Untouched sources keep their static relays, none of which is f.
      after.push_back(touched[s] ? detail::transmitters_of(scanner, s, n) : before.back());
    }
    const auto rb = detail::transmit_rates(n, before);
    const auto ra = detail::transmit_rates(n, after);
    double sum = 0;
    for (std::uint32_t j = 0; j < count; ++j) sum += (rb[j] - ra[j]) / rb[j];
    per_sample[i] = sum / count;
  });

  DegradationReport out{topo.params(), fraction_active, samples, seed, count, failed, 0, 0};
  double sum = 0;
  for (const double d : per_sample) {
    sum += d;
    out.max_sample_degradation = std::max(out.max_sample_degradation, d);
  }
  out.mean_degradation = sum / samples;
  return out;
}

inline DegradationReport throughput_degradation(Params params, double fraction_active,
                                                std::uint32_t samples = kDefaultDegradationSamples,
                                                std::uint64_t seed = 1, unsigned jobs = 1) {
  return throughput_degradation(NetworkState::healthy(params, jobs), fraction_active, samples, seed, jobs);
}

/// How many ToRs of one line-rate group can multicast to everyone at line
/// rate at the same time under `state`.
struct Parallelism {
  std::vector<TorIndex> group;
  /// Largest subset whose trees share no transmit link.
  std::vector<TorIndex> concurrent;
};

inline Parallelism linerate_parallelism(const NetworkState& state, TorIndex base) {
  const Topology& topo = state.topology();
  const std::uint32_t n = topo.size();
  Parallelism out;
  for (std::uint32_t j = 0; j < topo.p(); ++j) {
    const TorIndex s = linerate_group(topo, base, j);
    if (s != state.failed()) out.group.push_back(s);
  }
  ReachScanner scanner(state);
  std::vector<std::vector<TorIndex>> tx;
  for (const TorIndex s : out.group) tx.push_back(detail::transmitters_of(scanner, s, n));

  const std::size_t g = out.group.size();
  std::vector<std::vector<char>> clash(g, std::vector<char>(g, 0));
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = a + 1; b < g; ++b) {
      std::vector<TorIndex> common;
      std::set_intersection(tx[a].begin(), tx[a].end(), tx[b].begin(), tx[b].end(), std::back_inserter(common));
      clash[a][b] = clash[b][a] = !common.empty();
    }
  }

  // Maximum independent set of the clash graph; branching only happens on
  // clashing members, of which a single failure leaves very few.
  std::vector<std::size_t> best;
  std::vector<std::size_t> chosen;
  auto search = [&](auto&& self, std::vector<std::size_t> open) -> void {
    if (chosen.size() + open.size() <= best.size()) return;
    std::size_t pivot = g;
    std::size_t degree = 0;
    for (const std::size_t v : open) {
      std::size_t d = 0;
      for (const std::size_t u : open) d += clash[v][u];
      if (d > degree) {
        degree = d;
        pivot = v;
      }
    }
    if (pivot == g) {
      if (chosen.size() + open.size() > best.size()) {
        best = chosen;
        best.insert(best.end(), open.begin(), open.end());
      }
      return;
    }
    std::vector<std::size_t> rest;
    for (const std::size_t v : open) {
      if (v != pivot && !clash[pivot][v]) rest.push_back(v);
    }
    chosen.push_back(pivot);
    self(self, rest);
    chosen.pop_back();
    std::vector<std::size_t> without;
    for (const std::size_t v : open) {
      if (v != pivot) without.push_back(v);
    }
    self(self, without);
  };
  std::vector<std::size_t> all(g);
  for (std::size_t i = 0; i < g; ++i) all[i] = i;
  search(search, all);

  std::sort(best.begin(), best.end());
  std::vector<std::vector<TorIndex>> picked;
  for (const std::size_t i : best) {
    out.concurrent.push_back(out.group[i]);
    picked.push_back(tx[i]);
  }
  for (const double r : detail::transmit_rates(n, picked)) {
    check_invariant(std::abs(r - 1.0) <= kFillEpsilon, "disjoint trees did not all reach line rate");
  }
  return out;
}

}  // namespace shufflecast
