#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "shufflecast/shufflecast.hpp"

namespace shufflecast {

enum class OutputFormat : std::uint8_t { json, csv };

/// Parsed command line, validated per subcommand before any computation.
struct CliConfig {
  std::string subcommand;
  std::string mode;  // analyze / cost sub-mode
  std::uint32_t p = 0;
  std::uint32_t k = 0;
  std::string topology_path;
  std::string out_path;
  std::string format = "json";
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::optional<TorIndex> src;
  std::optional<TorIndex> dst;
  std::optional<TorIndex> relay;
  bool no_recovery = false;
  std::vector<double> fractions{1.0};
  std::uint32_t samples = kDefaultDegradationSamples;
  std::string catalog_path;
  std::string rate = "10G";
  std::uint32_t radix = 0;
  std::uint64_t n = 0;
  double fiber_length_m = 100.0;
  std::string schedule_path;
  std::uint32_t servers_per_tor = 0;
  std::string sim_mode = "fair";
  double line_rate_bps = 10e9;
  std::string table = "trace";
};

namespace cli_detail {

struct Output {
  std::string text;
  std::string summary;  // one line, printed instead of `text` when writing a file
};

inline OutputFormat parse_format(const std::string& f) {
  if (f == "json") return OutputFormat::json;
  if (f == "csv") return OutputFormat::csv;
  throw ValidationError("unknown output format '" + f + "' (expected json or csv)");
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline Params resolve_params(const CliConfig& c) {
  if (!c.topology_path.empty()) {
    require(c.p == 0 && c.k == 0, "give either --topology or --p/--k, not both");
    const Topology topo = topology_from_json(read_json_file(c.topology_path));
    return topo.params();
  }
  require(c.p != 0 && c.k != 0, "--p and --k are required");
  return {c.p, c.k};
}

inline TorIndex checked_tor(const Topology& topo, std::optional<TorIndex> v, const char* flag) {
  require(v.has_value(), std::string(flag) + " is required");
  require(topo.contains(*v), std::string(flag) + " " + std::to_string(*v) + " out of range [0, " +
                                 std::to_string(topo.size()) + ")");
  return *v;
}

inline std::string catalog_path(const CliConfig& c) {
  if (!c.catalog_path.empty()) return c.catalog_path;
  if (const char* env = std::getenv("SHUFFLECAST_CATALOG"); env != nullptr && *env != '\0') return env;
  return {};
}

inline Output cmd_topo(const CliConfig& c, OutputFormat fmt) {
  const Topology topo(resolve_params(c));
  Output o;
  if (fmt == OutputFormat::json) {
    o.text = dump(to_json(topo));
  } else {
    CsvWriter csv({"id", "column", "row_digits", "neighbors"});
    for (TorIndex i = 0; i < topo.size(); ++i) {
      const ToRId id = topo.decode(i);
      std::string digits;
      std::string nb;
      for (const auto d : id.digits) digits += (digits.empty() ? "" : ".") + std::to_string(d);
      for (const auto v : topo.neighbors(i)) nb += (nb.empty() ? "" : ";") + std::to_string(v);
      csv.row().cell(i).cell(id.column).cell(digits).cell(nb);
    }
    o.text = csv.str();
  }
  o.summary = "topology p=" + std::to_string(topo.p()) + " k=" + std::to_string(topo.k()) + " with " +
              std::to_string(topo.size()) + " ToRs";
  return o;
}

inline Output cmd_route(const CliConfig& c, OutputFormat fmt) {
  const Topology topo(resolve_params(c));
  const TorIndex src = checked_tor(topo, c.src, "--src");
  std::vector<Route> routes;
  if (c.dst) {
    routes.push_back(route(topo, src, checked_tor(topo, c.dst, "--dst")));
  } else {
    for (TorIndex d = 0; d < topo.size(); ++d) routes.push_back(route(topo, src, d));
  }
  Output o;
  if (fmt == OutputFormat::csv) {
    o.text = routes_csv(routes);
  } else if (c.dst) {
    o.text = dump(to_json(routes.front()));
  } else {
    json a = json::array();
    for (const auto& r : routes) a.push_back(to_json(r));
    o.text = dump(a);
  }
  o.summary = std::to_string(routes.size()) + " route(s) from ToR " + std::to_string(src);
  return o;
}

inline Output cmd_tree(const CliConfig& c, OutputFormat fmt) {
  const Topology topo(resolve_params(c));
  const TorIndex src = checked_tor(topo, c.src, "--src");
  const MulticastTree tree = multicast_tree(topo, src);
  verify_partition_criteria(topo, tree);
  Output o;
  if (fmt == OutputFormat::json) {
    o.text = dump(to_json(tree));
  } else {
    CsvWriter csv({"tor", "parent", "depth", "relay"});
    for (TorIndex v = 0; v < topo.size(); ++v) {
      csv.row().cell(v).cell(tree.parent[v] == kNoTor ? std::string() : std::to_string(tree.parent[v]));
      csv.cell(static_cast<std::uint32_t>(tree.depth[v]))
          .cell(std::binary_search(tree.relays.begin(), tree.relays.end(), v));
    }
    o.text = csv.str();
  }
  o.summary = "tree of ToR " + std::to_string(src) + ": " + std::to_string(tree.relays.size()) + " relays, depth " +
              std::to_string(tree.max_depth);
  return o;
}

inline Output cmd_rules(const CliConfig& c, OutputFormat fmt) {
  const NetworkState state = NetworkState::healthy(resolve_params(c), c.jobs);
  Output o;
  if (fmt == OutputFormat::csv) {
    o.text = rules_csv(state);
  } else {
    json owners = json::array();
    for (TorIndex u = 0; u < state.topology().size(); ++u) {
      const auto s = state.static_rules().sources_of(u);
      owners.push_back({{"owner", u}, {"sources", std::vector<TorIndex>(s.begin(), s.end())}});
    }
    o.text = dump({{"p", state.topology().p()},
                   {"k", state.topology().k()},
                   {"rules_per_tor", state.static_rules().sources_of(0).size()},
                   {"tables", std::move(owners)}});
  }
  o.summary = std::to_string(state.static_rules().total()) + " static rules, " +
              std::to_string(state.static_rules().sources_of(0).size()) + " per ToR";
  return o;
}

inline Output cmd_fail(const CliConfig& c, OutputFormat fmt) {
  NetworkState state = NetworkState::healthy(resolve_params(c), c.jobs);
  const Topology& topo = state.topology();
  const TorIndex failed = checked_tor(topo, c.relay, "--relay");
  if (c.no_recovery) {
    state.mark_failed(failed);
  } else {
    state.recover(failed);
  }

  ReachScanner scanner(state);
  std::map<std::uint64_t, std::uint64_t> lost;
  std::uint64_t full = 0;
  std::uint32_t worst_hop = 0;
  for (TorIndex s = 0; s < topo.size(); ++s) {
    if (s == failed) continue;
    const std::uint32_t reached = scanner.run(s);
    ++lost[topo.size() - reached];
    if (reached == topo.size()) {
      ++full;
      worst_hop = std::max(worst_hop, scanner.max_depth());
    }
  }

  Output o;
  const auto& plan = state.recovery();
  if (fmt == OutputFormat::csv) {
    CsvWriter csv({"action", "owner", "source"});
    if (plan) {
      for (const auto& r : plan->delta.deactivate) csv.row().cell("deactivate").cell(r.owner).cell(r.source);
      for (const auto& r : plan->delta.activate) csv.row().cell("activate").cell(r.owner).cell(r.source);
    }
    o.text = csv.str();
  } else {
    json loss = json::array();
    for (const auto& [l, n] : lost) loss.push_back({{"lost", l}, {"sources", n}});
    json report = {{"failed", failed},
                   {"recovered", plan.has_value()},
                   {"reachability",
                    {{"sources", topo.size() - 1},
                     {"full_reach_sources", full},
                     {"loss_histogram", std::move(loss)},
                     {"max_hop_full_reach", worst_hop}}}};
    if (plan) {
      report["recovery"] = to_json(*plan);
      report["delta"] = to_json(plan->delta);
    }
    o.text = dump(report);
  }
  o.summary = "relay " + std::to_string(failed) + " failed" + (plan ? " and recovered" : "") + ": " +
              std::to_string(full) + "/" + std::to_string(topo.size() - 1) + " sources reach every ToR";
  return o;
}

inline Output cmd_analyze(const CliConfig& c, OutputFormat fmt) {
  const NetworkState healthy = NetworkState::healthy(resolve_params(c), c.jobs);
  const Topology& topo = healthy.topology();
  Output o;
  if (c.mode == "reachability") {
    const TorIndex failed = c.relay ? checked_tor(topo, c.relay, "--relay") : 0;
    const ImpactHistogram h = failure_impact_distribution(healthy, failed);
    const auto closed = closed_form_impact(topo.params());
    if (fmt == OutputFormat::csv) {
      CsvWriter csv({"loss", "count"});
      for (const auto& [l, n] : h.counts) csv.row().cell(l).cell(n);
      o.text = csv.str();
    } else {
      json rows = json::array();
      for (const auto& [l, n] : h.counts) rows.push_back({{"loss", l}, {"count", n}});
      json cf = json::array();
      for (const auto& [l, n] : closed) cf.push_back({{"loss", l}, {"count", n}});
      o.text = dump({{"p", topo.p()},
                     {"k", topo.k()},
                     {"failed", failed},
                     {"histogram", std::move(rows)},
                     {"closed_form", std::move(cf)},
                     {"matches_closed_form", h.counts == closed},
                     {"zero_loss_fraction", h.zero_loss_fraction()}});
    }
    o.summary = "zero-loss fraction " + format_number(h.zero_loss_fraction());
  } else if (c.mode == "hops") {
    const TorIndex failed = c.relay ? checked_tor(topo, c.relay, "--relay") : 0;
    const HopCdf cdf = post_recovery_hop_cdf(healthy, failed, c.jobs);
    if (fmt == OutputFormat::csv) {
      CsvWriter csv({"max_hop", "fraction"});
      for (const auto& [hop, frac] : cdf.cdf()) csv.row().cell(hop).cell(frac);
      o.text = csv.str();
    } else {
      json rows = json::array();
      for (const auto& [hop, frac] : cdf.cdf()) rows.push_back({{"max_hop", hop}, {"fraction", frac}});
      o.text = dump({{"p", topo.p()},
                     {"k", topo.k()},
                     {"failed", failed},
                     {"cdf", std::move(rows)},
                     {"healthy_max_hop", cdf.healthy_max_hop},
                     {"worst_max_hop", cdf.worst},
                     {"unchanged_fraction", cdf.unchanged_fraction()}});
    }
    o.summary = "hop count unchanged for " + format_number(cdf.unchanged_fraction()) + " of sources";
  } else if (c.mode == "degradation") {
    std::optional<TorIndex> fixed;
    if (c.relay) fixed = checked_tor(topo, c.relay, "--relay");
    std::vector<DegradationReport> reports;
    for (const double f : c.fractions) {
      reports.push_back(throughput_degradation(healthy, f, c.samples, c.seed, c.jobs, fixed));
    }
    if (fmt == OutputFormat::csv) {
      CsvWriter csv({"fraction_active", "mean_degradation"});
      for (const auto& r : reports) csv.row().cell(r.fraction_active).cell(r.mean_degradation);
      o.text = csv.str();
    } else {
      json rows = json::array();
      for (const auto& r : reports) {
        rows.push_back({{"fraction_active", r.fraction_active},
                        {"sources_per_sample", r.sources_per_sample},
                        {"mean_degradation", r.mean_degradation},
                        {"max_sample_degradation", r.max_sample_degradation}});
      }
      o.text = dump({{"p", topo.p()},
                     {"k", topo.k()},
                     {"samples", c.samples},
                     {"seed", c.seed},
                     {"bound", 1.0 / topo.p()},
                     {"results", std::move(rows)}});
    }
    o.summary = std::to_string(reports.size()) + " degradation point(s), " + std::to_string(c.samples) + " samples each";
  } else {
    throw ValidationError("unknown analysis '" + c.mode + "' (expected reachability, hops or degradation)");
  }
  return o;
}

inline Output cmd_cost(const CliConfig& c, OutputFormat fmt) {
  Output o;
  if (c.mode == "core") {
    require(c.radix != 0, "--radix is required");
    const std::uint64_t n = c.n != 0 ? c.n : detail::tor_count(resolve_params(c));
    const CoreBuild b = build_minimal_layer_core(n, c.radix);
    if (fmt == OutputFormat::csv) {
      CsvWriter csv({"n", "radix", "extra_used_ports", "excess_ratio", "switches", "layers"});
      csv.row().cell(b.n).cell(b.radix).cell(b.extra_used_ports).cell(b.excess_ratio()).cell(b.switches).cell(b.layers);
      o.text = csv.str();
    } else {
      o.text = dump({{"n", b.n},
                     {"radix", b.radix},
                     {"extra_used_ports", b.extra_used_ports},
                     {"excess_ratio", b.excess_ratio()},
                     {"switches", b.switches},
                     {"layers", b.layers}});
    }
    o.summary = std::to_string(b.extra_used_ports) + " extra ports (" + format_number(b.excess_ratio()) + ")";
    return o;
  }

  const Params params = resolve_params(c);
  const std::uint64_t n = detail::tor_count(params);
  std::optional<ComponentCatalog> catalog;
  if (const std::string path = catalog_path(c); !path.empty()) catalog = catalog_from_json(read_json_file(path));

  if (c.mode == "power") {
    require(c.radix != 0, "--radix is required");
    const PortCount sc = shufflecast_ports(params);
    const PortCount p2p = p2p_chain_ports(n);
    const PortCount ip = ip_multicast_ports(n, c.radix);
    auto watts = [&](const PortCount& pc) { return catalog ? power_per_tree(*catalog, c.rate, pc) : 0.0; };
    if (fmt == OutputFormat::csv) {
      CsvWriter csv({"architecture", "N", "rate", "ports", "watts", "usd"});
      for (const auto* pc : {&sc, &p2p, &ip}) {
        csv.row().cell(to_string(pc->architecture)).cell(n).cell(c.rate).cell(pc->ports);
        if (catalog) {
          csv.cell(watts(*pc));
        } else {
          csv.cell("");
        }
        csv.cell("");
      }
      o.text = csv.str();
    } else {
      json rows = json::array();
      for (const auto* pc : {&sc, &p2p, &ip}) {
        json r = {{"architecture", to_string(pc->architecture)}, {"ports", pc->ports}, {"transceivers", pc->transceivers}};
        if (catalog) r["watts"] = watts(*pc);
        rows.push_back(std::move(r));
      }
      o.text = dump({{"p", params.p},
                     {"k", params.k},
                     {"n", n},
                     {"radix", c.radix},
                     {"rate", c.rate},
                     {"architectures", std::move(rows)},
                     {"improvement_vs_p2p_chain", power_improvement(p2p, sc)},
                     {"improvement_vs_ip_multicast", power_improvement(ip, sc)}});
    }
    o.summary = "power improvement " + format_number(power_improvement(p2p, sc)) + "x vs p2p chain, " +
                format_number(power_improvement(ip, sc)) + "x vs IP multicast";
    return o;
  }

  if (c.mode == "capital") {
    require(catalog.has_value(), "--catalog (or SHUFFLECAST_CATALOG) is required for capital cost");
    require(c.radix != 0, "--radix is required");
    const CapitalComparison cmp = capital_cost(*catalog, c.rate, params, c.radix, c.fiber_length_m);
    const PortCount sc = shufflecast_ports(params);
    const PortCount ip = ip_multicast_ports(n, c.radix);
    if (fmt == OutputFormat::csv) {
      CsvWriter csv({"architecture", "N", "rate", "ports", "watts", "usd"});
      csv.row().cell("shufflecast").cell(n).cell(c.rate).cell(sc.ports).cell(power_per_tree(*catalog, c.rate, sc));
      csv.cell(cmp.shufflecast.total());
      csv.row().cell("ip_multicast").cell(n).cell(c.rate).cell(ip.ports).cell(power_per_tree(*catalog, c.rate, ip));
      csv.cell(cmp.ip_multicast.total());
      o.text = csv.str();
    } else {
      auto breakdown = [](const CapitalCost& cc) {
        return json{{"ports", cc.ports},           {"fiber_runs", cc.fiber_runs}, {"ports_usd", cc.ports_usd},
                    {"xcvr_usd", cc.xcvr_usd},     {"splitter_usd", cc.splitter_usd}, {"fiber_usd", cc.fiber_usd},
                    {"total_usd", cc.total()}};
      };
      o.text = dump({{"p", params.p},
                     {"k", params.k},
                     {"n", n},
                     {"radix", c.radix},
                     {"rate", c.rate},
                     {"fiber_length_m", c.fiber_length_m},
                     {"shufflecast_per_tree", breakdown(cmp.shufflecast)},
                     {"ip_multicast_per_tree", breakdown(cmp.ip_multicast)},
                     {"shufflecast_per_tor", breakdown(cmp.shufflecast_per_tor)},
                     {"improvement", cmp.improvement()},
                     {"port_ratio", power_improvement(ip, sc)}});
    }
    o.summary = "capital cost improvement " + format_number(cmp.improvement()) + "x vs IP multicast";
    return o;
  }
  throw ValidationError("unknown cost model '" + c.mode + "' (expected power, capital or core)");
}

inline Output cmd_sim(const CliConfig& c, OutputFormat fmt) {
  require(!c.schedule_path.empty(), "--schedule is required");
  require(std::isfinite(c.line_rate_bps) && c.line_rate_bps > 0, "--line-rate must be > 0");
  const Schedule schedule = schedule_from_json(read_json_file(c.schedule_path));
  NetworkState state = NetworkState::healthy(resolve_params(c), c.jobs);
  for (const auto& g : schedule.groups) state.set_group(g);
  if (c.servers_per_tor > 0) state.set_group(all_servers_group(state.topology(), c.servers_per_tor));
  if (c.relay) state.recover(checked_tor(state.topology(), c.relay, "--relay"));
  const bool downlinks = c.servers_per_tor > 0 || !schedule.groups.empty();
  const SimulationTrace trace = run_flow_simulation(schedule.flows, CapacityModel::uniform(c.line_rate_bps, downlinks),
                                                    state, parse_scheduling_mode(c.sim_mode));
  Output o;
  if (fmt == OutputFormat::csv) {
    if (c.table == "trace") {
      o.text = trace_csv(trace);
    } else if (c.table == "summary") {
      o.text = summary_csv(trace);
    } else if (c.table == "epochs") {
      o.text = epochs_csv(trace);
    } else {
      throw ValidationError("unknown table '" + c.table + "' (expected trace, summary or epochs)");
    }
  } else {
    o.text = dump(to_json(trace));
  }
  double last = 0;
  for (const auto& s : trace.summaries) last = std::max(last, s.completion_s);
  o.summary = std::to_string(trace.summaries.size()) + " flow(s), last completion at " + format_number(last) + " s";
  return o;
}

}  // namespace cli_detail

/// Runs one CLI invocation. Returns 0 on success, 2 on invalid input and 1
/// when an internal check fails.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"p,k-Shufflecast topology, routing, recovery and analysis tool", "shufflecast"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  CliConfig c;

  auto common = [&c](CLI::App* sub) {
    sub->add_option("--p", c.p, "Splitter fanout p (>= 2)");
    sub->add_option("--k", c.k, "Column count k (>= 2)");
    sub->add_option("--topology", c.topology_path, "Read p and k from an exported topology JSON");
    sub->add_option("--out", c.out_path, "Write the artifact to this file instead of stdout");
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--jobs", c.jobs, "Worker threads for analyses (output does not depend on it)")
        ->check(CLI::Range(1u, 1024u));
  };

  auto* topo = app.add_subcommand("topo", "Emit the topology");
  common(topo);
  auto* rt = app.add_subcommand("route", "Route from --src to --dst (or to every ToR)");
  common(rt);
  rt->add_option("--src", c.src, "Source ToR index")->required();
  rt->add_option("--dst", c.dst, "Destination ToR index");
  auto* tree = app.add_subcommand("tree", "One-to-all multicast tree of --src");
  common(tree);
  tree->add_option("--src", c.src, "Source ToR index")->required();
  auto* rules = app.add_subcommand("rules", "Static ToR-to-ToR relaying rules");
  common(rules);
  auto* fail = app.add_subcommand("fail", "Fail one relay and report the recovery delta and reachability");
  common(fail);
  fail->add_option("--relay", c.relay, "Failed relay ToR index")->required();
  fail->add_flag("--no-recovery", c.no_recovery, "Leave the failure unrepaired");
  auto* analyze = app.add_subcommand("analyze", "Failure analyses");
  common(analyze);
  analyze->add_option("analysis", c.mode, "reachability | hops | degradation")
      ->required()
      ->check(CLI::IsMember({"reachability", "hops", "degradation"}));
  analyze->add_option("--relay", c.relay, "Failed relay (default 0; degradation samples it when omitted)");
  analyze->add_option("--fraction", c.fractions, "Fraction(s) of ToRs sourcing concurrently")->delimiter(',');
  analyze->add_option("--samples", c.samples, "Degradation samples")->check(CLI::Range(1u, 100000000u));
  analyze->add_option("--seed", c.seed, "RNG seed");
  auto* cost = app.add_subcommand("cost", "Power, capital cost and packet-core models");
  common(cost);
  cost->add_option("model", c.mode, "power | capital | core")
      ->required()
      ->check(CLI::IsMember({"power", "capital", "core"}));
  cost->add_option("--radix", c.radix, "Packet switch radix R");
  cost->add_option("--catalog", c.catalog_path, "Component catalog JSON (default: $SHUFFLECAST_CATALOG)");
  cost->add_option("--rate", c.rate, "Rate label in the catalog");
  cost->add_option("--n", c.n, "ToR count for the core model (default k*p^k)");
  cost->add_option("--fiber-length", c.fiber_length_m, "Fiber run length in meters")->check(CLI::NonNegativeNumber);
  auto* sim = app.add_subcommand("sim", "Flow-level fair-share simulation");
  common(sim);
  sim->add_option("--schedule", c.schedule_path, "Schedule JSON")->required();
  sim->add_option("--servers-per-tor", c.servers_per_tor, "Install an all_servers group with this many ports per ToR");
  sim->add_option("--mode", c.sim_mode, "fair | fcfs")->check(CLI::IsMember({"fair", "fcfs"}));
  sim->add_option("--line-rate", c.line_rate_bps, "Line rate in bits/s")->check(CLI::PositiveNumber);
  sim->add_option("--relay", c.relay, "Fail and recover this relay before simulating");
  sim->add_option("--table", c.table, "CSV table: trace | summary | epochs")
      ->check(CLI::IsMember({"trace", "summary", "epochs"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const OutputFormat fmt = cli_detail::parse_format(c.format);
    cli_detail::Output o;
    if (topo->parsed()) {
      o = cli_detail::cmd_topo(c, fmt);
    } else if (rt->parsed()) {
      o = cli_detail::cmd_route(c, fmt);
    } else if (tree->parsed()) {
      o = cli_detail::cmd_tree(c, fmt);
    } else if (rules->parsed()) {
      o = cli_detail::cmd_rules(c, fmt);
    } else if (fail->parsed()) {
      o = cli_detail::cmd_fail(c, fmt);
    } else if (analyze->parsed()) {
      o = cli_detail::cmd_analyze(c, fmt);
    } else if (cost->parsed()) {
      o = cli_detail::cmd_cost(c, fmt);
    } else if (sim->parsed()) {
      o = cli_detail::cmd_sim(c, fmt);
    }
    if (c.out_path.empty()) {
      out << o.text;
    } else {
      write_file_atomic(c.out_path, o.text);
      out << o.summary << " -> " << c.out_path << "\n";
    }
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    err << "error: malformed input: " << e.what() << "\n";
    return 2;
  } catch (const InvariantViolation& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace shufflecast
