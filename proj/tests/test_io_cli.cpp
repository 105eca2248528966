#include <gtest/gtest.h>

#include <sys/wait.h>

#include <clocale>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>

#include "shufflecast/cli.hpp"
#include "shufflecast/io.hpp"

using namespace shufflecast;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("shufflecast_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

int run_binary(const std::string& args, const fs::path& stdout_file) {
  const std::string cmd = std::string(SHUFFLECAST_CLI_PATH) + " " + args + " > " + stdout_file.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Io, TopologyRoundTrip) {
  for (const Params pr : {Params{2, 2}, Params{3, 3}, Params{11, 2}}) {
    const Topology t(pr);
    const json j = to_json(t);
    EXPECT_EQ(j["n"], t.size());
    EXPECT_EQ(j["tors"].size(), t.size());
    EXPECT_TRUE(topology_from_json(json::parse(j.dump())) == t);
  }
  json bad = to_json(Topology({2, 2}));
  bad["tors"][3]["neighbors"][0] = 0;
  EXPECT_THROW(topology_from_json(bad), ValidationError);
  bad = to_json(Topology({2, 2}));
  bad["tors"][1]["row_digits"] = json::array({0, 2});
  EXPECT_THROW(topology_from_json(bad), ValidationError);
  EXPECT_THROW(topology_from_json(json::array()), ValidationError);
}

TEST(Io, TopologyExportShape) {
  const json j = to_json(Topology({2, 2}));
  EXPECT_EQ(j["tors"][6]["column"], 1);
  EXPECT_EQ(j["tors"][6]["row_digits"], json::array({1, 0}));
  EXPECT_EQ(j["tors"][0]["neighbors"], json::array({4, 5}));
}

TEST(Io, RuleDeltaRoundTrip) {
  auto st = NetworkState::healthy({2, 3});
  const RuleDelta d = st.recover(8).delta;
  EXPECT_EQ(rule_delta_from_json(json::parse(to_json(d).dump())), d);
  EXPECT_THROW(rule_delta_from_json(json{{"activate", 3}}), ValidationError);
}

TEST(Io, GroupAndCatalogRoundTrip) {
  const GroupMembership g{"g1", {{0, {0, 1}}, {5, {3}}}};
  EXPECT_EQ(group_from_json(to_json(g)), g);
  EXPECT_THROW(group_from_json(json{{"name", "x"}, {"members", {{"abc", json::array({1})}}}}), ValidationError);
  const auto cat = catalog_from_json(read_json_file(SHUFFLECAST_SHARE_DIR "/catalog.json"));
  EXPECT_EQ(catalog_from_json(to_json(cat)), cat);
  EXPECT_THROW(catalog_from_json(json{{"rates", {{"10G", {{"port_w", -1}}}}}}), ValidationError);
}

TEST(Io, ScheduleRoundTripReproducesTrace) {
  const Schedule s = schedule_from_json(read_json_file(SHUFFLECAST_SHARE_DIR "/schedule.json"));
  ASSERT_EQ(s.flows.size(), 4u);
  const Schedule again = schedule_from_json(json::parse(to_json(s).dump()));
  EXPECT_EQ(again.flows, s.flows);
  auto st = NetworkState::healthy({2, 2});
  st.set_group(all_servers_group(st.topology(), 2));
  const auto cap = CapacityModel::uniform(10e9, true);
  EXPECT_EQ(run_flow_simulation(s.flows, cap, st), run_flow_simulation(again.flows, cap, st));

  EXPECT_THROW(schedule_from_json(json{{"flows", json::array({json{{"id", "a"}}})}}), ValidationError);
  EXPECT_THROW(schedule_from_json(json::array({json{{"id", "a"}, {"source", -1}, {"volume_bytes", 1}}})),
               ValidationError);
  const Schedule inl = schedule_from_json(
      json{{"flows", json::array({json{{"id", "a"},
                                       {"source", 0},
                                       {"volume_bytes", 1},
                                       {"group", {{"name", "g"}, {"members", {{"4", json::array({0})}}}}}}})}});
  ASSERT_EQ(inl.groups.size(), 1u);
  EXPECT_EQ(inl.flows[0].group, "g");
}

TEST(Io, CsvFormatting) {
  const char* previous = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = previous ? previous : "C";
  // Comma-decimal locales must not leak into output; not every image ships one.
  for (const char* loc : {"de_DE.UTF-8", "fr_FR.UTF-8", "C.UTF-8"}) {
    if (std::setlocale(LC_NUMERIC, loc)) break;
  }
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1.75), "1.75");
  EXPECT_EQ(format_number(std::uint64_t{206}), "206");
  std::setlocale(LC_NUMERIC, saved.c_str());

  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  CsvWriter w({"a", "b"});
  w.row().cell(1.5).cell("x");
  w.row().cell(std::uint64_t{2}).cell(true);
  EXPECT_EQ(w.str(), "a,b\n1.5,x\n2,true\n");
}

TEST(Io, AtomicWrite) {
  const fs::path p = scratch("atomic.txt");
  write_file_atomic(p, "first");
  write_file_atomic(p, "second");
  EXPECT_EQ(read_file(p), "second");
  EXPECT_FALSE(fs::exists(fs::path(p.string() + ".tmp")));
  EXPECT_THROW(write_file_atomic(scratch("missing_dir") / "x" / "y.txt", "z"), ValidationError);
  EXPECT_THROW(read_file(scratch("nope.json")), ValidationError);
  write_file_atomic(p, "{not json");
  EXPECT_THROW(read_json_file(p), ValidationError);
}

TEST(Cli, TopoExample) {
  const CliResult r = cli({"topo", "--p", "2", "--k", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  ASSERT_EQ(j["tors"].size(), 8u);
  for (const auto& t : j["tors"]) EXPECT_EQ(t["neighbors"].size(), 2u);
}

TEST(Cli, FailExample) {
  const CliResult r = cli({"fail", "--p", "2", "--k", "3", "--relay", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["recovery"]["mirror_failed"], 12);
  EXPECT_EQ(j["recovery"]["precedent_relay"], 2);
  EXPECT_EQ(j["recovery"]["mirror_precedent"], 6);
  std::set<int> moved;
  for (const auto& v : j["recovery"]["moved_sources"]) moved.insert(v.get<int>());
  EXPECT_EQ(moved, (std::set<int>{0, 16}));
  EXPECT_EQ(j["reachability"]["full_reach_sources"], 23);

  const CliResult broken = cli({"fail", "--p", "2", "--k", "3", "--relay", "8", "--no-recovery"});
  ASSERT_EQ(broken.code, 0);
  EXPECT_EQ(json::parse(broken.out)["reachability"]["full_reach_sources"], 12);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({"topo", "--p", "1", "--k", "2"}).code, 2);
  EXPECT_FALSE(cli({"topo", "--p", "1", "--k", "2"}).err.empty());
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"topo"}).code, 2);
  EXPECT_EQ(cli({"route", "--p", "2", "--k", "2", "--src", "9"}).code, 2);
  EXPECT_EQ(cli({"fail", "--p", "2", "--k", "2"}).code, 2);
  EXPECT_EQ(cli({"cost", "capital", "--p", "2", "--k", "2", "--radix", "4", "--catalog", "/nonexistent.json"}).code, 2);
  EXPECT_EQ(cli({"sim", "--p", "2", "--k", "2", "--schedule", "/nonexistent.json"}).code, 2);
  EXPECT_EQ(cli({"analyze", "degradation", "--p", "2", "--k", "2", "--fraction", "0"}).code, 2);
  EXPECT_EQ(cli({"analyze", "sideways", "--p", "2", "--k", "2"}).code, 2);
  EXPECT_EQ(cli({"topo", "--p", "2", "--k", "2", "--format", "xml"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, CostOutputs) {
  const CliResult core = cli({"cost", "core", "--n", "192", "--radix", "32", "--format", "csv"});
  ASSERT_EQ(core.code, 0) << core.err;
  EXPECT_NE(core.out.find("192,32,206,"), std::string::npos) << core.out;
  const CliResult power = cli({"cost", "power", "--p", "2", "--k", "2", "--radix", "4", "--format", "csv", "--catalog",
                         SHUFFLECAST_SHARE_DIR "/catalog.json"});
  ASSERT_EQ(power.code, 0) << power.err;
  EXPECT_EQ(power.out.rfind("architecture,N,rate,ports,watts,usd\n", 0), 0u);
  EXPECT_NE(power.out.find("shufflecast,8,10G,12,"), std::string::npos);
  EXPECT_NE(power.out.find("ip_multicast,8,10G,22,"), std::string::npos);
  EXPECT_NE(power.out.find("p2p_chain,8,10G,16,"), std::string::npos);
  const CliResult capital = cli({"cost", "capital", "--p", "2", "--k", "2", "--radix", "4", "--catalog",
                           SHUFFLECAST_SHARE_DIR "/catalog.json"});
  ASSERT_EQ(capital.code, 0) << capital.err;
  EXPECT_GT(json::parse(capital.out)["improvement"].get<double>(), 1.0);
}

TEST(Cli, CatalogFromEnvironment) {
  ::setenv("SHUFFLECAST_CATALOG", SHUFFLECAST_SHARE_DIR "/catalog.json", 1);
  const CliResult r = cli({"cost", "capital", "--p", "2", "--k", "2", "--radix", "4"});
  ::unsetenv("SHUFFLECAST_CATALOG");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(cli({"cost", "capital", "--p", "2", "--k", "2", "--radix", "4"}).code, 2);
}

TEST(Cli, OutWritesFileAndSummary) {
  const fs::path p = scratch("topo.json");
  const CliResult r = cli({"topo", "--p", "3", "--k", "2", "--out", p.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
  EXPECT_TRUE(topology_from_json(read_json_file(p)) == Topology({3, 2}));

  // Re-ingesting the exported topology gives identical downstream output.
  const CliResult a = cli({"rules", "--topology", p.string(), "--format", "csv"});
  const CliResult b = cli({"rules", "--p", "3", "--k", "2", "--format", "csv"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, DeterministicAcrossJobs) {
  const CliResult a = cli({"analyze", "degradation", "--p", "3", "--k", "2", "--fraction", "0.5,1", "--samples", "30",
                     "--seed", "9", "--format", "csv"});
  const CliResult b = cli({"analyze", "degradation", "--p", "3", "--k", "2", "--fraction", "0.5,1", "--samples", "30",
                     "--seed", "9", "--format", "csv", "--jobs", "3"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("fraction_active,mean_degradation\n", 0), 0u);
  const CliResult h1 = cli({"analyze", "hops", "--p", "3", "--k", "3", "--relay", "5"});
  const CliResult h2 = cli({"analyze", "hops", "--p", "3", "--k", "3", "--relay", "5", "--jobs", "2"});
  EXPECT_EQ(h1.out, h2.out);
}

TEST(Cli, ReachabilityCsv) {
  const CliResult r = cli({"analyze", "reachability", "--p", "2", "--k", "3", "--relay", "8", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "loss,count\n0,12\n2,6\n6,3\n7,1\n15,1\n23,1\n");
}

TEST(Cli, SimScheduleFile) {
  const CliResult r = cli({"sim", "--p", "2", "--k", "2", "--servers-per-tor", "2", "--schedule",
                     SHUFFLECAST_SHARE_DIR "/schedule.json", "--format", "csv", "--table", "summary"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("flow_id,start,completion,mean_rate\n", 0), 0u);
  EXPECT_NE(r.out.find("f1,0,6.3,"), std::string::npos) << r.out;
  const CliResult fcfs = cli({"sim", "--p", "2", "--k", "2", "--servers-per-tor", "2", "--schedule",
                        SHUFFLECAST_SHARE_DIR "/schedule.json", "--mode", "fcfs", "--format", "csv", "--table",
                        "summary"});
  ASSERT_EQ(fcfs.code, 0) << fcfs.err;
  EXPECT_NE(fcfs.out.find("f1,0,3.2,"), std::string::npos) << fcfs.out;
}

TEST(CliBinary, ExitStatusAndStdout) {
  const fs::path out = scratch("stdout.txt");
  EXPECT_EQ(run_binary("topo --p 2 --k 2", out), 0);
  EXPECT_EQ(json::parse(read_file(out))["tors"].size(), 8u);
  EXPECT_EQ(run_binary("topo --p 1 --k 2", out), 2);
  EXPECT_TRUE(read_file(out).empty());
  EXPECT_EQ(run_binary("no-such-command", out), 2);
  EXPECT_EQ(run_binary("fail --p 2 --k 3 --relay 8 --format csv", out), 0);
  const std::string csv = read_file(out);
  EXPECT_NE(csv.find("activate,12,0"), std::string::npos);
  EXPECT_NE(csv.find("deactivate,2,16"), std::string::npos);
  EXPECT_NE(csv.find("activate,6,0"), std::string::npos);
}
