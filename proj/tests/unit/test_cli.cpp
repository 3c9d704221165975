#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "semiconvex/harness/cli.hpp"

using namespace semiconvex;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir;

  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("semiconvex_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }

  std::string write(const std::string& name, const json& doc) const {
    const fs::path p = dir / name;
    std::ofstream(p) << doc.dump(2);
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json block_config(double b, const std::string& command = "minprin") {
  return {{"command", command},
          {"seed", 1},
          {"field",
           {{"family", "block-quadratic"},
            {"params", {{"control", "explicit"}, {"B", {{b, 0.0}, {0.0, b}}}, {"C", {1.0, 0.0}}, {"D", {{1.0}}}}}}},
          {"grid", {{"lower", {-0.3, -0.3}}, {"upper", {0.3, 0.3}}, {"per_axis", 5}}}};
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> argv{"semiconvex"};
  argv.insert(argv.end(), args.begin(), args.end());
  return run_cli(argv);
}

}  // namespace

TEST_CASE("minprin exit codes") {
  Workspace ws("minprin");
  const std::string pos = ws.write("pos.json", block_config(1.0));
  const std::string neg = ws.write("neg.json", block_config(0.1));
  CHECK(run({"minprin", "--config", pos, "--report", ws.path("pos_report.json"), "--points", ws.path("pos.csv")}) ==
        kExitPass);
  CHECK(run({"minprin", "--config", neg, "--report", ws.path("neg_report.json"), "--points", ws.path("neg.csv")}) ==
        kExitAssertion);

  const json report = json::parse(slurp(ws.path("neg_report.json")));
  CHECK(report["passed"] == false);
  CHECK(report["schema_version"] == kReportSchemaVersion);
  CHECK(report["summary"]["violation_rate"].get<double>() >= 0.99);
  const std::string csv = slurp(ws.path("neg.csv"));
  CHECK(csv.rfind("stage,x0,x1,gamma0,g,p0,p1,A00,A01,A11,verdict,flags\n", 0) == 0);
  CHECK(csv.find(",violation,") != std::string::npos);
}

TEST_CASE("outputs are byte-identical across runs") {
  Workspace ws("determinism");
  const std::string cfg = ws.write("cfg.json", block_config(1.0));
  REQUIRE(run({"minprin", "--config", cfg, "--report", ws.path("a.json"), "--points", ws.path("a.csv")}) == 0);
  REQUIRE(run({"minprin", "--config", cfg, "--report", ws.path("b.json"), "--points", ws.path("b.csv")}) == 0);
  CHECK(slurp(ws.path("a.csv")) == slurp(ws.path("b.csv")));
  json a = json::parse(slurp(ws.path("a.json")));
  json b = json::parse(slurp(ws.path("b.json")));
  a["config"].erase("output");
  b["config"].erase("output");
  CHECK(a.dump() == b.dump());
}

TEST_CASE("config and usage errors exit 2") {
  Workspace ws("errors");
  CHECK(run({}) == kExitConfig);
  CHECK(run({"minprin"}) == kExitConfig);
  CHECK(run({"frobnicate", "--config", "x.json"}) == kExitConfig);
  CHECK(run({"minprin", "--config", ws.path("missing.json"), "--report", ws.path("err.json")}) == kExitConfig);
  const json err = json::parse(slurp(ws.path("err.json")));
  CHECK(err["error"]["kind"] == "config");
  CHECK(err["passed"] == false);

  json bad = block_config(1.0);
  bad["surprise"] = true;
  CHECK(run({"minprin", "--config", ws.write("bad.json", bad), "--report", ws.path("bad_report.json")}) ==
        kExitConfig);
  CHECK(json::parse(slurp(ws.path("bad_report.json")))["error"]["message"].get<std::string>().find("surprise") !=
        std::string::npos);

  // config written for another subcommand
  CHECK(run({"prox", "--config", ws.write("other.json", block_config(1.0)), "--report", ws.path("o.json")}) ==
        kExitConfig);

  std::ofstream(ws.path("broken.json")) << "{ not json";
  CHECK(run({"minprin", "--config", ws.path("broken.json")}) == kExitConfig);

  // unwritable output
  json unwritable = block_config(1.0);
  unwritable["output"] = {{"report", ws.path("no/such/dir/report.json")}, {"points", ""}};
  CHECK(run({"minprin", "--config", ws.write("unwritable.json", unwritable)}) == kExitConfig);
}

TEST_CASE("help exits 0") { CHECK(run({"--help"}) == kExitPass); }

TEST_CASE("prox subcommand") {
  Workspace ws("prox");
  const json doc = {{"command", "prox"}, {"seed", 2}, {"prox", {{"sigmas", {0.25, 1.0}}, {"pairs", 100}}}};
  CHECK(run({"prox", "--config", ws.write("p.json", doc), "--report", ws.path("r.json"), "--points",
             ws.path("r.csv")}) == kExitPass);
  const json r = json::parse(slurp(ws.path("r.json")));
  CHECK(r["summary"]["sweep"].size() == 2);
  CHECK(slurp(ws.path("r.csv")).rfind("sigma,mu,pairs,full_ratio_max,fiber_ratio_max,passed\n", 0) == 0);
}

TEST_CASE("argmin subcommand on the kinked family") {
  Workspace ws("argmin");
  const json doc = {{"command", "argmin"},
                    {"field", {{"family", "kinked-base"}, {"params", {{"n", 1}}}}},
                    {"grid", {{"lower", {-1.0}}, {"upper", {1.0}}, {"per_axis", 21}}},
                    {"argmin", {{"expect_flagged", {{0.0}}}, {"constant_range", {0.6, 0.7333}}}}};
  CHECK(run({"argmin", "--config", ws.write("a.json", doc), "--report", ws.path("r.json"), "--points",
             ws.path("r.csv")}) == kExitPass);
  json strict = doc;
  strict["argmin"]["max_flagged_fraction"] = 0.0;
  CHECK(run({"argmin", "--config", ws.write("b.json", strict), "--report", ws.path("r2.json"), "--points",
             ws.path("r2.csv")}) == kExitAssertion);
}

TEST_CASE("check-sub subcommand") {
  Workspace ws("checksub");
  json doc = block_config(1.0, "check-sub");
  doc["grid"] = {{"lower", {-0.3, -0.3, -0.3}}, {"upper", {0.3, 0.3, 0.3}}, {"per_axis", 3}};
  CHECK(run({"check-sub", "--config", ws.write("c.json", doc), "--report", ws.path("r.json"), "--points",
             ws.path("r.csv")}) == kExitPass);
  json neg = block_config(0.1, "check-sub");
  neg["grid"] = doc["grid"];
  CHECK(run({"check-sub", "--config", ws.write("n.json", neg), "--report", ws.path("n.json.out"), "--points",
             ws.path("n.csv")}) == kExitAssertion);
  neg["check-sub"] = {{"expect", "violation"}};
  CHECK(run({"check-sub", "--config", ws.write("n2.json", neg), "--report", ws.path("n2.out"), "--points",
             ws.path("n2.csv")}) == kExitPass);
}

TEST_CASE("supconv subcommand") {
  Workspace ws("supconv");
  const json doc = {{"command", "supconv"},
                    {"field", {{"family", "fiber-quadratic"}, {"params", {{"sigma", 1.0}, {"box", 2.0}}}}},
                    {"grid", {{"lower", {-0.4, -0.4}}, {"upper", {0.4, 0.4}}, {"per_axis", 4}}},
                    {"epsilons", {0.05, 0.01}},
                    {"supconv", {{"segments", 50}, {"fiber_semiconcavity", {{"samples", 100}}}}}};
  CHECK(run({"supconv", "--config", ws.write("s.json", doc), "--report", ws.path("r.json"), "--points",
             ws.path("r.csv")}) == kExitPass);
  const std::string csv = slurp(ws.path("r.csv"));
  CHECK(csv.rfind("epsilon,delta,distance_to_source\n0.05,", 0) == 0);
}
