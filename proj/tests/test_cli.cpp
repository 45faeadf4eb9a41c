#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "dyadiclab/experiments.hpp"
#include "json.hpp"

using namespace dyadiclab;

namespace {

struct Outcome {
  int code = -1;
  std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dyadiclab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string temp_file(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / ("dyadiclab_test_" + name);
  std::ofstream(p) << body;
  return p.string();
}

const char* header = "check_id,anchor,measured,bound,pass,seed,runtime_ms\n";

}  // namespace

TEST_CASE("list prints the whole catalog with anchors") {
  const auto o = cli({"list"});
  CHECK(o.code == 0);
  CHECK(catalog().size() >= 13);
  for (const char* name : {"shift-bound", "paraproduct", "carleson", "pythagoras", "stopping", "decoupling",
                           "condexp-sum", "stein", "rbound-calculus", "goodness", "matrix-decay",
                           "paraproduct-extraction", "averaging-identity"}) {
    CHECK(o.out.find(name) != std::string::npos);
    CHECK_FALSE(find_experiment(name).anchor.empty());
  }

  const auto j = cli({"list", "--json"});
  REQUIRE(j.code == 0);
  const auto doc = nlohmann::json::parse(j.out);
  REQUIRE(doc.is_array());
  CHECK(doc.size() == catalog().size());
  for (const auto& e : doc) CHECK_FALSE(e.at("anchor").get<std::string>().empty());
}

TEST_CASE("empty run gives a header-only report") {
  const auto o = cli({"run"});
  CHECK(o.code == 0);
  CHECK(o.out == header);
}

TEST_CASE("config errors exit 2") {
  CHECK(cli({"run", "--config", temp_file("bad_key.json", R"({"seeed": 3})")}).code == 2);
  CHECK(cli({"run", "--config", temp_file("bad_type.json", R"({"seed": "three"})")}).code == 2);
  CHECK(cli({"run", "--config", "/nonexistent/dyadiclab.json"}).code == 2);
  CHECK(cli({"run", "--experiment", "no-such-experiment"}).code == 2);
  CHECK(cli({"run", "--dim", "0", "--experiment", "stein"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK_THROWS_AS(find_experiment("nope"), ConfigError);
}

TEST_CASE("flags override config keys") {
  const auto path = temp_file("cfg.json", R"({"experiments": ["pythagoras"], "seed": 11, "p": [2]})");
  const auto from_cfg = cli({"run", "--config", path});
  CHECK(from_cfg.code == 0);
  CHECK(from_cfg.out.find(",11,\n") != std::string::npos);
  CHECK(from_cfg.out.find("p=3") == std::string::npos);

  const auto flagged = cli({"run", "--config", path, "--seed", "12", "--p", "3"});
  CHECK(flagged.out.find(",12,\n") != std::string::npos);
  CHECK(flagged.out.find(",11,\n") == std::string::npos);
  CHECK(flagged.out.find("p=3") != std::string::npos);
}

TEST_CASE("pythagoras counterexample rows are exact") {
  const auto o = cli({"run", "--experiment", "pythagoras", "--seed", "3"});
  CHECK(o.code == 0);
  std::istringstream in(o.out);
  std::string line;
  int counter = 0;
  while (std::getline(in, line)) {
    if (line.rfind("pythagoras/counterexample/", 0) != 0) continue;
    ++counter;
    CHECK(line.find(",true,") != std::string::npos);
  }
  CHECK(counter == 6);
}

TEST_CASE("shift-bound report is byte-identical across reruns") {
  const std::vector<std::string> args = {"run",    "--experiment", "shift-bound", "--seed", "7",      "--dim",
                                         "1",      "--depth",      "8",           "--p",    "2",      "--i-max",
                                         "3",      "--j-max",      "3",           "--trials", "6"};
  const auto a = cli(args);
  const auto b = cli(args);
  auto par = args;
  par.push_back("--parallel");
  const auto c = cli(par);
  REQUIRE(a.code == 0);
  CHECK(a.out.size() > std::string(header).size());
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  // 16 (i, j) rows plus the max-fraction row
  CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 1 + 16 + 1);
}

TEST_CASE("DYADICLAB_SEED is the default seed") {
  ::setenv("DYADICLAB_SEED", "41", 1);
  const auto env = cli({"run", "--experiment", "stein", "--p", "2", "--trials", "3"});
  const auto flag = cli({"run", "--experiment", "stein", "--p", "2", "--trials", "3", "--seed", "5"});
  ::setenv("DYADICLAB_SEED", "not-a-number", 1);
  const auto bad = cli({"run", "--experiment", "stein"});
  ::unsetenv("DYADICLAB_SEED");
  CHECK(env.out.find(",41,\n") != std::string::npos);
  CHECK(flag.out.find(",5,\n") != std::string::npos);
  CHECK(bad.code == 2);
}

TEST_CASE("summary json and file output") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto csv = (dir / "dyadiclab_test_out.csv").string();
  const auto sum = (dir / "dyadiclab_test_summary.json").string();
  const auto o = cli({"run", "--experiment", "condexp-sum", "--trials", "5", "--out", csv, "--summary", sum});
  CHECK(o.code == 0);
  CHECK(o.out.empty());
  std::ifstream f(csv);
  std::string first;
  std::getline(f, first);
  CHECK(first + "\n" == header);
  std::ifstream s(sum);
  const auto doc = nlohmann::json::parse(s);
  CHECK(doc.is_object());
}
