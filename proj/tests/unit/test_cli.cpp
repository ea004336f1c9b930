#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "transpec/cli.hpp"
#include "transpec/simulation.hpp"

using namespace transpec;

#ifdef TRANSPEC_CLI_PATH

namespace {

const std::string kDir = TRANSPEC_TEST_DATA_DIR;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + TRANSPEC_CLI_PATH + "\" " + args + " 2>" + kDir + "/stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string null_csv() {
  static const std::string path = [] {
    const std::string p = kDir + "/cli_null.csv";
    write_text(p, dataset_csv(gen_null(SimScenario{}, 21)));
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("test reports are byte-identical across worker counts") {
  const std::string base = "test --data " + null_csv() + " --seed 11 --B 60";
  REQUIRE(cli(base + " --workers 1 -o " + kDir + "/w1.json") == 0);
  REQUIRE(cli(base + " --workers 3 -o " + kDir + "/w3.json") == 0);
  const std::string a = slurp(kDir + "/w1.json");
  CHECK(!a.empty());
  CHECK(a == slurp(kDir + "/w3.json"));
  const Json j = Json::parse(a);
  CHECK(j["result"].contains("t_n"));
  CHECK_FALSE(j["config"].contains("workers"));

  // replaying a report reproduces it
  REQUIRE(cli("test --config " + kDir + "/w1.json --workers 2 -o " + kDir + "/replay.json") == 0);
  CHECK(slurp(kDir + "/replay.json") == a);
}

TEST_CASE("fit writes a side table") {
  REQUIRE(cli("fit --data " + null_csv() + " -o " + kDir + "/fit.json --csv " + kDir + "/fit.csv") == 0);
  const std::string table = slurp(kDir + "/fit.csv");
  CHECK(table.find('\n') != std::string::npos);
  CHECK(Json::parse(slurp(kDir + "/fit.json")).contains("result"));
}

TEST_CASE("exit codes") {
  write_text(kDir + "/bad.csv", "y,x1\n1,2\n3,oops\n");
  CHECK(cli("fit --data " + kDir + "/bad.csv") == 2);
  const Json err = Json::parse(slurp(kDir + "/stderr.txt"));
  CHECK(err["error"]["kind"] == "ParseError");
  CHECK(err["error"]["line"] == 3);
  CHECK(err["error"]["column"] == 2);

  CHECK(cli("test --data " + null_csv()) == 2);  // no seed
  CHECK(cli("fit --data " + kDir + "/missing.csv") == 2);
  CHECK(cli("fit --data " + null_csv() + " --family nope") == 2);
  CHECK(cli("frobnicate") == 2);

  write_text(kDir + "/flat.csv", "y,x1\n1,0.1\n1,0.2\n1,0.3\n1,0.4\n1,0.5\n");
  CHECK(cli("fit --data " + kDir + "/flat.csv") == 2);
}

#else

TEST_CASE("cli not built") { MESSAGE("transpec_cli target absent; skipped"); }

#endif
