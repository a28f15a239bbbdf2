#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lnsim/cli.hpp"
#include "lnsim/simnet.hpp"
#include "support.hpp"

using namespace lnsim;
using lnsim::test::scenario_file;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("run prints the metrics csv") {
  const Outcome r = cli({"run", scenario_file("alice_bob.scn")});
  CHECK(r.code == 0);
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == metrics_csv_header());
  // onchain_tx_count is the eighth column.
  std::istringstream cells(row);
  std::string cell;
  for (int i = 0; i < 8; ++i) std::getline(cells, cell, ',');
  CHECK(cell == "2");

  const Outcome lines_fmt = cli({"run", scenario_file("alice_bob.scn"), "--format", "lines"});
  CHECK(lines_fmt.out.find("onchain_tx_count=2\n") != std::string::npos);
}

TEST_CASE("seed override is deterministic") {
  const Outcome a = cli({"run", scenario_file("ddos.scn"), "--seed", "7"});
  const Outcome b = cli({"run", scenario_file("ddos.scn"), "--seed", "7"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("--out writes the file instead of stdout") {
  const std::string path = "cli_test_out.csv";
  const Outcome r = cli({"run", scenario_file("trudy.scn"), "--out", path});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream in(path);
  std::stringstream content;
  content << in.rdbuf();
  CHECK(content.str() == cli({"run", scenario_file("trudy.scn")}).out);
  std::remove(path.c_str());
}

TEST_CASE("usage and config errors exit 2") {
  const Outcome missing = cli({"run", "/no/such/file.scn"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("scenario not found") != std::string::npos);

  CHECK(cli({"run", scenario_file("trudy.scn"), "--bogus"}).code == 2);
  CHECK(cli({"run", scenario_file("trudy.scn"), "--format", "xml"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"fly"}).code == 2);

  const std::string path = "cli_test_bad.scn";
  {
    std::ofstream f(path);
    f << "[chain BTC]\n[nodes]\nnames = solo\n";
  }
  const Outcome bad = cli({"run", path});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("invalid scenario: nodes") != std::string::npos);
  std::remove(path.c_str());

  const Outcome unknown = cli({"trace", scenario_file("trudy.scn"), "ch_xx"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("ch_xx") != std::string::npos);
}

TEST_CASE("demo walks the eight steps and closes at 8 and 12") {
  const Outcome r = cli({"demo"});
  CHECK(r.code == 0);
  std::size_t at = 0;
  for (int s = 1; s <= 8; ++s) {
    const std::size_t next = r.out.find("step " + std::to_string(s) + ":", at);
    REQUIRE(next != std::string::npos);
    at = next;
  }
  CHECK(r.out.find("revocation", r.out.find("step 7:")) != std::string::npos);
  CHECK(r.out.find("alice 8 BTC, bob 12 BTC") != std::string::npos);
  CHECK(r.out.find("cooperative close") > r.out.find("step 8:"));
  CHECK(r.out == cli({"demo"}).out);
}

TEST_CASE("stats summarises the graph") {
  const Outcome r = cli({"stats", scenario_file("trudy.scn")});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("3 nodes, 2 channels, 3 active, capacity 4000000000000 msat (40 BTC)\n", 0) ==
        0);
  CHECK(r.out.find("ch_ab alice bob BTC 2000000000000 1000 1\n") != std::string::npos);
}

TEST_CASE("trace prints the channel log") {
  const Outcome idle = cli({"trace", scenario_file("swap.scn"), "ch_sec"});
  CHECK(idle.code == 0);
  CHECK(idle.out.find(" funding") != std::string::npos);

  const Outcome r = cli({"trace", scenario_file("punish.scn"), "ch_ab"});
  CHECK(r.code == 0);
  CHECK(r.out.find(" punished ") != std::string::npos);
}
