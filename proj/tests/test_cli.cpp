#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "skle/errors.hpp"
#include "skle/io.hpp"

using namespace skle;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

struct Outcome {
  int code;
  std::string err;
};

Outcome run(const std::string& args) {
  const std::string err = "cli_test.err";
  int status = std::system((std::string(SKLE_EXE) + " " + args + " 2> " + err + " > cli_test.out").c_str());
  return {WEXITSTATUS(status), slurp(err)};
}

}  // namespace

TEST_CASE("domain JSON round trip") {
  SlitConfig s({{1.0, -0.5, 0.5}, {2.0, 1.0, 3.0}});
  CHECK(domain_from_json(domain_to_json(s)) == s);
  CHECK_THROWS_AS(domain_from_json(R"({"slits": [], "colour": 1})"), Error);
  try {
    domain_from_json(R"({"slits": [{"y": 1, "x_left": 2, "x_right": 1}]})");
    FAIL("inverted slit accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degenerate);
  }
}

TEST_CASE("scenario JSON round trip") {
  Scenario s;
  s.domain = SlitConfig({{1.0, -0.5, 0.5}});
  s.driver.kind = "sde";
  s.driver.alpha = 2.5;
  s.driver.drift = "neg_bmd";
  s.T = 0.3;
  s.probes = ProbeSpec{};
  s.seed = 99;
  std::string j = scenario_to_json(s);
  CHECK(scenario_to_json(scenario_from_json(j)) == j);
  CHECK_THROWS_AS(scenario_from_json(R"({"domain": {"slits": []}, "bogus": 0})"), Error);
}

TEST_CASE("CSV header and formatting") {
  std::ostringstream out;
  CsvWriter w(out, 7, 1e-3, SlitConfig(), {"a", "b"});
  w.row({0.1, 1.0 / 3.0});
  std::string text = out.str();
  CHECK(text.rfind("# skle 0.1.0 seed=7 dt=", 0) == 0);
  CHECK(text.find("a,b\n") != std::string::npos);
  CHECK(text.find("0.33333333333333331") != std::string::npos);
  CHECK_THROWS_AS(w.row({1.0}), Error);
}

TEST_CASE("malformed slit configuration exits with code 2") {
  put("cli_bad.json", R"({"slits": [{"y": 1, "x_left": 0, "x_right": 1}, {"y": 1, "x_left": 0.5, "x_right": 2}]})");
  put("cli_probe.csv", "re,im\n0.1,0.5\n");
  Outcome o = run("--json-errors kernel --domain cli_bad.json --probe cli_probe.csv --out cli_k.csv");
  CHECK(o.code == 2);
  CHECK(o.err.find("\"kind\":\"Degenerate\"") != std::string::npos);
  CHECK(run("kernel --domain cli_missing.json --probe cli_probe.csv").code == 2);
  CHECK(run("frobnicate").code == 2);
}

TEST_CASE("kernel subcommand") {
  put("cli_empty.json", R"({"slits": []})");
  put("cli_probe.csv", "re,im\n0,1\n1,1\n");
  REQUIRE(run("kernel --domain cli_empty.json --probe cli_probe.csv --out cli_k.csv").code == 0);
  std::string text = slurp("cli_k.csv");
  CHECK(text.find("re,im,psi_re,psi_im") != std::string::npos);
  CHECK(text.find("0.31830988618379069") != std::string::npos);
}

TEST_CASE("flow subcommand reports capacity 2t and is deterministic") {
  put("cli_empty.json", R"({"slits": []})");
  REQUIRE(run("flow --domain cli_empty.json --constant 0 --T 0.2 --dt 1e-3 --probes -1,1,0,1,11,6 --out-prefix cli_r")
              .code == 0);
  std::ifstream in("cli_r.slits.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# skle", 0) == 0);
  std::getline(in, line);
  CHECK(line == "t,xi,capacity");
  double worst = 0.0;
  while (std::getline(in, line)) {
    double t, xi, a;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &xi, &a) == 3);
    if (t > 0) worst = std::max(worst, std::abs(a - 2 * t) / (2 * t));
  }
  CHECK(worst < 1e-2);
  std::string first = slurp("cli_r.slits.csv") + slurp("cli_r.points.csv") + slurp("cli_r.hull.csv");
  REQUIRE(run("flow --domain cli_empty.json --constant 0 --T 0.2 --dt 1e-3 --probes -1,1,0,1,11,6 --out-prefix cli_r")
              .code == 0);
  CHECK(first == slurp("cli_r.slits.csv") + slurp("cli_r.points.csv") + slurp("cli_r.hull.csv"));
  CHECK(slurp("cli_r.svg").find("<svg") != std::string::npos);
}

TEST_CASE("simulate subcommand is deterministic") {
  put("cli_one.json", R"({"slits": [{"y": 1, "x_left": -0.5, "x_right": 0.5}]})");
  const std::string args = "simulate --domain cli_one.json --T 0.01 --dt 1e-3 --paths 4 --seed 3 --out cli_runs";
  REQUIRE(run(args).code == 0);
  std::string first = slurp("cli_runs/drivers.csv");
  REQUIRE(run(args).code == 0);
  CHECK(first == slurp("cli_runs/drivers.csv"));
  CHECK(run("simulate --domain cli_one.json --b sideways --out cli_runs").code == 2);
}

TEST_CASE("numerical failures exit with code 3") {
  put("cli_empty.json", R"({"slits": []})");
  put("cli_hull.json", R"({"x": 0.0, "T_A": 0.0})");
  Outcome o = run("locality --domain cli_empty.json --hull cli_hull.json --paths 4 --report cli_l.json");
  CHECK((o.code == 2 || o.code == 3));
  CHECK(o.err.find("\"kind\"") != std::string::npos);
}
