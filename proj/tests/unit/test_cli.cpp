#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hydrocla/cli.hpp"

using namespace hydrocla;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Drops the line that echoes the command line.
std::string body(const std::string& report) {
  std::istringstream in(report);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.find("command") == std::string::npos) out += line + "\n";
  }
  return out;
}

std::string fixture(const std::string& file) { return std::string(HYDROCLA_SOURCE_DIR) + "/fixtures/" + file; }

}  // namespace

TEST_CASE("simulate reports every head and inflow") {
  const Run r = run({"simulate", fixture("net34.net"), "--json"});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["command"].get<std::string>().rfind("hydrocla simulate ", 0) == 0);
  CHECK(j["tables"]["state"].size() == 42);
  CHECK(j["network"]["loops"] == 21);
  CHECK_FALSE(j.contains("timings"));

  const Run flows = run({"simulate", fixture("net34.net"), "--flows", "--json"});
  REQUIRE(flows.code == kExitOk);
  CHECK(nlohmann::json::parse(flows.out)["tables"]["flows"].size() == 47);
}

TEST_CASE("cla em on net65 covers 70 state variables") {
  const Run r = run({"cla", "em", fixture("net65.net"), fixture("net65.meas"), "--bound", "both", "--json"});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["tables"]["confidence_limits"].size() == 70);
  CHECK(j["diagnostics"]["estimator_runs"] == 3);
  CHECK(j["diagnostics"].contains("t_p_value"));
}

TEST_CASE("estimate reports adjusted demands") {
  const Run r = run({"estimate", fixture("net34_observed.net"), fixture("net34_case2.meas"), "--json"});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["tables"]["demands"].size() == 34);
  CHECK(j["tables"]["state"].size() == 42);
}

TEST_CASE("output is byte-identical across runs") {
  const std::vector<std::string> args{"cla", "esm", fixture("net65.net"), fixture("net65.meas"), "--csv"};
  const Run a = run(args);
  const Run b = run(args);
  REQUIRE(a.code == kExitOk);
  CHECK(a.out == b.out);
  std::vector<std::string> threaded = args;
  threaded.insert(threaded.end(), {"--threads", "3"});
  CHECK(body(run(threaded).out) == body(a.out));
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == kExitInputError);
  CHECK(run({"frobnicate"}).code == kExitInputError);
  CHECK(run({"simulate", fixture("missing.net")}).code == kExitInputError);
  CHECK(run({"simulate", fixture("net34.meas")}).code == kExitInputError);
  CHECK(run({"simulate", fixture("net34.net"), "--json", "--csv"}).code == kExitInputError);
  CHECK(run({"cla", "em", fixture("net65.net"), fixture("net65.meas"), "--bound", "sideways"}).code ==
        kExitInputError);
  const Run nc = run({"simulate", fixture("net34.net"), "--max-iters", "1"});
  CHECK(nc.code == kExitSolverError);
  CHECK(nc.err.find("converge") != std::string::npos);
  const Run help = run({"frobnicate"});
  CHECK(help.err.find("simulate") != std::string::npos);
}

TEST_CASE("dump-topology lists the loops") {
  const Run r = run({"dump-topology", fixture("net34.net"), "--root", "30"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("root 30") != std::string::npos);
  CHECK(r.out.find("L21 pseudo-loop") != std::string::npos);
  CHECK(run({"dump-topology", fixture("net34.net"), "--root", "1"}).code == kExitInputError);
}

TEST_CASE("perturbation seed falls back to HYDROCLA_SEED") {
  const std::vector<std::string> base{"perturb-check", fixture("net65.net"), fixture("net65.meas"), "--trials", "3",
                                      "--json"};
  ::unsetenv("HYDROCLA_SEED");
  const Run def = run(base);
  REQUIRE(def.code == kExitOk);
  CHECK(nlohmann::json::parse(def.out)["diagnostics"]["seed"] == "1");

  ::setenv("HYDROCLA_SEED", "77", 1);
  const Run env = run(base);
  CHECK(nlohmann::json::parse(env.out)["diagnostics"]["seed"] == "77");
  std::vector<std::string> flagged = base;
  flagged.insert(flagged.end(), {"--seed", "77"});
  CHECK(body(run(flagged).out) == body(env.out));
  flagged.back() = "78";
  CHECK(nlohmann::json::parse(run(flagged).out)["diagnostics"]["seed"] == "78");

  ::setenv("HYDROCLA_SEED", "not-a-number", 1);
  CHECK(run(base).code == kExitInputError);
  ::unsetenv("HYDROCLA_SEED");
}
