#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "dynkin/cli/commands.hpp"
#include "dynkin/cli/scenario.hpp"
#include "dynkin/errors.hpp"
#include "dynkin/oracle.hpp"

using namespace dynkin;
using nlohmann::json;

namespace {

const std::string kScenarios = DYNKIN_SCENARIO_DIR;

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "dynkin-g-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string write_text(const std::string& name, const std::string& text) {
  const auto p = scratch(name);
  std::ofstream(p) << text;
  return p.string();
}

struct Outcome {
  int status;
  json result;
};

Outcome run(const std::string& command, const std::string& scenario, bool exhaustive = false) {
  cli::Options o;
  o.command = command;
  o.scenario = scenario;
  o.exhaustive = exhaustive;
  o.quiet = true;
  o.out = scratch(command + ".json").string();
  const int status = cli::run(o);
  std::ifstream in(o.out);
  return {status, json::parse(in)};
}

std::string parse_error(const std::string& text) {
  try {
    cli::load_scenario(write_text("bad.json", text));
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

const char* kMinimal = R"({
  "lattice": {"macro_periods": 1, "micro_per_period": 1},
  "drivers": {"zero": {}},
  "payoffs": {"xi": {"type": "constant", "value": 1}},
  "stopping": {"driver": "zero", "payoff": "xi"}
})";

}  // namespace

TEST_CASE("syntax errors report line and column") {
  const auto msg = parse_error("{\n  \"lattice\": {\n    \"macro_periods\": 1,,\n  }\n}\n");
  CHECK(msg.find("bad.json:3:") != std::string::npos);
}

TEST_CASE("schema errors report the field path") {
  CHECK(parse_error(kMinimal).empty());

  json doc = json::parse(kMinimal);
  doc["lattice"]["bogus"] = 1;
  CHECK(parse_error(doc.dump()).find("lattice.bogus: unknown field") != std::string::npos);

  doc = json::parse(kMinimal);
  doc["lattice"]["macro_periods"] = "two";
  CHECK(parse_error(doc.dump()).find("lattice.macro_periods: expected an integer") != std::string::npos);

  doc = json::parse(kMinimal);
  doc["stopping"]["driver"] = "missing";
  CHECK(parse_error(doc.dump()).find("unknown driver 'missing'") != std::string::npos);

  doc = json::parse(kMinimal);
  doc.erase("stopping");
  CHECK(parse_error(doc.dump()).find("needs a 'stopping' or a 'game' block") != std::string::npos);
}

TEST_CASE("payoff definitions") {
  json doc = json::parse(kMinimal);
  doc["payoffs"] = {{"xi", {{"type", "negate"}, {"of", "a"}}}, {"a", {{"type", "negate"}, {"of", "xi"}}}};
  const auto s = cli::parse_scenario(doc);
  Lattice lattice(s.lattice);
  CHECK_THROWS_WITH_AS(cli::build_payoff(s, lattice, "xi"), doctest::Contains("cycle"), ParseError);

  doc["payoffs"] = {{"xi", {{"type", "explicit"}, {"layers", json::array({json::array({1.0})})}}}};
  const auto short_layers = cli::parse_scenario(doc);
  CHECK_THROWS_AS(cli::build_payoff(short_layers, lattice, "xi"), ParseError);

  doc["payoffs"] = {{"xi", {{"type", "put"}, {"strike", 1.5}}}};
  const auto put = cli::parse_scenario(doc);
  const auto p = cli::build_payoff(put, lattice, "xi");
  CHECK(p.at(0, 0) == 0.5);  // state0 defaults to 1
}

TEST_CASE("stopping rule specs") {
  const auto s = cli::parse_scenario(json::parse(kMinimal));
  Lattice lattice(s.lattice);
  CHECK(cli::parse_rule("T", lattice, "f") == StoppingRule::at_horizon(lattice));
  CHECK(cli::parse_rule(0, lattice, "f") == StoppingRule::constant(lattice, 0));
  CHECK(cli::parse_rule(json{{"stop", {"0"}}}, lattice, "f") == StoppingRule::constant(lattice, 0));
  CHECK_THROWS_AS(cli::parse_rule(5, lattice, "f"), ParseError);
  CHECK_THROWS_AS(cli::parse_rule(json{{"stop", {"nowhere"}}}, lattice, "f"), ParseError);
}

TEST_CASE("scenario hash ignores formatting") {
  const auto a = cli::parse_scenario(json::parse(kMinimal));
  const auto b = cli::parse_scenario(json::parse(json::parse(kMinimal).dump()));
  CHECK(a.hash == b.hash);
  CHECK(a.hash.rfind("fnv1a64:", 0) == 0);
  CHECK(cli::fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("validate rejects the invalid driver") {
  const auto r = run("validate", kScenarios + "/invalid_gamma.json");
  CHECK(r.status == cli::kVerificationFailed);
  CHECK_FALSE(r.result["passed"].get<bool>());
}

TEST_CASE("stop on the American put equals the classical value") {
  const auto r = run("stop", kScenarios + "/american_put.json", true);
  REQUIRE(r.status == cli::kOk);
  const auto s = cli::load_scenario(kScenarios + "/american_put.json");
  Lattice lattice(s.lattice);
  const auto xi = cli::build_payoff(s, lattice, s.stopping->payoff);
  const double classical = oracle::classical_snell(lattice, xi).at(0, 0);
  CHECK(std::abs(r.result["values"]["V0"].get<double>() - classical) <= 1e-12);
}

TEST_CASE("game option is zero-sum") {
  const auto r = run("game", kScenarios + "/game_option.json");
  REQUIRE(r.status == cli::kOk);
  const double j1 = r.result["values"]["J1"].get<double>();
  const double j2 = r.result["values"]["J2"].get<double>();
  CHECK(std::abs(j1 + j2) <= 1e-10);
  CHECK(r.result["verification"]["zero_sum"]["passed"].get<bool>());
}

TEST_CASE("oracle refuses oversized lattices") {
  const auto r = run("oracle", kScenarios + "/put_ambiguity.json");
  CHECK(r.status == cli::kBudgetRefused);
  CHECK(r.result["error"]["kind"] == "budget");
}

TEST_CASE("oracle and properties pass on the tiny scenario") {
  CHECK(run("oracle", kScenarios + "/tiny_explicit.json").status == cli::kOk);
  CHECK(run("properties", kScenarios + "/tiny_explicit.json").status == cli::kOk);
}

TEST_CASE("inapplicable command and unreadable file") {
  CHECK(run("game", kScenarios + "/american_put.json").status == cli::kUsageError);
  CHECK(run("stop", kScenarios + "/does_not_exist.json").status == cli::kUsageError);
}
