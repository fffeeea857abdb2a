#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "dynkin/driver.hpp"
#include "dynkin/game.hpp"
#include "dynkin/lattice.hpp"

namespace dynkin::cli {

struct StoppingBlock {
  std::string driver;
  std::string payoff;
};

struct GameBlock {
  std::string f1, f2;
  std::string X1, Y1, X2, Y2;
  nlohmann::json tau1_init;  // null, "T", integer k, or {"stop": [node ids]}
  nlohmann::json tau2_init;
};

struct Scenario {
  std::string name;
  LatticeSpec lattice;
  std::map<std::string, DriverSpec> drivers;
  nlohmann::json payoffs;  // name -> definition, resolved against a built lattice
  std::optional<StoppingBlock> stopping;
  std::optional<GameBlock> game;
  std::uint64_t seed = 0;
  std::string hash;  // FNV-1a of the canonical JSON dump
};

// Throws ParseError with "<path>:<line>:<col>" for syntax errors and the
// JSON field path for schema errors. Does not build the lattice.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const nlohmann::json& doc);

// Named payoff on the macro grid. Throws ParseError for unknown names,
// cycles, bad node ids or missing explicit values.
AdaptedProcess build_payoff(const Scenario& scenario, const Lattice& lattice, const std::string& name);

const DriverSpec& driver_named(const Scenario& scenario, const std::string& name);

GameSpec build_game(const Scenario& scenario, const Lattice& lattice);

// "T" / null -> horizon, integer k -> constant k, {"stop": [ids]} -> those
// macro nodes (plus layer T).
std::optional<StoppingRule> parse_rule(const nlohmann::json& spec, const Lattice& lattice, const std::string& field);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace dynkin::cli
