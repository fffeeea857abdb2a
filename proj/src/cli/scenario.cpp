#include "dynkin/cli/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dynkin/errors.hpp"

namespace dynkin::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ParseError(field + ": " + message);
}

const json& require(const json& obj, const std::string& key, const std::string& field) {
  if (!obj.is_object()) fail(field, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(field + "." + key, "missing");
  return *it;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  return v.get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback, const std::string& field) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, field + "." + key);
}

int integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "expected an integer");
  return v.get<int>();
}

std::string string(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "expected a string");
  return v.get<std::string>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& field) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
      fail(field + "." + it.key(), "unknown field");
    }
  }
}

LatticeSpec parse_lattice(const json& j) {
  const std::string f = "lattice";
  if (!j.is_object()) fail(f, "expected an object");
  reject_unknown(j, {"macro_periods", "micro_per_period", "state0", "up", "down", "jump_marks"}, f);
  LatticeSpec spec;
  spec.macro_periods = integer(require(j, "macro_periods", f), f + ".macro_periods");
  spec.micro_per_period = integer(require(j, "micro_per_period", f), f + ".micro_per_period");
  spec.state0 = number_or(j, "state0", 1.0, f);
  spec.up = number_or(j, "up", 1.0, f);
  spec.down = number_or(j, "down", 1.0, f);
  if (auto it = j.find("jump_marks"); it != j.end()) {
    if (!it->is_array()) fail(f + ".jump_marks", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& mj = (*it)[i];
      const std::string mf = f + ".jump_marks[" + std::to_string(i) + "]";
      if (!mj.is_object()) fail(mf, "expected an object");
      reject_unknown(mj, {"id", "intensity", "nu_weight", "jump_factor"}, mf);
      JumpMark mark;
      mark.id = mj.contains("id") ? string(mj["id"], mf + ".id") : "j" + std::to_string(i);
      mark.intensity = number(require(mj, "intensity", mf), mf + ".intensity");
      mark.nu_weight = number_or(mj, "nu_weight", 1.0, mf);
      mark.jump_factor = number_or(mj, "jump_factor", 1.0, mf);
      spec.jump_marks.push_back(mark);
    }
  }
  return spec;
}

DriverCoefficients parse_coefficients(const json& j, const std::string& f) {
  if (!j.is_object()) fail(f, "expected an object");
  reject_unknown(j, {"c0", "a", "b", "b_abs", "gamma"}, f);
  DriverCoefficients c;
  c.c0 = number_or(j, "c0", 0.0, f);
  c.a = number_or(j, "a", 0.0, f);
  c.b = number_or(j, "b", 0.0, f);
  c.b_abs = number_or(j, "b_abs", 0.0, f);
  if (auto it = j.find("gamma"); it != j.end()) {
    if (it->is_number()) {
      c.gamma = {it->get<double>()};
    } else if (it->is_array()) {
      for (std::size_t i = 0; i < it->size(); ++i) c.gamma.push_back(number((*it)[i], f + ".gamma[" + std::to_string(i) + "]"));
    } else {
      fail(f + ".gamma", "expected a number or an array of numbers");
    }
  }
  return c;
}

DriverSpec parse_driver(const json& j, const std::string& f) {
  if (j.is_object() && j.contains("periods")) {
    reject_unknown(j, {"periods"}, f);
    const auto& p = j["periods"];
    if (!p.is_array() || p.empty()) fail(f + ".periods", "expected a non-empty array");
    DriverSpec spec;
    spec.periods.clear();
    for (std::size_t i = 0; i < p.size(); ++i) spec.periods.push_back(parse_coefficients(p[i], f + ".periods[" + std::to_string(i) + "]"));
    return spec;
  }
  return DriverSpec::constant(parse_coefficients(j, f));
}

std::string compact(const json& j) { return j.dump(); }

// Line and column of a byte offset.
std::pair<std::size_t, std::size_t> locate(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) fail("(root)", "expected an object");
  reject_unknown(doc, {"name", "description", "lattice", "drivers", "payoffs", "stopping", "game", "seed"}, "(root)");
  Scenario s;
  s.name = doc.contains("name") ? string(doc["name"], "name") : "";
  s.lattice = parse_lattice(require(doc, "lattice", "(root)"));
  if (auto it = doc.find("drivers"); it != doc.end()) {
    if (!it->is_object()) fail("drivers", "expected an object of named drivers");
    for (auto d = it->begin(); d != it->end(); ++d) s.drivers[d.key()] = parse_driver(d.value(), "drivers." + d.key());
  }
  s.payoffs = doc.value("payoffs", json::object());
  if (!s.payoffs.is_object()) fail("payoffs", "expected an object of named payoffs");
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned() && !it->is_number_integer()) fail("seed", "expected a non-negative integer");
    s.seed = it->get<std::uint64_t>();
  }

  auto ref = [&](const json& block, const char* key, const std::string& f, bool is_driver) {
    const std::string name = string(require(block, key, f), f + "." + key);
    if (is_driver ? !s.drivers.count(name) : !s.payoffs.contains(name)) {
      fail(f + "." + key, std::string("unknown ") + (is_driver ? "driver" : "payoff") + " '" + name + "'");
    }
    return name;
  };
  if (auto it = doc.find("stopping"); it != doc.end() && !it->is_null()) {
    reject_unknown(*it, {"driver", "payoff"}, "stopping");
    s.stopping = StoppingBlock{ref(*it, "driver", "stopping", true), ref(*it, "payoff", "stopping", false)};
  }
  if (auto it = doc.find("game"); it != doc.end() && !it->is_null()) {
    const auto& g = *it;
    reject_unknown(g, {"f1", "f2", "X1", "Y1", "X2", "Y2", "initialization"}, "game");
    GameBlock b;
    b.f1 = ref(g, "f1", "game", true);
    b.f2 = ref(g, "f2", "game", true);
    b.X1 = ref(g, "X1", "game", false);
    b.Y1 = ref(g, "Y1", "game", false);
    b.X2 = ref(g, "X2", "game", false);
    b.Y2 = ref(g, "Y2", "game", false);
    if (auto init = g.find("initialization"); init != g.end()) {
      reject_unknown(*init, {"tau1", "tau2"}, "game.initialization");
      b.tau1_init = init->value("tau1", json());
      b.tau2_init = init->value("tau2", json());
    }
    s.game = b;
  }
  if (!s.stopping && !s.game) fail("(root)", "needs a 'stopping' or a 'game' block");
  s.hash = "fnv1a64:" + fnv1a_hex(compact(doc));
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open scenario file");
  std::ostringstream os;
  os << in.rdbuf();
  const std::string text = os.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = locate(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  try {
    return parse_scenario(doc);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

const DriverSpec& driver_named(const Scenario& scenario, const std::string& name) {
  auto it = scenario.drivers.find(name);
  if (it == scenario.drivers.end()) throw ParseError("unknown driver '" + name + "'");
  return it->second;
}

namespace {

struct PayoffBuilder {
  const Scenario& scenario;
  const Lattice& lattice;
  std::set<std::string> active;

  AdaptedProcess state_map(const json& def, const std::string& f, auto transform) {
    const double scale = number_or(def, "scale", 1.0, f);
    const double discount = number_or(def, "discount", 1.0, f);
    AdaptedProcess p = AdaptedProcess::macro(lattice);
    for (int k = 0; k <= lattice.macro_periods(); ++k) {
      const double d = std::pow(discount, k);
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
        p.at(k, idx) = d * scale * transform(lattice.node(lattice.macro_to_micro(k), idx).state);
      }
    }
    return p;
  }

  AdaptedProcess explicit_values(const json& def, const std::string& f) {
    AdaptedProcess p = AdaptedProcess::macro(lattice);
    if (auto layers = def.find("layers"); layers != def.end()) {
      if (!layers->is_array() || static_cast<int>(layers->size()) != lattice.macro_periods() + 1) {
        fail(f + ".layers", "expected " + std::to_string(lattice.macro_periods() + 1) + " arrays (one per macro layer)");
      }
      for (int k = 0; k <= lattice.macro_periods(); ++k) {
        const auto& row = (*layers)[k];
        const std::string rf = f + ".layers[" + std::to_string(k) + "]";
        if (!row.is_array() || static_cast<int>(row.size()) != lattice.macro_layer_size(k)) {
          fail(rf, "expected " + std::to_string(lattice.macro_layer_size(k)) + " values for macro layer " +
                       std::to_string(k));
        }
        for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) p.at(k, idx) = number(row[idx], rf);
      }
      return p;
    }
    const auto& values = require(def, "values", f);
    if (!values.is_object()) fail(f + ".values", "expected an object keyed by node id");
    std::optional<double> fallback;
    if (def.contains("default")) fallback = number(def["default"], f + ".default");
    std::vector<std::vector<std::uint8_t>> seen(lattice.macro_periods() + 1);
    for (int k = 0; k <= lattice.macro_periods(); ++k) seen[k].assign(lattice.macro_layer_size(k), 0);
    for (auto it = values.begin(); it != values.end(); ++it) {
      const auto ref = lattice.find(it.key());
      if (!ref || !lattice.is_macro_layer(ref->layer)) {
        fail(f + ".values." + it.key(), "not a macro node id of this lattice");
      }
      const int k = ref->layer / lattice.micro_per_period();
      p.at(k, ref->index) = number(it.value(), f + ".values." + it.key());
      seen[k][ref->index] = 1;
    }
    for (int k = 0; k <= lattice.macro_periods(); ++k) {
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
        if (seen[k][idx]) continue;
        if (!fallback) {
          fail(f + ".values", "no value for node " + lattice.node_id(lattice.macro_to_micro(k), idx) +
                                  " and no default");
        }
        p.at(k, idx) = *fallback;
      }
    }
    return p;
  }

  AdaptedProcess build(const std::string& name) {
    const std::string f = "payoffs." + name;
    if (!scenario.payoffs.contains(name)) throw ParseError("unknown payoff '" + name + "'");
    if (!active.insert(name).second) fail(f, "payoff definitions form a cycle");
    const json& def = scenario.payoffs[name];
    if (!def.is_object()) fail(f, "expected an object");
    const std::string type = string(require(def, "type", f), f + ".type");
    AdaptedProcess out;
    if (type == "constant") {
      reject_unknown(def, {"type", "value"}, f);
      out = AdaptedProcess::macro(lattice, number(require(def, "value", f), f + ".value"));
    } else if (type == "affine") {
      reject_unknown(def, {"type", "intercept", "slope", "scale", "discount"}, f);
      const double a = number_or(def, "intercept", 0.0, f), b = number_or(def, "slope", 0.0, f);
      out = state_map(def, f, [&](double s) { return a + b * s; });
    } else if (type == "put" || type == "call") {
      reject_unknown(def, {"type", "strike", "scale", "discount"}, f);
      const double K = number(require(def, "strike", f), f + ".strike");
      const bool put = type == "put";
      out = state_map(def, f, [&](double s) { return std::max(put ? K - s : s - K, 0.0); });
    } else if (type == "spread") {
      reject_unknown(def, {"type", "base", "penalty"}, f);
      out = build(string(require(def, "base", f), f + ".base"));
      const double penalty = number(require(def, "penalty", f), f + ".penalty");
      for (int k = 0; k < lattice.macro_periods(); ++k)
        for (auto& v : out.values[k]) v += penalty;
    } else if (type == "negate") {
      reject_unknown(def, {"type", "of"}, f);
      out = build(string(require(def, "of", f), f + ".of"));
      for (auto& layer : out.values)
        for (auto& v : layer) v = -v;
    } else if (type == "explicit") {
      reject_unknown(def, {"type", "values", "default", "layers"}, f);
      out = explicit_values(def, f);
    } else {
      fail(f + ".type", "unknown payoff type '" + type + "' (constant, affine, put, call, spread, negate, explicit)");
    }
    active.erase(name);
    return out;
  }
};

}  // namespace

AdaptedProcess build_payoff(const Scenario& scenario, const Lattice& lattice, const std::string& name) {
  PayoffBuilder b{scenario, lattice, {}};
  return b.build(name);
}

GameSpec build_game(const Scenario& scenario, const Lattice& lattice) {
  if (!scenario.game) throw ParseError("scenario has no 'game' block");
  const auto& g = *scenario.game;
  GameSpec spec;
  spec.X1 = build_payoff(scenario, lattice, g.X1);
  spec.Y1 = build_payoff(scenario, lattice, g.Y1);
  spec.X2 = build_payoff(scenario, lattice, g.X2);
  spec.Y2 = build_payoff(scenario, lattice, g.Y2);
  spec.f1 = driver_named(scenario, g.f1);
  spec.f2 = driver_named(scenario, g.f2);
  return spec;
}

std::optional<StoppingRule> parse_rule(const json& spec, const Lattice& lattice, const std::string& field) {
  if (spec.is_null()) return std::nullopt;
  if (spec.is_string()) {
    if (spec.get<std::string>() != "T") fail(field, "expected \"T\", an integer layer or {\"stop\": [node ids]}");
    return StoppingRule::at_horizon(lattice);
  }
  if (spec.is_number_integer()) {
    const int k = spec.get<int>();
    if (k < 0 || k > lattice.macro_periods()) fail(field, "layer outside 0..T");
    return StoppingRule::constant(lattice, k);
  }
  if (spec.is_object()) {
    reject_unknown(spec, {"stop"}, field);
    const auto& ids = require(spec, "stop", field);
    if (!ids.is_array()) fail(field + ".stop", "expected an array of node ids");
    auto rule = StoppingRule::at_horizon(lattice);
    for (const auto& id : ids) {
      const std::string s = string(id, field + ".stop");
      const auto ref = lattice.find(s);
      if (!ref || !lattice.is_macro_layer(ref->layer)) fail(field + ".stop", "'" + s + "' is not a macro node id");
      rule.set(ref->layer / lattice.micro_per_period(), ref->index, true);
    }
    return rule;
  }
  fail(field, "expected \"T\", an integer layer or {\"stop\": [node ids]}");
}

}  // namespace dynkin::cli
