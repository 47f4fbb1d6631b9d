// Copyright 2026 The trimarket Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trimarket/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace trimarket {

using nlohmann::json;

const char* to_string(FuelKind f) {
  switch (f) {
    case FuelKind::kCoal:
      return "coal";
    case FuelKind::kGasFired:
      return "gas-fired";
    case FuelKind::kCleanFuel:
      return "clean-fuel";
    case FuelKind::kWind:
      return "wind";
  }
  return "?";
}

const char* to_string(MarketMode m) {
  return m == MarketMode::kProposed ? "proposed" : "cap-and-trade";
}

int TimeStructure::num_periods() const {
  if (horizon_ <= 0) throw ModelError("system-model", "horizon must be positive");
  if (k_ <= 0 || horizon_ % k_ != 0) {
    throw ModelError("system-model",
                     fmt::format("clearing scalar {} does not divide horizon {}", k_,
                                 horizon_));
  }
  return horizon_ / k_;
}

int TimeStructure::period_of(int hour) const {
  num_periods();
  if (hour < 1 || hour > horizon_) {
    throw ModelError("system-model", fmt::format("hour {} outside horizon", hour));
  }
  return (hour + k_ - 1) / k_;
}

std::vector<int> TimeStructure::hours_in(int period) const {
  const int np = num_periods();
  if (period < 1 || period > np) {
    throw ModelError("system-model", fmt::format("period {} out of range", period));
  }
  std::vector<int> out;
  for (int t = (period - 1) * k_ + 1; t <= period * k_; ++t) out.push_back(t);
  return out;
}

std::vector<int> coupling_map(const TimeStructure& ts) {
  ts.num_periods();
  std::vector<int> map(ts.horizon() + 1, 0);
  for (int t = 1; t <= ts.horizon(); ++t) map[t] = ts.period_of(t);
  return map;
}

namespace {

template <typename Vec>
auto& find_by_id(Vec& v, std::string_view id, const char* what) {
  for (auto& x : v) {
    if (x.id == id) return x;
  }
  throw LookupError("system-model", fmt::format("unknown {} '{}'", what, id));
}

}  // namespace

const GeneratorSpec& MarketCase::generator(std::string_view id) const {
  return find_by_id(generators, id, "generator");
}

GeneratorSpec& MarketCase::mutable_generator(std::string_view id) {
  return find_by_id(generators, id, "generator");
}

const Bus& MarketCase::bus(std::string_view id) const {
  return find_by_id(power.buses, id, "bus");
}

const GasNode& MarketCase::gas_node(std::string_view id) const {
  return find_by_id(gas.nodes, id, "gas node");
}

double MarketCase::carbon_period_factor() const {
  return carbon.basis == AmountBasis::kPerHour ? time.clearing_scalar() : 1.0;
}

double MarketCase::offer_amount(std::size_t r) const {
  return carbon.offers.at(r).amount * carbon_period_factor();
}

double MarketCase::demand_amount(std::size_t o) const {
  return carbon.demands.at(o).amount * carbon_period_factor();
}

double MarketCase::horizon_cap() const {
  if (!carbon.cap) throw ModelError("system-model", "case has no carbon cap");
  return carbon.basis == AmountBasis::kPerHour ? *carbon.cap * time.horizon()
                                               : *carbon.cap * time.num_periods();
}

// ---------------------------------------------------------------------------
// Parsing.

namespace {

// Walks a JSON object, tracking the path and rejecting unread keys.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(path_, "expected an object");
  }

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ParseError(child(it.key()), "unknown field");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) throw ParseError(child(key), "missing mandatory field");
    return j_.at(key);
  }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  double number(const std::string& key) { return as_number(at(key), child(key)); }

  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key) || j_.at(key).is_null()) return std::nullopt;
    return number(key);
  }

  int integer(const std::string& key) {
    const double v = number(key);
    if (v != std::floor(v)) throw ParseError(child(key), "expected an integer");
    return static_cast<int>(v);
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long>());
    throw ParseError(child(key), "expected a string");
  }

  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ParseError(child(key), "expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) throw ParseError(child(key), "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_number(v[i], fmt::format("{}[{}]", child(key), i)));
    }
    return out;
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ParseError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(path, "expected a finite number");
    return d;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void for_each_object(ObjectReader& r, const std::string& key, bool required, F&& f) {
  if (!required && !r.has(key)) return;
  const json& arr = r.at(key);
  const std::string path = r.child(key);
  if (!arr.is_array()) throw ParseError(path, "expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    ObjectReader item(arr[i], fmt::format("{}[{}]", path, i));
    f(item);
  }
}

FuelKind parse_fuel(const std::string& s, const std::string& path) {
  if (s == "coal") return FuelKind::kCoal;
  if (s == "gas-fired") return FuelKind::kGasFired;
  if (s == "clean-fuel") return FuelKind::kCleanFuel;
  if (s == "wind") return FuelKind::kWind;
  throw ParseError(path, "unknown fuel '" + s + "'");
}

// Per-hour profile from either an explicit array or base value x shape.
std::vector<double> profile(ObjectReader& r, const std::vector<double>& shape,
                            int horizon, const std::string& explicit_key,
                            const std::string& base_key) {
  if (r.has(explicit_key)) {
    if (r.has(base_key)) {
      throw ParseError(r.child(base_key), "conflicts with '" + explicit_key + "'");
    }
    return r.numbers(explicit_key);
  }
  const double base = r.number(base_key, 0.0);
  std::vector<double> out(horizon);
  for (int t = 0; t < horizon; ++t) {
    out[t] = base * (shape.empty() ? 1.0 : shape[t]);
  }
  return out;
}

std::vector<double> load_shape(ObjectReader& r, int horizon) {
  if (!r.has("load_shape")) return {};
  std::vector<double> shape = r.numbers("load_shape");
  if (static_cast<int>(shape.size()) != horizon) {
    throw ParseError(r.child("load_shape"),
                     fmt::format("has {} entries, horizon is {}", shape.size(), horizon));
  }
  return shape;
}

// Converts a nlohmann byte offset into line:column.
std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return fmt::format("line {}, column {}", line, col);
}

}  // namespace

MarketCase parse_case(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("", fmt::format("syntax error at {}: {}", line_col(text, e.byte),
                                     e.what()));
  }
  MarketCase c;
  ObjectReader top(root, "");
  c.name = top.string("name", "");

  {
    ObjectReader t(top.at("time"), "time");
    const int horizon = t.integer("horizon");
    const int k = t.has("clearing_scalar") ? t.integer("clearing_scalar") : 1;
    if (horizon <= 0) throw ParseError("time.horizon", "must be positive");
    if (k <= 0) throw ParseError("time.clearing_scalar", "must be positive");
    c.time = TimeStructure(horizon, k);
  }
  const int horizon = c.time.horizon();

  if (top.has("penalties")) {
    ObjectReader p(top.at("penalties"), "penalties");
    c.penalties.lost_load = p.number("lost_load", c.penalties.lost_load);
    c.penalties.lost_gas = p.number("lost_gas", c.penalties.lost_gas);
    c.penalties.unmet_carbon = p.number("unmet_carbon", c.penalties.unmet_carbon);
  }

  {
    ObjectReader p(top.at("power"), "power");
    c.power.base_mva = p.number("base_mva", 100.0);
    const std::vector<double> shape = load_shape(p, horizon);
    for_each_object(p, "buses", true, [&](ObjectReader& b) {
      Bus bus;
      bus.id = b.string("id");
      bus.demand = profile(b, shape, horizon, "demand", "base_demand");
      c.power.buses.push_back(std::move(bus));
    });
    if (c.power.buses.empty()) throw ParseError("power.buses", "empty power network");
    c.power.reference_bus = p.string("reference_bus", c.power.buses.front().id);
    for_each_object(p, "lines", false, [&](ObjectReader& l) {
      Line line;
      line.from = l.string("from");
      line.to = l.string("to");
      line.id = l.string("id", line.from + "-" + line.to);
      if (l.has("susceptance")) {
        if (l.has("x")) throw ParseError(l.child("x"), "conflicts with 'susceptance'");
        line.susceptance = l.number("susceptance");
      } else {
        const double x = l.number("x");
        if (x == 0.0) throw ParseError(l.child("x"), "reactance must be nonzero");
        line.susceptance = 1.0 / x;
      }
      line.capacity = l.number("capacity");
      c.power.lines.push_back(std::move(line));
    });
    for_each_object(p, "generators", true, [&](ObjectReader& g) {
      GeneratorSpec gen;
      gen.id = g.string("id");
      gen.bus = g.string("bus");
      gen.fuel = parse_fuel(g.string("fuel"), g.child("fuel"));
      if (gen.fuel == FuelKind::kWind) {
        gen.profile = g.has("profile") ? g.numbers("profile")
                                       : std::vector<double>(horizon, 0.0);
        gen.p_max = g.number("p_max", 0.0);
      } else {
        gen.p_min = g.number("p_min", 0.0);
        gen.p_max = g.number("p_max");
        gen.cost = g.number("cost");
        gen.ramp = g.optional_number("ramp");
        gen.initial_output = g.optional_number("initial_output");
      }
      gen.emission_rate = g.number("emission_rate", 0.0);
      if (gen.fuel == FuelKind::kGasFired) {
        gen.heat_rate = g.number("heat_rate");
        gen.gas_node = g.string("gas_node");
      }
      c.generators.push_back(std::move(gen));
    });
  }

  {
    ObjectReader g(top.at("gas"), "gas");
    const std::vector<double> shape = load_shape(g, horizon);
    for_each_object(g, "nodes", true, [&](ObjectReader& n) {
      GasNode node;
      node.id = n.string("id");
      node.demand = profile(n, shape, horizon, "demand", "base_demand");
      c.gas.nodes.push_back(std::move(node));
    });
    for_each_object(g, "pipelines", false, [&](ObjectReader& l) {
      Pipeline pipe;
      pipe.from = l.string("from");
      pipe.to = l.string("to");
      pipe.id = l.string("id", pipe.from + "-" + pipe.to);
      pipe.capacity = l.number("capacity");
      c.gas.pipelines.push_back(std::move(pipe));
    });
    for_each_object(g, "suppliers", true, [&](ObjectReader& s) {
      GasSupplier sup;
      sup.id = s.string("id");
      sup.node = s.string("node");
      sup.f_min = s.number("f_min", 0.0);
      sup.f_max = s.number("f_max");
      sup.cost = s.number("cost");
      c.gas.suppliers.push_back(std::move(sup));
    });
  }

  {
    ObjectReader cm(top.at("carbon"), "carbon");
    const std::string basis = cm.string("amount_basis", "per_hour");
    if (basis == "per_hour") {
      c.carbon.basis = AmountBasis::kPerHour;
    } else if (basis == "per_period") {
      c.carbon.basis = AmountBasis::kPerPeriod;
    } else {
      throw ParseError("carbon.amount_basis", "expected per_hour or per_period");
    }
    for_each_object(cm, "offers", true, [&](ObjectReader& o) {
      c.carbon.offers.push_back({o.string("id"), o.number("amount"), o.number("cost")});
    });
    for_each_object(cm, "demands", false, [&](ObjectReader& o) {
      c.carbon.demands.push_back({o.string("id"), o.number("amount")});
    });
    c.carbon.cap = cm.optional_number("cap");
  }

  if (top.has("solver")) {
    ObjectReader s(top.at("solver"), "solver");
    SolverConfig& sc = c.solver;
    sc.adapter = s.string("adapter", sc.adapter);
    sc.time_limit = s.number("time_limit", sc.time_limit);
    sc.tolerance = s.number("tolerance", sc.tolerance);
    sc.big_m_scale = s.number("big_m_scale", sc.big_m_scale);
    sc.eps_comp = s.number("eps_comp", sc.eps_comp);
    const std::string obj = s.string("objective", "none");
    if (obj == "none") {
      sc.objective = SecondaryObjective::kNone;
    } else if (obj == "total_cost") {
      sc.objective = SecondaryObjective::kTotalCost;
    } else {
      throw ParseError("solver.objective", "expected none or total_cost");
    }
    sc.cap_includes_demands = s.boolean("cap_includes_demands", sc.cap_includes_demands);
    sc.cap_couples_gas = s.boolean("cap_couples_gas", sc.cap_couples_gas);
    sc.warm_start = s.boolean("warm_start", sc.warm_start);
  }
  return c;
}

MarketCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open case file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    MarketCase c = parse_case(ss.str());
    if (c.name.empty()) {
      const auto slash = path.find_last_of('/');
      std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
      const auto dot = base.find_last_of('.');
      c.name = dot == std::string::npos ? base : base.substr(0, dot);
    }
    return c;
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.path(), e.what());
  }
}

std::string serialize_case(const MarketCase& c) {
  json root;
  root["name"] = c.name;
  root["time"] = {{"horizon", c.time.horizon()},
                  {"clearing_scalar", c.time.clearing_scalar()}};
  root["penalties"] = {{"lost_load", c.penalties.lost_load},
                       {"lost_gas", c.penalties.lost_gas},
                       {"unmet_carbon", c.penalties.unmet_carbon}};
  json power;
  power["base_mva"] = c.power.base_mva;
  power["reference_bus"] = c.power.reference_bus;
  power["buses"] = json::array();
  for (const Bus& b : c.power.buses) {
    power["buses"].push_back({{"id", b.id}, {"demand", b.demand}});
  }
  power["lines"] = json::array();
  for (const Line& l : c.power.lines) {
    power["lines"].push_back({{"id", l.id},
                              {"from", l.from},
                              {"to", l.to},
                              {"susceptance", l.susceptance},
                              {"capacity", l.capacity}});
  }
  power["generators"] = json::array();
  for (const GeneratorSpec& g : c.generators) {
    json j = {{"id", g.id}, {"bus", g.bus}, {"fuel", to_string(g.fuel)},
              {"emission_rate", g.emission_rate}};
    if (g.fuel == FuelKind::kWind) {
      j["profile"] = g.profile;
      j["p_max"] = g.p_max;
    } else {
      j["p_min"] = g.p_min;
      j["p_max"] = g.p_max;
      j["cost"] = g.cost;
      if (g.ramp) j["ramp"] = *g.ramp;
      if (g.initial_output) j["initial_output"] = *g.initial_output;
    }
    if (g.fuel == FuelKind::kGasFired) {
      j["heat_rate"] = g.heat_rate;
      j["gas_node"] = g.gas_node;
    }
    power["generators"].push_back(std::move(j));
  }
  root["power"] = std::move(power);

  json gas;
  gas["nodes"] = json::array();
  for (const GasNode& n : c.gas.nodes) {
    gas["nodes"].push_back({{"id", n.id}, {"demand", n.demand}});
  }
  gas["pipelines"] = json::array();
  for (const Pipeline& p : c.gas.pipelines) {
    gas["pipelines"].push_back(
        {{"id", p.id}, {"from", p.from}, {"to", p.to}, {"capacity", p.capacity}});
  }
  gas["suppliers"] = json::array();
  for (const GasSupplier& s : c.gas.suppliers) {
    gas["suppliers"].push_back({{"id", s.id},
                                {"node", s.node},
                                {"f_min", s.f_min},
                                {"f_max", s.f_max},
                                {"cost", s.cost}});
  }
  root["gas"] = std::move(gas);

  json carbon;
  carbon["amount_basis"] =
      c.carbon.basis == AmountBasis::kPerHour ? "per_hour" : "per_period";
  carbon["offers"] = json::array();
  for (const CarbonOffer& o : c.carbon.offers) {
    carbon["offers"].push_back({{"id", o.id}, {"amount", o.amount}, {"cost", o.cost}});
  }
  carbon["demands"] = json::array();
  for (const CarbonDemand& d : c.carbon.demands) {
    carbon["demands"].push_back({{"id", d.id}, {"amount", d.amount}});
  }
  if (c.carbon.cap) carbon["cap"] = *c.carbon.cap;
  root["carbon"] = std::move(carbon);

  const SolverConfig& sc = c.solver;
  root["solver"] = {
      {"adapter", sc.adapter},
      {"time_limit", sc.time_limit},
      {"tolerance", sc.tolerance},
      {"big_m_scale", sc.big_m_scale},
      {"eps_comp", sc.eps_comp},
      {"objective", sc.objective == SecondaryObjective::kNone ? "none" : "total_cost"},
      {"cap_includes_demands", sc.cap_includes_demands},
      {"cap_couples_gas", sc.cap_couples_gas},
      {"warm_start", sc.warm_start}};
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Validation.

std::string ValidationReport::str() const {
  std::string out;
  for (const auto& e : errors) out += fmt::format("error: {}: {}\n", e.where, e.message);
  for (const auto& w : warnings) out += fmt::format("warning: {}: {}\n", w.where, w.message);
  return out;
}

ValidationReport validate(const MarketCase& c) {
  ValidationReport rep;
  auto error = [&](std::string where, std::string msg) {
    rep.errors.push_back({std::move(where), std::move(msg)});
  };
  auto warn = [&](std::string where, std::string msg) {
    rep.warnings.push_back({std::move(where), std::move(msg)});
  };
  const int horizon = c.time.horizon();
  const std::size_t hz = static_cast<std::size_t>(std::max(horizon, 0));

  if (horizon <= 0) error("time", "horizon must be positive");
  if (c.time.clearing_scalar() <= 0 ||
      (horizon > 0 && horizon % c.time.clearing_scalar() != 0)) {
    error("time", fmt::format("clearing scalar {} does not divide horizon {}",
                              c.time.clearing_scalar(), horizon));
  }
  if (c.penalties.lost_load <= 0 || c.penalties.lost_gas <= 0 ||
      c.penalties.unmet_carbon <= 0) {
    error("penalties", "penalties must be positive");
  }

  std::set<std::string> buses, nodes, ids;
  if (c.power.buses.empty()) error("power.buses", "empty power network");
  for (const Bus& b : c.power.buses) {
    if (!buses.insert(b.id).second) error("bus " + b.id, "duplicate bus id");
    if (b.demand.size() != hz) {
      error("bus " + b.id, fmt::format("demand has {} entries, horizon is {}",
                                       b.demand.size(), horizon));
    }
    for (double d : b.demand) {
      if (d < 0) {
        error("bus " + b.id, "negative demand");
        break;
      }
    }
  }
  if (!buses.count(c.power.reference_bus)) {
    error("power.reference_bus", "reference bus '" + c.power.reference_bus + "' not found");
  }
  if (!(c.power.base_mva > 0)) error("power.base_mva", "must be positive");
  std::set<std::string> line_ids;
  for (const Line& l : c.power.lines) {
    const std::string where = "line " + l.id;
    if (!line_ids.insert(l.id).second) error(where, "duplicate line id");
    if (!buses.count(l.from) || !buses.count(l.to)) error(where, "unknown endpoint bus");
    if (l.from == l.to) error(where, "line connects a bus to itself");
    if (!(l.susceptance > 0)) error(where, "susceptance must be positive");
    if (l.capacity < 0) error(where, "negative capacity");
  }
  // Connectivity from the reference bus.
  if (!c.power.buses.empty() && buses.count(c.power.reference_bus)) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const Line& l : c.power.lines) {
      adj[l.from].push_back(l.to);
      adj[l.to].push_back(l.from);
    }
    std::set<std::string> reached{c.power.reference_bus};
    std::vector<std::string> stack{c.power.reference_bus};
    while (!stack.empty()) {
      const std::string b = stack.back();
      stack.pop_back();
      for (const auto& n : adj[b]) {
        if (reached.insert(n).second) stack.push_back(n);
      }
    }
    for (const Bus& b : c.power.buses) {
      if (!reached.count(b.id)) warn("bus " + b.id, "not connected to the reference bus");
    }
  }

  for (const GasNode& n : c.gas.nodes) {
    if (!nodes.insert(n.id).second) error("gas node " + n.id, "duplicate node id");
    if (n.demand.size() != hz) {
      error("gas node " + n.id, fmt::format("demand has {} entries, horizon is {}",
                                            n.demand.size(), horizon));
    }
    for (double d : n.demand) {
      if (d < 0) {
        error("gas node " + n.id, "negative demand");
        break;
      }
    }
  }
  std::set<std::string> pipe_ids;
  for (const Pipeline& p : c.gas.pipelines) {
    const std::string where = "pipeline " + p.id;
    if (!pipe_ids.insert(p.id).second) error(where, "duplicate pipeline id");
    if (!nodes.count(p.from) || !nodes.count(p.to)) error(where, "unknown endpoint node");
    if (p.capacity < 0) error(where, "negative capacity");
  }
  for (const GasSupplier& s : c.gas.suppliers) {
    const std::string where = "supplier " + s.id;
    if (!ids.insert(s.id).second) error(where, "duplicate id");
    if (!nodes.count(s.node)) error(where, "unknown gas node '" + s.node + "'");
    if (!(0 <= s.f_min && s.f_min <= s.f_max)) error(where, "requires 0 <= f_min <= f_max");
    if (s.cost < 0) error(where, "negative cost");
  }

  for (const GeneratorSpec& g : c.generators) {
    const std::string where = "generator " + g.id;
    if (!ids.insert(g.id).second) error(where, "duplicate id");
    if (!buses.count(g.bus)) error(where, "unknown bus '" + g.bus + "'");
    if (!(0 <= g.p_min && g.p_min <= g.p_max)) error(where, "requires 0 <= p_min <= p_max");
    if (g.ramp && *g.ramp < 0) error(where, "negative ramp limit");
    if (g.emission_rate < 0) error(where, "negative emission rate");
    if (g.fuel == FuelKind::kGasFired) {
      if (!(g.heat_rate > 0)) error(where, "gas-fired unit needs a positive heat rate");
      if (!nodes.count(g.gas_node)) error(where, "unknown gas node '" + g.gas_node + "'");
    }
    if (g.fuel == FuelKind::kWind) {
      if (g.profile.size() != hz) {
        error(where, fmt::format("profile has {} entries, horizon is {}", g.profile.size(),
                                 horizon));
      }
      for (double p : g.profile) {
        if (p < 0) {
          error(where, "negative wind forecast");
          break;
        }
      }
    }
  }

  double offer_sum = 0.0;
  for (const CarbonOffer& o : c.carbon.offers) {
    const std::string where = "offer " + o.id;
    if (!ids.insert(o.id).second) error(where, "duplicate id");
    if (o.amount < 0 || o.cost < 0) error(where, "amount and cost must be nonnegative");
    offer_sum += o.amount;
  }
  for (const CarbonDemand& d : c.carbon.demands) {
    const std::string where = "carbon demand " + d.id;
    if (!ids.insert(d.id).second) error(where, "duplicate id");
    if (d.amount < 0) error(where, "amount must be nonnegative");
  }
  if (c.carbon.cap) {
    if (*c.carbon.cap < 0) error("carbon.cap", "negative cap");
    if (std::abs(offer_sum - *c.carbon.cap) > 1e-9 * std::max(1.0, *c.carbon.cap)) {
      warn("carbon.cap", fmt::format("offer amounts sum to {} but the cap is {}", offer_sum,
                                     *c.carbon.cap));
    }
  }

  const SolverConfig& s = c.solver;
  if (!(s.time_limit > 0)) error("solver.time_limit", "must be positive");
  if (!(s.tolerance > 0)) error("solver.tolerance", "must be positive");
  if (!(s.big_m_scale > 0)) error("solver.big_m_scale", "must be positive");
  if (!(s.eps_comp > 0)) error("solver.eps_comp", "must be positive");
  return rep;
}

}  // namespace trimarket
