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

// Static description of a coupled electricity / natural-gas / carbon
// allowance system, plus case-file parsing and validation.
//
// Units: MW and MWh for power, Mm3 per hour for gas, tons for CO2, $ for
// money. Hours are 1-based; CEM periods are 1-based blocks of k hours.

#ifndef TRIMARKET_SYSTEM_MODEL_HPP_
#define TRIMARKET_SYSTEM_MODEL_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trimarket/error.hpp"

namespace trimarket {

enum class FuelKind { kCoal, kGasFired, kCleanFuel, kWind };

const char* to_string(FuelKind f);

struct GeneratorSpec {
  std::string id;
  std::string bus;
  FuelKind fuel = FuelKind::kCoal;
  double p_min = 0.0;
  double p_max = 0.0;
  /// Absent means no ramp rows are built for the unit.
  std::optional<double> ramp;
  /// C_G for coal and clean-fuel units, C_O (non-fuel part) for gas-fired.
  double cost = 0.0;
  /// Mm3 of gas per MWh; gas-fired only.
  double heat_rate = 0.0;
  std::string gas_node;
  /// tons of CO2 per MWh.
  double emission_rate = 0.0;
  /// Forecast output per hour; wind only.
  std::vector<double> profile;
  /// Output in the hour before the horizon. When absent the first hour is
  /// not ramp-constrained.
  std::optional<double> initial_output;

  bool dispatchable() const { return fuel != FuelKind::kWind; }

  bool operator==(const GeneratorSpec&) const = default;
};

struct Bus {
  std::string id;
  std::vector<double> demand;  // MW per hour

  bool operator==(const Bus&) const = default;
};

struct Line {
  std::string id;
  std::string from;
  std::string to;
  double susceptance = 0.0;  // p.u. on base_mva
  double capacity = 0.0;     // MW

  bool operator==(const Line&) const = default;
};

struct PowerNetwork {
  double base_mva = 100.0;
  std::string reference_bus;
  std::vector<Bus> buses;
  std::vector<Line> lines;

  bool operator==(const PowerNetwork&) const = default;
};

struct GasNode {
  std::string id;
  std::vector<double> demand;  // Mm3 per hour, excluding gas-fired units

  bool operator==(const GasNode&) const = default;
};

struct Pipeline {
  std::string id;
  std::string from;
  std::string to;
  double capacity = 0.0;  // Mm3 per hour in either direction

  bool operator==(const Pipeline&) const = default;
};

struct GasSupplier {
  std::string id;
  std::string node;
  double f_min = 0.0;
  double f_max = 0.0;
  double cost = 0.0;  // $ per Mm3

  bool operator==(const GasSupplier&) const = default;
};

struct GasNetwork {
  std::vector<GasNode> nodes;
  std::vector<Pipeline> pipelines;
  std::vector<GasSupplier> suppliers;

  bool operator==(const GasNetwork&) const = default;
};

struct CarbonOffer {
  std::string id;
  double amount = 0.0;  // tons
  double cost = 0.0;    // $ per ton

  bool operator==(const CarbonOffer&) const = default;
};

struct CarbonDemand {
  std::string id;
  double amount = 0.0;  // tons

  bool operator==(const CarbonDemand&) const = default;
};

/// How offer and demand amounts relate to a CEM period. kPerHour amounts
/// are multiplied by the clearing scalar k; kPerPeriod amounts are used as
/// written for every period.
enum class AmountBasis { kPerHour, kPerPeriod };

struct CarbonMarket {
  AmountBasis basis = AmountBasis::kPerHour;
  std::vector<CarbonOffer> offers;
  std::vector<CarbonDemand> demands;
  /// Regional cap, same basis as the amounts. Only the cap-and-trade
  /// comparison reads it.
  std::optional<double> cap;

  bool operator==(const CarbonMarket&) const = default;
};

struct Penalties {
  double lost_load = 1000.0;     // C^E, $ per MWh
  double lost_gas = 1.0e6;       // C^G, $ per Mm3
  double unmet_carbon = 1000.0;  // C^N, $ per ton

  bool operator==(const Penalties&) const = default;
};

class TimeStructure {
 public:
  TimeStructure() = default;
  TimeStructure(int horizon, int clearing_scalar)
      : horizon_(horizon), k_(clearing_scalar) {}

  int horizon() const { return horizon_; }
  int clearing_scalar() const { return k_; }
  /// Throws ModelError unless k divides the horizon.
  int num_periods() const;
  /// Hour t (1-based) belongs to period ceil(t / k).
  int period_of(int hour) const;
  std::vector<int> hours_in(int period) const;

  bool operator==(const TimeStructure&) const = default;

 private:
  int horizon_ = 24;
  int k_ = 1;
};

/// Hour -> CEM period, index 0 unused. Throws ModelError when k does not
/// divide the horizon.
std::vector<int> coupling_map(const TimeStructure& ts);

enum class MarketMode { kProposed, kCapAndTrade };

const char* to_string(MarketMode m);

enum class SecondaryObjective { kNone, kTotalCost };

struct SolverConfig {
  std::string adapter = "bnb";
  double time_limit = 60.0;  // seconds
  double tolerance = 1e-6;
  double big_m_scale = 1.0;
  double eps_comp = 1e-6;
  SecondaryObjective objective = SecondaryObjective::kNone;
  bool cap_includes_demands = true;
  bool cap_couples_gas = true;
  bool warm_start = true;

  bool operator==(const SolverConfig&) const = default;
};

struct MarketCase {
  std::string name;
  TimeStructure time;
  Penalties penalties;
  PowerNetwork power;
  GasNetwork gas;
  CarbonMarket carbon;
  std::vector<GeneratorSpec> generators;
  SolverConfig solver;

  /// Throw LookupError for unknown ids.
  const GeneratorSpec& generator(std::string_view id) const;
  GeneratorSpec& mutable_generator(std::string_view id);
  const Bus& bus(std::string_view id) const;
  const GasNode& gas_node(std::string_view id) const;

  /// Amount scaling for one CEM period: k under the per-hour basis, else 1.
  double carbon_period_factor() const;
  double offer_amount(std::size_t r) const;
  double demand_amount(std::size_t o) const;
  /// Cap scaled to the whole horizon.
  double horizon_cap() const;

  bool operator==(const MarketCase&) const = default;
};

/// Parses a JSON case document. Errors carry the JSON path of the
/// offending field, or line and column for syntax errors.
MarketCase parse_case(std::string_view text);

/// Reads and parses a file; missing files raise ParseError with the path.
MarketCase load_case(const std::string& path);

/// Writes every field explicitly, so parse(serialize(c)) == c.
std::string serialize_case(const MarketCase& c);

struct ValidationIssue {
  std::string where;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;
  bool ok() const { return errors.empty(); }
  std::string str() const;
};

ValidationReport validate(const MarketCase& c);

}  // namespace trimarket

#endif  // TRIMARKET_SYSTEM_MODEL_HPP_
