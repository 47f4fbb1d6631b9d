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


// Independent checks that a claimed equilibrium is genuine: per-market
// re-solves with the other markets frozen, a merit-order carbon oracle,
// brute-force active-set enumeration for micro cases, and KKT residuals.

#ifndef TRIMARKET_VERIFY_HPP_
#define TRIMARKET_VERIFY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "trimarket/kkt.hpp"
#include "trimarket/market_models.hpp"
#include "trimarket/milp.hpp"
#include "trimarket/system_model.hpp"

namespace trimarket {

struct EquilibriumSolution {
  MarketMode mode = MarketMode::kProposed;
  /// Every system variable by rendered name.
  SymbolValues values;
  /// P_G[v,t] for every dispatchable unit.
  SymbolValues dispatch;
  /// mu[m,t] for every node and hour; standalone prices when gas is
  /// decoupled from a cap-and-trade run.
  SymbolValues gas_price;
  /// p_co2[t] for every hour, expanded from periods or the single cap price.
  SymbolValues carbon_price;
  /// tons per hour and per CEM period, recomputed from dispatch; index 0 unused.
  std::vector<double> hourly_emission;
  std::vector<double> period_emission;
  double electricity_objective = 0.0;
  double gas_objective = 0.0;
  /// Zero under cap-and-trade, which has no allowance market.
  double carbon_objective = 0.0;

  /// Throws LookupError for names the solution does not carry.
  double value(const Symbol& s) const;
  double total_emission() const;
};

/// Maps a full assignment of `sys` variables onto names and recomputes the
/// derived quantities. `x` may carry extra trailing entries (binaries).
EquilibriumSolution extract_solution(const MarketCase& c, const EquilibriumSystem& sys,
                                     const std::vector<double>& x);

struct MarketCheck {
  std::string market;
  double equilibrium_objective = 0.0;
  double standalone_objective = 0.0;
  /// (equilibrium - standalone) / max(1, |standalone|).
  double relative_gap = 0.0;
  /// Largest primal row violation of the solution inside this market's LP.
  double primal_violation = 0.0;
  /// Largest stationarity residual of the solution's own multipliers for
  /// this market, relative to the largest cost magnitude.
  double price_residual = 0.0;
  double max_primal_deviation = 0.0;
  bool pass = false;
  std::string status;
};

struct FixedPointReport {
  double tol = 1e-4;
  std::vector<MarketCheck> markets;
  bool pass = false;
};

/// Re-solves each market LP with the other markets frozen at `sol` (prices
/// into electricity, dispatch into gas and carbon) and compares objectives.
/// A market passes when the solution is feasible in it, its objective is
/// within `tol` of the standalone optimum, and its multipliers satisfy the
/// market's stationarity within `tol`. Cap-and-trade runs check electricity
/// and gas only.
FixedPointReport fixed_point_check(const EquilibriumSolution& sol, const MarketCase& c,
                                   double tol = 1e-4);

struct MeritOrderClearing {
  double requirement = 0.0;
  double price = 0.0;
  /// Upper end of the price interval. Equals `price` unless the
  /// requirement sits exactly on a step boundary, where any price between
  /// the exhausted step and the next one clears the market.
  double price_high = 0.0;
  /// Allowances sold per offer, in case order.
  std::vector<double> sold;
  /// Served demand per carbon demand, in case order.
  std::vector<double> served;
  /// True when demand curtailment sets the price.
  bool curtailment_marginal = false;
};

/// Clears one period: the requirement is the generation emission plus the
/// demands; offers are filled by ascending cost (ties in case order) with
/// demand curtailment available at `unmet_cost`. The price is the cost of
/// the marginal step, 0 when nothing is required. Throws ModelError when
/// generation emission alone exceeds every offer.
MeritOrderClearing merit_order_cem(double generation_emission,
                                   const std::vector<CarbonOffer>& offers,
                                   const std::vector<CarbonDemand>& demands, double unmet_cost);

/// One clearing per CEM period with amounts scaled by the clearing basis;
/// index 0 unused.
std::vector<MeritOrderClearing> merit_order_cem(const std::vector<double>& period_emission,
                                                const MarketCase& c);

struct BruteForceSolution {
  std::uint32_t pattern = 0;
  /// Assignment of every system variable.
  std::vector<double> x;
  /// Total cost of the markets' own decisions, prices excluded.
  double objective = 0.0;
};

struct BruteForceOptions {
  std::size_t max_pairs = 24;
  /// Primal vectors closer than this in max norm are one solution.
  double dedup_tol = 1e-8;
  double feasibility_tol = 1e-9;
  int threads = 0;  // 0 uses the hardware concurrency
};

/// Every equilibrium of a micro case, one per distinct primal vector, in
/// order of the first active-set pattern that produced it. Patterns set
/// bit i when pair i's slack side is zero. Throws ModelError when the case
/// has more pairs than `max_pairs`.
std::vector<BruteForceSolution> brute_force_equilibrium(const EquilibriumSystem& sys,
                                                        const BruteForceOptions& opt = {});

struct AuditFlag {
  std::string pair;
  std::string side;  // "slack" or "dual"
  double value = 0.0;
  double m = 0.0;
};

struct ResidualThresholds {
  double stationarity = 1e-6;
  double complementarity = 1e-6;
  double primal = 1e-6;
  /// A side at or above (1 - audit_margin) * M is flagged.
  double audit_margin = 1e-3;
};

struct KktResidualReport {
  double max_stationarity = 0.0;
  std::string worst_stationarity;
  double max_complementarity = 0.0;
  std::string worst_complementarity;
  double max_primal_violation = 0.0;
  std::string worst_primal;
  std::vector<AuditFlag> audit_flags;
  bool pass = false;
};

/// Residuals of an assignment of `sys` variables. The complementarity
/// measure is the product slack * multiplier; primal violation covers the
/// equality rows, negative slacks, and negative multipliers.
KktResidualReport residual_report(const EquilibriumSystem& sys, const std::vector<double>& x,
                                  const BigMConfig& big_m, const ResidualThresholds& th = {});

struct ConservationReport {
  double power = 0.0;   // worst nodal balance, MW
  double gas = 0.0;     // worst nodal balance, Mm3/h
  double carbon = 0.0;  // worst allowance balance, tons
  double max() const;
};

/// Balance residuals recomputed from case data and the solution's
/// quantities, independent of the system rows.
ConservationReport conservation_report(const EquilibriumSolution& sol, const MarketCase& c);

/// JSON object with pass/fail per check.
std::string verification_json(const FixedPointReport& fp, const KktResidualReport& kkt,
                              const ConservationReport& cons);

}  // namespace trimarket

#endif  // TRIMARKET_VERIFY_HPP_
