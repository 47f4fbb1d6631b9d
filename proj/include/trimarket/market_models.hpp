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

// Builders for the three operator LPs.
//
// Every variable is free; each bound the operator states explicitly is a
// tagged row so that its multiplier is available to the KKT derivation.
// Balance rows are written supply minus demand so that prices come out
// nonnegative under the c - A'y = 0 convention.
//
// Symbol families:
//   electricity  P_G[v,t] theta[i,t] P_LD[i,t];
//                lambda[i,t] rho1_min/max[v,t] rho2_min/max[v,t]
//                rho3_min/max[l,t] rho4[t] rho5_min/max[i,t]
//   gas          F_S[w,t] F_LD[m,t] F[p,t];
//                mu[m,t] phi1_min/max[w,t] phi2_min/max[p,t]
//                phi3_min/max[m,t]
//   carbon       Q_C[r,c] Q_LD[o,c];
//                p_co2[c] nu1_min/max[o,c] nu2_min/max[r,c]

#ifndef TRIMARKET_MARKET_MODELS_HPP_
#define TRIMARKET_MARKET_MODELS_HPP_

#include <map>
#include <string>
#include <vector>

#include "trimarket/lp.hpp"
#include "trimarket/system_model.hpp"

namespace trimarket {

/// Values keyed by rendered symbol, e.g. "mu[4,1]" or "P_G[G2,7]".
using SymbolValues = std::map<std::string, double>;

/// Part of a variable's cost that is another market's price:
/// cost(var) += coeff * price.
struct PriceTerm {
  VarId var = 0;
  Symbol price;
  double coeff = 0.0;
};

/// A quantity owned by another market that enters one of this market's
/// rows as a parameter: the row reads lhs + coeff * primal (sense) base_rhs.
struct Injection {
  RowId row = 0;
  Symbol primal;
  double coeff = 0.0;
};

struct MarketModel {
  LinearProgram lp;
  /// Cost of each variable with every price term removed.
  std::vector<double> base_cost;
  std::vector<PriceTerm> price_terms;
  std::vector<Injection> injections;
  /// Right-hand side of each row with every injection removed.
  std::vector<double> base_rhs;
};

struct ElectricityModel : MarketModel {
  VarId p_g(const std::string& v, int t) const { return lp.var_id(sym("P_G", v, t)); }
  VarId theta(const std::string& i, int t) const { return lp.var_id(sym("theta", i, t)); }
  VarId p_ld(const std::string& i, int t) const { return lp.var_id(sym("P_LD", i, t)); }
  RowId lambda(const std::string& i, int t) const { return lp.row_id(sym("lambda", i, t)); }
};

struct GasModel : MarketModel {
  VarId f_s(const std::string& w, int t) const { return lp.var_id(sym("F_S", w, t)); }
  VarId f_ld(const std::string& m, int t) const { return lp.var_id(sym("F_LD", m, t)); }
  VarId flow(const std::string& p, int t) const { return lp.var_id(sym("F", p, t)); }
  RowId mu(const std::string& m, int t) const { return lp.row_id(sym("mu", m, t)); }
};

struct CemModel : MarketModel {
  VarId q_c(const std::string& r, int c) const { return lp.var_id(sym("Q_C", r, c)); }
  VarId q_ld(const std::string& o, int c) const { return lp.var_id(sym("Q_LD", o, c)); }
  RowId p_co2(int c) const { return lp.row_id(sym("p_co2", c)); }
};

/// Gas prices mu[m,t] for every node and hour, carbon prices p_co2[t] for
/// every hour. Missing entries raise ModelError.
ElectricityModel build_electricity_lp(const MarketCase& c, const SymbolValues& gas_price,
                                      const SymbolValues& carbon_price);

/// Dispatch P_G[v,t] for every gas-fired unit and hour.
GasModel build_gas_lp(const MarketCase& c, const SymbolValues& dispatch);

/// Generation emissions per CEM period, index 0 unused.
CemModel build_cem_lp(const MarketCase& c, const std::vector<double>& emissions);

/// Convenience overload aggregating eta * P_G per period from a dispatch.
CemModel build_cem_lp(const MarketCase& c, const SymbolValues& dispatch);

/// Generation emissions per period (index 0 unused) for a dispatch.
std::vector<double> period_emissions(const MarketCase& c, const SymbolValues& dispatch);

/// Zero-valued price and dispatch tables covering every entry the builders
/// expect; handy as placeholders before coupling.
SymbolValues zero_gas_prices(const MarketCase& c);
SymbolValues zero_carbon_prices(const MarketCase& c);
SymbolValues zero_dispatch(const MarketCase& c);

/// Single LP whose KKT conditions coincide with the coupled equilibrium:
/// the sum of the three markets' costs without price terms, with the
/// dispatch shared across all three balances. In cap-and-trade mode the
/// carbon market is replaced by one horizon-wide cap row tagged p_co2;
/// when the case decouples gas from that comparison, gas-fired fuel cost
/// is priced at `fixed_gas_prices` instead.
LinearProgram build_integrated_lp(const MarketCase& c, MarketMode mode,
                                  const SymbolValues& fixed_gas_prices = {});

/// Generation emission allowed over the horizon under cap-and-trade: the
/// horizon cap, less the exogenous carbon demands when the case counts them.
double cap_and_trade_budget(const MarketCase& c);

/// Nodal gas prices of the gas market cleared alone with no gas-fired
/// burn. Used as the exogenous gas price when gas is decoupled.
SymbolValues standalone_gas_prices(const MarketCase& c);

}  // namespace trimarket

#endif  // TRIMARKET_MARKET_MODELS_HPP_
