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


// Symbolic KKT systems of the operator LPs and their coupling into one
// equilibrium system.
//
// Convention: every inequality is normalized to >= form. For
// min c'x s.t. A x >= b (y >= 0), E x = d (lambda free) stationarity reads
// A'y + E'lambda - c = 0. A <= row enters with its coefficients negated, so
// its multiplier is the nonnegative shadow price of the bound.
//
// A system variable is either a primal of some market or a multiplier; a
// multiplier is named by its row's dual tag. Finite bounds stored on a
// variable get pseudo-multipliers lb[x] and ub[x].

#ifndef TRIMARKET_KKT_HPP_
#define TRIMARKET_KKT_HPP_

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "trimarket/lp.hpp"
#include "trimarket/market_models.hpp"
#include "trimarket/system_model.hpp"

namespace trimarket {

enum class VarRole { kPrimal, kDual };

struct SystemVariable {
  Symbol name;
  std::string market;
  VarRole role = VarRole::kPrimal;
  /// Multipliers of inequality rows are >= 0; everything else is free.
  bool nonnegative = false;
};

/// constant + sum coeff * var over system variable indices.
struct AffineExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  /// Merges into an existing term for the same variable.
  void add(int var, double coeff);
  double coeff_of(int var) const;
  double eval(std::span<const double> values) const;
};

/// Stationarity of one primal: residual = A'y - cost = 0, where cost is
/// the base cost plus any coupled price terms.
struct StationarityEquation {
  int primal = 0;
  std::string market;
  AffineExpr residual;
};

/// A primal feasibility row in normalized form: expr = 0 or expr >= 0.
struct PrimalRow {
  Symbol tag;
  std::string market;
  AffineExpr expr;
  Sense sense = Sense::kEqual;
};

/// 0 <= slack(row) ⊥ dual >= 0; the slack is the row's expression.
struct ComplementarityPair {
  int row = 0;
  int dual = 0;
  /// Dual tag family, e.g. "rho1_max"; "lb"/"ub" for variable bounds.
  std::string family;
  std::string market;
};

enum class LinkKind {
  kSharedPrimal,
  kPriceIntoObjective,
  kPriceTimeExpansion,
  kEmissionInjection
};

const char* to_string(LinkKind k);

struct CouplingLink {
  LinkKind kind = LinkKind::kSharedPrimal;
  Symbol source;
  Symbol target;
};

/// A symbol an equation needs but the system does not define.
struct UnresolvedRef {
  Symbol symbol;
  std::string market;
  std::string equation;
};

class EquilibriumSystem {
 public:
  MarketMode mode = MarketMode::kProposed;
  std::vector<SystemVariable> variables;
  std::vector<StationarityEquation> stationarity;
  std::vector<PrimalRow> rows;
  std::vector<ComplementarityPair> pairs;
  std::vector<CouplingLink> links;
  std::vector<UnresolvedRef> unresolved;
  /// Sum of all markets' own costs with prices excluded (transfers cancel).
  AffineExpr total_cost;

  /// Appenders keep the name indexes in sync; use them rather than pushing
  /// onto the vectors directly.
  int add_variable(SystemVariable v);
  int add_row(PrimalRow r);
  int add_stationarity(StationarityEquation s);
  /// -1 when absent.
  int find(const Symbol& name) const;
  int index(const Symbol& name) const;  // throws LookupError
  int find_row(const Symbol& tag) const;
  /// Stationarity equation of a primal, -1 when the primal has none.
  int stationarity_of(int primal) const;
  const AffineExpr& slack(const ComplementarityPair& p) const { return rows[p.row].expr; }

  std::size_t count_links(LinkKind k) const;
  std::size_t count_pairs(const std::string& family) const;

  /// Multipliers that appear in no stationarity equation and are not free
  /// equality multipliers. Empty for a well-formed system.
  std::vector<Symbol> orphan_duals() const;

 private:
  std::unordered_map<std::string, int> var_index_;
  std::unordered_map<std::string, int> row_index_;
  std::unordered_map<int, int> stationarity_index_;
};

/// KKT conditions of a single LP, exactly as written (prices at the values
/// baked into its objective, injections at their rhs values).
EquilibriumSystem derive_kkt(const LinearProgram& lp);

struct CouplingOptions {
  /// When false the electricity equations keep referring to mu[m,t] as a
  /// parameter that nothing defines, which assemble reports as dangling.
  bool link_gas_prices = true;
  bool link_carbon_prices = true;
};

/// Joins the three markets. Gas-fired dispatch is one variable that enters
/// the gas balance and, with every emitting unit, the carbon balance of its
/// period; electricity costs pick up mu and p_co2 as system variables.
EquilibriumSystem couple_markets(const ElectricityModel& e, const GasModel& g,
                                 const CemModel& c, const TimeStructure& ts,
                                 const CouplingOptions& opt = {});

/// Electricity and gas KKT systems plus the single cap complementarity
/// 0 <= budget - sum eta P_G ⊥ p_co2 >= 0 with one horizon-wide p_co2.
/// When the case decouples gas (`cap_couples_gas` false) `g` is ignored and
/// the fuel cost baked into `e` is kept; `e` must then be built with zero
/// carbon prices.
EquilibriumSystem build_cap_and_trade_system(const ElectricityModel& e, const GasModel& g,
                                             const MarketCase& c, const TimeStructure& ts);

/// Builds the three operator LPs for `c` and couples them for `mode`.
/// Decoupled cap-and-trade prices fuel at the standalone gas prices.
EquilibriumSystem build_equilibrium_system(const MarketCase& c, MarketMode mode);

class DanglingSymbolError : public ModelError {
 public:
  explicit DanglingSymbolError(std::vector<UnresolvedRef> refs);
  const std::vector<UnresolvedRef>& refs() const { return refs_; }

 private:
  std::vector<UnresolvedRef> refs_;
};

struct LabeledExpr {
  std::string label;
  AffineExpr expr;
};

/// Constraint bundle of the "find any equilibrium" problem.
struct EquilibriumProblem {
  std::vector<SystemVariable> variables;
  /// Primal equality rows followed by stationarity equations, all = 0.
  std::vector<LabeledExpr> equalities;
  /// Complementarity pairs with their slack expressions resolved.
  struct Pair {
    std::string label;
    std::string family;
    AffineExpr slack;
    int dual = 0;
  };
  std::vector<Pair> pairs;
  /// Constant unless a secondary objective was requested.
  AffineExpr objective;
};

/// Throws DanglingSymbolError listing every unresolved reference.
EquilibriumProblem assemble_equilibrium_problem(const EquilibriumSystem& sys,
                                                SecondaryObjective objective =
                                                    SecondaryObjective::kNone);

/// One equation per line, for auditing.
std::string to_text(const EquilibriumSystem& sys);

}  // namespace trimarket

#endif  // TRIMARKET_KKT_HPP_
