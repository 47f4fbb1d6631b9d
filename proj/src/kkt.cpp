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


#include "trimarket/kkt.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace trimarket {

const char* to_string(LinkKind k) {
  switch (k) {
    case LinkKind::kSharedPrimal: return "shared-primal";
    case LinkKind::kPriceIntoObjective: return "price-into-objective";
    case LinkKind::kPriceTimeExpansion: return "price-time-expansion";
    case LinkKind::kEmissionInjection: return "emission-injection";
  }
  return "?";
}

void AffineExpr::add(int var, double coeff) {
  for (auto& [v, c] : terms) {
    if (v == var) {
      c += coeff;
      return;
    }
  }
  terms.emplace_back(var, coeff);
}

double AffineExpr::coeff_of(int var) const {
  for (const auto& [v, c] : terms) {
    if (v == var) return c;
  }
  return 0.0;
}

double AffineExpr::eval(std::span<const double> values) const {
  double s = constant;
  for (const auto& [v, c] : terms) s += c * values[v];
  return s;
}

int EquilibriumSystem::add_variable(SystemVariable v) {
  const int id = static_cast<int>(variables.size());
  if (!var_index_.emplace(v.name.str(), id).second) {
    throw ModelError("kkt-equilibrium", "duplicate system variable " + v.name.str());
  }
  variables.push_back(std::move(v));
  return id;
}

int EquilibriumSystem::add_row(PrimalRow r) {
  const int id = static_cast<int>(rows.size());
  if (!row_index_.emplace(r.tag.str(), id).second) {
    throw ModelError("kkt-equilibrium", "duplicate row tag " + r.tag.str());
  }
  rows.push_back(std::move(r));
  return id;
}

int EquilibriumSystem::add_stationarity(StationarityEquation s) {
  const int id = static_cast<int>(stationarity.size());
  stationarity_index_[s.primal] = id;
  stationarity.push_back(std::move(s));
  return id;
}

int EquilibriumSystem::find(const Symbol& name) const {
  auto it = var_index_.find(name.str());
  return it == var_index_.end() ? -1 : it->second;
}

int EquilibriumSystem::index(const Symbol& name) const {
  const int i = find(name);
  if (i < 0) throw LookupError("kkt-equilibrium", "unknown system variable " + name.str());
  return i;
}

int EquilibriumSystem::find_row(const Symbol& tag) const {
  auto it = row_index_.find(tag.str());
  return it == row_index_.end() ? -1 : it->second;
}

int EquilibriumSystem::stationarity_of(int primal) const {
  auto it = stationarity_index_.find(primal);
  return it == stationarity_index_.end() ? -1 : it->second;
}

std::size_t EquilibriumSystem::count_links(LinkKind k) const {
  return std::count_if(links.begin(), links.end(),
                       [k](const CouplingLink& l) { return l.kind == k; });
}

std::size_t EquilibriumSystem::count_pairs(const std::string& family) const {
  return std::count_if(pairs.begin(), pairs.end(),
                       [&](const ComplementarityPair& p) { return p.family == family; });
}

std::vector<Symbol> EquilibriumSystem::orphan_duals() const {
  std::vector<bool> used(variables.size(), false);
  for (const StationarityEquation& s : stationarity) {
    for (const auto& [v, c] : s.residual.terms) used[v] = true;
  }
  std::vector<Symbol> out;
  for (std::size_t i = 0; i < variables.size(); ++i) {
    const SystemVariable& v = variables[i];
    if (v.role == VarRole::kDual && v.nonnegative && !used[i]) out.push_back(v.name);
  }
  return out;
}

namespace {

struct Appended {
  std::vector<int> var;  // LP variable -> system variable
  std::vector<int> row;  // LP row -> system row
  std::vector<double> row_sign;  // +1, or -1 for rows flipped from <=
};

// Appends the KKT conditions of `lp`. `cost` and `rhs` override the LP's
// own objective and right-hand sides (base values without coupling).
Appended append_lp(EquilibriumSystem& sys, const LinearProgram& lp,
                   const std::vector<double>* cost, const std::vector<double>* rhs) {
  const std::string& market = lp.market();
  Appended a;
  std::vector<StationarityEquation> st;
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const Variable& v = lp.variable(static_cast<VarId>(j));
    const int id = sys.add_variable({v.name, market, VarRole::kPrimal, false});
    const double c = cost ? (*cost)[j] : v.objective;
    a.var.push_back(id);
    sys.total_cost.add(id, c);
    StationarityEquation eq{id, market, {}};
    eq.residual.constant = -c;
    st.push_back(std::move(eq));
  }
  sys.total_cost.constant += lp.objective_constant();

  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const ConstraintRow& r = lp.row(static_cast<RowId>(i));
    if (r.dual_tag.family.empty()) {
      throw ModelError("kkt-equilibrium",
                       fmt::format("untagged row {} in the {} LP", i, market));
    }
    const double sign = r.sense == Sense::kLessEqual ? -1.0 : 1.0;
    const bool ineq = r.sense != Sense::kEqual;
    const int dual = sys.add_variable({r.dual_tag, market, VarRole::kDual, ineq});
    PrimalRow pr{r.dual_tag, market, {}, ineq ? Sense::kGreaterEqual : Sense::kEqual};
    pr.expr.constant = -sign * (rhs ? (*rhs)[i] : r.rhs);
    for (const Term& t : r.terms) {
      pr.expr.add(a.var[t.var], sign * t.coeff);
      st[t.var].residual.add(dual, sign * t.coeff);
    }
    const int row = sys.add_row(std::move(pr));
    a.row.push_back(row);
    a.row_sign.push_back(sign);
    if (ineq) sys.pairs.push_back({row, dual, r.dual_tag.family, market});
  }

  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const Variable& v = lp.variable(static_cast<VarId>(j));
    for (const bool upper : {false, true}) {
      const double bound = upper ? v.upper : v.lower;
      if (std::isinf(bound)) continue;
      const std::string fam = upper ? "ub" : "lb";
      const Symbol tag(fam, {v.name.str()});
      const int dual = sys.add_variable({tag, market, VarRole::kDual, true});
      const double sign = upper ? -1.0 : 1.0;
      PrimalRow pr{tag, market, {}, Sense::kGreaterEqual};
      pr.expr.add(a.var[j], sign);
      pr.expr.constant = -sign * bound;
      st[j].residual.add(dual, sign);
      const int row = sys.add_row(std::move(pr));
      sys.pairs.push_back({row, dual, fam, market});
    }
  }
  for (StationarityEquation& eq : st) sys.add_stationarity(std::move(eq));
  return a;
}

std::string stationarity_label(const EquilibriumSystem& sys, int primal) {
  return "stationarity " + sys.variables[primal].name.str();
}

// Turns the electricity price terms into terms on system variables.
// `carbon_target` maps an hour to the carbon price variable covering it;
// gas terms are skipped entirely when `gas_fixed` (their value is already
// part of the stationarity constant).
template <typename CarbonTarget>
void resolve_price_terms(EquilibriumSystem& sys, const ElectricityModel& e, const Appended& ea,
                         const CouplingOptions& opt, bool gas_fixed,
                         CarbonTarget carbon_target) {
  std::set<int> expanded;
  for (const PriceTerm& pt : e.price_terms) {
    const int primal = ea.var[pt.var];
    StationarityEquation& eq = sys.stationarity[sys.stationarity_of(primal)];
    const Symbol& pname = sys.variables[primal].name;
    Symbol target = pt.price;
    bool linked = true;
    if (pt.price.family == "mu") {
      if (gas_fixed) continue;
      linked = opt.link_gas_prices;
    } else {
      const int t = std::stoi(pt.price.keys.at(0));
      target = carbon_target(t);
      linked = opt.link_carbon_prices;
      if (linked && expanded.insert(t).second) {
        sys.links.push_back({LinkKind::kPriceTimeExpansion, pt.price, target});
      }
    }
    const int var = linked ? sys.find(target) : -1;
    if (var < 0) {
      sys.unresolved.push_back({target, eq.market, stationarity_label(sys, primal)});
      continue;
    }
    eq.residual.add(var, -pt.coeff);
    sys.links.push_back({LinkKind::kPriceIntoObjective, target, pname});
  }
}

void apply_injections(EquilibriumSystem& sys, const MarketModel& m, const Appended& a,
                      LinkKind kind) {
  for (const Injection& inj : m.injections) {
    const int row = a.row[inj.row];
    PrimalRow& r = sys.rows[row];
    const int var = sys.find(inj.primal);
    if (var < 0) {
      sys.unresolved.push_back({inj.primal, r.market, "row " + r.tag.str()});
      continue;
    }
    r.expr.add(var, a.row_sign[inj.row] * inj.coeff);
    sys.links.push_back({kind, inj.primal, r.tag});
  }
}

int count_rows(const LinearProgram& lp, const std::string& family) {
  return static_cast<int>(std::count_if(lp.rows().begin(), lp.rows().end(),
                                        [&](const ConstraintRow& r) {
                                          return r.dual_tag.family == family;
                                        }));
}

void check_hours(const ElectricityModel& e, const TimeStructure& ts) {
  for (const PriceTerm& pt : e.price_terms) {
    const int t = std::stoi(pt.price.keys.back());
    if (t < 1 || t > ts.horizon()) {
      throw ModelError("kkt-equilibrium",
                       fmt::format("time structures inconsistent: electricity hour {} outside "
                                   "a {}-hour horizon",
                                   t, ts.horizon()));
    }
  }
}

}  // namespace

EquilibriumSystem derive_kkt(const LinearProgram& lp) {
  EquilibriumSystem sys;
  append_lp(sys, lp, nullptr, nullptr);
  return sys;
}

EquilibriumSystem couple_markets(const ElectricityModel& e, const GasModel& g,
                                 const CemModel& c, const TimeStructure& ts,
                                 const CouplingOptions& opt) {
  check_hours(e, ts);
  const int periods = count_rows(c.lp, "p_co2");
  if (periods != ts.num_periods()) {
    throw ModelError("kkt-equilibrium",
                     fmt::format("time structures inconsistent: carbon LP has {} periods, "
                                 "expected {}",
                                 periods, ts.num_periods()));
  }
  EquilibriumSystem sys;
  sys.mode = MarketMode::kProposed;
  const Appended ea = append_lp(sys, e.lp, &e.base_cost, &e.base_rhs);
  const Appended ga = append_lp(sys, g.lp, &g.base_cost, &g.base_rhs);
  const Appended ca = append_lp(sys, c.lp, &c.base_cost, &c.base_rhs);
  resolve_price_terms(sys, e, ea, opt, false,
                      [&](int t) { return sym("p_co2", ts.period_of(t)); });
  apply_injections(sys, g, ga, LinkKind::kSharedPrimal);
  apply_injections(sys, c, ca, LinkKind::kEmissionInjection);
  return sys;
}

EquilibriumSystem build_cap_and_trade_system(const ElectricityModel& e, const GasModel& g,
                                             const MarketCase& c, const TimeStructure& ts) {
  if (!c.carbon.cap) throw ModelError("kkt-equilibrium", "cap-and-trade needs a carbon cap");
  check_hours(e, ts);
  const bool gas = c.solver.cap_couples_gas;
  EquilibriumSystem sys;
  sys.mode = MarketMode::kCapAndTrade;
  // Without gas coupling the LP's own cost already holds the fixed fuel cost.
  const Appended ea = append_lp(sys, e.lp, gas ? &e.base_cost : nullptr, &e.base_rhs);
  if (gas) {
    const Appended ga = append_lp(sys, g.lp, &g.base_cost, &g.base_rhs);
    apply_injections(sys, g, ga, LinkKind::kSharedPrimal);
  }

  const Symbol price("p_co2");
  const int dual = sys.add_variable({price, "carbon", VarRole::kDual, true});
  PrimalRow cap{price, "carbon", {}, Sense::kGreaterEqual};
  cap.expr.constant = cap_and_trade_budget(c);
  for (const GeneratorSpec& gen : c.generators) {
    if (!gen.dispatchable() || gen.emission_rate == 0.0) continue;
    for (int t = 1; t <= ts.horizon(); ++t) {
      const Symbol pg = sym("P_G", gen.id, t);
      cap.expr.add(sys.index(pg), -gen.emission_rate);
      sys.links.push_back({LinkKind::kEmissionInjection, pg, price});
    }
  }
  const int row = sys.add_row(std::move(cap));
  sys.pairs.push_back({row, dual, "cap", "carbon"});
  resolve_price_terms(sys, e, ea, CouplingOptions{}, !gas, [&](int) { return price; });
  return sys;
}

namespace {

std::string describe(const std::vector<UnresolvedRef>& refs) {
  std::string out = fmt::format("{} dangling symbol(s):", refs.size());
  for (std::size_t i = 0; i < refs.size() && i < 8; ++i) {
    out += fmt::format(" {} ({}, {});", refs[i].symbol.str(), refs[i].market, refs[i].equation);
  }
  if (refs.size() > 8) out += " ...";
  return out;
}

}  // namespace

DanglingSymbolError::DanglingSymbolError(std::vector<UnresolvedRef> refs)
    : ModelError("kkt-equilibrium", describe(refs)), refs_(std::move(refs)) {}

EquilibriumProblem assemble_equilibrium_problem(const EquilibriumSystem& sys,
                                                SecondaryObjective objective) {
  if (!sys.unresolved.empty()) throw DanglingSymbolError(sys.unresolved);
  EquilibriumProblem p;
  p.variables = sys.variables;
  for (const PrimalRow& r : sys.rows) {
    if (r.sense == Sense::kEqual) p.equalities.push_back({"row " + r.tag.str(), r.expr});
  }
  for (const StationarityEquation& s : sys.stationarity) {
    p.equalities.push_back({stationarity_label(sys, s.primal), s.residual});
  }
  for (const ComplementarityPair& cp : sys.pairs) {
    p.pairs.push_back({sys.variables[cp.dual].name.str(), cp.family, sys.slack(cp), cp.dual});
  }
  if (objective == SecondaryObjective::kTotalCost) p.objective = sys.total_cost;
  return p;
}

namespace {

std::string format_expr(const AffineExpr& e, const EquilibriumSystem& sys) {
  std::string out;
  auto sorted = e.terms;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [v, c] : sorted) {
    if (c == 0.0) continue;
    const std::string& n = sys.variables[v].name.str();
    const double mag = std::abs(c);
    const std::string coeff = mag == 1.0 ? "" : fmt::format("{:g}*", mag);
    if (out.empty()) {
      out = (c < 0 ? "-" : "") + coeff + n;
    } else {
      out += fmt::format(" {} {}{}", c < 0 ? '-' : '+', coeff, n);
    }
  }
  if (e.constant != 0.0 || out.empty()) {
    if (out.empty()) {
      out = fmt::format("{:g}", e.constant);
    } else {
      out += fmt::format(" {} {:g}", e.constant < 0 ? '-' : '+', std::abs(e.constant));
    }
  }
  return out;
}

}  // namespace

std::string to_text(const EquilibriumSystem& sys) {
  std::string out = fmt::format("# mode {}: {} variables, {} stationarity, {} rows, {} pairs\n",
                                to_string(sys.mode), sys.variables.size(),
                                sys.stationarity.size(), sys.rows.size(), sys.pairs.size());
  for (const StationarityEquation& s : sys.stationarity) {
    out += fmt::format("[{}] d/d {}: {} = 0\n", s.market, sys.variables[s.primal].name.str(),
                       format_expr(s.residual, sys));
  }
  for (const PrimalRow& r : sys.rows) {
    if (r.sense != Sense::kEqual) continue;
    out += fmt::format("[{}] {}: {} = 0\n", r.market, r.tag.str(), format_expr(r.expr, sys));
  }
  for (const ComplementarityPair& p : sys.pairs) {
    out += fmt::format("[{}] 0 <= {} ⊥ {} >= 0\n", p.market, format_expr(sys.slack(p), sys),
                       sys.variables[p.dual].name.str());
  }
  for (const CouplingLink& l : sys.links) {
    out += fmt::format("link {} {} -> {}\n", to_string(l.kind), l.source.str(), l.target.str());
  }
  for (const UnresolvedRef& u : sys.unresolved) {
    out += fmt::format("dangling {} ({}, {})\n", u.symbol.str(), u.market, u.equation);
  }
  return out;
}

EquilibriumSystem build_equilibrium_system(const MarketCase& c, MarketMode mode) {
  if (mode == MarketMode::kProposed) {
    return couple_markets(build_electricity_lp(c, zero_gas_prices(c), zero_carbon_prices(c)),
                          build_gas_lp(c, zero_dispatch(c)), build_cem_lp(c, zero_dispatch(c)),
                          c.time);
  }
  const SymbolValues mu = c.solver.cap_couples_gas ? zero_gas_prices(c) : standalone_gas_prices(c);
  return build_cap_and_trade_system(build_electricity_lp(c, mu, zero_carbon_prices(c)),
                                    build_gas_lp(c, zero_dispatch(c)), c, c.time);
}

}  // namespace trimarket
