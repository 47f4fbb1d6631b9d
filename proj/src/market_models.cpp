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

#include "trimarket/market_models.hpp"

#include <fmt/format.h>

#include "trimarket/simplex.hpp"

namespace trimarket {

namespace {

double lookup(const SymbolValues& values, const Symbol& s, const char* what) {
  auto it = values.find(s.str());
  if (it == values.end()) {
    throw ModelError("market-models", fmt::format("missing {} entry {}", what, s.str()));
  }
  return it->second;
}

// Accumulates coefficients so a variable appears once per row.
class RowBuilder {
 public:
  void add(VarId v, double coeff) {
    for (Term& t : terms_) {
      if (t.var == v) {
        t.coeff += coeff;
        return;
      }
    }
    terms_.push_back({v, coeff});
  }
  ConstraintRow build(Sense sense, double rhs, Symbol tag) {
    return ConstraintRow{std::move(terms_), sense, rhs, std::move(tag)};
  }

 private:
  std::vector<Term> terms_;
};

VarId free_var(MarketModel& m, Symbol name, double cost) {
  m.base_cost.push_back(cost);
  return m.lp.add_variable(name, -kInf, kInf, cost);
}

RowId add_row(MarketModel& m, ConstraintRow row) {
  m.base_rhs.push_back(row.rhs);
  return m.lp.add_constraint(std::move(row));
}

RowId single(MarketModel& m, VarId v, Sense s, double rhs, Symbol tag) {
  return add_row(m, ConstraintRow{{{v, 1.0}}, s, rhs, std::move(tag)});
}

}  // namespace

ElectricityModel build_electricity_lp(const MarketCase& c, const SymbolValues& gas_price,
                                      const SymbolValues& carbon_price) {
  ElectricityModel m;
  m.lp = LinearProgram("electricity");
  const int T = c.time.horizon();
  const double ce = c.penalties.lost_load;

  for (const GeneratorSpec& g : c.generators) {
    if (!g.dispatchable()) continue;
    if (g.fuel == FuelKind::kGasFired && g.gas_node.empty()) {
      throw ModelError("market-models", "gas-fired unit " + g.id + " has no gas node");
    }
    for (int t = 1; t <= T; ++t) {
      const VarId v = free_var(m, sym("P_G", g.id, t), g.cost);
      double cost = g.cost;
      if (g.fuel == FuelKind::kGasFired) {
        Symbol mu = sym("mu", g.gas_node, t);
        cost += g.heat_rate * lookup(gas_price, mu, "gas price");
        m.price_terms.push_back({v, std::move(mu), g.heat_rate});
      }
      if (g.emission_rate != 0.0) {
        Symbol p = sym("p_co2", t);
        cost += g.emission_rate * lookup(carbon_price, p, "carbon price");
        m.price_terms.push_back({v, std::move(p), g.emission_rate});
      }
      m.lp.mutable_variable(v).objective = cost;
    }
  }
  double constant = 0.0;
  for (const Bus& b : c.power.buses) {
    for (int t = 1; t <= T; ++t) free_var(m, sym("theta", b.id, t), 0.0);
  }
  for (const Bus& b : c.power.buses) {
    for (int t = 1; t <= T; ++t) {
      free_var(m, sym("P_LD", b.id, t), -ce);
      constant += ce * b.demand.at(t - 1);
    }
  }
  m.lp.set_objective_constant(constant);

  // Nodal balance: generation + wind - served load - net outflow = 0.
  const double base = c.power.base_mva;
  for (int t = 1; t <= T; ++t) {
    for (const Bus& b : c.power.buses) {
      RowBuilder row;
      double wind = 0.0;
      for (const GeneratorSpec& g : c.generators) {
        if (g.bus != b.id) continue;
        if (g.dispatchable()) {
          row.add(m.p_g(g.id, t), 1.0);
        } else {
          wind += g.profile.at(t - 1);
        }
      }
      row.add(m.p_ld(b.id, t), -1.0);
      for (const Line& l : c.power.lines) {
        const double bb = base * l.susceptance;
        if (l.from == b.id) {
          row.add(m.theta(l.from, t), -bb);
          row.add(m.theta(l.to, t), bb);
        } else if (l.to == b.id) {
          row.add(m.theta(l.from, t), bb);
          row.add(m.theta(l.to, t), -bb);
        }
      }
      add_row(m, row.build(Sense::kEqual, -wind, sym("lambda", b.id, t)));
    }
  }
  for (const GeneratorSpec& g : c.generators) {
    if (!g.dispatchable()) continue;
    for (int t = 1; t <= T; ++t) {
      single(m, m.p_g(g.id, t), Sense::kGreaterEqual, g.p_min, sym("rho1_min", g.id, t));
      single(m, m.p_g(g.id, t), Sense::kLessEqual, g.p_max, sym("rho1_max", g.id, t));
    }
  }
  for (const GeneratorSpec& g : c.generators) {
    if (!g.dispatchable() || !g.ramp) continue;
    const double r = *g.ramp;
    for (int t = 1; t <= T; ++t) {
      if (t == 1) {
        if (!g.initial_output) continue;
        const double p0 = *g.initial_output;
        single(m, m.p_g(g.id, 1), Sense::kGreaterEqual, p0 - r, sym("rho2_min", g.id, 1));
        single(m, m.p_g(g.id, 1), Sense::kLessEqual, p0 + r, sym("rho2_max", g.id, 1));
        continue;
      }
      const VarId now = m.p_g(g.id, t), prev = m.p_g(g.id, t - 1);
      add_row(m, ConstraintRow{{{now, 1.0}, {prev, -1.0}}, Sense::kGreaterEqual, -r,
                               sym("rho2_min", g.id, t)});
      add_row(m, ConstraintRow{{{now, 1.0}, {prev, -1.0}}, Sense::kLessEqual, r,
                               sym("rho2_max", g.id, t)});
    }
  }
  for (const Line& l : c.power.lines) {
    const double bb = base * l.susceptance;
    for (int t = 1; t <= T; ++t) {
      const VarId a = m.theta(l.from, t), z = m.theta(l.to, t);
      add_row(m, ConstraintRow{{{a, bb}, {z, -bb}}, Sense::kGreaterEqual, -l.capacity,
                               sym("rho3_min", l.id, t)});
      add_row(m, ConstraintRow{{{a, bb}, {z, -bb}}, Sense::kLessEqual, l.capacity,
                               sym("rho3_max", l.id, t)});
    }
  }
  for (int t = 1; t <= T; ++t) {
    single(m, m.theta(c.power.reference_bus, t), Sense::kEqual, 0.0, sym("rho4", t));
  }
  for (const Bus& b : c.power.buses) {
    for (int t = 1; t <= T; ++t) {
      single(m, m.p_ld(b.id, t), Sense::kGreaterEqual, 0.0, sym("rho5_min", b.id, t));
      single(m, m.p_ld(b.id, t), Sense::kLessEqual, b.demand.at(t - 1),
             sym("rho5_max", b.id, t));
    }
  }
  return m;
}

GasModel build_gas_lp(const MarketCase& c, const SymbolValues& dispatch) {
  GasModel m;
  m.lp = LinearProgram("gas");
  const int T = c.time.horizon();
  const double cg = c.penalties.lost_gas;

  for (const GasSupplier& s : c.gas.suppliers) {
    for (int t = 1; t <= T; ++t) free_var(m, sym("F_S", s.id, t), s.cost);
  }
  double constant = 0.0;
  for (const GasNode& n : c.gas.nodes) {
    for (int t = 1; t <= T; ++t) {
      free_var(m, sym("F_LD", n.id, t), -cg);
      constant += cg * n.demand.at(t - 1);
    }
  }
  m.lp.set_objective_constant(constant);
  for (const Pipeline& p : c.gas.pipelines) {
    for (int t = 1; t <= T; ++t) free_var(m, sym("F", p.id, t), 0.0);
  }

  // Nodal balance: supply - served demand - outflow + inflow - burn = 0.
  for (int t = 1; t <= T; ++t) {
    for (const GasNode& n : c.gas.nodes) {
      RowBuilder row;
      for (const GasSupplier& s : c.gas.suppliers) {
        if (s.node == n.id) row.add(m.f_s(s.id, t), 1.0);
      }
      row.add(m.f_ld(n.id, t), -1.0);
      for (const Pipeline& p : c.gas.pipelines) {
        if (p.from == n.id) row.add(m.flow(p.id, t), -1.0);
        if (p.to == n.id) row.add(m.flow(p.id, t), 1.0);
      }
      double burn = 0.0;
      std::vector<std::pair<Symbol, double>> inj;
      for (const GeneratorSpec& g : c.generators) {
        if (g.fuel != FuelKind::kGasFired || g.gas_node != n.id) continue;
        Symbol pg = sym("P_G", g.id, t);
        burn += g.heat_rate * lookup(dispatch, pg, "dispatch");
        inj.emplace_back(std::move(pg), -g.heat_rate);
      }
      const RowId r = add_row(m, row.build(Sense::kEqual, 0.0, sym("mu", n.id, t)));
      m.lp.mutable_row(r).rhs = burn;
      for (auto& [s, coeff] : inj) m.injections.push_back({r, std::move(s), coeff});
    }
  }
  for (const GasSupplier& s : c.gas.suppliers) {
    for (int t = 1; t <= T; ++t) {
      single(m, m.f_s(s.id, t), Sense::kGreaterEqual, s.f_min, sym("phi1_min", s.id, t));
      single(m, m.f_s(s.id, t), Sense::kLessEqual, s.f_max, sym("phi1_max", s.id, t));
    }
  }
  for (const Pipeline& p : c.gas.pipelines) {
    for (int t = 1; t <= T; ++t) {
      single(m, m.flow(p.id, t), Sense::kGreaterEqual, -p.capacity, sym("phi2_min", p.id, t));
      single(m, m.flow(p.id, t), Sense::kLessEqual, p.capacity, sym("phi2_max", p.id, t));
    }
  }
  for (const GasNode& n : c.gas.nodes) {
    for (int t = 1; t <= T; ++t) {
      single(m, m.f_ld(n.id, t), Sense::kGreaterEqual, 0.0, sym("phi3_min", n.id, t));
      single(m, m.f_ld(n.id, t), Sense::kLessEqual, n.demand.at(t - 1),
             sym("phi3_max", n.id, t));
    }
  }
  return m;
}

std::vector<double> period_emissions(const MarketCase& c, const SymbolValues& dispatch) {
  std::vector<double> out(c.time.num_periods() + 1, 0.0);
  for (const GeneratorSpec& g : c.generators) {
    if (!g.dispatchable() || g.emission_rate == 0.0) continue;
    for (int t = 1; t <= c.time.horizon(); ++t) {
      out[c.time.period_of(t)] +=
          g.emission_rate * lookup(dispatch, sym("P_G", g.id, t), "dispatch");
    }
  }
  return out;
}

CemModel build_cem_lp(const MarketCase& c, const std::vector<double>& emissions) {
  CemModel m;
  m.lp = LinearProgram("carbon");
  const int np = c.time.num_periods();
  if (static_cast<int>(emissions.size()) < np + 1) {
    throw ModelError("market-models",
                     fmt::format("missing emission aggregate for period {}",
                                 std::max<int>(1, static_cast<int>(emissions.size()))));
  }
  const double cn = c.penalties.unmet_carbon;
  for (const CarbonOffer& o : c.carbon.offers) {
    for (int p = 1; p <= np; ++p) free_var(m, sym("Q_C", o.id, p), o.cost);
  }
  double constant = 0.0;
  for (std::size_t o = 0; o < c.carbon.demands.size(); ++o) {
    for (int p = 1; p <= np; ++p) {
      free_var(m, sym("Q_LD", c.carbon.demands[o].id, p), -cn);
      constant += cn * c.demand_amount(o);
    }
  }
  m.lp.set_objective_constant(constant);

  // Allowance balance: offers sold - served demand - generation emission = 0.
  for (int p = 1; p <= np; ++p) {
    RowBuilder row;
    for (const CarbonOffer& o : c.carbon.offers) row.add(m.q_c(o.id, p), 1.0);
    for (const CarbonDemand& d : c.carbon.demands) row.add(m.q_ld(d.id, p), -1.0);
    const RowId r = add_row(m, row.build(Sense::kEqual, 0.0, sym("p_co2", p)));
    m.lp.mutable_row(r).rhs = emissions[p];
    for (int t : c.time.hours_in(p)) {
      for (const GeneratorSpec& g : c.generators) {
        if (!g.dispatchable() || g.emission_rate == 0.0) continue;
        m.injections.push_back({r, sym("P_G", g.id, t), -g.emission_rate});
      }
    }
  }
  for (std::size_t o = 0; o < c.carbon.demands.size(); ++o) {
    const std::string& id = c.carbon.demands[o].id;
    for (int p = 1; p <= np; ++p) {
      single(m, m.q_ld(id, p), Sense::kGreaterEqual, 0.0, sym("nu1_min", id, p));
      single(m, m.q_ld(id, p), Sense::kLessEqual, c.demand_amount(o), sym("nu1_max", id, p));
    }
  }
  for (std::size_t r = 0; r < c.carbon.offers.size(); ++r) {
    const std::string& id = c.carbon.offers[r].id;
    for (int p = 1; p <= np; ++p) {
      single(m, m.q_c(id, p), Sense::kGreaterEqual, 0.0, sym("nu2_min", id, p));
      single(m, m.q_c(id, p), Sense::kLessEqual, c.offer_amount(r), sym("nu2_max", id, p));
    }
  }
  return m;
}

CemModel build_cem_lp(const MarketCase& c, const SymbolValues& dispatch) {
  return build_cem_lp(c, period_emissions(c, dispatch));
}

SymbolValues zero_gas_prices(const MarketCase& c) {
  SymbolValues out;
  for (const GasNode& n : c.gas.nodes) {
    for (int t = 1; t <= c.time.horizon(); ++t) out[sym("mu", n.id, t).str()] = 0.0;
  }
  return out;
}

SymbolValues zero_carbon_prices(const MarketCase& c) {
  SymbolValues out;
  for (int t = 1; t <= c.time.horizon(); ++t) out[sym("p_co2", t).str()] = 0.0;
  return out;
}

SymbolValues zero_dispatch(const MarketCase& c) {
  SymbolValues out;
  for (const GeneratorSpec& g : c.generators) {
    if (!g.dispatchable()) continue;
    for (int t = 1; t <= c.time.horizon(); ++t) out[sym("P_G", g.id, t).str()] = 0.0;
  }
  return out;
}

namespace {

// Copies a market model into `out` at base cost, turning injections into
// terms on variables already present in `out`.
void append_model(LinearProgram& out, const MarketModel& m) {
  std::vector<VarId> remap(m.lp.num_variables());
  for (std::size_t j = 0; j < m.lp.num_variables(); ++j) {
    const Variable& v = m.lp.variable(static_cast<VarId>(j));
    remap[j] = out.add_variable(v.name, v.lower, v.upper, m.base_cost[j]);
  }
  std::vector<std::vector<Term>> extra(m.lp.num_rows());
  for (const Injection& inj : m.injections) {
    extra[inj.row].push_back({out.var_id(inj.primal), inj.coeff});
  }
  for (std::size_t i = 0; i < m.lp.num_rows(); ++i) {
    ConstraintRow row = m.lp.row(static_cast<RowId>(i));
    for (Term& t : row.terms) t.var = remap[t.var];
    row.terms.insert(row.terms.end(), extra[i].begin(), extra[i].end());
    row.rhs = m.base_rhs[i];
    out.add_constraint(std::move(row));
  }
  out.set_objective_constant(out.objective_constant() + m.lp.objective_constant());
}

}  // namespace

LinearProgram build_integrated_lp(const MarketCase& c, MarketMode mode,
                                  const SymbolValues& fixed_gas_prices) {
  LinearProgram out("integrated");
  const bool gas_coupled = mode == MarketMode::kProposed || c.solver.cap_couples_gas;
  const ElectricityModel e = build_electricity_lp(
      c, gas_coupled ? zero_gas_prices(c) : fixed_gas_prices, zero_carbon_prices(c));
  append_model(out, e);
  if (gas_coupled) {
    append_model(out, build_gas_lp(c, zero_dispatch(c)));
  } else {
    // Fuel cost at the exogenous gas price; carbon prices are zero here.
    for (std::size_t j = 0; j < e.lp.num_variables(); ++j) {
      out.mutable_variable(static_cast<VarId>(j)).objective =
          e.lp.variable(static_cast<VarId>(j)).objective;
    }
  }
  if (mode == MarketMode::kProposed) {
    append_model(out, build_cem_lp(c, std::vector<double>(c.time.num_periods() + 1, 0.0)));
    return out;
  }
  // Cap-and-trade: sum eta * P_G <= budget, dual p_co2.
  ConstraintRow cap;
  for (const GeneratorSpec& gen : c.generators) {
    if (!gen.dispatchable() || gen.emission_rate == 0.0) continue;
    for (int t = 1; t <= c.time.horizon(); ++t) {
      cap.terms.push_back({out.var_id(sym("P_G", gen.id, t)), gen.emission_rate});
    }
  }
  cap.sense = Sense::kLessEqual;
  cap.rhs = cap_and_trade_budget(c);
  cap.dual_tag = Symbol("p_co2");
  out.add_constraint(std::move(cap));
  return out;
}

double cap_and_trade_budget(const MarketCase& c) {
  double budget = c.horizon_cap();
  if (c.solver.cap_includes_demands) {
    for (std::size_t o = 0; o < c.carbon.demands.size(); ++o) {
      budget -= c.demand_amount(o) * c.time.num_periods();
    }
  }
  return budget;
}

SymbolValues standalone_gas_prices(const MarketCase& c) {
  const GasModel g = build_gas_lp(c, zero_dispatch(c));
  const LpResult res = solve_lp(g.lp);
  if (res.status != LpStatus::kOptimal) {
    throw ModelError("market-models",
                     std::string("standalone gas market is ") + to_string(res.status));
  }
  SymbolValues out;
  for (const GasNode& n : c.gas.nodes) {
    for (int t = 1; t <= c.time.horizon(); ++t) {
      out[sym("mu", n.id, t).str()] = res.row_dual[g.mu(n.id, t)];
    }
  }
  return out;
}

}  // namespace trimarket
