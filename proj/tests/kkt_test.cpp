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


#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <string>

#include "gtest/gtest.h"
#include "test_support.hpp"
#include "trimarket/kkt.hpp"
#include "trimarket/market_models.hpp"
#include "trimarket/simplex.hpp"

namespace trimarket {
namespace {

using testing::fixture;
using testing::micro1;

EquilibriumSystem coupled(const MarketCase& c) {
  return couple_markets(build_electricity_lp(c, zero_gas_prices(c), zero_carbon_prices(c)),
                        build_gas_lp(c, zero_dispatch(c)), build_cem_lp(c, zero_dispatch(c)),
                        c.time);
}

TEST(DeriveKktTest, CemSinglePeriodCounts) {
  MarketCase c = fixture();
  c.time = TimeStructure(1, 1);
  const EquilibriumSystem sys = derive_kkt(build_cem_lp(c, std::vector<double>{0.0, 100.0}).lp);
  EXPECT_EQ(sys.stationarity.size(), 9u);
  EXPECT_EQ(sys.pairs.size(), 18u);
}

TEST(DeriveKktTest, FreeVariableWithEquality) {
  LinearProgram lp("toy");
  const VarId x = lp.add_variable(Symbol("x"), -kInf, kInf, 3.0);
  lp.add_constraint({{{x, 2.0}}, Sense::kEqual, 4.0, Symbol("y")});
  const EquilibriumSystem sys = derive_kkt(lp);
  ASSERT_EQ(sys.stationarity.size(), 1u);
  EXPECT_TRUE(sys.pairs.empty());
  // 2 y - 3 = 0.
  const AffineExpr& st = sys.stationarity[0].residual;
  EXPECT_EQ(st.constant, -3.0);
  EXPECT_EQ(st.coeff_of(sys.index(Symbol("y"))), 2.0);
  EXPECT_FALSE(sys.variables[sys.index(Symbol("y"))].nonnegative);
}

TEST(DeriveKktTest, VariableBoundsGetPseudoMultipliers) {
  LinearProgram lp("toy");
  lp.add_variable(Symbol("x"), 0.0, 5.0, 1.0);
  const EquilibriumSystem sys = derive_kkt(lp);
  EXPECT_EQ(sys.count_pairs("lb"), 1u);
  EXPECT_EQ(sys.count_pairs("ub"), 1u);
  const AffineExpr& st = sys.stationarity[0].residual;
  EXPECT_EQ(st.coeff_of(sys.index(Symbol("lb", {"x"}))), 1.0);
  EXPECT_EQ(st.coeff_of(sys.index(Symbol("ub", {"x"}))), -1.0);
}

TEST(DeriveKktTest, UntaggedRowIsAnError) {
  LinearProgram lp("toy");
  const VarId x = lp.add_variable(Symbol("x"), -kInf, kInf, 1.0);
  const RowId r = lp.add_constraint({{{x, 1.0}}, Sense::kGreaterEqual, 0.0, Symbol("y")});
  lp.mutable_row(r).dual_tag = Symbol();
  EXPECT_THROW(derive_kkt(lp), ModelError);
}

TEST(DeriveKktTest, InteriorCleanUnitPinsLmp) {
  const MarketCase& c = fixture();
  const ElectricityModel e = build_electricity_lp(c, zero_gas_prices(c), zero_carbon_prices(c));
  const EquilibriumSystem sys = derive_kkt(e.lp);
  // All rho multipliers zero: the G5 equation reduces to lambda - 21.90 = 0.
  std::vector<double> values(sys.variables.size(), 0.0);
  const int lambda = sys.index(sym("lambda", c.generator("G5").bus, 3));
  values[lambda] = 21.90;
  const auto& eq = sys.stationarity[sys.stationarity_of(sys.index(sym("P_G", "G5", 3)))];
  EXPECT_EQ(eq.residual.coeff_of(lambda), 1.0);
  EXPECT_NEAR(eq.residual.eval(values), 0.0, 1e-12);
}

TEST(DeriveKktTest, StationarityIsTheTransposeOfTheRows) {
  const MarketCase& c = fixture();
  const ElectricityModel e = build_electricity_lp(c, zero_gas_prices(c), zero_carbon_prices(c));
  const GasModel g = build_gas_lp(c, zero_dispatch(c));
  const CemModel m = build_cem_lp(c, zero_dispatch(c));
  for (const LinearProgram* lp : {&e.lp, &g.lp, &m.lp}) {
    const EquilibriumSystem sys = derive_kkt(*lp);
    std::size_t nnz = 0;
    for (const ConstraintRow& r : lp->rows()) {
      const double sign = r.sense == Sense::kLessEqual ? -1.0 : 1.0;
      const int dual = sys.index(r.dual_tag);
      for (const Term& t : r.terms) {
        const int x = sys.index(lp->variable(t.var).name);
        ASSERT_EQ(sys.stationarity[sys.stationarity_of(x)].residual.coeff_of(dual),
                  sign * t.coeff);
        ++nnz;
      }
    }
    // No stationarity term without a matching row entry.
    std::size_t terms = 0;
    for (const auto& s : sys.stationarity) terms += s.residual.terms.size();
    EXPECT_EQ(terms, nnz) << lp->market();
    EXPECT_TRUE(sys.orphan_duals().empty());
  }
}

// Solves the KKT conditions of `lp` by enumerating which side of each
// complementarity pair is zero and checking the rest with an LP.
std::optional<std::vector<double>> kkt_point(const EquilibriumSystem& sys) {
  const std::size_t np = sys.pairs.size();
  for (unsigned mask = 0; mask < (1u << np); ++mask) {
    LinearProgram feas("kkt");
    for (const SystemVariable& v : sys.variables) {
      feas.add_variable(v.name, v.nonnegative ? 0.0 : -kInf, kInf, 0.0);
    }
    int tag = 0;
    auto add = [&](const AffineExpr& e, Sense s) {
      ConstraintRow r{{}, s, -e.constant, sym("r", tag++)};
      for (const auto& [v, c] : e.terms) r.terms.push_back({v, c});
      feas.add_constraint(std::move(r));
    };
    for (const PrimalRow& r : sys.rows) add(r.expr, r.sense);
    for (const auto& s : sys.stationarity) add(s.residual, Sense::kEqual);
    for (std::size_t p = 0; p < np; ++p) {
      if (mask >> p & 1u) {
        add(sys.slack(sys.pairs[p]), Sense::kEqual);
      } else {
        AffineExpr d;
        d.add(sys.pairs[p].dual, 1.0);
        add(d, Sense::kEqual);
      }
    }
    const LpResult r = solve_lp(feas);
    if (r.status == LpStatus::kOptimal) return r.x;
  }
  return std::nullopt;
}

TEST(DeriveKktTest, KktPointsAreOptimalOnRandomLps) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> coef(-4, 4), cost(-5, 5), rhs(-3, 6);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    LinearProgram lp("random");
    const int n = 2 + trial % 2;
    for (int j = 0; j < n; ++j) {
      lp.add_variable(sym("x", j), trial % 3 == 0 ? 0.0 : -kInf, kInf, cost(rng));
    }
    const int m = 3 + trial % 2;
    for (int i = 0; i < m; ++i) {
      ConstraintRow r;
      for (int j = 0; j < n; ++j) {
        const int a = coef(rng);
        if (a != 0) r.terms.push_back({j, static_cast<double>(a)});
      }
      r.sense = i == 0 && trial % 4 == 1 ? Sense::kEqual
                                         : (i % 2 ? Sense::kLessEqual : Sense::kGreaterEqual);
      r.rhs = rhs(rng);
      r.dual_tag = sym("y", i);
      lp.add_constraint(std::move(r));
    }
    // Box every variable so the LP cannot be unbounded.
    for (int j = 0; j < n; ++j) {
      lp.add_constraint({{{j, 1.0}}, Sense::kLessEqual, 10.0, sym("box_hi", j)});
      lp.add_constraint({{{j, 1.0}}, Sense::kGreaterEqual, -10.0, sym("box_lo", j)});
    }
    const LpResult direct = solve_lp(lp);
    const EquilibriumSystem sys = derive_kkt(lp);
    const auto point = kkt_point(sys);
    ASSERT_EQ(point.has_value(), direct.status == LpStatus::kOptimal) << "trial " << trial;
    if (!point) continue;
    std::vector<double> x(n);
    for (int j = 0; j < n; ++j) x[j] = (*point)[sys.index(sym("x", j))];
    const double obj = lp.objective_value(x);
    EXPECT_LE(std::abs(obj - direct.objective), 1e-6 * std::max(1.0, std::abs(direct.objective)))
        << "trial " << trial;
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(CoupleMarketsTest, HourlyClearingGivesIdentityExpansion) {
  const EquilibriumSystem sys = coupled(fixture());
  EXPECT_EQ(sys.count_links(LinkKind::kPriceTimeExpansion), 24u);
  for (const CouplingLink& l : sys.links) {
    if (l.kind == LinkKind::kPriceTimeExpansion) EXPECT_EQ(l.source, l.target);
  }
}

TEST(CoupleMarketsTest, DailyClearingMapsEveryHourToOnePeriod) {
  MarketCase c = fixture();
  c.time = TimeStructure(24, 24);
  const EquilibriumSystem sys = coupled(c);
  std::set<int> hours;
  for (const CouplingLink& l : sys.links) {
    if (l.kind != LinkKind::kPriceTimeExpansion) continue;
    EXPECT_EQ(l.target, sym("p_co2", 1));
    hours.insert(std::stoi(l.source.keys[0]));
  }
  EXPECT_EQ(hours.size(), 24u);
}

TEST(CoupleMarketsTest, GasFiredDispatchIsShared) {
  const EquilibriumSystem sys = coupled(fixture());
  EXPECT_EQ(sys.count_links(LinkKind::kSharedPrimal), 72u);
  // Coal and gas-fired emitters G1, G2, G3, G4, G6 feed the carbon balance.
  EXPECT_EQ(sys.count_links(LinkKind::kEmissionInjection), 5u * 24u);
  const int pg = sys.index(sym("P_G", "G3", 9));
  EXPECT_EQ(sys.rows[sys.find_row(sym("mu", "4", 9))].expr.coeff_of(pg), -0.007);
  EXPECT_EQ(sys.rows[sys.find_row(sym("p_co2", 9))].expr.coeff_of(pg), -0.435);
  // The dispatch has exactly one stationarity equation, owned by electricity.
  EXPECT_EQ(sys.stationarity[sys.stationarity_of(pg)].market, "electricity");
}

TEST(CoupleMarketsTest, PricesBecomeSystemVariables) {
  const EquilibriumSystem sys = coupled(fixture());
  const int pg = sys.index(sym("P_G", "G2", 5));
  const AffineExpr& st = sys.stationarity[sys.stationarity_of(pg)].residual;
  EXPECT_EQ(st.constant, -3.5);
  EXPECT_EQ(st.coeff_of(sys.index(sym("mu", "4", 5))), -0.006);
  EXPECT_EQ(st.coeff_of(sys.index(sym("p_co2", 5))), -0.425);
}

TEST(CoupleMarketsTest, FixtureIsClosed) {
  const EquilibriumSystem sys = coupled(fixture());
  EXPECT_TRUE(sys.unresolved.empty());
  EXPECT_TRUE(sys.orphan_duals().empty());
  EXPECT_NO_THROW(assemble_equilibrium_problem(sys));
}

TEST(CoupleMarketsTest, InconsistentTimeStructures) {
  const MarketCase& c = fixture();
  MarketCase c3 = c;
  c3.time = TimeStructure(24, 3);
  EXPECT_THROW(couple_markets(build_electricity_lp(c, zero_gas_prices(c), zero_carbon_prices(c)),
                              build_gas_lp(c, zero_dispatch(c)),
                              build_cem_lp(c3, zero_dispatch(c3)), c.time),
               ModelError);
}

TEST(CoupleMarketsTest, RestrictionReproducesStandaloneMarkets) {
  const MarketCase& c = micro1();
  const EquilibriumSystem sys = coupled(c);
  const double g2 = 37.5, mu = 2100.0, p = 17.0;
  std::vector<double> at(sys.variables.size(), 0.0);
  at[sys.index(sym("P_G", "G1", 1))] = 50.0;
  at[sys.index(sym("P_G", "G2", 1))] = g2;
  at[sys.index(sym("mu", "1", 1))] = mu;
  at[sys.index(sym("p_co2", 1))] = p;

  const SymbolValues dispatch{{"P_G[G1,1]", 50.0}, {"P_G[G2,1]", g2}};
  const EquilibriumSystem gas = derive_kkt(build_gas_lp(c, dispatch).lp);
  const EquilibriumSystem cem = derive_kkt(build_cem_lp(c, dispatch).lp);
  const EquilibriumSystem ele = derive_kkt(
      build_electricity_lp(c, {{"mu[1,1]", mu}}, {{"p_co2[1]", p}}).lp);
  for (const EquilibriumSystem* alone : {&gas, &cem}) {
    for (const PrimalRow& r : alone->rows) {
      const PrimalRow& joint = sys.rows[sys.find_row(r.tag)];
      // Constant part once the other market's dispatch is frozen.
      double k = joint.expr.constant;
      for (const auto& [v, a] : joint.expr.terms) {
        if (sys.variables[v].market != r.market) k += a * at[v];
      }
      EXPECT_NEAR(k, r.expr.constant, 1e-12) << r.tag.str();
      for (const auto& [v, a] : r.expr.terms) {
        EXPECT_EQ(joint.expr.coeff_of(sys.index(alone->variables[v].name)), a);
      }
    }
  }
  for (const StationarityEquation& s : ele.stationarity) {
    const auto& joint =
        sys.stationarity[sys.stationarity_of(sys.index(ele.variables[s.primal].name))];
    double k = joint.residual.constant;
    for (const auto& [v, a] : joint.residual.terms) {
      if (sys.variables[v].market != "electricity") k += a * at[v];
    }
    EXPECT_NEAR(k, s.residual.constant, 1e-12);
  }
}

TEST(AssembleTest, MissingGasLinksAreReported) {
  const MarketCase& c = fixture();
  const EquilibriumSystem sys =
      couple_markets(build_electricity_lp(c, zero_gas_prices(c), zero_carbon_prices(c)),
                     build_gas_lp(c, zero_dispatch(c)), build_cem_lp(c, zero_dispatch(c)),
                     c.time, CouplingOptions{.link_gas_prices = false});
  try {
    assemble_equilibrium_problem(sys);
    FAIL() << "expected DanglingSymbolError";
  } catch (const DanglingSymbolError& e) {
    ASSERT_EQ(e.refs().size(), 72u);
    bool found = false;
    for (const UnresolvedRef& r : e.refs()) {
      EXPECT_EQ(r.symbol.family, "mu");
      EXPECT_EQ(r.market, "electricity");
      found |= r.symbol == sym("mu", "4", 1) && r.equation == "stationarity P_G[G2,1]";
    }
    EXPECT_TRUE(found);
  }
}

TEST(AssembleTest, Micro1BundleMatchesHandCount) {
  const EquilibriumProblem p = assemble_equilibrium_problem(coupled(micro1()));
  int primal = 0, dual = 0;
  for (const SystemVariable& v : p.variables) (v.role == VarRole::kPrimal ? primal : dual)++;
  EXPECT_EQ(primal, 9);
  EXPECT_EQ(dual, 20);
  EXPECT_EQ(p.pairs.size(), 16u);
  // lambda, rho4, mu, p_co2 rows plus nine stationarity equations.
  EXPECT_EQ(p.equalities.size(), 13u);
  EXPECT_TRUE(p.objective.terms.empty());
  EXPECT_EQ(p.objective.constant, 0.0);
}

TEST(AssembleTest, TotalCostObjective) {
  const MarketCase& c = micro1();
  const EquilibriumProblem p =
      assemble_equilibrium_problem(coupled(c), SecondaryObjective::kTotalCost);
  // Electricity: 10 G1 + 3 G2 - 1000 P_LD + 1000*100; gas: 2000 F_S - 1e6 F_LD + 1e6*0.5.
  EXPECT_NEAR(p.objective.constant, 1000.0 * 100 + 1e6 * 0.5 + 1000.0 * 10, 1e-9);
  EXPECT_EQ(p.objective.terms.size(), 9u);
}

TEST(CapAndTradeTest, SinglePairWithHorizonPrice) {
  const MarketCase& c = fixture();
  const EquilibriumSystem sys = build_cap_and_trade_system(
      build_electricity_lp(c, zero_gas_prices(c), zero_carbon_prices(c)),
      build_gas_lp(c, zero_dispatch(c)), c, c.time);
  EXPECT_EQ(sys.mode, MarketMode::kCapAndTrade);
  EXPECT_EQ(sys.count_pairs("cap"), 1u);
  EXPECT_EQ(sys.count_pairs("nu2_max"), 0u);
  const PrimalRow& cap = sys.rows[sys.find_row(Symbol("p_co2"))];
  EXPECT_NEAR(cap.expr.constant, (225.0 - 30.0) * 24, 1e-9);
  EXPECT_EQ(sys.count_links(LinkKind::kPriceTimeExpansion), 24u);
  for (const CouplingLink& l : sys.links) {
    if (l.kind == LinkKind::kPriceTimeExpansion) EXPECT_EQ(l.target, Symbol("p_co2"));
  }
  EXPECT_TRUE(sys.unresolved.empty());
  EXPECT_TRUE(sys.orphan_duals().empty());
}

TEST(CapAndTradeTest, DemandsCanBeExcludedFromBudget) {
  MarketCase c = fixture();
  c.solver.cap_includes_demands = false;
  const EquilibriumSystem sys = build_cap_and_trade_system(
      build_electricity_lp(c, zero_gas_prices(c), zero_carbon_prices(c)),
      build_gas_lp(c, zero_dispatch(c)), c, c.time);
  EXPECT_NEAR(sys.rows[sys.find_row(Symbol("p_co2"))].expr.constant, 225.0 * 24, 1e-9);
}

TEST(CapAndTradeTest, DecoupledGasKeepsFixedFuelCost) {
  MarketCase c = micro1();
  c.solver.cap_couples_gas = false;
  const SymbolValues mu = standalone_gas_prices(c);
  const EquilibriumSystem sys = build_cap_and_trade_system(
      build_electricity_lp(c, mu, zero_carbon_prices(c)), build_gas_lp(c, zero_dispatch(c)), c,
      c.time);
  EXPECT_LT(sys.find(sym("mu", "1", 1)), 0);
  const int g2 = sys.index(sym("P_G", "G2", 1));
  EXPECT_NEAR(sys.stationarity[sys.stationarity_of(g2)].residual.constant,
              -(3.0 + 0.006 * 2000.0), 1e-12);
  EXPECT_TRUE(sys.unresolved.empty());
}

TEST(CapAndTradeTest, MissingCapIsAnError) {
  MarketCase c = micro1();
  c.carbon.cap.reset();
  EXPECT_THROW(build_cap_and_trade_system(
                   build_electricity_lp(c, zero_gas_prices(c), zero_carbon_prices(c)),
                   build_gas_lp(c, zero_dispatch(c)), c, c.time),
               ModelError);
}

TEST(TextExportTest, OneLinePerEquation) {
  const EquilibriumSystem sys = coupled(micro1());
  const std::string text = to_text(sys);
  EXPECT_NE(text.find("d/d P_G[G2,1]: lambda[1,1] + rho1_min[G2,1] - rho1_max[G2,1] - 0.006*mu[1,1] - "
                      "0.4*p_co2[1] - 3 = 0"),
            std::string::npos)
      << text;
  EXPECT_NE(text.find("0 <= -P_G[G1,1] + 80 ⊥ rho1_max[G1,1] >= 0"), std::string::npos);
  std::size_t lines = std::count(text.begin(), text.end(), '\n');
  EXPECT_EQ(lines, 1 + 9 + 4 + 16 + sys.links.size());
}

}  // namespace
}  // namespace trimarket
