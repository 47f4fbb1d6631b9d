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


#include <chrono>
#include <string>

#include "gtest/gtest.h"
#include "test_support.hpp"
#include "trimarket/verify.hpp"

namespace trimarket {
namespace {

using testing::fixture;
using testing::micro1;

struct Solved {
  EquilibriumSystem sys;
  BigMConfig big_m;
  MilpModel model;
  SolveResult result;
};

// Cold solve by default so the MILP path is exercised on its own.
Solved solve_case(const MarketCase& c, MarketMode mode = MarketMode::kProposed,
                  bool warm = false) {
  Solved s;
  s.sys = build_equilibrium_system(c, mode);
  s.big_m = estimate_big_m(s.sys, c);
  s.model = assemble_milp(assemble_equilibrium_problem(s.sys), s.big_m);
  if (warm) s.model.start = complete_start(s.model, planner_point(c, s.sys));
  auto bnb = make_adapter("bnb");
  s.result = solve(s.model, *bnb, {});
  return s;
}

// Two identical coal units and no gas-fired unit.
MarketCase symmetric_case() {
  MarketCase c = micro1();
  c.name = "symmetric";
  std::erase_if(c.generators, [](const GeneratorSpec& g) { return g.id == "G2"; });
  GeneratorSpec twin = c.generator("G1");
  twin.id = "G3";
  c.generators.push_back(twin);
  return c;
}

std::vector<CarbonOffer> fixture_offers() { return fixture().carbon.offers; }

TEST(ExtractSolutionTest, RecomputesEmissionAndPrices) {
  const Solved s = solve_case(micro1());
  ASSERT_TRUE(s.result.has_solution());
  const EquilibriumSolution sol = extract_solution(micro1(), s.sys, s.result.x);
  EXPECT_NEAR(sol.value(sym("P_G", "G1", 1)), 40.0, 1e-9);
  EXPECT_NEAR(sol.value(sym("P_G", "G2", 1)), 60.0, 1e-9);
  EXPECT_NEAR(sol.hourly_emission[1], 0.8 * 40 + 0.4 * 60, 1e-9);
  EXPECT_NEAR(sol.period_emission[1], sol.hourly_emission[1], 1e-9);
  EXPECT_NEAR(sol.carbon_price.at("p_co2[1]"), 20.0, 1e-9);
  EXPECT_NEAR(sol.gas_price.at("mu[1,1]"), 2000.0, 1e-9);
  EXPECT_THROW(sol.value(Symbol("nothing")), LookupError);
}

TEST(FixedPointTest, Micro1PassesWithTightGaps) {
  const Solved s = solve_case(micro1());
  const FixedPointReport rep =
      fixed_point_check(extract_solution(micro1(), s.sys, s.result.x), micro1(), 1e-6);
  ASSERT_EQ(rep.markets.size(), 3u);
  for (const MarketCheck& m : rep.markets) {
    EXPECT_TRUE(m.pass) << m.market;
    EXPECT_LE(std::abs(m.relative_gap), 1e-6) << m.market;
  }
  EXPECT_TRUE(rep.pass);
}

TEST(FixedPointTest, PerturbedDispatchIsFlagged) {
  const Solved s = solve_case(micro1());
  EquilibriumSolution sol = extract_solution(micro1(), s.sys, s.result.x);
  sol.values["P_G[G1,1]"] += 1.0;
  const FixedPointReport rep = fixed_point_check(sol, micro1());
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.markets[0].pass);
  EXPECT_NEAR(rep.markets[0].primal_violation, 1.0, 1e-9);
}

TEST(FixedPointTest, WrongCarbonPriceFailsTheCarbonMarket) {
  const Solved s = solve_case(micro1());
  EquilibriumSolution sol = extract_solution(micro1(), s.sys, s.result.x);
  sol.values["p_co2[1]"] = 15.0;
  const FixedPointReport rep = fixed_point_check(sol, micro1());
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.markets[2].pass);
  EXPECT_GT(rep.markets[2].price_residual, 1e-4);
}

TEST(FixedPointTest, FixtureChecksRunQuickly) {
  const Solved s = solve_case(fixture(), MarketMode::kProposed, true);
  ASSERT_TRUE(s.result.has_solution());
  const auto t0 = std::chrono::steady_clock::now();
  const FixedPointReport rep =
      fixed_point_check(extract_solution(fixture(), s.sys, s.result.x), fixture());
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 5.0);
  EXPECT_TRUE(rep.pass);
}

TEST(MeritOrderTest, LadderPrices) {
  const std::vector<CarbonDemand> none;
  const auto offers = fixture_offers();
  EXPECT_DOUBLE_EQ(merit_order_cem(164.38, offers, none, 1000).price, 18.0);
  EXPECT_DOUBLE_EQ(merit_order_cem(200.48, offers, none, 1000).price, 25.0);
  // The same totals split into generation and exogenous demand.
  const std::vector<CarbonDemand> demands{{"CD1", 20}, {"CD2", 10}};
  const MeritOrderClearing a = merit_order_cem(134.38, offers, demands, 1000);
  EXPECT_DOUBLE_EQ(a.price, 18.0);
  EXPECT_DOUBLE_EQ(a.requirement, 164.38);
  EXPECT_DOUBLE_EQ(merit_order_cem(170.48, offers, demands, 1000).price, 25.0);
}

TEST(MeritOrderTest, ZeroRequirementHasZeroPrice) {
  const MeritOrderClearing r = merit_order_cem(0.0, fixture_offers(), {}, 1000);
  EXPECT_EQ(r.price, 0.0);
  for (double q : r.sold) EXPECT_EQ(q, 0.0);
  EXPECT_EQ(r.price_high, 12.0);
}

TEST(MeritOrderTest, AllocationsFillCheapestFirst) {
  const auto offers = fixture_offers();
  const MeritOrderClearing r = merit_order_cem(164.38, offers, {}, 1000);
  double sold = 0.0;
  for (double q : r.sold) sold += q;
  EXPECT_NEAR(sold, 164.38, 1e-12);
  for (std::size_t k = 0; k < offers.size(); ++k) {
    if (offers[k].cost < 18.0) EXPECT_DOUBLE_EQ(r.sold[k], offers[k].amount) << offers[k].id;
    if (offers[k].cost > 18.0) EXPECT_EQ(r.sold[k], 0.0) << offers[k].id;
  }
}

TEST(MeritOrderTest, BreakpointGivesPriceInterval) {
  const MeritOrderClearing r = merit_order_cem(150.0, fixture_offers(), {}, 1000);
  EXPECT_DOUBLE_EQ(r.price, 16.0);
  EXPECT_DOUBLE_EQ(r.price_high, 18.0);
}

TEST(MeritOrderTest, CurtailmentSetsPenaltyPrice) {
  const auto offers = fixture_offers();
  double total = 0.0;
  for (const CarbonOffer& o : offers) total += o.amount;
  const std::vector<CarbonDemand> demands{{"CD1", 20}, {"CD2", 10}};
  const MeritOrderClearing r = merit_order_cem(total - 5.0, offers, demands, 1000);
  EXPECT_TRUE(r.curtailment_marginal);
  EXPECT_DOUBLE_EQ(r.price, 1000.0);
  EXPECT_NEAR(r.served[0] + r.served[1], 5.0, 1e-9);
  EXPECT_THROW(merit_order_cem(total + 1.0, offers, demands, 1000), ModelError);
}

TEST(MeritOrderTest, Micro1MilpPriceMatchesOracle) {
  const Solved s = solve_case(micro1());
  const EquilibriumSolution sol = extract_solution(micro1(), s.sys, s.result.x);
  const auto clearing = merit_order_cem(sol.period_emission, micro1());
  EXPECT_EQ(clearing[1].price, sol.value(sym("p_co2", 1)));
}

TEST(MeritOrderTest, FixturePricesLieInOracleIntervals) {
  const MarketCase& c = fixture();
  const Solved s = solve_case(c, MarketMode::kProposed, true);
  const EquilibriumSolution sol = extract_solution(c, s.sys, s.result.x);
  const auto clearing = merit_order_cem(sol.period_emission, c);
  for (int p = 1; p <= c.time.num_periods(); ++p) {
    const double price = sol.value(sym("p_co2", p));
    EXPECT_GE(price, clearing[p].price - 1e-6) << p;
    EXPECT_LE(price, clearing[p].price_high + 1e-6) << p;
  }
}

TEST(BruteForceTest, Micro1MatchesTheMilp) {
  const auto t0 = std::chrono::steady_clock::now();
  const Solved s = solve_case(micro1());
  const std::vector<BruteForceSolution> all = brute_force_equilibrium(s.sys);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 5.0);
  ASSERT_EQ(all.size(), 1u);
  for (std::size_t i = 0; i < s.sys.variables.size(); ++i) {
    const double tol = s.sys.variables[i].role == VarRole::kPrimal ? 1e-8 : 1e-6;
    EXPECT_NEAR(all[0].x[i], s.result.x[i], tol) << s.sys.variables[i].name.str();
  }
}

TEST(BruteForceTest, SymmetricUnitsGiveSeveralEquilibria) {
  const MarketCase c = symmetric_case();
  const EquilibriumSystem sys = build_equilibrium_system(c, MarketMode::kProposed);
  ASSERT_LE(sys.pairs.size(), 24u);
  const std::vector<BruteForceSolution> all = brute_force_equilibrium(sys);
  ASSERT_GE(all.size(), 2u);
  for (const BruteForceSolution& s : all) {
    EXPECT_NEAR(s.objective, all[0].objective, 1e-6);
    EXPECT_NEAR(s.x[sys.index(sym("P_G", "G1", 1))] + s.x[sys.index(sym("P_G", "G3", 1))],
                100.0, 1e-9);
  }
}

TEST(BruteForceTest, InfeasibleMicroHasNoEquilibrium) {
  MarketCase c = micro1();
  c.carbon.cap = 0.0;
  c.solver.cap_includes_demands = false;
  c.mutable_generator("G1").p_min = 20.0;
  EXPECT_TRUE(
      brute_force_equilibrium(build_equilibrium_system(c, MarketMode::kCapAndTrade)).empty());
}

TEST(BruteForceTest, FixtureExceedsTheBound) {
  EXPECT_THROW(brute_force_equilibrium(build_equilibrium_system(fixture(), MarketMode::kProposed)),
               ModelError);
}

TEST(ResidualReportTest, MilpSolutionPasses) {
  const Solved s = solve_case(micro1());
  const KktResidualReport r = residual_report(s.sys, s.result.x, s.big_m);
  EXPECT_LE(r.max_stationarity, 1e-6);
  EXPECT_LE(r.max_complementarity, 1e-6);
  EXPECT_LE(r.max_primal_violation, 1e-6);
  EXPECT_TRUE(r.audit_flags.empty());
  EXPECT_TRUE(r.pass);
}

TEST(ResidualReportTest, DualNearItsMIsFlagged) {
  const Solved s = solve_case(micro1());
  std::vector<double> x = s.result.x;
  const ComplementarityPair& p = s.sys.pairs.front();
  x[p.dual] = 0.999 * s.big_m.at(p.family).dual;
  const KktResidualReport r = residual_report(s.sys, x, s.big_m);
  ASSERT_FALSE(r.audit_flags.empty());
  EXPECT_EQ(r.audit_flags[0].side, "dual");
  EXPECT_FALSE(r.pass);
}

TEST(ResidualReportTest, HandBuiltPointHasZeroResiduals) {
  LinearProgram lp("toy");
  const VarId x = lp.add_variable(Symbol("x"), -kInf, kInf, 1.0);
  lp.add_constraint({{{x, 1.0}}, Sense::kGreaterEqual, 1.0, Symbol("r")});
  const EquilibriumSystem sys = derive_kkt(lp);
  std::vector<double> point(sys.variables.size());
  point[sys.index(Symbol("x"))] = 1.0;
  point[sys.index(Symbol("r"))] = 1.0;
  BigMConfig cfg;
  cfg.fallback = 100;
  const KktResidualReport r = residual_report(sys, point, cfg);
  EXPECT_EQ(r.max_stationarity, 0.0);
  EXPECT_EQ(r.max_complementarity, 0.0);
  EXPECT_EQ(r.max_primal_violation, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(ResidualReportTest, FixtureRaisesNoAuditFlags) {
  for (MarketMode mode : {MarketMode::kProposed, MarketMode::kCapAndTrade}) {
    const Solved s = solve_case(fixture(), mode, true);
    ASSERT_TRUE(s.result.has_solution());
    const KktResidualReport r = residual_report(s.sys, s.result.x, s.big_m);
    EXPECT_TRUE(r.audit_flags.empty()) << r.audit_flags.size();
    EXPECT_TRUE(r.pass) << r.worst_stationarity << " " << r.worst_complementarity;
  }
}

TEST(ConservationTest, FixtureBalancesHold) {
  const Solved s = solve_case(fixture(), MarketMode::kProposed, true);
  EquilibriumSolution sol = extract_solution(fixture(), s.sys, s.result.x);
  const ConservationReport r = conservation_report(sol, fixture());
  EXPECT_LE(r.max(), 1e-6);
  sol.values["P_G[G1,3]"] += 1.0;
  EXPECT_NEAR(conservation_report(sol, fixture()).power, 1.0, 1e-9);
}

TEST(ConservationTest, CapAndTradeUseWithinBudget) {
  const Solved s = solve_case(fixture(), MarketMode::kCapAndTrade, true);
  const EquilibriumSolution sol = extract_solution(fixture(), s.sys, s.result.x);
  EXPECT_LE(conservation_report(sol, fixture()).max(), 1e-6);
  EXPECT_LT(sol.total_emission(), cap_and_trade_budget(fixture()));
  EXPECT_EQ(sol.value(Symbol("p_co2")), 0.0);
}

TEST(VerificationJsonTest, CarriesEveryCheck) {
  const Solved s = solve_case(micro1());
  const EquilibriumSolution sol = extract_solution(micro1(), s.sys, s.result.x);
  const std::string j =
      verification_json(fixed_point_check(sol, micro1()), residual_report(s.sys, s.result.x, s.big_m),
                        conservation_report(sol, micro1()));
  for (const char* key : {"\"fixed_point\"", "\"kkt\"", "\"conservation\"", "\"big_m_flags\"",
                          "\"pass\": true"}) {
    EXPECT_NE(j.find(key), std::string::npos) << key;
  }
}

}  // namespace
}  // namespace trimarket
