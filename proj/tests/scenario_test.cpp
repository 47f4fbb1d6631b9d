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


#include <string>

#include <json.hpp>

#include "gtest/gtest.h"
#include "test_support.hpp"
#include "trimarket/scenario.hpp"

namespace trimarket {
namespace {

using testing::data_path;
using testing::fixture;
using testing::micro1;

MarketCase must_run_micro() {
  MarketCase c = micro1();
  c.solver.cap_includes_demands = false;
  c.mutable_generator("G1").p_min = 20.0;
  return c;
}

TEST(RunCaseTest, Micro1RowCarriesTheOraclePrice) {
  const RunOutcome r = run_single(data_path("micro1.json"), {});
  ASSERT_TRUE(r.row.feasible);
  EXPECT_TRUE(r.row.verified) << r.row.note;
  const auto clearing = merit_order_cem(r.solution->period_emission, micro1());
  EXPECT_EQ(r.row.avg_carbon_price, clearing[1].price);
  EXPECT_NEAR(r.row.avg_electricity_price, 26.0, 1e-9);
  EXPECT_NEAR(r.row.avg_gas_price, 2000.0, 1e-9);
  EXPECT_NEAR(r.row.total_emission, 56.0, 1e-9);
  ASSERT_EQ(r.row.generator_energy.size(), 2u);
  EXPECT_EQ(r.row.generator_energy[0].first, "G1");
  EXPECT_FALSE(r.report.empty());
}

TEST(RunCaseTest, ColdAndWarmStartsAgreeOnMicro1) {
  MarketCase c = micro1();
  c.solver.warm_start = false;
  const RunOutcome cold = run_case(c, {});
  const RunOutcome warm = run_case(micro1(), {});
  EXPECT_FALSE(cold.row.used_start);
  EXPECT_TRUE(warm.row.used_start);
  EXPECT_NEAR(cold.row.avg_carbon_price, warm.row.avg_carbon_price, 1e-9);
  EXPECT_NEAR(cold.row.total_emission, warm.row.total_emission, 1e-9);
}

TEST(RunCaseTest, FixtureCapAndTradeWithSlackCapPricesCarbonAtZero) {
  RunOptions o;
  o.mode = MarketMode::kCapAndTrade;
  const RunOutcome r = run_case(fixture(), o);
  ASSERT_TRUE(r.row.feasible);
  EXPECT_TRUE(r.row.verified) << r.row.note;
  EXPECT_LT(r.row.total_emission, cap_and_trade_budget(fixture()));
  EXPECT_EQ(r.row.avg_carbon_price, 0.0);
}

TEST(RunCaseTest, InfeasibleCaseIsReportedNotThrown) {
  MarketCase c = must_run_micro();
  c.carbon.cap = 0.0;
  RunOptions o;
  o.mode = MarketMode::kCapAndTrade;
  const RunOutcome r = run_case(c, o);
  EXPECT_FALSE(r.row.feasible);
  EXPECT_EQ(r.row.status, "infeasible");
  // The MILP path reaches the same verdict without the planner shortcut.
  c.solver.warm_start = false;
  EXPECT_EQ(run_case(c, o).row.status, "infeasible");
}

TEST(RunCaseTest, MissingFileRaisesParseError) {
  EXPECT_THROW(run_single(data_path("missing.json"), {}), ParseError);
}

TEST(RunCaseTest, InvalidCaseRaisesModelError) {
  MarketCase c = micro1();
  c.mutable_generator("G1").p_min = 200.0;
  EXPECT_THROW(run_case(c, {}), ModelError);
}

TEST(SweepDemandTest, RowsFollowSweepOrder) {
  RunOptions o;
  o.workers = 3;
  const std::vector<double> growth{20, 0, 10, -100};
  const auto rows = sweep_demand(micro1(), growth, o);
  ASSERT_EQ(rows.size(), growth.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].row.value, growth[i]);
  EXPECT_EQ(rows[0].row.label, "demand+20%");
  EXPECT_EQ(rows[3].row.label, "demand-100%");
}

TEST(SweepDemandTest, ZeroLoadGivesZeroDispatch) {
  const auto rows = sweep_demand(micro1(), {-100}, {});
  const StudyRow& r = rows[0].row;
  ASSERT_TRUE(r.feasible);
  EXPECT_TRUE(r.verified) << r.note;
  EXPECT_NEAR(r.total_emission, 0.0, 1e-9);
  for (const auto& [id, e] : r.generator_energy) EXPECT_NEAR(e, 0.0, 1e-9) << id;
  EXPECT_EQ(r.avg_electricity_price, 0.0);
}

TEST(SweepDemandTest, RejectsNonsenseGrowth) {
  EXPECT_THROW(sweep_demand(micro1(), {-150}, {}), ModelError);
}

TEST(RetrofitTest, EmptyStrategyEqualsBaseline) {
  const auto rows = study_retrofit(micro1(), {parse_retrofit_strategy("none")}, {});
  const RunOutcome base = run_case(micro1(), {});
  EXPECT_EQ(rows[0].row.label, "none");
  EXPECT_EQ(rows[0].row.avg_electricity_price, base.row.avg_electricity_price);
  EXPECT_EQ(rows[0].row.avg_carbon_price, base.row.avg_carbon_price);
  EXPECT_EQ(rows[0].row.total_emission, base.row.total_emission);
  EXPECT_EQ(rows[0].row.generator_energy, base.row.generator_energy);
}

TEST(RetrofitTest, RetrofitLowersEmission) {
  const auto rows = study_retrofit(
      micro1(), {parse_retrofit_strategy(""), parse_retrofit_strategy("G1:15:0.1")}, {});
  ASSERT_TRUE(rows[1].row.feasible);
  EXPECT_LT(rows[1].row.total_emission, rows[0].row.total_emission);
}

TEST(RetrofitTest, StrategyParsing) {
  const RetrofitStrategy s = parse_retrofit_strategy("G1:15:0.1+G2:7:0.1");
  EXPECT_EQ(s.label, "G1+G2");
  ASSERT_EQ(s.units.size(), 2u);
  EXPECT_EQ(s.units[1].generator, "G2");
  EXPECT_EQ(s.units[1].cost, 7.0);
  EXPECT_EQ(s.units[1].emission_rate, 0.1);
  EXPECT_THROW(parse_retrofit_strategy("G1:15"), ModelError);
  EXPECT_THROW(parse_retrofit_strategy("G1:x:0.1"), ModelError);
  EXPECT_EQ(default_retrofit_strategies().size(), 8u);
  EXPECT_TRUE(default_retrofit_strategies().front().units.empty());
}

TEST(RetrofitTest, UnknownGeneratorIsRejected) {
  EXPECT_THROW(study_retrofit(micro1(), {parse_retrofit_strategy("G9:1:0.1")}, {}), LookupError);
}

TEST(ClearingTimeTest, NonDivisorIsRejected) {
  EXPECT_THROW(study_clearing_time(fixture(), {5}, {}), ModelError);
  EXPECT_THROW(study_clearing_time(fixture(), {0}, {}), ModelError);
}

TEST(CapSweepTest, CapAndTradeFarAboveEmissionPricesZero) {
  RunOptions o;
  o.mode = MarketMode::kCapAndTrade;
  for (const RunOutcome& r : study_cap_sweep(micro1(), {500, 1000}, o)) {
    ASSERT_TRUE(r.row.feasible);
    EXPECT_EQ(r.row.avg_carbon_price, 0.0);
  }
}

TEST(CapSweepTest, TighterLadderRaisesCarbonPrice) {
  const auto rows = study_cap_sweep(micro1(), {100, 80, 66, 60}, {});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_TRUE(rows[i].row.feasible);
    EXPECT_GE(rows[i].row.avg_carbon_price, rows[i - 1].row.avg_carbon_price - 1e-9);
  }
}

TEST(CapSweepTest, TotalAtRequirementPricesWithinLadderInterval) {
  // Emission 56 plus demand 10 exhausts a ladder scaled to 66 exactly.
  const auto rows = study_cap_sweep(micro1(), {66}, {});
  const RunOutcome& r = rows[0];
  ASSERT_TRUE(r.row.feasible);
  MarketCase c = micro1();
  for (CarbonOffer& o : c.carbon.offers) o.amount *= 66.0 / 100.0;
  const auto clearing = merit_order_cem(r.solution->period_emission, c);
  EXPECT_GE(r.row.avg_carbon_price, clearing[1].price - 1e-9);
  EXPECT_LE(r.row.avg_carbon_price, clearing[1].price_high + 1e-9);
}

TEST(CapSweepTest, InfeasibleRowsAreMarkedAndSweepContinues) {
  RunOptions o;
  o.mode = MarketMode::kCapAndTrade;
  const auto rows = study_cap_sweep(must_run_micro(), {1, 100}, o);
  EXPECT_FALSE(rows[0].row.feasible);
  EXPECT_EQ(rows[0].row.status, "infeasible");
  EXPECT_TRUE(rows[1].row.feasible);
  EXPECT_THROW(study_cap_sweep(micro1(), {0}, o), ModelError);
}

TEST(FormatRowsTest, CsvIsDeterministicWithFixedColumns) {
  const auto a = sweep_demand(micro1(), {0, 10}, {});
  const auto b = sweep_demand(micro1(), {0, 10}, {});
  const std::string csv = format_rows(a, TableFormat::kCsv);
  EXPECT_EQ(csv, format_rows(b, TableFormat::kCsv));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "label,value,status,feasible,verified,avg_electricity_price,avg_gas_price,"
            "avg_carbon_price,total_emission,avg_hourly_emission,energy_G1,energy_G2,nodes,note");
}

TEST(FormatRowsTest, JsonMirrorsRowsWithDiagnostics) {
  const auto rows = sweep_demand(micro1(), {0}, {});
  const auto j = nlohmann::json::parse(format_rows(rows, TableFormat::kJson));
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["label"], "demand+0%");
  EXPECT_TRUE(j[0]["verification"]["pass"].get<bool>());
  EXPECT_TRUE(j[0]["solver"].contains("seconds"));
}

}  // namespace
}  // namespace trimarket
