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


// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "test_support.hpp"
#include "trimarket/kkt.hpp"
#include "trimarket/market_models.hpp"
#include "trimarket/milp.hpp"
#include "trimarket/scenario.hpp"
#include "trimarket/verify.hpp"

namespace trimarket {
namespace {

using testing::fixture;
using testing::micro1;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Rows shared by criteria 2, 3, 6 and 7; each study is solved once.
struct Studies {
  std::vector<RunOutcome> base;  // micro1, fixture proposed, fixture cap-and-trade
  std::vector<RunOutcome> demand;
  std::vector<RunOutcome> retrofit;
  std::vector<RunOutcome> clearing;
  std::vector<RunOutcome> cap;  // fixture cap-and-trade at Cap 225 and 150

  std::vector<const RunOutcome*> all() const {
    std::vector<const RunOutcome*> out;
    for (const auto* v : {&base, &demand, &retrofit, &clearing, &cap}) {
      for (const RunOutcome& r : *v) out.push_back(&r);
    }
    return out;
  }
};

Studies run_studies() {
  RunOptions proposed;
  RunOptions cap_trade;
  cap_trade.mode = MarketMode::kCapAndTrade;
  Studies s;
  s.base.push_back(run_case(micro1(), proposed, "micro1"));
  s.base.push_back(run_case(fixture(), proposed, "fixture"));
  s.base.push_back(run_case(fixture(), cap_trade, "fixture cap-and-trade"));
  s.demand = sweep_demand(fixture(), {0, 5, 10, 15, 20, 25, 30}, proposed);
  s.retrofit = study_retrofit(fixture(), default_retrofit_strategies(), proposed);
  s.clearing = study_clearing_time(fixture(), {1, 3, 12, 24}, proposed);
  s.cap = study_cap_sweep(fixture(), {225, 150}, cap_trade);
  return s;
}

Verdict oracle_equivalence() {
  const auto t0 = Clock::now();
  const MarketCase& c = micro1();
  const EquilibriumSystem sys = build_equilibrium_system(c, MarketMode::kProposed);
  const MilpModel m = assemble_milp(assemble_equilibrium_problem(sys), estimate_big_m(sys, c));
  auto bnb = make_adapter("bnb");
  const SolveResult r = solve(m, *bnb, {});  // no start: a genuine search
  if (!r.has_solution()) return {false, fmt::format("milp status {}", to_string(r.status))};
  const std::vector<BruteForceSolution> all = brute_force_equilibrium(sys);
  const double elapsed = seconds_since(t0);
  if (all.size() != 1) return {false, fmt::format("{} brute-force equilibria", all.size())};
  double primal = 0.0;
  double price = 0.0;
  for (std::size_t i = 0; i < sys.variables.size(); ++i) {
    const double d = std::abs(all[0].x[i] - r.x[i]);
    (sys.variables[i].role == VarRole::kPrimal ? primal : price) =
        std::max(sys.variables[i].role == VarRole::kPrimal ? primal : price, d);
  }
  return {primal <= 1e-8 && price <= 1e-6 && elapsed < 5.0,
          fmt::format("{} pairs, primal diff {:.1e}, price diff {:.1e}, {:.2f} s",
                      sys.pairs.size(), primal, price, elapsed)};
}

Verdict fixed_point(const Studies& s) {
  int checked = 0;
  double worst_gap = 0.0;
  double slowest = 0.0;
  std::string failed;
  for (const RunOutcome* r : s.all()) {
    if (!r->fixed_point) {
      failed += " " + r->row.label + "(no solution)";
      continue;
    }
    ++checked;
    for (const MarketCheck& m : r->fixed_point->markets) {
      worst_gap = std::max(worst_gap, std::abs(m.relative_gap));
    }
    slowest = std::max(slowest, r->fixed_point_seconds);
    if (!r->fixed_point->pass || r->fixed_point_seconds >= 5.0) failed += " " + r->row.label;
  }
  return {failed.empty(), fmt::format("{} rows, worst gap {:.1e}, slowest check {:.2f} s{}",
                                      checked, worst_gap, slowest,
                                      failed.empty() ? "" : ", failed:" + failed)};
}

Verdict kkt_residuals(const Studies& s) {
  double stat = 0.0;
  double comp = 0.0;
  double primal = 0.0;
  std::size_t flags = 0;
  bool all_solved = true;
  for (const RunOutcome* r : s.all()) {
    if (!r->residuals) {
      all_solved = false;
      continue;
    }
    stat = std::max(stat, r->residuals->max_stationarity);
    comp = std::max(comp, r->residuals->max_complementarity);
    primal = std::max(primal, r->residuals->max_primal_violation);
    flags += r->residuals->audit_flags.size();
  }
  return {all_solved && stat <= 1e-6 && comp <= 1e-6 && primal <= 1e-6 && flags == 0,
          fmt::format("stationarity {:.1e}, complementarity {:.1e}, primal {:.1e}, {} audit flags",
                      stat, comp, primal, flags)};
}

// Clears one CEM period alone through its own KKT MILP, with amounts taken
// as written and generation emission chosen so the total requirement
// equals `requirement`.
double cem_equilibrium_price(double requirement) {
  MarketCase c = fixture();
  c.time = TimeStructure(c.time.horizon(), c.time.horizon());
  c.carbon.basis = AmountBasis::kPerPeriod;
  double demands = 0.0;
  for (const CarbonDemand& d : c.carbon.demands) demands += d.amount;
  const CemModel cem = build_cem_lp(c, std::vector<double>{0.0, requirement - demands});
  const EquilibriumSystem sys = derive_kkt(cem.lp);
  const MilpModel m = assemble_milp(assemble_equilibrium_problem(sys), estimate_big_m(sys, c));
  auto bnb = make_adapter("bnb");
  const SolveResult r = solve(m, *bnb, {});
  if (!r.has_solution()) {
    throw ModelError("acceptance", std::string("carbon milp ") + to_string(r.status));
  }
  return r.x[sys.index(sym("p_co2", 1))];
}

Verdict merit_order() {
  const double low = cem_equilibrium_price(164.38);
  const double high = cem_equilibrium_price(200.48);
  const double oracle_low = merit_order_cem(164.38, fixture().carbon.offers, {}, 1e9).price;
  const double oracle_high = merit_order_cem(200.48, fixture().carbon.offers, {}, 1e9).price;
  return {std::abs(low - 18.0) <= 1e-6 && std::abs(high - 25.0) <= 1e-6 &&
              oracle_low == 18.0 && oracle_high == 25.0,
          fmt::format("164.38 t -> {:.9g} $/t, 200.48 t -> {:.9g} $/t (merit order {} and {})",
                      low, high, oracle_low, oracle_high)};
}

Verdict cap_and_trade(const Studies& s) {
  std::string detail;
  bool pass = true;
  const std::vector<double> caps{225, 150};
  for (std::size_t i = 0; i < s.cap.size(); ++i) {
    const RunOutcome& r = s.cap[i];
    if (!r.solution) return {false, r.row.label + " has no solution"};
    MarketCase c = fixture();
    c.carbon.cap = caps[i];
    const double budget = cap_and_trade_budget(c);
    const double use = r.solution->total_emission();
    const double price = r.solution->carbon_price.begin()->second;
    const double product = price * (budget - use);
    if (use < budget - 1e-6) {
      pass = pass && price == 0.0;
    } else {
      pass = pass && std::abs(use - budget) <= 1e-6 && price > 0.0 && std::abs(product) <= 1e-6;
    }
    detail += fmt::format("{}Cap {}: use {:.3f} of {:.3f}, p_co2 {:.6g}", i ? "; " : "", caps[i],
                          use, budget, price);
  }
  return {pass, detail};
}

bool nondecreasing(const std::vector<RunOutcome>& rows,
                   const std::function<double(const StudyRow&)>& f, double slack = 1e-9) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (f(rows[i].row) < f(rows[i - 1].row) - slack) return false;
  }
  return true;
}

Verdict trends(const Studies& s) {
  for (const auto* v : {&s.demand, &s.retrofit, &s.clearing}) {
    for (const RunOutcome& r : *v) {
      if (!r.row.feasible) return {false, r.row.label + " infeasible"};
    }
  }
  const bool a = nondecreasing(s.demand, [](const StudyRow& r) { return r.avg_electricity_price; }) &&
                 nondecreasing(s.demand, [](const StudyRow& r) { return r.avg_carbon_price; });
  const double baseline = s.retrofit[0].row.total_emission;
  bool b = s.retrofit[0].row.label == "none";
  double g1 = 0.0;
  double g2 = 0.0;
  for (std::size_t i = 1; i < s.retrofit.size(); ++i) {
    const StudyRow& r = s.retrofit[i].row;
    b = b && r.total_emission < baseline;
    if (r.label == "G1") g1 = baseline - r.total_emission;
    if (r.label == "G2") g2 = baseline - r.total_emission;
  }
  b = b && g1 > g2;
  const bool c =
      nondecreasing(s.clearing, [](const StudyRow& r) { return -r.avg_carbon_price; }) &&
      nondecreasing(s.clearing, [](const StudyRow& r) { return r.avg_hourly_emission; });
  auto series = [](const std::vector<RunOutcome>& rows, double StudyRow::*field) {
    std::string out;
    for (const RunOutcome& r : rows) out += fmt::format("{}{:.2f}", out.empty() ? "" : "/", r.row.*field);
    return out;
  };
  return {a && b && c,
          fmt::format("(a) {} lmp {} co2 {}; (b) {} G1 -{:.1f} t G2 -{:.1f} t; (c) {} co2 {} "
                      "emission/h {}",
                      a ? "ok" : "FAIL", series(s.demand, &StudyRow::avg_electricity_price),
                      series(s.demand, &StudyRow::avg_carbon_price), b ? "ok" : "FAIL", g1, g2,
                      c ? "ok" : "FAIL", series(s.clearing, &StudyRow::avg_carbon_price),
                      series(s.clearing, &StudyRow::avg_hourly_emission))};
}

Verdict conservation(const Studies& s) {
  ConservationReport worst;
  bool all_solved = true;
  for (const RunOutcome* r : s.all()) {
    if (!r->conservation) {
      all_solved = false;
      continue;
    }
    worst.power = std::max(worst.power, r->conservation->power);
    worst.gas = std::max(worst.gas, r->conservation->gas);
    worst.carbon = std::max(worst.carbon, r->conservation->carbon);
  }
  return {all_solved && worst.max() <= 1e-6,
          fmt::format("power {:.1e} MW, gas {:.1e} Mm3/h, allowances {:.1e} t", worst.power,
                      worst.gas, worst.carbon)};
}

Verdict performance() {
  const MarketCase& c = fixture();
  auto t0 = Clock::now();
  const EquilibriumSystem sys = build_equilibrium_system(c, MarketMode::kProposed);
  MilpModel m = assemble_milp(assemble_equilibrium_problem(sys), estimate_big_m(sys, c));
  const double assemble_s = seconds_since(t0);
  t0 = Clock::now();
  m.start = complete_start(m, planner_point(c, sys));
  auto adapter = make_adapter("");
  SolveLimits limits;
  limits.time_limit_s = 60.0;
  const SolveResult r = solve(m, *adapter, limits);
  const double solve_s = seconds_since(t0);
  const std::string first = export_model(m, ExportFormat::kFixedMps).text;
  const EquilibriumSystem sys2 = build_equilibrium_system(c, MarketMode::kProposed);
  const MilpModel m2 = assemble_milp(assemble_equilibrium_problem(sys2), estimate_big_m(sys2, c));
  const bool same = first == export_model(m2, ExportFormat::kFixedMps).text &&
                    export_model(m, ExportFormat::kFreeMps).text ==
                        export_model(m2, ExportFormat::kFreeMps).text;
  return {assemble_s < 2.0 && r.has_solution() && solve_s < 60.0 && same,
          fmt::format("{} binaries, assemble {:.2f} s, solve {:.2f} s via {} ({}), MPS {}",
                      m.num_binaries(), assemble_s, solve_s, r.adapter, to_string(r.status),
                      same ? "identical" : "differs")};
}

int run() {
  const auto t0 = Clock::now();
  Studies studies;
  std::string study_error;
  try {
    studies = run_studies();
  } catch (const std::exception& e) {
    study_error = e.what();
  }
  auto guarded = [&](bool needs_studies, const std::function<Verdict()>& f) -> Verdict {
    if (needs_studies && !study_error.empty()) return {false, "studies failed: " + study_error};
    try {
      return f();
    } catch (const std::exception& e) {
      return {false, std::string("error: ") + e.what()};
    }
  };
  const std::vector<std::pair<std::string, Verdict>> verdicts{
      {"oracle equivalence", guarded(false, oracle_equivalence)},
      {"fixed point", guarded(true, [&] { return fixed_point(studies); })},
      {"kkt residuals", guarded(true, [&] { return kkt_residuals(studies); })},
      {"merit-order carbon price", guarded(false, merit_order)},
      {"cap-and-trade zero price", guarded(true, [&] { return cap_and_trade(studies); })},
      {"trends", guarded(true, [&] { return trends(studies); })},
      {"conservation", guarded(true, [&] { return conservation(studies); })},
      {"performance", guarded(false, performance)},
  };
  int failures = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const auto& [name, v] = verdicts[i];
    failures += v.pass ? 0 : 1;
    fmt::print("criterion {} {}: {} ({})\n", i + 1, v.pass ? "PASS" : "FAIL", name, v.detail);
  }
  fmt::print("{} of {} criteria pass, {:.1f} s\n", verdicts.size() - failures, verdicts.size(),
             seconds_since(t0));
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace trimarket

int main() { return trimarket::run(); }
