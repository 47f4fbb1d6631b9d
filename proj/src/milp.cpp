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


#include "trimarket/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "trimarket/market_models.hpp"
#include "trimarket/simplex.hpp"

namespace trimarket {

PairBounds BigMConfig::at(const std::string& fam) const {
  auto it = family.find(fam);
  if (it != family.end()) return it->second;
  if (fallback > 0) return {fallback, fallback};
  throw ModelError("milp-reformulation", "no big-M value for family " + fam);
}

namespace {

double positive(double x) { return x > 0 ? x : 1.0; }

// "rho1_max[G1,3]" -> z_rho1_max[G1,3]; a keyless label keeps the family.
Symbol binary_name(const std::string& family, const std::string& label) {
  std::vector<std::string> keys;
  const auto open = label.find('[');
  if (open != std::string::npos && label.back() == ']') {
    std::string inner = label.substr(open + 1, label.size() - open - 2);
    std::size_t start = 0;
    for (std::size_t k = 0; k <= inner.size(); ++k) {
      if (k == inner.size() || inner[k] == ',') {
        keys.push_back(inner.substr(start, k - start));
        start = k + 1;
      }
    }
  }
  return Symbol("z_" + family, std::move(keys));
}

}  // namespace

BigMConfig estimate_big_m(const EquilibriumSystem& sys, const MarketCase& c) {
  const Penalties& pen = c.penalties;
  double span = 0, ramp = 0, gen_cost = 0, min_eta = kInf;
  for (const GeneratorSpec& g : c.generators) {
    if (!g.dispatchable()) continue;
    span = std::max(span, g.p_max - g.p_min);
    if (g.ramp) {
      double r = std::min(2 * *g.ramp, g.p_max - g.p_min + *g.ramp);
      if (g.initial_output) {
        r = std::max({r, g.p_max - *g.initial_output + *g.ramp,
                      *g.initial_output - g.p_min + *g.ramp});
      }
      ramp = std::max(ramp, r);
    }
    // Full marginal cost with both prices at their curtailment values.
    gen_cost = std::max(gen_cost, g.cost + g.heat_rate * pen.lost_gas +
                                      g.emission_rate * pen.unmet_carbon);
    if (g.emission_rate > 0) min_eta = std::min(min_eta, g.emission_rate);
  }
  double line_cap = 0, load = 0;
  for (const Line& l : c.power.lines) line_cap = std::max(line_cap, l.capacity);
  for (const Bus& b : c.power.buses) {
    for (double d : b.demand) load = std::max(load, d);
  }
  double supply_span = 0, supply_cost = 0, pipe_cap = 0, gas_load = 0;
  for (const GasSupplier& s : c.gas.suppliers) {
    supply_span = std::max(supply_span, s.f_max - s.f_min);
    supply_cost = std::max(supply_cost, s.cost);
  }
  for (const Pipeline& p : c.gas.pipelines) pipe_cap = std::max(pipe_cap, p.capacity);
  for (const GasNode& n : c.gas.nodes) {
    for (double d : n.demand) gas_load = std::max(gas_load, d);
  }
  double offer = 0, offer_cost = 0, demand = 0;
  for (std::size_t r = 0; r < c.carbon.offers.size(); ++r) {
    offer = std::max(offer, c.offer_amount(r));
    offer_cost = std::max(offer_cost, c.carbon.offers[r].cost);
  }
  for (std::size_t o = 0; o < c.carbon.demands.size(); ++o) {
    demand = std::max(demand, c.demand_amount(o));
  }

  // Multiplier scales: an LMP never exceeds lost-load value plus the
  // dearest full marginal cost; gas and carbon likewise.
  const double se = pen.lost_load + gen_cost;
  const double sg = pen.lost_gas + supply_cost;
  const double sc = 2 * pen.unmet_carbon + offer_cost;
  const double buses = static_cast<double>(c.power.buses.size());
  const double nodes = static_cast<double>(c.gas.nodes.size());
  const double hours = static_cast<double>(c.time.horizon());

  std::map<std::string, PairBounds> known{
      {"rho1", {positive(span), se}},
      {"rho2", {positive(ramp), hours * se}},
      {"rho3", {positive(2 * line_cap), buses * se}},
      {"rho5", {positive(load), se}},
      {"phi1", {positive(supply_span), sg}},
      {"phi2", {positive(2 * pipe_cap), nodes * sg}},
      {"phi3", {positive(gas_load), sg}},
      {"nu1", {positive(demand), sc}},
      {"nu2", {positive(offer), sc}},
  };
  if (sys.mode == MarketMode::kCapAndTrade) {
    const double budget = cap_and_trade_budget(c);
    known["cap"] = {positive(std::abs(budget)), se / (std::isinf(min_eta) ? 1.0 : min_eta)};
  }

  BigMConfig cfg;
  cfg.eps_comp = c.solver.eps_comp;
  const double scale = c.solver.big_m_scale;
  for (const ComplementarityPair& p : sys.pairs) {
    if (cfg.family.count(p.family)) continue;
    const std::string base = p.family.substr(0, p.family.find('_'));
    auto it = known.find(base);
    if (it == known.end()) {
      throw ModelError("milp-reformulation",
                       fmt::format("unbounded symbol {}: no big-M estimate for family {}",
                                   sys.variables[p.dual].name.str(), p.family));
    }
    cfg.family[p.family] = {it->second.slack * scale, it->second.dual * scale, scale >= 1.0};
  }
  return cfg;
}

LinearizedPair linearize_pair(const EquilibriumProblem::Pair& pair, PairBounds m,
                              int binary_col) {
  if (!(m.slack > 0) || !(m.dual > 0)) {
    throw ModelError("milp-reformulation", "nonpositive big-M for pair " + pair.label);
  }
  LinearizedPair out;
  out.binary = MilpColumn{binary_name(pair.family, pair.label), 0.0, 1.0, 0.0, true};
  std::vector<std::pair<int, double>> a = pair.slack.terms;
  const double k = -pair.slack.constant;
  out.rows.push_back({"ca_" + pair.label, a, Sense::kGreaterEqual, k});
  out.rows.push_back({"cb_" + pair.label, {{pair.dual, 1.0}}, Sense::kGreaterEqual, 0.0});
  a.emplace_back(binary_col, -m.slack);
  out.rows.push_back({"cma_" + pair.label, std::move(a), Sense::kLessEqual, k});
  out.rows.push_back({"cmb_" + pair.label, {{pair.dual, 1.0}, {binary_col, m.dual}},
                      Sense::kLessEqual, m.dual});
  return out;
}

LinearizedPair linearize_pair(const EquilibriumProblem::Pair& pair, double m, int binary_col) {
  return linearize_pair(pair, PairBounds{m, m}, binary_col);
}

bool MilpModel::constant_objective() const {
  return std::all_of(columns.begin(), columns.end(),
                     [](const MilpColumn& c) { return c.objective == 0.0; });
}

double MilpModel::max_row_violation(const std::vector<double>& x) const {
  double worst = 0;
  for (const MilpRow& r : rows) {
    double act = 0;
    for (const auto& [j, a] : r.terms) act += a * x[j];
    double v = 0;
    switch (r.sense) {
      case Sense::kEqual: v = std::abs(act - r.rhs); break;
      case Sense::kLessEqual: v = act - r.rhs; break;
      case Sense::kGreaterEqual: v = r.rhs - act; break;
    }
    worst = std::max(worst, v);
  }
  for (std::size_t j = 0; j < columns.size(); ++j) {
    worst = std::max({worst, columns[j].lower - x[j], x[j] - columns[j].upper});
  }
  return worst;
}

namespace {

std::string row_name(const std::string& label) {
  if (label.rfind("row ", 0) == 0) return "r_" + label.substr(4);
  if (label.rfind("stationarity ", 0) == 0) return "st_" + label.substr(13);
  return label;
}

}  // namespace

MilpModel assemble_milp(const EquilibriumProblem& p, const BigMConfig& cfg) {
  if (p.equalities.empty() && p.pairs.empty()) {
    throw ModelError("milp-reformulation", "no constraints");
  }
  MilpModel m;
  m.eps_comp = cfg.eps_comp;
  for (const SystemVariable& v : p.variables) m.columns.push_back({v.name, -kInf, kInf, 0, false});
  for (const auto& [j, c] : p.objective.terms) m.columns[j].objective += c;
  m.objective_constant = p.objective.constant;
  m.num_continuous = static_cast<int>(p.variables.size());
  for (const LabeledExpr& e : p.equalities) {
    m.rows.push_back({row_name(e.label), e.expr.terms, Sense::kEqual, -e.expr.constant});
  }
  for (const EquilibriumProblem::Pair& pair : p.pairs) {
    const PairBounds bounds = cfg.at(pair.family);
    const int col = static_cast<int>(m.columns.size());
    LinearizedPair lin = linearize_pair(pair, bounds, col);
    m.columns.push_back(std::move(lin.binary));
    for (MilpRow& r : lin.rows) m.rows.push_back(std::move(r));
    m.pairs.push_back({pair.label, pair.family, pair.slack, pair.dual, col, bounds});
  }
  return m;
}

std::vector<double> complete_start(const MilpModel& m, std::vector<double> values, double eps) {
  values.resize(m.columns.size(), 0.0);
  for (const MilpModel::PairRecord& p : m.pairs) {
    values[p.binary] = p.slack.eval(values) > eps ? 1.0 : 0.0;
  }
  return values;
}

std::vector<double> planner_point(const MarketCase& c, const EquilibriumSystem& sys,
                                  LpStatus* status) {
  const bool fixed_gas = sys.mode == MarketMode::kCapAndTrade && !c.solver.cap_couples_gas;
  const LinearProgram lp =
      build_integrated_lp(c, sys.mode, fixed_gas ? standalone_gas_prices(c) : SymbolValues{});
  const LpResult r = solve_lp(lp);
  if (status) *status = r.status;
  if (r.status != LpStatus::kOptimal) return {};
  std::vector<double> out(sys.variables.size(), 0.0);
  for (std::size_t i = 0; i < sys.variables.size(); ++i) {
    const SystemVariable& v = sys.variables[i];
    if (v.role == VarRole::kPrimal) {
      if (lp.has_variable(v.name)) out[i] = r.x[lp.var_id(v.name)];
    } else if (lp.has_row(v.name)) {
      const RowId row = lp.row_id(v.name);
      const double y = r.row_dual[row];
      out[i] = lp.row(row).sense == Sense::kLessEqual ? -y : y;
    }
  }
  return out;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kTimeout: return "timeout";
    case SolveStatus::kError: return "error";
  }
  return "?";
}

std::unique_ptr<SolverAdapter> make_bnb_adapter();
std::unique_ptr<SolverAdapter> make_external_adapter(const std::string& command);

std::unique_ptr<SolverAdapter> make_adapter(const std::string& spec) {
  std::string s = spec;
  if (s.empty()) {
    const char* env = std::getenv("TRIMARKET_SOLVER");
    s = env && *env ? env : "bnb";
  }
  if (s == "bnb") return make_bnb_adapter();
  if (s.rfind("external:", 0) == 0 && s.size() > 9) return make_external_adapter(s.substr(9));
  throw ModelError("milp-reformulation", "unknown solver adapter '" + s + "'");
}

SolveResult solve(const MilpModel& m, SolverAdapter& adapter, const SolveLimits& limits) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult r;
  try {
    r = adapter.submit(m, limits);
  } catch (const std::exception& e) {
    r = SolveResult{};
    r.status = SolveStatus::kError;
    r.message = e.what();
  }
  r.adapter = adapter.name();
  r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!r.has_solution()) {
    r.x.clear();
    return r;
  }
  if (r.x.size() != m.columns.size()) {
    r.status = SolveStatus::kError;
    r.message = "assignment has the wrong length";
    r.x.clear();
    return r;
  }
  double frac = 0;
  for (std::size_t j = 0; j < m.columns.size(); ++j) {
    if (!m.columns[j].integer) continue;
    frac = std::max(frac, std::abs(r.x[j] - std::round(r.x[j])));
    r.x[j] = std::round(r.x[j]);
  }
  // A binary at 1 pins its multiplier between 0 and the solver's
  // tolerance; report the exact zero the model implies.
  for (const MilpModel::PairRecord& p : m.pairs) {
    if (r.x[p.binary] == 1.0) r.x[p.dual] = 0.0;
  }
  const double viol = m.max_row_violation(r.x);
  if (viol > 10 * limits.feasibility_tol || frac > limits.integrality_tol) {
    r.status = SolveStatus::kError;
    r.message = fmt::format("assignment violates the model (row {:.3g}, integrality {:.3g})",
                            viol, frac);
    r.x.clear();
    return r;
  }
  r.objective = m.objective_constant;
  for (std::size_t j = 0; j < m.columns.size(); ++j) r.objective += m.columns[j].objective * r.x[j];
  return r;
}

}  // namespace trimarket
