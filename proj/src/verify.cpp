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


#include "trimarket/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <json.hpp>

#include "trimarket/simplex.hpp"

namespace trimarket {

double EquilibriumSolution::value(const Symbol& s) const {
  auto it = values.find(s.str());
  if (it == values.end()) throw LookupError("verification-oracles", "no value for " + s.str());
  return it->second;
}

double EquilibriumSolution::total_emission() const {
  return std::accumulate(hourly_emission.begin(), hourly_emission.end(), 0.0);
}

namespace {

bool gas_coupled(const MarketCase& c, MarketMode mode) {
  return mode == MarketMode::kProposed || c.solver.cap_couples_gas;
}

double get(const SymbolValues& v, const std::string& key) {
  auto it = v.find(key);
  if (it == v.end()) throw LookupError("verification-oracles", "no value for " + key);
  return it->second;
}

}  // namespace

EquilibriumSolution extract_solution(const MarketCase& c, const EquilibriumSystem& sys,
                                     const std::vector<double>& x) {
  if (x.size() < sys.variables.size()) {
    throw ModelError("verification-oracles", "assignment shorter than the system");
  }
  EquilibriumSolution s;
  s.mode = sys.mode;
  for (std::size_t i = 0; i < sys.variables.size(); ++i) {
    s.values[sys.variables[i].name.str()] = x[i];
  }
  const int T = c.time.horizon();
  for (const GeneratorSpec& g : c.generators) {
    if (!g.dispatchable()) continue;
    for (int t = 1; t <= T; ++t) {
      const std::string k = sym("P_G", g.id, t).str();
      s.dispatch[k] = get(s.values, k);
    }
  }
  const bool coupled = gas_coupled(c, sys.mode);
  if (coupled) {
    for (const GasNode& n : c.gas.nodes) {
      for (int t = 1; t <= T; ++t) {
        const std::string k = sym("mu", n.id, t).str();
        s.gas_price[k] = get(s.values, k);
      }
    }
  } else {
    s.gas_price = standalone_gas_prices(c);
  }
  for (int t = 1; t <= T; ++t) {
    const double p = sys.mode == MarketMode::kProposed
                         ? get(s.values, sym("p_co2", c.time.period_of(t)).str())
                         : get(s.values, "p_co2");
    s.carbon_price[sym("p_co2", t).str()] = p;
  }
  s.hourly_emission.assign(T + 1, 0.0);
  for (const GeneratorSpec& g : c.generators) {
    if (!g.dispatchable() || g.emission_rate == 0.0) continue;
    for (int t = 1; t <= T; ++t) {
      s.hourly_emission[t] += g.emission_rate * s.dispatch.at(sym("P_G", g.id, t).str());
    }
  }
  s.period_emission = period_emissions(c, s.dispatch);

  s.electricity_objective =
      primal_residuals(build_electricity_lp(c, s.gas_price, s.carbon_price).lp, s.values)
          .objective;
  if (coupled) {
    s.gas_objective = primal_residuals(build_gas_lp(c, s.dispatch).lp, s.values).objective;
  }
  if (sys.mode == MarketMode::kProposed) {
    s.carbon_objective =
        primal_residuals(build_cem_lp(c, s.period_emission).lp, s.values).objective;
  }
  return s;
}

namespace {

MarketCheck check_market(const std::string& market, const LinearProgram& lp,
                         const EquilibriumSolution& sol, double tol) {
  MarketCheck m;
  m.market = market;
  const ResidualReport at_sol = primal_residuals(lp, sol.values);
  m.equilibrium_objective = at_sol.objective;
  m.primal_violation = at_sol.max_violation;

  const LpResult r = solve_lp(lp);
  m.status = to_string(r.status);
  if (r.status != LpStatus::kOptimal) return m;
  m.standalone_objective = r.objective;
  m.relative_gap =
      (m.equilibrium_objective - r.objective) / std::max(1.0, std::abs(r.objective));
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const double v = get(sol.values, lp.variable(static_cast<VarId>(j)).name.str());
    m.max_primal_deviation = std::max(m.max_primal_deviation, std::abs(v - r.x[j]));
  }

  // The solution's own multipliers must certify the market's optimum.
  const EquilibriumSystem kkt = derive_kkt(lp);
  std::vector<double> y(kkt.variables.size(), 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < kkt.variables.size(); ++i) {
    y[i] = get(sol.values, kkt.variables[i].name.str());
    if (kkt.variables[i].nonnegative) worst = std::max(worst, -y[i]);
  }
  double scale = 1.0;
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    scale = std::max(scale, std::abs(lp.variable(static_cast<VarId>(j)).objective));
  }
  for (const StationarityEquation& s : kkt.stationarity) {
    worst = std::max(worst, std::abs(s.residual.eval(y)));
  }
  m.price_residual = worst / scale;
  m.pass = m.primal_violation <= 1e-6 && std::abs(m.relative_gap) <= tol &&
           m.price_residual <= tol;
  return m;
}

}  // namespace

FixedPointReport fixed_point_check(const EquilibriumSolution& sol, const MarketCase& c,
                                   double tol) {
  FixedPointReport rep;
  rep.tol = tol;
  rep.markets.push_back(check_market(
      "electricity", build_electricity_lp(c, sol.gas_price, sol.carbon_price).lp, sol, tol));
  if (gas_coupled(c, sol.mode)) {
    rep.markets.push_back(check_market("gas", build_gas_lp(c, sol.dispatch).lp, sol, tol));
  }
  if (sol.mode == MarketMode::kProposed) {
    rep.markets.push_back(
        check_market("carbon", build_cem_lp(c, sol.period_emission).lp, sol, tol));
  }
  rep.pass = std::all_of(rep.markets.begin(), rep.markets.end(),
                         [](const MarketCheck& m) { return m.pass; });
  return rep;
}

MeritOrderClearing merit_order_cem(double generation_emission,
                                   const std::vector<CarbonOffer>& offers,
                                   const std::vector<CarbonDemand>& demands, double unmet_cost) {
  MeritOrderClearing out;
  out.sold.assign(offers.size(), 0.0);
  out.served.resize(demands.size());
  double total_demand = 0.0;
  for (std::size_t o = 0; o < demands.size(); ++o) {
    out.served[o] = demands[o].amount;
    total_demand += demands[o].amount;
  }
  out.requirement = generation_emission + total_demand;

  struct Step {
    double cost;
    bool curtail;
    std::size_t index;
    double amount;
  };
  std::vector<Step> steps;
  for (std::size_t r = 0; r < offers.size(); ++r) {
    steps.push_back({offers[r].cost, false, r, offers[r].amount});
  }
  // Curtailing demand lowers the requirement at a cost of unmet_cost per ton.
  steps.push_back({unmet_cost, true, 0, total_demand});
  std::stable_sort(steps.begin(), steps.end(), [](const Step& a, const Step& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.curtail < b.curtail;
  });
  if (out.requirement <= 0.0) {
    out.price_high = steps.front().cost;
    return out;
  }
  const double eps = 1e-9 * std::max(1.0, out.requirement);
  double remaining = out.requirement;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const Step& s = steps[k];
    const double take = std::min(s.amount, remaining);
    remaining -= take;
    if (s.curtail) {
      double cut = take;
      for (std::size_t o = demands.size(); o-- > 0 && cut > 0;) {
        const double d = std::min(cut, out.served[o]);
        out.served[o] -= d;
        cut -= d;
      }
    } else {
      out.sold[s.index] = take;
    }
    if (remaining <= eps) {
      out.price = out.price_high = s.cost;
      out.curtailment_marginal = s.curtail;
      if (take >= s.amount - eps && k + 1 < steps.size()) out.price_high = steps[k + 1].cost;
      return out;
    }
  }
  throw ModelError("verification-oracles",
                   fmt::format("carbon requirement {} exceeds every offer by {}",
                               out.requirement, remaining));
}

std::vector<MeritOrderClearing> merit_order_cem(const std::vector<double>& period_emission,
                                                const MarketCase& c) {
  std::vector<CarbonOffer> offers = c.carbon.offers;
  std::vector<CarbonDemand> demands = c.carbon.demands;
  for (std::size_t r = 0; r < offers.size(); ++r) offers[r].amount = c.offer_amount(r);
  for (std::size_t o = 0; o < demands.size(); ++o) demands[o].amount = c.demand_amount(o);
  std::vector<MeritOrderClearing> out(1);
  for (int p = 1; p <= c.time.num_periods(); ++p) {
    out.push_back(merit_order_cem(period_emission.at(p), offers, demands,
                                  c.penalties.unmet_carbon));
  }
  return out;
}

namespace {

// Solves one active-set pattern; empty when no sign-feasible point exists.
class PatternSolver {
 public:
  PatternSolver(const EquilibriumProblem& p, double tol) : p_(p), tol_(tol) {
    n_ = static_cast<int>(p.variables.size());
    const int ne = static_cast<int>(p.equalities.size());
    base_ = Eigen::MatrixXd::Zero(ne + static_cast<int>(p.pairs.size()), n_);
    rhs_ = Eigen::VectorXd::Zero(base_.rows());
    for (int i = 0; i < ne; ++i) {
      for (const auto& [j, a] : p.equalities[i].expr.terms) base_(i, j) += a;
      rhs_(i) = -p.equalities[i].expr.constant;
    }
  }

  std::vector<double> solve(std::uint32_t pattern) const {
    Eigen::MatrixXd a = base_;
    Eigen::VectorXd b = rhs_;
    const int ne = static_cast<int>(p_.equalities.size());
    for (std::size_t k = 0; k < p_.pairs.size(); ++k) {
      const int row = ne + static_cast<int>(k);
      if (pattern >> k & 1u) {
        for (const auto& [j, c] : p_.pairs[k].slack.terms) a(row, j) += c;
        b(row) = -p_.pairs[k].slack.constant;
      } else {
        a(row, p_.pairs[k].dual) = 1.0;
      }
    }
    if (a.rows() == n_) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      Eigen::VectorXd x = lu.solve(b);
      // An inconsistent pattern has no solution at all.
      if ((a * x - b).lpNorm<Eigen::Infinity>() > 1e-7 * (1.0 + b.lpNorm<Eigen::Infinity>())) {
        return {};
      }
      if (lu.rank() == n_) {
        std::vector<double> v(x.data(), x.data() + n_);
        return sign_feasible(v) ? v : std::vector<double>{};
      }
    }
    return solve_lp(a, b);
  }

 private:
  bool sign_feasible(const std::vector<double>& x) const {
    for (const EquilibriumProblem::Pair& pr : p_.pairs) {
      const double scale = 1.0 + std::abs(pr.slack.constant);
      if (pr.slack.eval(x) < -tol_ * scale || x[pr.dual] < -tol_) return false;
    }
    return true;
  }

  // Rank-deficient or non-square patterns: a feasibility LP picks the
  // cheapest point of the pattern's solution set.
  std::vector<double> solve_lp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) const {
    SparseLp lp;
    lp.num_rows = static_cast<int>(a.rows() + 2 * p_.pairs.size());
    for (int i = 0; i < a.rows(); ++i) {
      lp.row_lower.push_back(b(i));
      lp.row_upper.push_back(b(i));
    }
    for (const EquilibriumProblem::Pair& pr : p_.pairs) {
      lp.row_lower.push_back(-pr.slack.constant);
      lp.row_upper.push_back(kInf);
      lp.row_lower.push_back(0.0);
      lp.row_upper.push_back(kInf);
    }
    std::vector<std::vector<std::pair<int, double>>> cols(n_);
    for (int i = 0; i < a.rows(); ++i) {
      for (int j = 0; j < n_; ++j) {
        if (a(i, j) != 0.0) cols[j].emplace_back(i, a(i, j));
      }
    }
    int row = static_cast<int>(a.rows());
    for (const EquilibriumProblem::Pair& pr : p_.pairs) {
      for (const auto& [j, c] : pr.slack.terms) cols[j].emplace_back(row, c);
      cols[pr.dual].emplace_back(row + 1, 1.0);
      row += 2;
    }
    std::vector<double> cost(n_, 0.0);
    for (const auto& [j, c] : p_.objective.terms) cost[j] += c;
    for (int j = 0; j < n_; ++j) lp.add_column(cost[j], -kInf, kInf, cols[j]);
    const LpResult r = solve_sparse_lp(lp);
    if (r.status == LpStatus::kOptimal) return r.x;
    if (r.status == LpStatus::kUnbounded) {
      // Any feasible point will do when the pattern's cost is unbounded.
      std::fill(lp.cost.begin(), lp.cost.end(), 0.0);
      const LpResult f = solve_sparse_lp(lp);
      if (f.status == LpStatus::kOptimal) return f.x;
    }
    return {};
  }

  const EquilibriumProblem& p_;
  double tol_;
  int n_ = 0;
  Eigen::MatrixXd base_;
  Eigen::VectorXd rhs_;
};

}  // namespace

std::vector<BruteForceSolution> brute_force_equilibrium(const EquilibriumSystem& sys,
                                                        const BruteForceOptions& opt) {
  const EquilibriumProblem p = assemble_equilibrium_problem(sys, SecondaryObjective::kTotalCost);
  if (p.pairs.size() > opt.max_pairs || p.pairs.size() > 31) {
    throw ModelError("verification-oracles",
                     fmt::format("{} complementarity pairs exceed the enumeration bound {}",
                                 p.pairs.size(), opt.max_pairs));
  }
  const std::uint32_t patterns = 1u << p.pairs.size();
  const PatternSolver solver(p, opt.feasibility_tol);
  int threads = opt.threads > 0 ? opt.threads
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<std::uint32_t>(threads, patterns));

  // Strided split; merged back by pattern index so the result is deterministic.
  std::vector<std::vector<std::pair<std::uint32_t, std::vector<double>>>> found(threads);
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::uint32_t k = w; k < patterns; k += threads) {
        std::vector<double> x = solver.solve(k);
        if (!x.empty()) found[w].emplace_back(k, std::move(x));
      }
    });
  }
  for (std::thread& t : pool) t.join();
  std::vector<std::pair<std::uint32_t, std::vector<double>>> all;
  for (auto& f : found) {
    for (auto& e : f) all.push_back(std::move(e));
  }
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<int> primal;
  for (std::size_t i = 0; i < p.variables.size(); ++i) {
    if (p.variables[i].role == VarRole::kPrimal) primal.push_back(static_cast<int>(i));
  }
  std::vector<BruteForceSolution> out;
  for (auto& [k, x] : all) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const BruteForceSolution& s) {
      for (int j : primal) {
        if (std::abs(s.x[j] - x[j]) > opt.dedup_tol) return false;
      }
      return true;
    });
    if (seen) continue;
    const double obj = p.objective.eval(x);
    out.push_back({k, std::move(x), obj});
  }
  return out;
}

KktResidualReport residual_report(const EquilibriumSystem& sys, const std::vector<double>& x,
                                  const BigMConfig& big_m, const ResidualThresholds& th) {
  KktResidualReport r;
  auto track = [](double v, const std::string& label, double& worst, std::string& where) {
    if (v > worst) {
      worst = v;
      where = label;
    }
  };
  for (const StationarityEquation& s : sys.stationarity) {
    track(std::abs(s.residual.eval(x)), "stationarity " + sys.variables[s.primal].name.str(),
          r.max_stationarity, r.worst_stationarity);
  }
  for (const PrimalRow& row : sys.rows) {
    const double v = row.expr.eval(x);
    track(row.sense == Sense::kEqual ? std::abs(v) : -v, "row " + row.tag.str(),
          r.max_primal_violation, r.worst_primal);
  }
  for (std::size_t i = 0; i < sys.variables.size(); ++i) {
    if (sys.variables[i].nonnegative) {
      track(-x[i], "sign " + sys.variables[i].name.str(), r.max_primal_violation, r.worst_primal);
    }
  }
  for (const ComplementarityPair& p : sys.pairs) {
    const double a = sys.slack(p).eval(x), b = x[p.dual];
    const std::string& label = sys.variables[p.dual].name.str();
    track(std::max(0.0, a) * std::max(0.0, b), label, r.max_complementarity,
          r.worst_complementarity);
    auto it = big_m.family.find(p.family);
    PairBounds m{big_m.fallback, big_m.fallback};
    if (it != big_m.family.end()) m = it->second;
    const bool at_limit = m.slack_certified && a <= m.slack * (1.0 + 1e-9);
    if (m.slack > 0 && !at_limit && a >= (1.0 - th.audit_margin) * m.slack) {
      r.audit_flags.push_back({label, "slack", a, m.slack});
    }
    if (m.dual > 0 && b >= (1.0 - th.audit_margin) * m.dual) {
      r.audit_flags.push_back({label, "dual", b, m.dual});
    }
  }
  r.pass = r.max_stationarity <= th.stationarity && r.max_complementarity <= th.complementarity &&
           r.max_primal_violation <= th.primal && r.audit_flags.empty();
  return r;
}

double ConservationReport::max() const { return std::max({power, gas, carbon}); }

ConservationReport conservation_report(const EquilibriumSolution& sol, const MarketCase& c) {
  ConservationReport r;
  const int T = c.time.horizon();
  const double base = c.power.base_mva;
  for (int t = 1; t <= T; ++t) {
    for (const Bus& b : c.power.buses) {
      double net = -sol.value(sym("P_LD", b.id, t));
      for (const GeneratorSpec& g : c.generators) {
        if (g.bus != b.id) continue;
        net += g.dispatchable() ? sol.value(sym("P_G", g.id, t)) : g.profile.at(t - 1);
      }
      for (const Line& l : c.power.lines) {
        if (l.from != b.id && l.to != b.id) continue;
        const double flow = base * l.susceptance *
                            (sol.value(sym("theta", l.from, t)) - sol.value(sym("theta", l.to, t)));
        net += l.from == b.id ? -flow : flow;
      }
      r.power = std::max(r.power, std::abs(net));
    }
  }
  if (gas_coupled(c, sol.mode)) {
    for (int t = 1; t <= T; ++t) {
      for (const GasNode& n : c.gas.nodes) {
        double net = -sol.value(sym("F_LD", n.id, t));
        for (const GasSupplier& s : c.gas.suppliers) {
          if (s.node == n.id) net += sol.value(sym("F_S", s.id, t));
        }
        for (const Pipeline& p : c.gas.pipelines) {
          if (p.from == n.id) net -= sol.value(sym("F", p.id, t));
          if (p.to == n.id) net += sol.value(sym("F", p.id, t));
        }
        for (const GeneratorSpec& g : c.generators) {
          if (g.fuel == FuelKind::kGasFired && g.gas_node == n.id) {
            net -= g.heat_rate * sol.value(sym("P_G", g.id, t));
          }
        }
        r.gas = std::max(r.gas, std::abs(net));
      }
    }
  }
  if (sol.mode == MarketMode::kProposed) {
    for (int p = 1; p <= c.time.num_periods(); ++p) {
      double net = -sol.period_emission.at(p);
      for (const CarbonOffer& o : c.carbon.offers) net += sol.value(sym("Q_C", o.id, p));
      for (const CarbonDemand& d : c.carbon.demands) net -= sol.value(sym("Q_LD", d.id, p));
      r.carbon = std::max(r.carbon, std::abs(net));
    }
  } else {
    r.carbon = std::max(0.0, sol.total_emission() - cap_and_trade_budget(c));
  }
  return r;
}

std::string verification_json(const FixedPointReport& fp, const KktResidualReport& kkt,
                              const ConservationReport& cons) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json markets = nlohmann::ordered_json::array();
  for (const MarketCheck& m : fp.markets) {
    markets.push_back({{"market", m.market},
                       {"status", m.status},
                       {"equilibrium_objective", m.equilibrium_objective},
                       {"standalone_objective", m.standalone_objective},
                       {"relative_gap", m.relative_gap},
                       {"primal_violation", m.primal_violation},
                       {"price_residual", m.price_residual},
                       {"max_primal_deviation", m.max_primal_deviation},
                       {"pass", m.pass}});
  }
  j["fixed_point"] = {{"tol", fp.tol}, {"markets", markets}, {"pass", fp.pass}};
  nlohmann::ordered_json flags = nlohmann::ordered_json::array();
  for (const AuditFlag& f : kkt.audit_flags) {
    flags.push_back({{"pair", f.pair}, {"side", f.side}, {"value", f.value}, {"m", f.m}});
  }
  j["kkt"] = {{"max_stationarity", kkt.max_stationarity},
              {"worst_stationarity", kkt.worst_stationarity},
              {"max_complementarity", kkt.max_complementarity},
              {"worst_complementarity", kkt.worst_complementarity},
              {"max_primal_violation", kkt.max_primal_violation},
              {"worst_primal", kkt.worst_primal},
              {"big_m_flags", flags},
              {"pass", kkt.pass}};
  j["conservation"] = {{"power", cons.power},
                       {"gas", cons.gas},
                       {"carbon", cons.carbon},
                       {"pass", cons.max() <= 1e-6}};
  j["pass"] = fp.pass && kkt.pass && cons.max() <= 1e-6;
  return j.dump(2);
}

}  // namespace trimarket
