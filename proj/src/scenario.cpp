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


#include "trimarket/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "trimarket/market_models.hpp"

namespace trimarket {

namespace {

void fill_row(StudyRow& row, const MarketCase& c, const EquilibriumSolution& sol) {
  const int T = c.time.horizon();
  double load = 0.0, weighted = 0.0;
  for (const Bus& b : c.power.buses) {
    for (int t = 1; t <= T; ++t) {
      const double d = b.demand.at(t - 1);
      load += d;
      weighted += d * sol.value(sym("lambda", b.id, t));
    }
  }
  row.avg_electricity_price = load > 0 ? weighted / load : 0.0;

  double gas = 0.0, gas_weighted = 0.0, plain = 0.0;
  int entries = 0;
  for (const GasNode& n : c.gas.nodes) {
    for (int t = 1; t <= T; ++t) {
      double use = n.demand.at(t - 1);
      for (const GeneratorSpec& g : c.generators) {
        if (g.fuel == FuelKind::kGasFired && g.gas_node == n.id) {
          use += g.heat_rate * sol.dispatch.at(sym("P_G", g.id, t).str());
        }
      }
      const double mu = sol.gas_price.at(sym("mu", n.id, t).str());
      gas += use;
      gas_weighted += use * mu;
      plain += mu;
      ++entries;
    }
  }
  // With no consumption at all the plain mean is the only sensible average.
  row.avg_gas_price = gas > 0 ? gas_weighted / gas : (entries ? plain / entries : 0.0);

  double carbon = 0.0;
  for (int t = 1; t <= T; ++t) carbon += sol.carbon_price.at(sym("p_co2", t).str());
  row.avg_carbon_price = carbon / T;
  row.total_emission = sol.total_emission();
  row.avg_hourly_emission = row.total_emission / T;
  for (const GeneratorSpec& g : c.generators) {
    if (!g.dispatchable()) continue;
    double e = 0.0;
    for (int t = 1; t <= T; ++t) e += sol.dispatch.at(sym("P_G", g.id, t).str());
    row.generator_energy.emplace_back(g.id, e);
  }
}

template <typename Job>
std::vector<RunOutcome> run_all(std::size_t n, int workers, Job job) {
  std::vector<RunOutcome> out(n);
  int w = workers > 0 ? workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  w = static_cast<int>(std::min<std::size_t>(w, n));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n);
  for (int k = 0; k < w; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          out[i] = job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  // Surface the first failure by sweep index, independent of timing.
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::string percent(double g) { return fmt::format("demand{:+g}%", g); }

}  // namespace

RunOutcome run_case(const MarketCase& input, const RunOptions& opt, const std::string& label) {
  MarketCase c = input;
  if (opt.big_m_scale) c.solver.big_m_scale = *opt.big_m_scale;
  const ValidationReport v = validate(c);
  if (!v.ok()) throw ModelError("system-model", "invalid case: " + v.str());

  RunOutcome out;
  StudyRow& row = out.row;
  row.label = label.empty() ? c.name : label;

  const EquilibriumSystem sys = build_equilibrium_system(c, opt.mode);
  const BigMConfig big_m = estimate_big_m(sys, c);
  MilpModel model =
      assemble_milp(assemble_equilibrium_problem(sys, c.solver.objective), big_m);
  if (c.solver.warm_start) {
    LpStatus planner = LpStatus::kNumericalFailure;
    std::vector<double> start = planner_point(c, sys, &planner);
    if (planner == LpStatus::kInfeasible) {
      row.status = "infeasible";
      row.note = "primal rows are infeasible";
      out.result.status = SolveStatus::kInfeasible;
      return out;
    }
    if (!start.empty()) model.start = complete_start(model, std::move(start));
  }
  auto adapter = make_adapter(opt.solver.empty() ? c.solver.adapter : opt.solver);
  SolveLimits limits;
  limits.time_limit_s = c.solver.time_limit;
  out.result = solve(model, *adapter, limits);
  row.status = to_string(out.result.status);
  row.nodes = out.result.nodes;
  row.solve_seconds = out.result.wall_s;
  row.used_start = out.result.used_start;
  if (!out.result.has_solution()) {
    row.note = out.result.message;
    return out;
  }
  row.feasible = true;

  out.solution = extract_solution(c, sys, out.result.x);
  fill_row(row, c, *out.solution);
  ResidualThresholds th;
  th.stationarity = th.complementarity = th.primal = c.solver.tolerance;
  const auto fp_start = std::chrono::steady_clock::now();
  out.fixed_point = fixed_point_check(*out.solution, c, opt.tol);
  out.fixed_point_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - fp_start).count();
  out.residuals = residual_report(sys, out.result.x, big_m, th);
  out.conservation = conservation_report(*out.solution, c);
  row.verified = out.fixed_point->pass && out.residuals->pass &&
                 out.conservation->max() <= c.solver.tolerance;
  if (!row.verified) {
    std::vector<std::string> failed;
    if (!out.fixed_point->pass) failed.push_back("fixed-point");
    if (!out.residuals->pass) failed.push_back("kkt-residuals");
    if (out.conservation->max() > c.solver.tolerance) failed.push_back("conservation");
    row.note = "verification failed:";
    for (const std::string& f : failed) row.note += " " + f;
  }
  out.report = verification_json(*out.fixed_point, *out.residuals, *out.conservation);
  return out;
}

RunOutcome run_single(const std::string& path, const RunOptions& opt) {
  return run_case(load_case(path), opt);
}

std::vector<RunOutcome> sweep_demand(const MarketCase& base, const std::vector<double>& growth,
                                     const RunOptions& opt) {
  for (double g : growth) {
    if (!std::isfinite(g) || g < -100.0) {
      throw ModelError("scenario-cli", fmt::format("invalid demand growth {}", g));
    }
  }
  return run_all(growth.size(), opt.workers, [&](std::size_t i) {
    MarketCase c = base;
    for (Bus& b : c.power.buses) {
      for (double& d : b.demand) d *= 1.0 + growth[i] / 100.0;
    }
    RunOutcome r = run_case(c, opt, percent(growth[i]));
    r.row.value = growth[i];
    return r;
  });
}

std::vector<RetrofitStrategy> default_retrofit_strategies() {
  const Retrofit g1{"G1", 15.0, 0.1}, g2{"G2", 7.0, 0.1}, g3{"G3", 7.0, 0.1};
  return {{"none", {}},          {"G1", {g1}},         {"G2", {g2}},
          {"G3", {g3}},          {"G1+G2", {g1, g2}},  {"G2+G3", {g2, g3}},
          {"G1+G3", {g1, g3}},   {"G1+G2+G3", {g1, g2, g3}}};
}

RetrofitStrategy parse_retrofit_strategy(const std::string& text) {
  RetrofitStrategy s;
  if (text.empty() || text == "none") {
    s.label = "none";
    return s;
  }
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, '+');) {
    Retrofit r;
    std::istringstream parts(item);
    std::string cost, eta;
    if (!std::getline(parts, r.generator, ':') || !std::getline(parts, cost, ':') ||
        !std::getline(parts, eta) || r.generator.empty()) {
      throw ModelError("scenario-cli", "retrofit entry '" + item + "' is not id:cost:eta");
    }
    try {
      r.cost = std::stod(cost);
      r.emission_rate = std::stod(eta);
    } catch (const std::logic_error&) {
      throw ModelError("scenario-cli", "retrofit entry '" + item + "' has a bad number");
    }
    if (!s.label.empty()) s.label += "+";
    s.label += r.generator;
    s.units.push_back(std::move(r));
  }
  return s;
}

std::vector<RunOutcome> study_retrofit(const MarketCase& base,
                                       const std::vector<RetrofitStrategy>& strategies,
                                       const RunOptions& opt) {
  std::vector<MarketCase> cases;
  for (const RetrofitStrategy& s : strategies) {
    MarketCase c = base;
    for (const Retrofit& r : s.units) {
      GeneratorSpec& g = c.mutable_generator(r.generator);
      g.cost = r.cost;
      g.emission_rate = r.emission_rate;
    }
    cases.push_back(std::move(c));
  }
  return run_all(cases.size(), opt.workers, [&](std::size_t i) {
    RunOutcome r = run_case(cases[i], opt, strategies[i].label);
    r.row.value = static_cast<double>(i);
    return r;
  });
}

std::vector<RunOutcome> study_clearing_time(const MarketCase& base, const std::vector<int>& k,
                                            const RunOptions& opt) {
  for (int s : k) {
    if (s <= 0 || base.time.horizon() % s != 0) {
      throw ModelError("scenario-cli", fmt::format("clearing scalar {} does not divide the {}-hour horizon",
                                                   s, base.time.horizon()));
    }
  }
  return run_all(k.size(), opt.workers, [&](std::size_t i) {
    MarketCase c = base;
    c.time = TimeStructure(base.time.horizon(), k[i]);
    RunOutcome r = run_case(c, opt, fmt::format("k={}", k[i]));
    r.row.value = k[i];
    return r;
  });
}

std::vector<RunOutcome> study_cap_sweep(const MarketCase& base, const std::vector<double>& caps,
                                        const RunOptions& opt) {
  for (double v : caps) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ModelError("scenario-cli", fmt::format("cap value {} is not positive", v));
    }
  }
  double ladder = 0.0;
  for (const CarbonOffer& o : base.carbon.offers) ladder += o.amount;
  if (opt.mode == MarketMode::kProposed && !(ladder > 0.0)) {
    throw ModelError("scenario-cli", "the offer ladder is empty");
  }
  return run_all(caps.size(), opt.workers, [&](std::size_t i) {
    MarketCase c = base;
    if (opt.mode == MarketMode::kProposed) {
      for (CarbonOffer& o : c.carbon.offers) o.amount *= caps[i] / ladder;
    } else {
      c.carbon.cap = caps[i];
    }
    RunOutcome r = run_case(c, opt, fmt::format("cap={:g}", caps[i]));
    r.row.value = caps[i];
    return r;
  });
}

namespace {

std::string num(double v) { return fmt::format("{:.10g}", v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string format_rows(const std::vector<RunOutcome>& rows, TableFormat f) {
  std::vector<std::string> units;
  for (const RunOutcome& r : rows) {
    for (const auto& [id, e] : r.row.generator_energy) {
      if (std::find(units.begin(), units.end(), id) == units.end()) units.push_back(id);
    }
  }
  auto energy = [](const StudyRow& row, const std::string& id) -> std::optional<double> {
    for (const auto& [g, e] : row.generator_energy) {
      if (g == id) return e;
    }
    return std::nullopt;
  };
  if (f == TableFormat::kJson) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const RunOutcome& r : rows) {
      const StudyRow& s = r.row;
      nlohmann::ordered_json j{{"label", s.label},
                               {"value", s.value},
                               {"status", s.status},
                               {"feasible", s.feasible},
                               {"verified", s.verified},
                               {"avg_electricity_price", s.avg_electricity_price},
                               {"avg_gas_price", s.avg_gas_price},
                               {"avg_carbon_price", s.avg_carbon_price},
                               {"total_emission", s.total_emission},
                               {"avg_hourly_emission", s.avg_hourly_emission}};
      nlohmann::ordered_json e = nlohmann::ordered_json::object();
      for (const auto& [id, v] : s.generator_energy) e[id] = v;
      j["generator_energy"] = e;
      j["solver"] = {{"nodes", s.nodes}, {"seconds", s.solve_seconds}, {"used_start", s.used_start}};
      j["note"] = s.note;
      j["verification"] = r.report.empty() ? nlohmann::ordered_json(nullptr)
                                           : nlohmann::ordered_json::parse(r.report);
      out.push_back(std::move(j));
    }
    return out.dump(2) + "\n";
  }
  std::string out =
      "label,value,status,feasible,verified,avg_electricity_price,avg_gas_price,"
      "avg_carbon_price,total_emission,avg_hourly_emission";
  for (const std::string& id : units) out += ",energy_" + id;
  // Wall time stays out of the CSV so that tables are reproducible.
  out += ",nodes,note\n";
  for (const RunOutcome& r : rows) {
    const StudyRow& s = r.row;
    out += csv_field(s.label) + "," + num(s.value) + "," + s.status + "," +
           (s.feasible ? "1" : "0") + "," + (s.verified ? "1" : "0");
    if (s.feasible) {
      for (double v : {s.avg_electricity_price, s.avg_gas_price, s.avg_carbon_price,
                       s.total_emission, s.avg_hourly_emission}) {
        out += "," + num(v);
      }
    } else {
      out += ",,,,,";
    }
    for (const std::string& id : units) {
      const auto e = energy(s, id);
      out += "," + (e ? num(*e) : std::string());
    }
    out += "," + std::to_string(s.nodes) + "," + csv_field(s.note) + "\n";
  }
  return out;
}

}  // namespace trimarket
