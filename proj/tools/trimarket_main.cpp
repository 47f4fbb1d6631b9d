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


// trimarket command line: single runs and study sweeps.
//
// Exit codes: 0 ok, 1 usage or input error, 2 no equilibrium found for a
// single run, 3 verification failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "trimarket/scenario.hpp"

namespace {

using namespace trimarket;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kInfeasible = 2;
constexpr int kUnverified = 3;

struct Common {
  std::string case_path;
  std::string mode = "proposed";
  std::string solver;
  double big_m_scale = 0.0;
  double tol = 1e-4;
  std::string out;
  std::string format = "csv";
  int workers = 0;

  RunOptions options() const {
    RunOptions o;
    o.mode = mode == "cap-and-trade" ? MarketMode::kCapAndTrade : MarketMode::kProposed;
    o.solver = solver;
    if (big_m_scale > 0) o.big_m_scale = big_m_scale;
    o.tol = tol;
    o.workers = workers;
    return o;
  }
  TableFormat table() const { return format == "json" ? TableFormat::kJson : TableFormat::kCsv; }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("case", c.case_path, "Case file (JSON)")->required();
  cmd->add_option("--mode", c.mode, "Carbon market model")
      ->check(CLI::IsMember({"proposed", "cap-and-trade"}));
  cmd->add_option("--solver", c.solver, "Adapter: bnb or external:<command>");
  cmd->add_option("--big-m-scale", c.big_m_scale, "Multiplier on every big-M estimate")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol", c.tol, "Relative tolerance of the fixed-point check")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output file (default stdout)");
  cmd->add_option("--format", c.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--workers", c.workers, "Sweep points solved at once (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw ParseError(c.out, "cannot open output file");
  f << text;
}

int sweep_exit(const std::vector<RunOutcome>& rows) {
  for (const RunOutcome& r : rows) {
    if (r.row.feasible && !r.row.verified) return kUnverified;
  }
  return kOk;
}

void export_model_file(const std::string& path, const MarketCase& c, const RunOptions& o) {
  const EquilibriumSystem sys = build_equilibrium_system(c, o.mode);
  MarketCase scaled = c;
  if (o.big_m_scale) scaled.solver.big_m_scale = *o.big_m_scale;
  const MilpModel m = assemble_milp(assemble_equilibrium_problem(sys, c.solver.objective),
                                    estimate_big_m(sys, scaled));
  const bool lp = path.size() > 3 && path.substr(path.size() - 3) == ".lp";
  const ExportedModel e = export_model(m, lp ? ExportFormat::kLp : ExportFormat::kFixedMps);
  std::ofstream(path, std::ios::binary) << e.text;
  if (!e.name_map.empty()) std::ofstream(path + ".names", std::ios::binary) << e.name_map;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint electricity, natural-gas and carbon market equilibrium"};
  app.require_subcommand(1);

  Common run_opts, demand_opts, retrofit_opts, clearing_opts, cap_opts;
  std::string report_path, export_path;
  auto* run = app.add_subcommand("run", "Solve one case and verify it");
  add_common(run, run_opts);
  run->add_option("--report", report_path, "Write the verification report (JSON) here");
  run->add_option("--export-model", export_path,
                  "Write the MILP as fixed MPS (or LP format for a .lp path)");

  std::vector<double> growth{0, 5, 10, 15, 20, 25, 30};
  auto* demand = app.add_subcommand("sweep-demand", "Scale every bus load by each growth value");
  add_common(demand, demand_opts);
  demand->add_option("--values", growth, "Growth percentages")->delimiter(',');

  std::vector<std::string> strategies;
  auto* retrofit = app.add_subcommand("retrofit", "Compare retrofitting strategies");
  add_common(retrofit, retrofit_opts);
  retrofit->add_option("--strategy", strategies,
                       "id:cost:eta[+id:cost:eta...] or none; repeatable (default: all "
                       "subsets of G1..G3)");

  std::vector<int> scalars{1, 3, 12, 24};
  auto* clearing = app.add_subcommand("clearing-time", "Vary the carbon clearing scalar");
  add_common(clearing, clearing_opts);
  clearing->add_option("--values", scalars, "Clearing scalars (hours per period)")
      ->delimiter(',');

  std::vector<double> caps;
  auto* cap = app.add_subcommand("cap-sweep", "Vary the allowance total or the cap");
  add_common(cap, cap_opts);
  cap->add_option("--values", caps, "Totals (proposed) or caps (cap-and-trade)")
      ->delimiter(',')
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      const MarketCase c = load_case(run_opts.case_path);
      const RunOptions o = run_opts.options();
      if (!export_path.empty()) export_model_file(export_path, c, o);
      const RunOutcome r = run_case(c, o);
      emit(run_opts, format_rows({r}, run_opts.table()));
      if (!report_path.empty()) std::ofstream(report_path, std::ios::binary) << r.report << "\n";
      if (!r.row.feasible) {
        std::cerr << fmt::format("no equilibrium: {}{}\n", r.row.status,
                                 r.row.note.empty() ? "" : " (" + r.row.note + ")");
        return kInfeasible;
      }
      if (!r.row.verified) {
        std::cerr << r.row.note << "\n";
        return kUnverified;
      }
      return kOk;
    }
    std::vector<RunOutcome> rows;
    const Common* common = nullptr;
    if (*demand) {
      common = &demand_opts;
      rows = sweep_demand(load_case(common->case_path), growth, common->options());
    } else if (*retrofit) {
      common = &retrofit_opts;
      std::vector<RetrofitStrategy> list;
      if (strategies.empty()) {
        list = default_retrofit_strategies();
      } else {
        for (const std::string& s : strategies) list.push_back(parse_retrofit_strategy(s));
      }
      rows = study_retrofit(load_case(common->case_path), list, common->options());
    } else if (*clearing) {
      common = &clearing_opts;
      rows = study_clearing_time(load_case(common->case_path), scalars, common->options());
    } else {
      common = &cap_opts;
      rows = study_cap_sweep(load_case(common->case_path), caps, common->options());
    }
    emit(*common, format_rows(rows, common->table()));
    return sweep_exit(rows);
  } catch (const trimarket::Error& e) {
    std::cerr << fmt::format("error [{}]: {}\n", e.module(), e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
