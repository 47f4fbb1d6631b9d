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


// End-to-end pipeline (parse, build, KKT, MILP, solve, verify) and the
// study sweeps built on it.

#ifndef TRIMARKET_SCENARIO_HPP_
#define TRIMARKET_SCENARIO_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trimarket/milp.hpp"
#include "trimarket/system_model.hpp"
#include "trimarket/verify.hpp"

namespace trimarket {

struct RunOptions {
  MarketMode mode = MarketMode::kProposed;
  /// Adapter spec; empty uses the case's solver setting.
  std::string solver;
  std::optional<double> big_m_scale;
  /// Relative tolerance of the fixed-point check.
  double tol = 1e-4;
  /// Sweep points solved at once; 0 uses the hardware concurrency.
  int workers = 0;
};

struct StudyRow {
  std::string label;
  double value = 0.0;  // sweep coordinate
  /// Solver status, or "infeasible" when the primal rows admit no point.
  std::string status;
  bool feasible = false;
  bool verified = false;
  /// Load-weighted over every bus and hour: sum P_D * lambda / sum P_D.
  double avg_electricity_price = 0.0;
  /// Weighted by gas consumption (node demand plus burn) over nodes and hours.
  double avg_gas_price = 0.0;
  /// Mean over hours.
  double avg_carbon_price = 0.0;
  double total_emission = 0.0;
  double avg_hourly_emission = 0.0;
  /// MWh per dispatchable unit, in case order.
  std::vector<std::pair<std::string, double>> generator_energy;
  long nodes = 0;
  double solve_seconds = 0.0;
  bool used_start = false;
  std::string note;
};

struct RunOutcome {
  StudyRow row;
  SolveResult result;
  std::optional<EquilibriumSolution> solution;
  std::optional<FixedPointReport> fixed_point;
  double fixed_point_seconds = 0.0;
  std::optional<KktResidualReport> residuals;
  std::optional<ConservationReport> conservation;
  /// Verification report as JSON; empty without a solution.
  std::string report;
};

/// Runs the full pipeline on an in-memory case. Invalid cases raise
/// ModelError; infeasibility and failed verification are reported in the
/// row, not thrown.
RunOutcome run_case(const MarketCase& c, const RunOptions& opt, const std::string& label = "");

/// Loads `path` then runs it.
RunOutcome run_single(const std::string& path, const RunOptions& opt);

/// Multiplies every bus load by (1 + g / 100) for each growth percentage.
std::vector<RunOutcome> sweep_demand(const MarketCase& base, const std::vector<double>& growth,
                                     const RunOptions& opt);

struct Retrofit {
  std::string generator;
  double cost = 0.0;  // C_G, or C_O for gas-fired units
  double emission_rate = 0.0;
};

struct RetrofitStrategy {
  std::string label;
  std::vector<Retrofit> units;
};

/// Baseline plus every nonempty subset of G1..G3 at emission 0.1 t/MWh,
/// with G1 at cost 15 and G2, G3 at non-fuel cost 7.
std::vector<RetrofitStrategy> default_retrofit_strategies();

/// Parses "G1:15:0.1+G2:7:0.1"; "none" or "" is the baseline.
RetrofitStrategy parse_retrofit_strategy(const std::string& text);

/// One row per strategy, in the order given. Unknown generators raise
/// LookupError before anything runs.
std::vector<RunOutcome> study_retrofit(const MarketCase& base,
                                       const std::vector<RetrofitStrategy>& strategies,
                                       const RunOptions& opt);

/// One row per clearing scalar. A scalar that does not divide the horizon
/// raises ModelError before anything runs.
std::vector<RunOutcome> study_clearing_time(const MarketCase& base, const std::vector<int>& k,
                                            const RunOptions& opt);

/// Proposed mode scales the offer ladder so its per-hour total equals each
/// value; cap-and-trade sets the cap directly. Values must be positive.
std::vector<RunOutcome> study_cap_sweep(const MarketCase& base, const std::vector<double>& caps,
                                        const RunOptions& opt);

enum class TableFormat { kCsv, kJson };

/// Fixed column order; numbers use up to 10 significant digits. CSV omits
/// wall time so identical inputs give identical bytes; JSON carries it.
std::string format_rows(const std::vector<RunOutcome>& rows, TableFormat f);

}  // namespace trimarket

#endif  // TRIMARKET_SCENARIO_HPP_
