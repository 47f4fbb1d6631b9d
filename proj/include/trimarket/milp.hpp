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


// Big-M linearization of an equilibrium problem, MPS/LP export, and the
// solver adapter contract.
//
// Each pair 0 <= a ⊥ b >= 0 becomes
//   a >= 0,  b >= 0,  a - M_a z <= 0,  b + M_b z <= M_b,   z binary,
// so z = 1 lets the slack be positive and forces the multiplier to zero.

#ifndef TRIMARKET_MILP_HPP_
#define TRIMARKET_MILP_HPP_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "trimarket/kkt.hpp"
#include "trimarket/lp.hpp"
#include "trimarket/simplex.hpp"
#include "trimarket/system_model.hpp"

namespace trimarket {

/// M for the slack side and the multiplier side of one family.
struct PairBounds {
  double slack = 0.0;
  double dual = 0.0;
  /// The slack side is a proven bound from case data, so a slack reaching
  /// it is at a physical limit rather than held by M.
  bool slack_certified = false;
};

struct BigMConfig {
  std::map<std::string, PairBounds> family;
  /// Used for families without an entry; 0 disables the fallback.
  double fallback = 0.0;
  double eps_comp = 1e-6;

  /// Throws ModelError when the family has no M and there is no fallback.
  PairBounds at(const std::string& family) const;
};

/// Per-family Ms from case data. Slack sides come from physical ranges
/// (capacity spans, ramp limits, demands, ladder amounts); multiplier sides
/// from cost spreads times a network factor. Every value is multiplied by
/// `case.solver.big_m_scale`. Throws ModelError naming the first pair whose
/// family has no estimate.
BigMConfig estimate_big_m(const EquilibriumSystem& sys, const MarketCase& c);

struct MilpColumn {
  Symbol name;
  double lower = -kInf;
  double upper = kInf;
  double objective = 0.0;
  bool integer = false;
};

struct MilpRow {
  std::string name;
  std::vector<std::pair<int, double>> terms;
  Sense sense = Sense::kEqual;
  double rhs = 0.0;
};

struct LinearizedPair {
  std::vector<MilpRow> rows;  // a >= 0, b >= 0, a <= M z, b <= (1 - z) M
  MilpColumn binary;
};

/// `binary_col` is the column index the fresh binary will take.
LinearizedPair linearize_pair(const EquilibriumProblem::Pair& pair, PairBounds m,
                              int binary_col);
LinearizedPair linearize_pair(const EquilibriumProblem::Pair& pair, double m, int binary_col);

struct MilpModel {
  std::vector<MilpColumn> columns;
  std::vector<MilpRow> rows;
  double objective_constant = 0.0;
  /// Columns [0, num_continuous) are the equilibrium system's variables.
  int num_continuous = 0;

  struct PairRecord {
    std::string label;
    std::string family;
    AffineExpr slack;
    int dual = 0;
    int binary = 0;
    PairBounds m;
  };
  std::vector<PairRecord> pairs;
  double eps_comp = 1e-6;
  /// Optional complete assignment handed to the solver first.
  std::vector<double> start;

  std::size_t num_binaries() const { return pairs.size(); }
  bool constant_objective() const;
  /// Largest row violation of an assignment (0 when feasible).
  double max_row_violation(const std::vector<double>& x) const;
};

/// Throws ModelError("no constraints") for an empty problem and for a
/// missing family M.
MilpModel assemble_milp(const EquilibriumProblem& p, const BigMConfig& cfg);

/// Completes system-variable values with binaries chosen from the slacks:
/// z = 1 where the slack exceeds `eps`, else 0.
std::vector<double> complete_start(const MilpModel& m, std::vector<double> values,
                                   double eps = 1e-9);

/// Multiplier values of the planner LP whose optimality conditions match
/// the equilibrium (see build_integrated_lp), mapped onto `sys`. Empty when
/// the planner LP has no optimum; `status` receives the LP status. The
/// planner LP has exactly the equilibrium's primal rows, so an infeasible
/// planner LP proves the equilibrium problem infeasible.
std::vector<double> planner_point(const MarketCase& c, const EquilibriumSystem& sys,
                                  LpStatus* status = nullptr);

enum class ExportFormat { kFixedMps, kFreeMps, kLp };

struct ExportedModel {
  std::string text;
  /// "mangled original" per line when fixed MPS renames; empty otherwise.
  std::string name_map;
};

/// Deterministic text: columns sorted by structured name, rows in model
/// order. Fixed MPS renames every row and column to R0000001/C0000001 when
/// any name exceeds 8 characters and prints numbers in at most 12 columns.
ExportedModel export_model(const MilpModel& m, ExportFormat f);

/// Reads the subset of MPS that export_model writes (fixed or free).
MilpModel read_mps(const std::string& text);

enum class SolveStatus { kOptimal, kFeasible, kInfeasible, kTimeout, kError };

const char* to_string(SolveStatus s);

struct SolveLimits {
  double time_limit_s = 60.0;
  long node_limit = 1'000'000;
  double feasibility_tol = 1e-7;
  double integrality_tol = 1e-6;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kError;
  /// Present iff status is optimal or feasible.
  std::vector<double> x;
  double objective = 0.0;
  long nodes = 0;
  long lp_iterations = 0;
  double wall_s = 0.0;
  bool used_start = false;
  std::string adapter;
  std::string message;

  bool has_solution() const {
    return status == SolveStatus::kOptimal || status == SolveStatus::kFeasible;
  }
};

class SolverAdapter {
 public:
  virtual ~SolverAdapter() = default;
  virtual std::string name() const = 0;
  virtual SolveResult submit(const MilpModel& m, const SolveLimits& limits) = 0;
};

/// "bnb" (built-in branch-and-bound) or "external:<command>", where the
/// command may use {mps} and {sol} placeholders and must write a solution
/// file of "status <word>" followed by "name value" lines. An empty spec
/// reads TRIMARKET_SOLVER and falls back to "bnb".
std::unique_ptr<SolverAdapter> make_adapter(const std::string& spec);

/// Runs the adapter and re-checks its assignment against every row and
/// integrality; a violating assignment turns the result into kError.
/// Integer columns are rounded and multipliers whose binary is 1 are set
/// to exactly zero before the check.
SolveResult solve(const MilpModel& m, SolverAdapter& adapter, const SolveLimits& limits);

}  // namespace trimarket

#endif  // TRIMARKET_MILP_HPP_
