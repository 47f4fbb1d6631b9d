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

// Bounded-variable revised primal simplex over a column-compressed LP.
//
// Computational form: min c'x  s.t.  row_lower <= A x <= row_upper,
// col_lower <= x <= col_upper. Row activities are carried as logical
// variables r with [A, -I][x; r] = 0, so the all-logical basis is the
// starting point. The basis is factorized with Eigen's SparseLU and
// updated in product form between refactorizations.

#ifndef TRIMARKET_SIMPLEX_HPP_
#define TRIMARKET_SIMPLEX_HPP_

#include <string>
#include <vector>

#include "trimarket/lp.hpp"

namespace trimarket {

struct SparseLp {
  int num_cols = 0;
  int num_rows = 0;
  std::vector<double> cost;
  std::vector<double> col_lower, col_upper;
  std::vector<double> row_lower, row_upper;
  // Column-compressed constraint matrix.
  std::vector<int> col_start{0};
  std::vector<int> row_index;
  std::vector<double> value;
  double objective_constant = 0.0;

  /// Appends a column; `entries` are (row, coefficient) pairs.
  int add_column(double c, double lo, double up,
                 const std::vector<std::pair<int, double>>& entries);
};

/// Converts a tagged program to computational form (rows keep their order).
SparseLp to_sparse(const LinearProgram& lp);

struct LpOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  long max_iterations = 2'000'000;
  double time_limit_s = 1e30;
  bool scale = true;
  int refactor_interval = 80;
};

enum class LpStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kIterationLimit,
  kTimeLimit,
  kNumericalFailure
};

const char* to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::kNumericalFailure;
  double objective = 0.0;
  std::vector<double> x;
  std::vector<double> row_activity;
  /// Sensitivity of the optimal objective to each row's binding bound
  /// (d objective / d rhs). Nonnegative on binding >= rows of a
  /// minimization, nonpositive on binding <= rows.
  std::vector<double> row_dual;
  std::vector<double> reduced_cost;
  long iterations = 0;
};

LpResult solve_sparse_lp(const SparseLp& lp, const LpOptions& opt = {});

LpResult solve_lp(const LinearProgram& lp, const LpOptions& opt = {});

}  // namespace trimarket

#endif  // TRIMARKET_SIMPLEX_HPP_
