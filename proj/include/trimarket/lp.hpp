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

// Canonical sparse linear program with dual-tagged constraint rows.
//
// Every row carries a structured dual tag (e.g. lambda[3,12]) so that the
// KKT derivation can name one multiplier per modeled constraint. Variables
// carry structured names as well; both are unique within a program.

#ifndef TRIMARKET_LP_HPP_
#define TRIMARKET_LP_HPP_

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <type_traits>
#include <string>
#include <unordered_map>
#include <vector>

#include "trimarket/error.hpp"

namespace trimarket {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Structured symbol name: a family plus an ordered list of index keys.
/// Renders as `family[k1,k2,...]`, or just `family` without keys.
struct Symbol {
  std::string family;
  std::vector<std::string> keys;

  Symbol() = default;
  Symbol(std::string fam, std::vector<std::string> k = {})
      : family(std::move(fam)), keys(std::move(k)) {}

  std::string str() const;
  bool operator==(const Symbol&) const = default;
};

/// Orders by family, then key-by-key with numeric keys compared numerically.
bool natural_less(const Symbol& a, const Symbol& b);

/// Helper for building keys from mixed ints and strings.
template <typename... Ts>
Symbol sym(std::string family, const Ts&... keys) {
  std::vector<std::string> k;
  (k.push_back([](const auto& v) {
     if constexpr (std::is_convertible_v<decltype(v), std::string>) {
       return std::string(v);
     } else {
       return std::to_string(v);
     }
   }(keys)),
   ...);
  return Symbol(std::move(family), std::move(k));
}

enum class Sense { kLessEqual, kEqual, kGreaterEqual };

const char* to_string(Sense s);

using VarId = int;
using RowId = int;

struct Term {
  VarId var = 0;
  double coeff = 0.0;
};

struct Variable {
  Symbol name;
  double lower = -kInf;
  double upper = kInf;
  double objective = 0.0;
};

struct ConstraintRow {
  std::vector<Term> terms;
  Sense sense = Sense::kEqual;
  double rhs = 0.0;
  Symbol dual_tag;
};

/// Minimization LP: min c'x + constant subject to tagged rows and bounds.
class LinearProgram {
 public:
  explicit LinearProgram(std::string market = {}) : market_(std::move(market)) {}

  const std::string& market() const { return market_; }

  VarId add_variable(const Symbol& name, double lower, double upper,
                     double objective);
  RowId add_constraint(ConstraintRow row);

  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_rows() const { return rows_.size(); }

  const Variable& variable(VarId id) const { return vars_.at(id); }
  Variable& mutable_variable(VarId id) { return vars_.at(id); }
  const ConstraintRow& row(RowId id) const { return rows_.at(id); }
  ConstraintRow& mutable_row(RowId id) { return rows_.at(id); }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<ConstraintRow>& rows() const { return rows_; }

  /// Lookups throw LookupError for names never created.
  VarId var_id(const Symbol& name) const;
  RowId row_id(const Symbol& dual_tag) const;
  bool has_variable(const Symbol& name) const;
  bool has_row(const Symbol& dual_tag) const;

  double objective_constant() const { return objective_constant_; }
  void set_objective_constant(double c) { objective_constant_ = c; }

  double row_activity(RowId id, std::span<const double> x) const;
  double objective_value(std::span<const double> x) const;

  /// Human-readable dump, one row per line.
  std::string debug_string() const;

 private:
  std::string market_;
  std::vector<Variable> vars_;
  std::vector<ConstraintRow> rows_;
  std::unordered_map<std::string, VarId> var_index_;
  std::unordered_map<std::string, RowId> row_index_;
  double objective_constant_ = 0.0;
};

struct ResidualReport {
  /// Signed violation per row; zero when the row is satisfied. Equality
  /// rows report activity - rhs, inequality rows the amount by which the
  /// bound is exceeded.
  std::vector<double> row_residual;
  double objective = 0.0;
  double max_violation = 0.0;
};

ResidualReport primal_residuals(const LinearProgram& lp,
                                std::span<const double> assignment);

/// Name-keyed overload; throws LookupError naming the first variable that
/// has no entry.
ResidualReport primal_residuals(
    const LinearProgram& lp, const std::map<std::string, double>& assignment);

}  // namespace trimarket

#endif  // TRIMARKET_LP_HPP_
