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

#include "trimarket/lp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

namespace trimarket {

std::string Symbol::str() const {
  if (keys.empty()) return family;
  std::string out = family;
  out += '[';
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) out += ',';
    out += keys[i];
  }
  out += ']';
  return out;
}

namespace {

bool parse_long(const std::string& s, long& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

int compare_key(const std::string& a, const std::string& b) {
  long na = 0, nb = 0;
  const bool ia = parse_long(a, na);
  const bool ib = parse_long(b, nb);
  if (ia && ib) return na < nb ? -1 : (na > nb ? 1 : 0);
  if (ia != ib) return ia ? -1 : 1;
  return a.compare(b);
}

}  // namespace

bool natural_less(const Symbol& a, const Symbol& b) {
  if (a.family != b.family) return a.family < b.family;
  const std::size_t n = std::min(a.keys.size(), b.keys.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int c = compare_key(a.keys[i], b.keys[i]);
    if (c != 0) return c < 0;
  }
  return a.keys.size() < b.keys.size();
}

const char* to_string(Sense s) {
  switch (s) {
    case Sense::kLessEqual:
      return "<=";
    case Sense::kEqual:
      return "=";
    case Sense::kGreaterEqual:
      return ">=";
  }
  return "?";
}

VarId LinearProgram::add_variable(const Symbol& name, double lower,
                                  double upper, double objective) {
  const std::string key = name.str();
  if (var_index_.count(key)) {
    throw ModelError("lp-core", "duplicate variable name " + key);
  }
  if (!(lower <= upper)) {
    throw ModelError("lp-core", "variable " + key + " has lower > upper");
  }
  if (!std::isfinite(objective)) {
    throw ModelError("lp-core", "variable " + key + " has non-finite cost");
  }
  const VarId id = static_cast<VarId>(vars_.size());
  vars_.push_back(Variable{name, lower, upper, objective});
  var_index_.emplace(key, id);
  return id;
}

RowId LinearProgram::add_constraint(ConstraintRow row) {
  const std::string tag = row.dual_tag.str();
  if (tag.empty()) throw ModelError("lp-core", "constraint row without dual tag");
  if (row_index_.count(tag)) {
    throw ModelError("lp-core", "duplicate dual tag " + tag);
  }
  std::unordered_set<VarId> seen;
  for (const Term& t : row.terms) {
    if (t.var < 0 || static_cast<std::size_t>(t.var) >= vars_.size()) {
      throw ModelError("lp-core",
                       "row " + tag + " references an unknown variable");
    }
    if (!seen.insert(t.var).second) {
      throw ModelError("lp-core", "row " + tag + " repeats variable " +
                                      vars_[t.var].name.str());
    }
  }
  const RowId id = static_cast<RowId>(rows_.size());
  rows_.push_back(std::move(row));
  row_index_.emplace(tag, id);
  return id;
}

VarId LinearProgram::var_id(const Symbol& name) const {
  auto it = var_index_.find(name.str());
  if (it == var_index_.end()) {
    throw LookupError("lp-core", "unknown variable " + name.str());
  }
  return it->second;
}

RowId LinearProgram::row_id(const Symbol& dual_tag) const {
  auto it = row_index_.find(dual_tag.str());
  if (it == row_index_.end()) {
    throw LookupError("lp-core", "unknown dual tag " + dual_tag.str());
  }
  return it->second;
}

bool LinearProgram::has_variable(const Symbol& name) const {
  return var_index_.count(name.str()) > 0;
}

bool LinearProgram::has_row(const Symbol& dual_tag) const {
  return row_index_.count(dual_tag.str()) > 0;
}

double LinearProgram::row_activity(RowId id, std::span<const double> x) const {
  double s = 0.0;
  for (const Term& t : rows_.at(id).terms) s += t.coeff * x[t.var];
  return s;
}

double LinearProgram::objective_value(std::span<const double> x) const {
  double s = objective_constant_;
  for (std::size_t j = 0; j < vars_.size(); ++j) s += vars_[j].objective * x[j];
  return s;
}

std::string LinearProgram::debug_string() const {
  std::string out = fmt::format("LP {} ({} variables, {} rows)\n", market_,
                                vars_.size(), rows_.size());
  out += "min";
  for (const Variable& v : vars_) {
    if (v.objective != 0.0) out += fmt::format(" {:+g} {}", v.objective, v.name.str());
  }
  if (objective_constant_ != 0.0) out += fmt::format(" {:+g}", objective_constant_);
  out += '\n';
  for (const ConstraintRow& r : rows_) {
    out += fmt::format("  {}:", r.dual_tag.str());
    for (const Term& t : r.terms) {
      out += fmt::format(" {:+g} {}", t.coeff, vars_[t.var].name.str());
    }
    out += fmt::format(" {} {:g}\n", to_string(r.sense), r.rhs);
  }
  for (const Variable& v : vars_) {
    if (std::isfinite(v.lower) || std::isfinite(v.upper)) {
      out += fmt::format("  bound {} in [{:g}, {:g}]\n", v.name.str(), v.lower,
                         v.upper);
    }
  }
  return out;
}

ResidualReport primal_residuals(const LinearProgram& lp,
                                std::span<const double> assignment) {
  if (assignment.size() != lp.num_variables()) {
    throw LookupError("lp-core",
                      fmt::format("assignment covers {} of {} variables",
                                  assignment.size(), lp.num_variables()));
  }
  ResidualReport rep;
  rep.row_residual.resize(lp.num_rows());
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const ConstraintRow& r = lp.row(static_cast<RowId>(i));
    const double act = lp.row_activity(static_cast<RowId>(i), assignment);
    double res = 0.0;
    switch (r.sense) {
      case Sense::kEqual:
        res = act - r.rhs;
        break;
      case Sense::kLessEqual:
        res = std::max(0.0, act - r.rhs);
        break;
      case Sense::kGreaterEqual:
        res = std::max(0.0, r.rhs - act);
        break;
    }
    rep.row_residual[i] = res;
    rep.max_violation = std::max(rep.max_violation, std::abs(res));
  }
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const Variable& v = lp.variable(static_cast<VarId>(j));
    const double x = assignment[j];
    rep.max_violation = std::max({rep.max_violation, v.lower - x, x - v.upper});
  }
  rep.objective = lp.objective_value(assignment);
  return rep;
}

ResidualReport primal_residuals(
    const LinearProgram& lp, const std::map<std::string, double>& assignment) {
  std::vector<double> x(lp.num_variables());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const std::string name = lp.variable(static_cast<VarId>(j)).name.str();
    auto it = assignment.find(name);
    if (it == assignment.end()) {
      throw LookupError("lp-core", "assignment is missing variable " + name);
    }
    x[j] = it->second;
  }
  return primal_residuals(lp, x);
}

}  // namespace trimarket
