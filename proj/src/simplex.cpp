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

#include "trimarket/simplex.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>

namespace trimarket {

int SparseLp::add_column(double c, double lo, double up,
                         const std::vector<std::pair<int, double>>& entries) {
  cost.push_back(c);
  col_lower.push_back(lo);
  col_upper.push_back(up);
  for (const auto& [r, v] : entries) {
    row_index.push_back(r);
    value.push_back(v);
  }
  col_start.push_back(static_cast<int>(row_index.size()));
  return num_cols++;
}

SparseLp to_sparse(const LinearProgram& lp) {
  SparseLp out;
  out.num_rows = static_cast<int>(lp.num_rows());
  out.row_lower.resize(lp.num_rows());
  out.row_upper.resize(lp.num_rows());
  std::vector<std::vector<std::pair<int, double>>> cols(lp.num_variables());
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const ConstraintRow& r = lp.row(static_cast<RowId>(i));
    out.row_lower[i] = r.sense == Sense::kLessEqual ? -kInf : r.rhs;
    out.row_upper[i] = r.sense == Sense::kGreaterEqual ? kInf : r.rhs;
    for (const Term& t : r.terms) {
      if (t.coeff != 0.0) cols[t.var].emplace_back(static_cast<int>(i), t.coeff);
    }
  }
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const Variable& v = lp.variable(static_cast<VarId>(j));
    out.add_column(v.objective, v.lower, v.upper, cols[j]);
  }
  out.objective_constant = lp.objective_constant();
  return out;
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
    case LpStatus::kIterationLimit:
      return "iteration_limit";
    case LpStatus::kTimeLimit:
      return "time_limit";
    case LpStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "?";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Clock = std::chrono::steady_clock;

// Product-form update: new_x[pos] = pivot_inv * x[pos];
// new_x[i] = x[i] + coeff_i * x[pos] for the listed entries.
struct Eta {
  int pos = 0;
  double pivot_inv = 1.0;
  std::vector<std::pair<int, double>> others;
};

double pow2_round(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) return 1.0;
  return std::exp2(std::round(std::log2(s)));
}

class Simplex {
 public:
  Simplex(const SparseLp& lp, const LpOptions& opt) : src_(lp), opt_(opt) {
    n_ = lp.num_cols;
    m_ = lp.num_rows;
    total_ = n_ + m_;
    build_scaled();
  }

  LpResult run();

 private:
  void build_scaled();
  bool refactor();
  void reset_to_slack_basis();
  void recompute_basics();
  Vec ftran(Vec v) const;
  Vec btran(Vec v) const;
  void column(int j, Vec& out) const;
  double dot_column(int j, const Vec& y) const;
  bool time_up() const {
    return std::chrono::duration<double>(Clock::now() - start_).count() >
           opt_.time_limit_s;
  }
  LpResult finish(LpStatus status);

  const SparseLp& src_;
  LpOptions opt_;
  int n_ = 0, m_ = 0, total_ = 0;

  std::vector<double> c_, lb_, ub_;
  std::vector<int> cs_, ri_;
  std::vector<double> va_;
  std::vector<double> row_scale_, col_scale_;

  std::vector<double> x_;
  std::vector<int> head_;
  std::vector<int> pos_;
  // transpose().solve() is non-const in Eigen 3.4.
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  long iterations_ = 0;
  Clock::time_point start_ = Clock::now();
};

void Simplex::build_scaled() {
  cs_ = src_.col_start;
  ri_ = src_.row_index;
  va_ = src_.value;
  row_scale_.assign(m_, 1.0);
  col_scale_.assign(n_, 1.0);
  if (opt_.scale && !va_.empty()) {
    // Geometric-mean scaling, a few alternating passes.
    for (int pass = 0; pass < 6; ++pass) {
      std::vector<double> rmin(m_, kInf), rmax(m_, 0.0);
      for (int j = 0; j < n_; ++j) {
        for (int k = cs_[j]; k < cs_[j + 1]; ++k) {
          const double a = std::abs(va_[k] * col_scale_[j]);
          if (a == 0.0) continue;
          rmin[ri_[k]] = std::min(rmin[ri_[k]], a);
          rmax[ri_[k]] = std::max(rmax[ri_[k]], a);
        }
      }
      for (int i = 0; i < m_; ++i) {
        if (rmax[i] > 0.0) row_scale_[i] = pow2_round(1.0 / std::sqrt(rmin[i] * rmax[i]));
      }
      for (int j = 0; j < n_; ++j) {
        double cmin = kInf, cmax = 0.0;
        for (int k = cs_[j]; k < cs_[j + 1]; ++k) {
          const double a = std::abs(va_[k] * row_scale_[ri_[k]]);
          if (a == 0.0) continue;
          cmin = std::min(cmin, a);
          cmax = std::max(cmax, a);
        }
        if (cmax > 0.0) col_scale_[j] = pow2_round(1.0 / std::sqrt(cmin * cmax));
      }
    }
    for (int j = 0; j < n_; ++j) {
      for (int k = cs_[j]; k < cs_[j + 1]; ++k) {
        va_[k] *= row_scale_[ri_[k]] * col_scale_[j];
      }
    }
  }
  c_.assign(total_, 0.0);
  lb_.assign(total_, 0.0);
  ub_.assign(total_, 0.0);
  for (int j = 0; j < n_; ++j) {
    c_[j] = src_.cost[j] * col_scale_[j];
    lb_[j] = src_.col_lower[j] / col_scale_[j];
    ub_[j] = src_.col_upper[j] / col_scale_[j];
  }
  for (int i = 0; i < m_; ++i) {
    lb_[n_ + i] = src_.row_lower[i] * row_scale_[i];
    ub_[n_ + i] = src_.row_upper[i] * row_scale_[i];
  }
}

void Simplex::column(int j, Vec& out) const {
  out.setZero(m_);
  if (j < n_) {
    for (int k = cs_[j]; k < cs_[j + 1]; ++k) out[ri_[k]] = va_[k];
  } else {
    out[j - n_] = -1.0;
  }
}

double Simplex::dot_column(int j, const Vec& y) const {
  if (j >= n_) return -y[j - n_];
  double s = 0.0;
  for (int k = cs_[j]; k < cs_[j + 1]; ++k) s += va_[k] * y[ri_[k]];
  return s;
}

bool Simplex::refactor() {
  etas_.clear();
  std::vector<Eigen::Triplet<double>> trip;
  for (int p = 0; p < m_; ++p) {
    const int j = head_[p];
    if (j < n_) {
      for (int k = cs_[j]; k < cs_[j + 1]; ++k) trip.emplace_back(ri_[k], p, va_[k]);
    } else {
      trip.emplace_back(j - n_, p, -1.0);
    }
  }
  SpMat B(m_, m_);
  B.setFromTriplets(trip.begin(), trip.end());
  B.makeCompressed();
  lu_.compute(B);
  return lu_.info() == Eigen::Success;
}

void Simplex::reset_to_slack_basis() {
  head_.resize(m_);
  pos_.assign(total_, -1);
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    pos_[n_ + i] = i;
  }
  refactor();
}

Vec Simplex::ftran(Vec v) const {
  Vec out = lu_.solve(v);
  for (const Eta& e : etas_) {
    const double t = out[e.pos];
    if (t == 0.0) continue;
    out[e.pos] = e.pivot_inv * t;
    for (const auto& [i, coeff] : e.others) out[i] += coeff * t;
  }
  return out;
}

Vec Simplex::btran(Vec v) const {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = it->pivot_inv * v[it->pos];
    for (const auto& [i, coeff] : it->others) s += coeff * v[i];
    v[it->pos] = s;
  }
  return lu_.transpose().solve(v);
}

void Simplex::recompute_basics() {
  Vec rhs = Vec::Zero(m_);
  for (int j = 0; j < total_; ++j) {
    if (pos_[j] >= 0 || x_[j] == 0.0) continue;
    if (j < n_) {
      for (int k = cs_[j]; k < cs_[j + 1]; ++k) rhs[ri_[k]] -= va_[k] * x_[j];
    } else {
      rhs[j - n_] += x_[j];
    }
  }
  const Vec xb = ftran(rhs);
  for (int p = 0; p < m_; ++p) x_[head_[p]] = xb[p];
}

LpResult Simplex::finish(LpStatus status) {
  LpResult res;
  res.status = status;
  res.iterations = iterations_;
  res.x.resize(n_);
  for (int j = 0; j < n_; ++j) res.x[j] = x_[j] * col_scale_[j];
  res.row_activity.assign(m_, 0.0);
  for (int j = 0; j < n_; ++j) {
    for (int k = src_.col_start[j]; k < src_.col_start[j + 1]; ++k) {
      res.row_activity[src_.row_index[k]] += src_.value[k] * res.x[j];
    }
  }
  res.objective = src_.objective_constant;
  for (int j = 0; j < n_; ++j) res.objective += src_.cost[j] * res.x[j];
  res.row_dual.assign(m_, 0.0);
  res.reduced_cost.assign(n_, 0.0);
  if (status == LpStatus::kOptimal && m_ > 0) {
    Vec cb(m_);
    for (int p = 0; p < m_; ++p) cb[p] = c_[head_[p]];
    const Vec y = btran(cb);
    for (int i = 0; i < m_; ++i) res.row_dual[i] = y[i] * row_scale_[i];
    for (int j = 0; j < n_; ++j) {
      res.reduced_cost[j] = (c_[j] - dot_column(j, y)) / col_scale_[j];
    }
  } else if (status == LpStatus::kOptimal) {
    for (int j = 0; j < n_; ++j) res.reduced_cost[j] = src_.cost[j];
  }
  return res;
}

LpResult Simplex::run() {
  const double ftol = opt_.feasibility_tol;
  const double dtol = opt_.optimality_tol;
  constexpr double kPivotTol = 1e-9;

  x_.assign(total_, 0.0);
  for (int j = 0; j < n_; ++j) {
    if (std::isfinite(lb_[j])) {
      x_[j] = lb_[j];
    } else if (std::isfinite(ub_[j])) {
      x_[j] = ub_[j];
    }
  }

  if (m_ == 0) {
    for (int j = 0; j < n_; ++j) {
      if (c_[j] > 0.0) {
        if (!std::isfinite(lb_[j])) return finish(LpStatus::kUnbounded);
        x_[j] = lb_[j];
      } else if (c_[j] < 0.0) {
        if (!std::isfinite(ub_[j])) return finish(LpStatus::kUnbounded);
        x_[j] = ub_[j];
      }
    }
    return finish(LpStatus::kOptimal);
  }

  reset_to_slack_basis();
  recompute_basics();

  Vec cb(m_), alpha(m_), acol(m_);
  int degenerate_run = 0;
  int recovery_attempts = 0;

  while (true) {
    if (iterations_ >= opt_.max_iterations) return finish(LpStatus::kIterationLimit);
    if ((iterations_ & 63) == 0 && time_up()) return finish(LpStatus::kTimeLimit);

    if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
      if (!refactor()) {
        if (++recovery_attempts > 5) return finish(LpStatus::kNumericalFailure);
        reset_to_slack_basis();
      }
      recompute_basics();
    }

    // Phase selection from current basic infeasibilities.
    bool phase1 = false;
    for (int p = 0; p < m_; ++p) {
      const int j = head_[p];
      if (x_[j] < lb_[j] - ftol) {
        cb[p] = -1.0;
        phase1 = true;
      } else if (x_[j] > ub_[j] + ftol) {
        cb[p] = 1.0;
        phase1 = true;
      } else {
        cb[p] = 0.0;
      }
    }
    if (!phase1) {
      for (int p = 0; p < m_; ++p) cb[p] = c_[head_[p]];
    }
    const Vec y = btran(cb);

    // Pricing: Dantzig, falling back to Bland's rule while stalling.
    const bool bland = degenerate_run > 60;
    int enter = -1;
    double best = 0.0;
    int dir = 0;
    for (int j = 0; j < total_; ++j) {
      if (pos_[j] >= 0) continue;
      if (lb_[j] == ub_[j]) continue;
      const double d = (phase1 ? 0.0 : c_[j]) - dot_column(j, y);
      int candidate_dir = 0;
      if (d < -dtol && x_[j] < ub_[j] - ftol) candidate_dir = 1;
      if (d > dtol && x_[j] > lb_[j] + ftol) candidate_dir = -1;
      if (candidate_dir == 0) continue;
      if (bland) {
        enter = j;
        dir = candidate_dir;
        break;
      }
      const double score = std::abs(d);
      if (score > best) {
        best = score;
        enter = j;
        dir = candidate_dir;
      }
    }

    if (enter < 0) {
      if (!etas_.empty()) {
        // Confirm with a fresh factorization before declaring a verdict.
        if (!refactor()) {
          if (++recovery_attempts > 5) return finish(LpStatus::kNumericalFailure);
          reset_to_slack_basis();
        }
        const auto before = x_;
        recompute_basics();
        double drift = 0.0;
        for (int p = 0; p < m_; ++p) {
          drift = std::max(drift, std::abs(before[head_[p]] - x_[head_[p]]));
        }
        if (drift > ftol) continue;
      }
      if (phase1) return finish(LpStatus::kInfeasible);
      return finish(LpStatus::kOptimal);
    }

    column(enter, acol);
    alpha = ftran(acol);

    // Harris two-pass ratio test. rate_p = change of basic p per unit step.
    double theta_max = kInf;
    for (int p = 0; p < m_; ++p) {
      const double a = alpha[p];
      if (std::abs(a) < kPivotTol) continue;
      const double rate = -dir * a;
      const int j = head_[p];
      const double v = x_[j];
      double bound;
      if (rate < 0.0) {
        if (v < lb_[j] - ftol) continue;
        bound = v > ub_[j] + ftol ? ub_[j] : lb_[j];
        if (!std::isfinite(bound)) continue;
        theta_max = std::min(theta_max, (v - bound + ftol) / -rate);
      } else {
        if (v > ub_[j] + ftol) continue;
        bound = v < lb_[j] - ftol ? lb_[j] : ub_[j];
        if (!std::isfinite(bound)) continue;
        theta_max = std::min(theta_max, (bound - v + ftol) / rate);
      }
    }
    int leave = -1;
    double leave_bound = 0.0;
    double theta = kInf;
    double best_pivot = 0.0;
    if (std::isfinite(theta_max)) {
      for (int p = 0; p < m_; ++p) {
        const double a = alpha[p];
        if (std::abs(a) < kPivotTol) continue;
        const double rate = -dir * a;
        const int j = head_[p];
        const double v = x_[j];
        double bound, ratio;
        if (rate < 0.0) {
          if (v < lb_[j] - ftol) continue;
          bound = v > ub_[j] + ftol ? ub_[j] : lb_[j];
          if (!std::isfinite(bound)) continue;
          ratio = (v - bound) / -rate;
        } else {
          if (v > ub_[j] + ftol) continue;
          bound = v < lb_[j] - ftol ? lb_[j] : ub_[j];
          if (!std::isfinite(bound)) continue;
          ratio = (bound - v) / rate;
        }
        if (ratio <= theta_max) {
          const bool better = bland ? (leave < 0 || j < head_[leave])
                                    : std::abs(a) > best_pivot;
          if (better) {
            best_pivot = std::abs(a);
            leave = p;
            leave_bound = bound;
            theta = std::max(0.0, ratio);
          }
        }
      }
    }

    const double range = dir > 0 ? ub_[enter] - x_[enter] : x_[enter] - lb_[enter];
    bool flip = false;
    if (range <= theta) {
      flip = true;
      theta = range;
    }
    if (!std::isfinite(theta)) {
      if (!phase1) return finish(LpStatus::kUnbounded);
      if (++recovery_attempts > 5) return finish(LpStatus::kNumericalFailure);
      refactor();
      recompute_basics();
      continue;
    }

    ++iterations_;
    degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;

    x_[enter] += dir * theta;
    if (theta != 0.0) {
      for (int p = 0; p < m_; ++p) x_[head_[p]] -= dir * theta * alpha[p];
    }
    if (flip) {
      x_[enter] = dir > 0 ? ub_[enter] : lb_[enter];
      continue;
    }

    const int out = head_[leave];
    x_[out] = leave_bound;
    pos_[out] = -1;
    head_[leave] = enter;
    pos_[enter] = leave;

    Eta e;
    e.pos = leave;
    e.pivot_inv = 1.0 / alpha[leave];
    for (int p = 0; p < m_; ++p) {
      if (p == leave) continue;
      if (std::abs(alpha[p]) > 1e-14) e.others.emplace_back(p, -alpha[p] * e.pivot_inv);
    }
    etas_.push_back(std::move(e));
  }
}

}  // namespace

LpResult solve_sparse_lp(const SparseLp& lp, const LpOptions& opt) {
  Simplex s(lp, opt);
  return s.run();
}

LpResult solve_lp(const LinearProgram& lp, const LpOptions& opt) {
  return solve_sparse_lp(to_sparse(lp), opt);
}

}  // namespace trimarket
