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


// Built-in depth-first branch-and-bound and the external-command adapter.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "trimarket/milp.hpp"
#include "trimarket/simplex.hpp"

namespace trimarket {

namespace {

using Clock = std::chrono::steady_clock;

struct BoundChange {
  int col;
  double lower;
  double upper;
};

struct Node {
  std::vector<BoundChange> changes;
};

class BranchAndBound {
 public:
  BranchAndBound(const MilpModel& m, const SolveLimits& limits)
      : m_(m), limits_(limits), start_(Clock::now()) {
    // Single-term rows become column bounds; the rest stay rows.
    std::vector<double> lower(m.columns.size()), upper(m.columns.size());
    for (std::size_t j = 0; j < m.columns.size(); ++j) {
      lower[j] = m.columns[j].lower;
      upper[j] = m.columns[j].upper;
    }
    std::vector<std::vector<std::pair<int, double>>> cols(m.columns.size());
    for (const MilpRow& r : m.rows) {
      if (r.terms.size() == 1 && r.terms[0].second != 0.0) {
        const auto [j, a] = r.terms[0];
        const double v = r.rhs / a;
        const bool lo = r.sense != (a > 0 ? Sense::kLessEqual : Sense::kGreaterEqual);
        const bool up = r.sense != (a > 0 ? Sense::kGreaterEqual : Sense::kLessEqual);
        if (lo) lower[j] = std::max(lower[j], v);
        if (up) upper[j] = std::min(upper[j], v);
        continue;
      }
      for (const auto& [j, a] : r.terms) cols[j].emplace_back(lp_.num_rows, a);
      lp_.row_lower.push_back(r.sense == Sense::kLessEqual ? -kInf : r.rhs);
      lp_.row_upper.push_back(r.sense == Sense::kGreaterEqual ? kInf : r.rhs);
      ++lp_.num_rows;
    }
    for (std::size_t j = 0; j < m.columns.size(); ++j) {
      lp_.add_column(m.columns[j].objective, lower[j], upper[j], cols[j]);
    }
    lp_.objective_constant = m.objective_constant;
  }

  SolveResult run() {
    SolveResult r;
    if (try_start()) {
      r.used_start = true;
      if (m_.constant_objective()) return finish(std::move(r), SolveStatus::kOptimal);
    }
    std::vector<Node> stack{Node{}};
    while (!stack.empty()) {
      if (elapsed() > limits_.time_limit_s || nodes_ >= limits_.node_limit) {
        timed_out_ = true;
        break;
      }
      Node node = std::move(stack.back());
      stack.pop_back();
      ++nodes_;
      expand(node, stack);
      if (timed_out_) break;
      if (!incumbent_.empty() && m_.constant_objective()) break;
    }
    if (!incumbent_.empty()) {
      return finish(std::move(r), timed_out_ ? SolveStatus::kFeasible : SolveStatus::kOptimal);
    }
    if (timed_out_) return finish(std::move(r), SolveStatus::kTimeout);
    if (failures_ > 0) {
      r.message = fmt::format("{} node relaxations failed numerically", failures_);
      return finish(std::move(r), SolveStatus::kError);
    }
    return finish(std::move(r), SolveStatus::kInfeasible);
  }

 private:
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

  SolveResult finish(SolveResult r, SolveStatus s) {
    r.status = s;
    r.nodes = nodes_;
    r.lp_iterations = iterations_;
    if (r.has_solution()) {
      r.x = incumbent_;
      r.objective = incumbent_obj_;
    }
    if (r.message.empty() && unbounded_) r.message = "a relaxation was unbounded";
    return r;
  }

  double objective(const std::vector<double>& x) const {
    double v = m_.objective_constant;
    for (std::size_t j = 0; j < x.size(); ++j) v += m_.columns[j].objective * x[j];
    return v;
  }

  bool integral(const std::vector<double>& x) const {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (m_.columns[j].integer && std::abs(x[j] - std::round(x[j])) > limits_.integrality_tol) {
        return false;
      }
    }
    return true;
  }

  void offer(std::vector<double> x) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (m_.columns[j].integer) x[j] = std::round(x[j]);
    }
    if (m_.max_row_violation(x) > limits_.feasibility_tol) return;
    const double obj = objective(x);
    if (incumbent_.empty() || obj < incumbent_obj_) {
      incumbent_ = std::move(x);
      incumbent_obj_ = obj;
    }
  }

  bool try_start() {
    if (m_.start.size() != m_.columns.size() || !integral(m_.start)) return false;
    offer(m_.start);
    return !incumbent_.empty();
  }

  LpResult relax(const std::vector<BoundChange>& changes) {
    SparseLp lp = lp_;
    for (const BoundChange& b : changes) {
      lp.col_lower[b.col] = std::max(lp.col_lower[b.col], b.lower);
      lp.col_upper[b.col] = std::min(lp.col_upper[b.col], b.upper);
    }
    for (int j = 0; j < lp.num_cols; ++j) {
      if (lp.col_lower[j] > lp.col_upper[j] + limits_.feasibility_tol) {
        LpResult crossed;
        crossed.status = LpStatus::kInfeasible;
        return crossed;
      }
    }
    LpOptions opt;
    opt.feasibility_tol = std::min(1e-9, limits_.feasibility_tol);
    opt.time_limit_s = std::max(0.0, limits_.time_limit_s - elapsed());
    LpResult r = solve_sparse_lp(lp, opt);
    iterations_ += r.iterations;
    return r;
  }

  bool prunable(double bound) const {
    if (incumbent_.empty()) return false;
    return bound >= incumbent_obj_ - 1e-9 * (1.0 + std::abs(incumbent_obj_));
  }

  // When every pair is complementary in the relaxation, fix each binary
  // to the side that is already zero and polish with one more LP.
  void complementarity_heuristic(const std::vector<double>& x,
                                 const std::vector<BoundChange>& changes) {
    if (m_.pairs.empty()) return;
    std::vector<BoundChange> fixes = changes;
    for (const MilpModel::PairRecord& p : m_.pairs) {
      const double a = std::max(0.0, p.slack.eval(x)) / p.m.slack;
      const double b = std::max(0.0, x[p.dual]) / p.m.dual;
      if (std::min(a, b) > 1e-9) return;
      const double z = a > b ? 1.0 : 0.0;
      fixes.push_back({p.binary, z, z});
    }
    const LpResult r = relax(fixes);
    if (r.status == LpStatus::kOptimal) offer(r.x);
  }

  void expand(const Node& node, std::vector<Node>& stack) {
    const LpResult r = relax(node.changes);
    switch (r.status) {
      case LpStatus::kOptimal: break;
      case LpStatus::kInfeasible: return;
      case LpStatus::kTimeLimit: timed_out_ = true; return;
      case LpStatus::kUnbounded: unbounded_ = true; return;
      default: ++failures_; return;
    }
    if (prunable(r.objective)) return;
    if (integral(r.x)) {
      offer(r.x);
      return;
    }
    complementarity_heuristic(r.x, node.changes);
    if (!incumbent_.empty() && (m_.constant_objective() || prunable(r.objective))) return;

    std::vector<bool> fixed(m_.columns.size(), false);
    for (const BoundChange& b : node.changes) fixed[b.col] = b.lower == b.upper;

    // Most violated pair first, measured relative to its Ms.
    int col = -1;
    bool zero_first = true;
    double best = 0.0;
    for (const MilpModel::PairRecord& p : m_.pairs) {
      if (fixed[p.binary]) continue;
      const double a = std::max(0.0, p.slack.eval(r.x)) / p.m.slack;
      const double b = std::max(0.0, r.x[p.dual]) / p.m.dual;
      const double score = std::min(a, b);
      if (score > best) {
        best = score;
        col = p.binary;
        zero_first = a <= b;
      }
    }
    if (col < 0) {
      best = 0.0;
      for (std::size_t j = 0; j < m_.columns.size(); ++j) {
        if (!m_.columns[j].integer || fixed[j]) continue;
        const double frac = std::abs(r.x[j] - std::round(r.x[j]));
        if (frac > best) {
          best = frac;
          col = static_cast<int>(j);
          zero_first = r.x[j] - std::floor(r.x[j]) < 0.5;
        }
      }
    }
    if (col < 0) {
      ++failures_;
      return;
    }
    Node down = node, up = node;
    if (m_.columns[col].lower == 0.0 && m_.columns[col].upper == 1.0) {
      down.changes.push_back({col, 0.0, 0.0});
      up.changes.push_back({col, 1.0, 1.0});
    } else {
      down.changes.push_back({col, -kInf, std::floor(r.x[col])});
      up.changes.push_back({col, std::ceil(r.x[col]), kInf});
    }
    // The child explored first is pushed last.
    if (zero_first) {
      stack.push_back(std::move(up));
      stack.push_back(std::move(down));
    } else {
      stack.push_back(std::move(down));
      stack.push_back(std::move(up));
    }
  }

  const MilpModel& m_;
  SolveLimits limits_;
  Clock::time_point start_;
  SparseLp lp_;
  std::vector<double> incumbent_;
  double incumbent_obj_ = kInf;
  long nodes_ = 0;
  long iterations_ = 0;
  int failures_ = 0;
  bool timed_out_ = false;
  bool unbounded_ = false;
};

class BnbAdapter : public SolverAdapter {
 public:
  std::string name() const override { return "bnb"; }
  SolveResult submit(const MilpModel& m, const SolveLimits& limits) override {
    return BranchAndBound(m, limits).run();
  }
};

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

SolveStatus parse_status(const std::string& word) {
  if (word == "optimal") return SolveStatus::kOptimal;
  if (word == "feasible") return SolveStatus::kFeasible;
  if (word == "infeasible") return SolveStatus::kInfeasible;
  if (word == "timeout") return SolveStatus::kTimeout;
  return SolveStatus::kError;
}

// Runs a command that reads free MPS and writes "status <word>" followed by
// "name value" lines.
class ExternalAdapter : public SolverAdapter {
 public:
  explicit ExternalAdapter(std::string command) : command_(std::move(command)) {}
  std::string name() const override { return "external"; }

  SolveResult submit(const MilpModel& m, const SolveLimits& limits) override {
    namespace fs = std::filesystem;
    std::random_device rd;
    const fs::path dir = fs::temp_directory_path() / fmt::format("trimarket-{:016x}",
                                                                 (uint64_t(rd()) << 32) | rd());
    fs::create_directories(dir);
    const fs::path mps = dir / "model.mps", sol = dir / "model.sol";
    {
      std::ofstream out(mps);
      out << export_model(m, ExportFormat::kFreeMps).text;
    }
    std::string cmd = command_;
    if (cmd.find("{mps}") == std::string::npos) cmd += " {mps} {sol}";
    cmd = replace_all(cmd, "{mps}", "'" + mps.string() + "'");
    cmd = replace_all(cmd, "{sol}", "'" + sol.string() + "'");
    cmd = replace_all(cmd, "{time}", fmt::format("{}", limits.time_limit_s));
    const int rc = std::system(cmd.c_str());
    SolveResult r;
    std::ifstream in(sol);
    if (rc != 0 || !in) {
      r.status = SolveStatus::kError;
      r.message = fmt::format("solver command exited with {}", rc);
      fs::remove_all(dir);
      return r;
    }
    std::map<std::string, int> index;
    for (std::size_t j = 0; j < m.columns.size(); ++j) index[m.columns[j].name.str()] = int(j);
    std::string key, word;
    in >> key >> word;
    r.status = key == "status" ? parse_status(word) : SolveStatus::kError;
    if (r.has_solution()) {
      r.x.assign(m.columns.size(), 0.0);
      double v = 0;
      while (in >> key >> v) {
        auto it = index.find(key);
        if (it != index.end()) r.x[it->second] = v;
      }
    }
    fs::remove_all(dir);
    return r;
  }

 private:
  std::string command_;
};

}  // namespace

std::unique_ptr<SolverAdapter> make_bnb_adapter() { return std::make_unique<BnbAdapter>(); }

std::unique_ptr<SolverAdapter> make_external_adapter(const std::string& command) {
  return std::make_unique<ExternalAdapter>(command);
}

}  // namespace trimarket
