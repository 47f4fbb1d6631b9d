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


// MPS and LP-format writers plus an MPS reader for the same subset.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "trimarket/milp.hpp"

namespace trimarket {

namespace {

// Shortest %g rendering that round-trips, capped at `width` characters.
std::string number(double v, std::size_t width) {
  if (v == 0.0) return "0";
  for (int prec = 17; prec >= 1; --prec) {
    std::string s = fmt::format("{:.{}g}", v, prec);
    if (s.size() <= width) return s;
  }
  throw ModelError("milp-reformulation", fmt::format("cannot print {} in {} columns", v, width));
}

std::string full(double v) { return fmt::format("{:.17g}", v); }

char sense_code(Sense s) {
  switch (s) {
    case Sense::kEqual: return 'E';
    case Sense::kLessEqual: return 'L';
    case Sense::kGreaterEqual: return 'G';
  }
  return 'E';
}

struct Layout {
  std::vector<int> order;  // columns in export order
  std::vector<std::vector<std::pair<int, double>>> entries;  // per column
  std::vector<std::string> col_name;
  std::vector<std::string> row_name;
  std::string name_map;
};

Layout layout(const MilpModel& m, ExportFormat f) {
  Layout out;
  const std::size_t nc = m.columns.size();
  out.order.resize(nc);
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(), [&](int a, int b) {
    return natural_less(m.columns[a].name, m.columns[b].name);
  });
  out.entries.resize(nc);
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    std::map<int, double> merged;
    for (const auto& [j, a] : m.rows[i].terms) merged[j] += a;
    for (const auto& [j, a] : merged) {
      if (a != 0.0) out.entries[j].emplace_back(static_cast<int>(i), a);
    }
  }
  out.col_name.resize(nc);
  out.row_name.resize(m.rows.size());
  for (std::size_t j = 0; j < nc; ++j) out.col_name[j] = m.columns[j].name.str();
  for (std::size_t i = 0; i < m.rows.size(); ++i) out.row_name[i] = m.rows[i].name;

  if (f == ExportFormat::kFixedMps) {
    bool rename = false;
    for (const std::string& s : out.col_name) rename = rename || s.size() > 8;
    for (const std::string& s : out.row_name) rename = rename || s.size() > 8;
    if (rename) {
      if (nc > 9'999'999 || m.rows.size() > 9'999'999) {
        throw ModelError("milp-reformulation", "model too large for fixed MPS names");
      }
      for (std::size_t k = 0; k < nc; ++k) {
        const int j = out.order[k];
        std::string mangled = fmt::format("C{:07}", k + 1);
        out.name_map += mangled + " " + out.col_name[j] + "\n";
        out.col_name[j] = std::move(mangled);
      }
      for (std::size_t i = 0; i < m.rows.size(); ++i) {
        std::string mangled = fmt::format("R{:07}", i + 1);
        out.name_map += mangled + " " + out.row_name[i] + "\n";
        out.row_name[i] = std::move(mangled);
      }
    }
  } else if (f == ExportFormat::kLp) {
    auto clean = [](std::string s) {
      std::replace(s.begin(), s.end(), '[', '(');
      std::replace(s.begin(), s.end(), ']', ')');
      return s;
    };
    for (std::string& s : out.col_name) s = clean(s);
    for (std::string& s : out.row_name) s = clean(s);
  }
  return out;
}

class MpsWriter {
 public:
  explicit MpsWriter(bool fixed) : fixed_(fixed) {}

  void section(const std::string& s) { out_ += s + "\n"; }
  void row(char code, const std::string& name) {
    out_ += fixed_ ? fmt::format(" {:<2} {}\n", code, name) : fmt::format(" {} {}\n", code, name);
  }
  // One name/value pair per line keeps both dialects simple.
  void entry(const std::string& code, const std::string& a, const std::string& b, double v) {
    if (fixed_) {
      std::string line = fmt::format(" {:<2} {:<8}  {:<8}  {:>12}", code, a, b, number(v, 12));
      line.erase(line.find_last_not_of(' ') + 1);
      out_ += line + "\n";
    } else {
      out_ += code.empty() ? fmt::format("    {} {} {}\n", a, b, full(v))
                           : fmt::format(" {} {} {} {}\n", code, a, b, full(v));
    }
  }
  void marker(const std::string& name, const char* kind) {
    if (fixed_) {
      out_ += fmt::format("    {:<8}  {:<8}  {:<12}\n", name, "'MARKER'", kind);
    } else {
      out_ += fmt::format("    {} 'MARKER' {}\n", name, kind);
    }
  }
  void bound(const std::string& code, const std::string& col, std::optional<double> v) {
    if (!v) {
      out_ += fixed_ ? fmt::format(" {:<2} {:<8}  {}\n", code, "BND", col)
                     : fmt::format(" {} BND {}\n", code, col);
      return;
    }
    entry(code, "BND", col, *v);
  }
  std::string take() { return std::move(out_); }

 private:
  bool fixed_;
  std::string out_;
};

std::string write_mps(const MilpModel& m, const Layout& l, bool fixed) {
  MpsWriter w(fixed);
  w.section(fixed ? "NAME          TRIMARKET" : "NAME TRIMARKET");
  w.section("ROWS");
  w.row('N', "OBJ");
  for (std::size_t i = 0; i < m.rows.size(); ++i) w.row(sense_code(m.rows[i].sense), l.row_name[i]);
  w.section("COLUMNS");
  bool in_int = false;
  int marker = 0;
  for (int j : l.order) {
    const MilpColumn& c = m.columns[j];
    if (c.integer != in_int) {
      w.marker(fmt::format("M{:07}", marker++), c.integer ? "'INTORG'" : "'INTEND'");
      in_int = c.integer;
    }
    bool any = false;
    if (c.objective != 0.0) {
      w.entry("", l.col_name[j], "OBJ", c.objective);
      any = true;
    }
    for (const auto& [i, a] : l.entries[j]) {
      w.entry("", l.col_name[j], l.row_name[i], a);
      any = true;
    }
    // A column must appear to exist.
    if (!any) w.entry("", l.col_name[j], "OBJ", 0.0);
  }
  if (in_int) w.marker(fmt::format("M{:07}", marker++), "'INTEND'");
  w.section("RHS");
  // The objective row's RHS is minus the objective constant.
  if (m.objective_constant != 0.0) w.entry("", "RHS", "OBJ", -m.objective_constant);
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    if (m.rows[i].rhs != 0.0) w.entry("", "RHS", l.row_name[i], m.rows[i].rhs);
  }
  w.section("BOUNDS");
  for (int j : l.order) {
    const MilpColumn& c = m.columns[j];
    const std::string& n = l.col_name[j];
    if (c.integer && c.lower == 0.0 && c.upper == 1.0) {
      w.bound("BV", n, std::nullopt);
      continue;
    }
    if (std::isinf(c.lower) && std::isinf(c.upper)) {
      w.bound("FR", n, std::nullopt);
      continue;
    }
    if (std::isinf(c.lower)) {
      w.bound("MI", n, std::nullopt);
    } else if (c.lower != 0.0 || c.integer) {
      w.bound("LO", n, c.lower);
    }
    if (!std::isinf(c.upper)) w.bound("UP", n, c.upper);
  }
  w.section("ENDATA");
  return w.take();
}

class LineWrapper {
 public:
  explicit LineWrapper(std::string& out) : out_(out) {}
  void put(const std::string& token) {
    if (width_ + token.size() > 250) {
      out_ += "\n   ";
      width_ = 3;
    }
    out_ += token;
    width_ += token.size();
  }
  void end() {
    out_ += "\n";
    width_ = 0;
  }

 private:
  std::string& out_;
  std::size_t width_ = 0;
};

std::string signed_term(double a, const std::string& name) {
  return a < 0 ? fmt::format(" - {} {}", full(-a), name) : fmt::format(" + {} {}", full(a), name);
}

std::string write_lp(const MilpModel& m, const Layout& l) {
  std::string out = "\\ trimarket equilibrium model\nMinimize\n";
  LineWrapper w(out);
  w.put(" obj:");
  bool any = false;
  for (int j : l.order) {
    if (m.columns[j].objective == 0.0) continue;
    w.put(signed_term(m.columns[j].objective, l.col_name[j]));
    any = true;
  }
  if (m.objective_constant != 0.0 || !any) {
    w.put(m.objective_constant < 0 ? " - " + full(-m.objective_constant)
                                   : " + " + full(m.objective_constant));
  }
  w.end();
  out += "Subject To\n";
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const MilpRow& r = m.rows[i];
    w.put(" " + l.row_name[i] + ":");
    std::map<int, double> merged;
    for (const auto& [j, a] : r.terms) merged[j] += a;
    bool wrote = false;
    for (const auto& [j, a] : merged) {
      if (a == 0.0) continue;
      w.put(signed_term(a, l.col_name[j]));
      wrote = true;
    }
    if (!wrote) w.put(" 0 " + l.col_name[l.order.front()]);
    const char* op = r.sense == Sense::kEqual ? " = " : r.sense == Sense::kLessEqual ? " <= " : " >= ";
    w.put(op + full(r.rhs));
    w.end();
  }
  out += "Bounds\n";
  for (int j : l.order) {
    const MilpColumn& c = m.columns[j];
    if (c.integer && c.lower == 0.0 && c.upper == 1.0) continue;
    const std::string& n = l.col_name[j];
    if (std::isinf(c.lower) && std::isinf(c.upper)) {
      out += " " + n + " free\n";
    } else {
      const std::string lo = std::isinf(c.lower) ? "-inf" : full(c.lower);
      const std::string up = std::isinf(c.upper) ? "+inf" : full(c.upper);
      out += " " + lo + " <= " + n + " <= " + up + "\n";
    }
  }
  std::string bin, gen;
  for (int j : l.order) {
    const MilpColumn& c = m.columns[j];
    if (!c.integer) continue;
    ((c.lower == 0.0 && c.upper == 1.0) ? bin : gen) += " " + l.col_name[j] + "\n";
  }
  if (!bin.empty()) out += "Binaries\n" + bin;
  if (!gen.empty()) out += "Generals\n" + gen;
  out += "End\n";
  return out;
}

}  // namespace

ExportedModel export_model(const MilpModel& m, ExportFormat f) {
  const Layout l = layout(m, f);
  ExportedModel out;
  out.name_map = l.name_map;
  out.text = f == ExportFormat::kLp ? write_lp(m, l) : write_mps(m, l, f == ExportFormat::kFixedMps);
  return out;
}

MilpModel read_mps(const std::string& text) {
  MilpModel m;
  std::map<std::string, int> rows, cols;
  std::string objective_row;
  std::istringstream in(text);
  std::string line, section;
  bool integer = false;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError("", fmt::format("MPS line {}: {}", line_no, what));
  };
  auto col_of = [&](const std::string& name) {
    auto [it, fresh] = cols.emplace(name, static_cast<int>(m.columns.size()));
    if (fresh) {
      MilpColumn c{Symbol(name), 0.0, kInf, 0.0, integer};
      if (integer) c.upper = 1.0;  // customary default for marked integers
      m.columns.push_back(std::move(c));
    }
    return it->second;
  };
  auto value = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) fail("bad number '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("bad number '" + s + "'");
    }
    return 0.0;
  };
  auto coefficient = [&](int col, const std::string& row, double v) {
    if (row == objective_row) {
      m.columns[col].objective += v;
      return;
    }
    auto it = rows.find(row);
    if (it == rows.end()) fail("unknown row " + row);
    m.rows[it->second].terms.emplace_back(col, v);
  };
  auto rhs = [&](const std::string& row, double v) {
    if (row == objective_row) {
      m.objective_constant = -v;
      return;
    }
    auto it = rows.find(row);
    if (it == rows.end()) fail("unknown row " + row);
    m.rows[it->second].rhs = v;
  };
  bool ended = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '*') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (line[0] != ' ' && line[0] != '\t') {
      section = tok[0];
      if (section == "ENDATA") {
        ended = true;
        break;
      }
      if (section == "RANGES" || section == "OBJSENSE") fail(section + " is not supported");
      continue;
    }
    if (section == "ROWS") {
      if (tok.size() != 2) fail("expected sense and name");
      if (tok[0] == "N") {
        if (objective_row.empty()) objective_row = tok[1];
        continue;
      }
      Sense s = tok[0] == "E" ? Sense::kEqual
                : tok[0] == "L" ? Sense::kLessEqual
                : tok[0] == "G" ? Sense::kGreaterEqual
                                : (fail("bad row sense " + tok[0]), Sense::kEqual);
      rows[tok[1]] = static_cast<int>(m.rows.size());
      m.rows.push_back({tok[1], {}, s, 0.0});
    } else if (section == "COLUMNS") {
      if (tok.size() >= 3 && tok[1] == "'MARKER'") {
        if (tok[2] == "'INTORG'") integer = true;
        else if (tok[2] == "'INTEND'") integer = false;
        else fail("bad marker " + tok[2]);
        continue;
      }
      if (tok.size() != 3 && tok.size() != 5) fail("expected column, row, value");
      const int j = col_of(tok[0]);
      coefficient(j, tok[1], value(tok[2]));
      if (tok.size() == 5) coefficient(j, tok[3], value(tok[4]));
    } else if (section == "RHS") {
      // The set name is optional in free MPS when pairs follow.
      std::size_t k = tok.size() % 2 == 1 ? 1 : 0;
      for (; k + 1 < tok.size(); k += 2) rhs(tok[k], value(tok[k + 1]));
    } else if (section == "BOUNDS") {
      if (tok.size() < 3) fail("short bound");
      auto it = cols.find(tok[2]);
      if (it == cols.end()) fail("bound on unknown column " + tok[2]);
      MilpColumn& c = m.columns[it->second];
      const std::string& t = tok[0];
      auto arg = [&] {
        if (tok.size() < 4) fail(t + " bound needs a value");
        return value(tok[3]);
      };
      if (t == "FR") {
        c.lower = -kInf;
        c.upper = kInf;
      } else if (t == "MI") {
        c.lower = -kInf;
      } else if (t == "PL") {
        c.upper = kInf;
      } else if (t == "BV") {
        c.integer = true;
        c.lower = 0.0;
        c.upper = 1.0;
      } else if (t == "LO") {
        c.lower = arg();
      } else if (t == "UP") {
        c.upper = arg();
      } else if (t == "FX") {
        c.lower = c.upper = arg();
      } else if (t == "LI") {
        c.integer = true;
        c.lower = arg();
      } else if (t == "UI") {
        c.integer = true;
        c.upper = arg();
      } else {
        fail("unsupported bound type " + t);
      }
    } else {
      fail("data outside a known section");
    }
  }
  if (!ended) throw ParseError("", "MPS text has no ENDATA");
  m.num_continuous = static_cast<int>(m.columns.size());
  return m;
}

}  // namespace trimarket
