#!/usr/bin/env python3
# Copyright 2026 The trimarket Authors
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Solves a free-MPS MILP with scipy.optimize.milp (HiGHS).

Usage: scipy_milp.py MODEL.mps SOLUTION.sol [TIME_LIMIT]

Writes "status <word>" and then one "name value" line per column, the
format the external solver adapter reads.
"""

import math
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix


def read_free_mps(path):
    rows, senses, rhs = {}, [], []
    cols, cost, integer, lower, upper = {}, [], [], [], []
    entries = []
    objective_row, constant = None, 0.0
    section, in_int = None, False
    with open(path) as f:
        for line in f:
            if not line.strip() or line.startswith("*"):
                continue
            tok = line.split()
            if not line[0].isspace():
                section = tok[0]
                continue
            if section == "ROWS":
                if tok[0] == "N":
                    objective_row = objective_row or tok[1]
                else:
                    rows[tok[1]] = len(senses)
                    senses.append(tok[0])
                    rhs.append(0.0)
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    in_int = tok[2] == "'INTORG'"
                    continue
                name = tok[0]
                if name not in cols:
                    cols[name] = len(cost)
                    cost.append(0.0)
                    integer.append(in_int)
                    lower.append(0.0)
                    upper.append(1.0 if in_int else math.inf)
                j = cols[name]
                for k in range(1, len(tok) - 1, 2):
                    row, value = tok[k], float(tok[k + 1])
                    if row == objective_row:
                        cost[j] += value
                    else:
                        entries.append((rows[row], j, value))
            elif section == "RHS":
                pairs = tok[1:] if len(tok) % 2 == 1 else tok
                for k in range(0, len(pairs) - 1, 2):
                    if pairs[k] == objective_row:
                        constant = -float(pairs[k + 1])
                    else:
                        rhs[rows[pairs[k]]] = float(pairs[k + 1])
            elif section == "BOUNDS":
                kind, j = tok[0], cols[tok[2]]
                value = float(tok[3]) if len(tok) > 3 else None
                if kind == "FR":
                    lower[j], upper[j] = -math.inf, math.inf
                elif kind == "MI":
                    lower[j] = -math.inf
                elif kind == "PL":
                    upper[j] = math.inf
                elif kind == "BV":
                    integer[j], lower[j], upper[j] = True, 0.0, 1.0
                elif kind == "LO":
                    lower[j] = value
                elif kind == "UP":
                    upper[j] = value
                elif kind == "FX":
                    lower[j] = upper[j] = value
                else:
                    raise ValueError(f"unsupported bound {kind}")
    names = [None] * len(cols)
    for name, j in cols.items():
        names[j] = name
    return names, cost, integer, lower, upper, senses, rhs, entries, constant


def main(argv):
    if len(argv) < 3:
        print(__doc__, file=sys.stderr)
        return 1
    names, cost, integer, lower, upper, senses, rhs, entries, _ = read_free_mps(argv[1])
    n, m = len(names), len(senses)
    options = {"time_limit": float(argv[3])} if len(argv) > 3 else {}
    constraints = []
    if m:
        r, c, v = zip(*entries) if entries else ((), (), ())
        a = coo_matrix((v, (r, c)), shape=(m, n)).tocsr()
        lo = [b if s in ("E", "G") else -np.inf for s, b in zip(senses, rhs)]
        hi = [b if s in ("E", "L") else np.inf for s, b in zip(senses, rhs)]
        constraints.append(LinearConstraint(a, lo, hi))
    res = milp(np.array(cost), constraints=constraints, integrality=np.array(integer, dtype=int),
               bounds=Bounds(lower, upper), options=options)
    if res.status == 0:
        status = "optimal"
    elif res.status == 2:
        status = "infeasible"
    elif res.status == 1:
        status = "feasible" if res.x is not None else "timeout"
    else:
        status = "error"
    with open(argv[2], "w") as out:
        out.write(f"status {status}\n")
        if res.x is not None and status in ("optimal", "feasible"):
            for name, value in zip(names, res.x):
                out.write(f"{name} {float(value)!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
