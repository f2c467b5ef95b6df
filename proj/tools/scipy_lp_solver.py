#!/usr/bin/env python3
"""Reference solver for rdao LP exports, backed by scipy's HiGHS interface.

Usage: scipy_lp_solver.py model.lp solution.txt

Reads the CPLEX LP subset written by rdao and writes the status, the objective
and one value per column. Column indices are recovered from the numeric suffix
every exported name carries.
"""
import re
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

TERM = re.compile(r"([+-])\s*([0-9.eE+-]+)\s+([A-Za-z_][A-Za-z0-9_]*)")
SUFFIX = re.compile(r"(\d+)$")


def column(name):
    return int(SUFFIX.search(name).group(1))


def parse(path):
    text = open(path).read()
    lines = [ln for ln in text.splitlines() if not ln.startswith("\\")]
    section = None
    buf = []
    sections = {"Minimize": [], "Subject To": [], "Bounds": [], "Binaries": []}
    for ln in lines:
        s = ln.strip()
        if s in sections or s == "End":
            section = s
            continue
        if section in sections:
            sections[section].append(ln)
    header = re.search(r"\\ (\d+) variables", text)
    n = int(header.group(1))

    c = np.zeros(n)
    obj = " ".join(sections["Minimize"]).split(":", 1)[1]
    for sign, coef, name in TERM.findall(obj):
        c[column(name)] += float(coef) * (-1 if sign == "-" else 1)

    # Rows may wrap; a new row starts with "name:".
    rows = []
    for ln in sections["Subject To"]:
        if re.match(r"^\s\S+:", ln):
            rows.append(ln.split(":", 1)[1])
        else:
            rows[-1] += " " + ln
    ri, ci, vals, lo, hi = [], [], [], [], []
    for r, body in enumerate(rows):
        m = re.search(r"(<=|>=|=)\s*(\S+)\s*$", body)
        sense, rhs = m.group(1), float(m.group(2))
        for sign, coef, name in TERM.findall(body[: m.start()]):
            ri.append(r)
            ci.append(column(name))
            vals.append(float(coef) * (-1 if sign == "-" else 1))
        lo.append(-np.inf if sense == "<=" else rhs)
        hi.append(np.inf if sense == ">=" else rhs)

    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    for ln in sections["Bounds"]:
        parts = ln.split()
        if parts[1] == "free":
            lb[column(parts[0])], ub[column(parts[0])] = -np.inf, np.inf
        elif parts[1] == "=":
            j = column(parts[0])
            lb[j] = ub[j] = float(parts[2])
        else:
            j = column(parts[2])
            lb[j] = -np.inf if parts[0] == "-inf" else float(parts[0])
            ub[j] = np.inf if parts[4] == "+inf" else float(parts[4])
    integrality = np.zeros(n)
    for ln in sections["Binaries"]:
        j = column(ln.strip())
        integrality[j] = 1
        lb[j], ub[j] = 0.0, 1.0
    A = coo_matrix((vals, (ri, ci)), shape=(len(rows), n)).tocsr()
    return c, A, np.array(lo), np.array(hi), lb, ub, integrality


def main():
    c, A, lo, hi, lb, ub, integrality = parse(sys.argv[1])
    cons = [LinearConstraint(A, lo, hi)] if A.shape[0] else []
    res = milp(c, constraints=cons, bounds=Bounds(lb, ub), integrality=integrality,
               options={"mip_rel_gap": 1e-12})
    with open(sys.argv[2], "w") as out:
        if res.status == 0:
            out.write("optimal\n%.17g\n" % res.fun)
            out.write("\n".join("%.17g" % v for v in res.x) + "\n")
        elif res.status == 2:
            out.write("infeasible\n")
        elif res.status == 3:
            out.write("unbounded\n")
        else:
            out.write("limit\n")


if __name__ == "__main__":
    main()
