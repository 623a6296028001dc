#!/usr/bin/env python3
"""Cross-check exported models against an independent MILP solver.

Parses the fixed-MPS files written by `irpkit build --mps` and solves them
with scipy's HiGHS backend. Two modes:

  desk mode (default):
      generates small instances, solves each exported model externally and
      compares against irpkit's own branch-and-bound optimum.

  scenario mode (--scenario N [--time-limit S]):
      exports the 16-retailer scenario model (CMILP+SC) at full scale and
      reports the external solver's result. Scenario 4 and 13 have reference
      optima 103020 and 145080 on the original coordinate layout; with a
      different 17-point layout the routing share of the optimum shifts, so
      match those numbers only when supplying that layout via --layout.

Usage:
  python3 python/external_check.py
  python3 python/external_check.py --scenario 4 --time-limit 300
"""

import argparse
import re
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.optimize import LinearConstraint, Bounds, milp

ROOT = Path(__file__).resolve().parent.parent
BIN = ROOT / "target" / "debug" / "irpkit"


def parse_mps(path):
    """Minimal fixed-MPS reader for the subset irpkit writes."""
    rows = {}  # name -> (kind)
    row_order = []
    cols = {}  # name -> list[(row, coef)]
    col_order = []
    integrality = {}
    rhs = {}
    bounds = {}
    section = None
    in_int = False
    for raw in path.read_text().splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        parts = raw.split()
        if section == "ROWS":
            kind, name = parts
            if kind == "N":
                rows["__obj__"] = "N"
            else:
                rows[name] = kind
                row_order.append(name)
        elif section == "COLUMNS":
            if "MARKER" in raw and "'MARKER'" in raw:
                in_int = "'INTORG'" in raw
                continue
            name, row, coef = parts[0], parts[1], float(parts[2])
            if name not in cols:
                cols[name] = []
                col_order.append(name)
                integrality[name] = in_int
            cols[name].append((row, coef))
        elif section == "RHS":
            _, row, value = parts
            rhs[row] = float(value)
        elif section == "BOUNDS":
            kind = parts[0]
            name = parts[2]
            lo, hi = bounds.get(name, (0.0, np.inf))
            if kind == "BV":
                bounds[name] = (0.0, 1.0)
            elif kind == "UP":
                bounds[name] = (lo, float(parts[3]))
            elif kind == "LO":
                bounds[name] = (float(parts[3]), hi)
            elif kind == "FX":
                v = float(parts[3])
                bounds[name] = (v, v)
            elif kind == "MI":
                bounds[name] = (-np.inf, hi)
            elif kind == "FR":
                bounds[name] = (-np.inf, np.inf)
            else:
                raise ValueError(f"unsupported bound kind {kind}")
    ncols = len(col_order)
    col_idx = {name: k for k, name in enumerate(col_order)}
    row_idx = {name: k for k, name in enumerate(row_order)}
    c = np.zeros(ncols)
    data, ri, ci = [], [], []
    for name, entries in cols.items():
        j = col_idx[name]
        for row, coef in entries:
            if row == "COST":
                c[j] += coef
            else:
                data.append(coef)
                ri.append(row_idx[row])
                ci.append(j)
    a = sparse.csr_matrix((data, (ri, ci)), shape=(len(row_order), ncols))
    lb = np.full(len(row_order), -np.inf)
    ub = np.full(len(row_order), np.inf)
    for name, kind in rows.items():
        if name == "__obj__":
            continue
        k = row_idx[name]
        b = rhs.get(name, 0.0)
        if kind == "L":
            ub[k] = b
        elif kind == "G":
            lb[k] = b
        else:
            lb[k] = ub[k] = b
    vlo = np.zeros(ncols)
    vhi = np.full(ncols, np.inf)
    for name, (lo, hi) in bounds.items():
        j = col_idx[name]
        vlo[j], vhi[j] = lo, hi
    integ = np.array([1 if integrality[name] else 0 for name in col_order])
    return c, a, lb, ub, vlo, vhi, integ


def solve_mps(path, time_limit=None):
    c, a, lb, ub, vlo, vhi, integ = parse_mps(path)
    options = {"presolve": True}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    res = milp(
        c=c,
        constraints=LinearConstraint(a, lb, ub),
        bounds=Bounds(vlo, vhi),
        integrality=integ,
        options=options,
    )
    return res


def run(args):
    out = subprocess.run([str(BIN)] + args, capture_output=True, text=True)
    if out.returncode != 0:
        raise RuntimeError(f"irpkit {' '.join(args)} failed:\n{out.stderr}")
    return out.stdout


def desk_mode():
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for seed, r, n, inv, tsp in [
            (1, 3, 2, "CMILP", "SC"),
            (2, 4, 2, "CMILP", "MTZ"),
            (3, 3, 3, "SP", "DL"),
            (4, 4, 3, "CMILP", "2C"),
            (5, 5, 2, "SP", "SC"),
        ]:
            inst = tmp / f"i{seed}.txt"
            mps = tmp / f"m{seed}.mps"
            run(["gen", "--design", "1", "--seed", str(seed), "--periods", str(n),
                 "--retailers", str(r), "--out", str(inst)])
            run(["build", "--instance", str(inst), "--inv", inv, "--tsp", tsp,
                 "--mps", "--out", str(mps)])
            solve_out = run(["solve", "--instance", str(inst), "--inv", inv,
                             "--tsp", tsp, "--time-limit", "120"])
            own = float(re.search(r"optimal", solve_out) and
                        solve_out.splitlines()[1].split(",")[5])
            ext = solve_mps(mps)
            status = "OK" if abs(ext.fun - own) <= 1e-5 * (1 + abs(own)) else "MISMATCH"
            if status != "OK":
                failures += 1
            print(f"seed {seed} {inv}+{tsp} r={r} N={n}: "
                  f"irpkit {own:.6f}, external {ext.fun:.6f} -> {status}")
    if failures:
        print(f"{failures} mismatches")
        return 1
    print("external solver agrees with irpkit on every exported model")
    return 0


def scenario_mode(scenario, time_limit, layout):
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        inst = tmp / "scenario.txt"
        mps = tmp / "scenario.mps"
        gen = ["gen", "--design", "2", "--scenario", str(scenario), "--seed", "1",
               "--out", str(inst)]
        if layout:
            gen += ["--layout", layout]
        run(gen)
        run(["build", "--instance", str(inst), "--inv", "CMILP", "--tsp", "SC",
             "--mps", "--out", str(mps)])
        print(f"solving scenario {scenario} (CMILP+SC) externally, "
              f"time limit {time_limit}s ...")
        res = solve_mps(mps, time_limit=time_limit)
        print(f"status: {res.status} ({res.message.strip()})")
        if res.x is not None:
            print(f"objective: {res.fun:.2f}")
            if hasattr(res, "mip_dual_bound"):
                print(f"dual bound: {res.mip_dual_bound:.2f}, "
                      f"gap: {res.mip_gap * 100:.3f}%")
        print("reference optima on the original layout: "
              "scenario 4 -> 103020, scenario 13 -> 145080")
    return 0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scenario", type=int, default=None)
    ap.add_argument("--time-limit", type=float, default=300.0)
    ap.add_argument("--layout", type=str, default=None)
    args = ap.parse_args()
    if not BIN.exists():
        subprocess.run(["cargo", "build", "-p", "irpkit"], cwd=ROOT, check=True)
    if args.scenario is None:
        return desk_mode()
    return scenario_mode(args.scenario, args.time_limit, args.layout)


if __name__ == "__main__":
    sys.exit(main())
