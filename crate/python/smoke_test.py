#!/usr/bin/env python3
"""Smoke test for the irpkit Python bindings.

Builds the extension module with cargo, loads it, and runs a handful of
end-to-end checks: oracle values, formulation/oracle agreement on a small
instance, LP relaxation bounds and file export.

Usage: python3 python/smoke_test.py
"""

import math
import subprocess
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_extension() -> Path:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "irpkit-py"],
        cwd=ROOT,
        check=True,
    )
    built = ROOT / "target" / "release" / "libirpkit_py.so"
    if not built.exists():  # macOS
        built = ROOT / "target" / "release" / "libirpkit_py.dylib"
    stage = ROOT / "build" / "python"
    stage.mkdir(parents=True, exist_ok=True)
    target = stage / "irpkit_py.so"
    shutil.copy2(built, target)
    return stage


def main() -> int:
    sys.path.insert(0, str(build_extension()))
    import irpkit_py as irp

    # lot-sizing oracle
    cost, periods = irp.wagner_whitin([10, 20], 10, 1)
    assert cost == 20.0 and periods == [1, 2], (cost, periods)
    cost, periods = irp.wagner_whitin([10, 20], 100, 1)
    assert cost == 120.0 and periods == [1], (cost, periods)
    cost, periods = irp.wagner_whitin([0, 0, 0], 10, 1)
    assert cost == 0.0 and periods == [], (cost, periods)

    # exact tour on a 3-4-5 triangle
    dist = [[0.0, 3.0, 4.0], [3.0, 0.0, 5.0], [4.0, 5.0, 0.0]]
    cost, order = irp.held_karp(dist)
    assert abs(cost - 12.0) < 1e-9 and order[0] == 0, (cost, order)

    # generators are deterministic
    a = irp.Instance.design1(1, 3, 5)
    b = irp.Instance.design1(1, 3, 5)
    assert a.to_text() == b.to_text()
    assert all(10 <= d <= 100 for row in a.demand for d in row)

    sc4 = irp.Instance.design2(4, 1)
    assert sc4.num_retailers == 16 and sc4.num_periods == 15
    assert all(sum(row) == 1600 for row in sc4.demand)
    assert sc4.ordering == [1000.0] * 16

    # demand patterns
    assert irp.pattern("STA", 4) == [100, 100, 100, 100]
    assert irp.pattern("SIN1", 3, amplitude=0) == [100, 100, 100]
    lcy = irp.pattern("LCY1", 15)
    peak = lcy.index(max(lcy))
    assert 0 < peak < 14, lcy

    # formulations agree with the exhaustive oracle on a small instance
    inst = irp.Instance.random(7, 3, 2)
    oracle = irp.brute_force(inst)
    for name in ["CMILP+MTZ", "CMILP+SC", "SP+DL", "CMILP+2C", "CMILP+DL+NR"]:
        result, plan = irp.solve_irp(inst, name, time_limit=120)
        assert result.status == "optimal", (name, result.status)
        assert math.isclose(result.objective, oracle.total_cost, rel_tol=1e-6), (
            name,
            result.objective,
            oracle.total_cost,
        )
        assert plan is not None
        assert math.isclose(plan.total_cost, result.objective, rel_tol=1e-6)

    # LP relaxation never exceeds the MIP optimum, and the bound tightens
    model = irp.build(inst, "CMILP+MTZ")
    assert model.num_integer_vars > 0
    relaxed = model.relax()
    assert relaxed.num_integer_vars == 0
    lp = irp.solve_lp(relaxed)
    assert lp.status == "optimal"
    assert lp.objective <= oracle.total_cost + 1e-6
    gap_mtz = irp.lp_gap(model, oracle.total_cost)
    gap_dl = irp.lp_gap(irp.build(inst, "CMILP+DL"), oracle.total_cost)
    assert gap_mtz >= gap_dl - 1e-9, (gap_mtz, gap_dl)
    assert irp.compute_gap(100, 90) == 10.0

    # order-network LP is integral
    sp = irp.lot_sizing_model([12, 0, 7, 30], 25, 0.5, kind="SP")
    sol = irp.solve_lp(sp)
    dp_cost, _ = irp.wagner_whitin([12, 0, 7, 30], 25, 0.5)
    assert math.isclose(sol.objective, dp_cost, rel_tol=1e-9)
    assert all(abs(v - round(v)) < 1e-6 for v in sol.values)

    # standalone tour model matches the oracle
    tsp = irp.tsp_model(dist, "SC")
    res = irp.solve_mip(tsp, time_limit=60)
    assert math.isclose(res.objective, 12.0, rel_tol=1e-9)

    # export round trip
    with tempfile.TemporaryDirectory() as tmp:
        lp_path = str(Path(tmp) / "model.lp")
        model.export_lp(lp_path)
        text = Path(lp_path).read_text()
        assert text.startswith("\\") and text.rstrip().endswith("End")
        assert Path(lp_path).with_suffix(".map").exists()

        inst_path = str(Path(tmp) / "inst.txt")
        inst.save(inst_path)
        again = irp.Instance.load(inst_path)
        assert again.to_text() == inst.to_text()

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
