"""Smoke test for the Python bindings.

Build and install first, e.g. with maturin from crates/py:

    maturin develop --release -m crates/py/Cargo.toml --features extension-module
"""

import json
import math
import pathlib

import inflow_ns_py as ns

ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


def main():
    exps, delta = ns.certificates("lens")
    assert exps == [1, 1] and delta == 1.0, (exps, delta)
    assert ns.certificates("disk")[1] == 0.5
    assert ns.certificates("rectangle") == ([], None)

    g = ns.Grid("rectangle", 12, 12)
    assert len(g) == 13 * 13
    assert abs(sum(g.weights()) - 1.0) < 1e-12
    lin = [x1 + 2 * x2 for x1, x2 in g.nodes()]
    assert g.seminorm([3.0] * len(g), 0.5, 5.0) == 0.0
    a = g.seminorm(lin, 0.5, 5.0)
    b = g.seminorm([2 * v for v in lin], 0.5, 5.0)
    assert abs(b - 2 * a) < 1e-12 * b
    assert abs(g.lq_norm([1.0] * len(g), 2.0) - 1.0) < 1e-12

    sc = ns.Scenario.load(str(SCENARIOS / "square_inflow.toml"))
    sc.set("n", 12)
    report, fields = sc.run("solve")
    report = json.loads(report)
    assert report["iteration"]["status"] == "converged", report["iteration"]
    cols = dict(fields)
    assert len(cols["rho"]) == 13 * 13
    assert all(r > 0.5 for r in cols["rho"])

    geo, fields = ns.Scenario.load(str(SCENARIOS / "disk_rough_norm.toml")).run("geometry-check")
    assert json.loads(geo)["admissible"] is False and fields is None

    try:
        ns.Scenario.load(str(SCENARIOS / "malformed.toml")).run()
    except ValueError:
        pass
    else:
        raise AssertionError("malformed domain accepted")

    rows = json.loads(ns.mms_study("trig1", [8, 16]))
    assert math.isfinite(rows[-1]["order_l2"])

    print("smoke test ok")


if __name__ == "__main__":
    main()
