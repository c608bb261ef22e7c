"""Acceptance suite: one test and one printed verdict line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as the
criteria execute; heavy solves are shared across criteria through
session-scoped fixtures whose build times are tracked for the runtime
budgets.
"""

import math
import time

import numpy as np
import pytest

import quadwalk as qw
from quadwalk.asymptotics import ray_targets, thm3_targets
from quadwalk.cli import main
from quadwalk.model import StepDistribution

from conftest import make_model

Z99 = 2.576

CONTOUR_TARGETS = [
    (1, 1), (2, 3), (4, 2), (5, 5), (3, 6), (7, 4), (2, 8), (6, 6), (8, 3), (9, 7),
]
PANEL_50 = [(i, j) for i in range(8) for j in range(8) if i + j <= 10][:50]


def report(n: int, ok: bool, detail: str):
    print(f"\nACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def timings():
    return {}


@pytest.fixture(scope="module")
def pipeline(timings):
    """Reference-model solves shared by criteria 4-9."""
    model = qw.load_model("reference")

    t = time.perf_counter()
    analysis = qw.analyze(model)
    timings["analysis"] = time.perf_counter() - t

    t = time.perf_counter()
    chain_x = qw.solve_chain(model, "x1", x_root=analysis.x1)
    chain_y = qw.solve_chain(model, "y2", x_root=analysis.y1)
    timings["chains"] = time.perf_counter() - t

    targets = set(PANEL_50) | set(CONTOUR_TARGETS)
    targets |= {(1, j) for j in range(10, 41)}
    targets |= set(ray_targets(analysis.gamma0, 20, 60))
    targets |= set(thm3_targets(64))
    t = time.perf_counter()
    table = qw.green_exact(model, (1, 1), sorted(targets), tol=1e-9)
    timings["table11"] = time.perf_counter() - t

    t = time.perf_counter()
    table_ref = qw.green_exact(model, (0, 0), sorted(thm3_targets(64)), tol=1e-9)
    timings["table00"] = time.perf_counter() - t

    t = time.perf_counter()
    escape = qw.escape_exact(model, analysis.t0, sources=[(1, 1), (0, 0)], tol=1e-9)
    timings["escape"] = time.perf_counter() - t

    return {
        "model": model,
        "analysis": analysis,
        "chain_x": chain_x,
        "chain_y": chain_y,
        "table": table,
        "table_ref": table_ref,
        "escape": escape,
    }


def test_criterion_01_kernel_roots_on_the_nonsym_example():
    model = qw.load_model("nonsym")
    t = time.perf_counter()
    x1 = qw.one_d_root(model, "x")
    y1 = qw.one_d_root(model, "y")
    elapsed = time.perf_counter() - t
    ok = abs(x1 - 2.0) < 1e-9 and abs(y1 - 3.0) < 1e-9 and elapsed < 1.0
    report(1, ok, f"x1={x1!r} y1={y1!r} in {elapsed * 1e3:.1f} ms")


def test_criterion_02_rationality_dichotomy():
    nonsym = qw.analyze(qw.load_model("nonsym"), qmax=10**6, tol=1e-12)
    symmetric = qw.analyze(qw.load_model("symmetric"), qmax=10**6, tol=1e-12)
    ok = (
        str(nonsym.verdict) == "NoRationalWithin(1000000)"
        and abs(nonsym.t0 - math.log(2) / math.log(3)) < 1e-12
        and str(symmetric.verdict) == "Rational(1, 1)"
    )
    report(2, ok, f"nonsym: {nonsym.verdict}; symmetric: {symmetric.verdict}")


def _random_negative_drift_model(rng):
    offsets = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)]
    while True:
        w = rng.random(len(offsets))
        w /= w.sum()
        entries = dict(zip(offsets, w))
        m = StepDistribution(entries, floor=(-1, -1)).mean()
        if m.m1 < -0.02 and m.m2 < -0.02:
            return make_model(entries)


def test_criterion_03_branch_derivative_identities():
    rng = np.random.default_rng(2718)
    worst1 = worst2 = 0.0
    margins = []
    for _ in range(5):
        model = _random_negative_drift_model(rng)
        a, bb = qw.derivatives_at_one(model)
        h = 1e-5
        fd1 = (qw.branch_Y0(model, 1 + h) - qw.branch_Y0(model, 1 - h)).real / (2 * h)
        # five-point stencil: the three-point second difference carries an
        # O(h^2 Y0'''') truncation term that can reach 1e-4 on skewed models
        h = 1e-3
        y = [qw.branch_Y0(model, 1 + k * h).real for k in (-2, -1, 0, 1, 2)]
        fd2 = (-y[4] + 16 * y[3] - 30 * y[2] + 16 * y[1] - y[0]) / (12 * h**2)
        worst1 = max(worst1, abs(fd1 - a))
        worst2 = max(worst2, abs(fd2 - bb))
        margins.append(a * a - a - bb)
    ok = worst1 < 1e-6 and worst2 < 1e-4 and all(m < 0 for m in margins)
    report(
        3,
        ok,
        f"5 random models: |fd1-a|<={worst1:.2e} |fd2-b''|<={worst2:.2e} "
        f"max margin {max(margins):.3f}",
    )


def test_criterion_04_induced_chain_solution(pipeline):
    cx = pipeline["chain_x"]
    x1 = pipeline["analysis"].x1
    slope_dev = abs(math.log(cx.tail.fitted_rate) - math.log(x1)) / math.log(x1)
    ok = cx.residual < 1e-10 and slope_dev <= 0.02 and cx.tail.quality <= 0.01
    report(
        4,
        ok,
        f"residual={cx.residual:.2e} slope dev={slope_dev:.2e} "
        f"prefactor gap={cx.tail.quality:.2e} on window {cx.tail.window}",
    )


def test_criterion_05_fluid_limit(pipeline):
    t = time.perf_counter()
    est = qw.fluid_limit_experiment(pipeline["model"], "x1", n=10_000, reps=200, seed=11)
    elapsed = time.perf_counter() - t
    dev = abs(est.mean - pipeline["chain_x"].V)
    ok = dev < 3 * est.stderr and elapsed < 30.0
    report(
        5,
        ok,
        f"slope={est.mean:.6f} V1={pipeline['chain_x'].V:.6f} "
        f"dev={dev / est.stderr:.2f} stderr in {elapsed:.1f} s",
    )


def test_criterion_06_green_cross_oracles(pipeline):
    model = pipeline["model"]
    table = pipeline["table"]

    est = qw.green_mc(model, (1, 1), PANEL_50, max_steps=4000, reps=3000, seed=42,
                      confidence_z=Z99)
    covered = sum(1 for t, e in est.items() if e.covers(table.value(*t)))

    gens = qw.GeneratingFunctions(
        table, model, pipeline["chain_x"], pipeline["chain_y"],
        pipeline["escape"].at(1, 1),
    )
    oracle = qw.ContourOracle(model, gens, eps=0.1, quad_n=512)
    rel = max(
        abs(oracle.value(i, j) - table.value(i, j)) / abs(table.value(i, j))
        for (i, j) in CONTOUR_TARGETS
    )

    rng = np.random.default_rng(7)
    res = 0.0
    for _ in range(100):
        rx, ry = 0.9 * np.sqrt(rng.random(2))
        tx, ty = 2 * np.pi * rng.random(2)
        res = max(
            res,
            gens.functional_equation_residual(
                rx * np.exp(1j * tx), ry * np.exp(1j * ty)
            ),
        )

    ok = covered >= 0.95 * len(PANEL_50) and rel <= 1e-6 and res < 1e-6
    report(
        6,
        ok,
        f"mc coverage {covered}/{len(PANEL_50)}; contour rel err {rel:.2e}; "
        f"functional-equation residual {res:.2e}",
    )


def test_criterion_07_boundary_green_limit(pipeline):
    rep = qw.verify_thm1(
        pipeline["model"], (1, 1), 1, range(10, 41),
        pipeline["table"], pipeline["chain_x"], pipeline["escape"].at(1, 1),
    )
    ok = rep.passed and rep.decay_ratio >= 1e3 and rep.fitted_slope < 0
    report(
        7,
        ok,
        f"residual decay {rep.decay_ratio:.2e} over j in [10,40], "
        f"slope {rep.fitted_slope:.3f}, floor {rep.floor:.1e}",
    )


def test_criterion_08_interior_green_asymptotics(pipeline, timings):
    t = time.perf_counter()
    rep = qw.verify_thm2(
        pipeline["model"], (1, 1), pipeline["analysis"].gamma0, (20, 60),
        pipeline["table"], pipeline["chain_x"], pipeline["chain_y"],
        pipeline["escape"].at(1, 1),
    )
    elapsed = time.perf_counter() - t
    budget = (
        timings["analysis"] + timings["chains"] + timings["table11"]
        + timings["escape"] + elapsed
    )
    ok = rep.passed and rep.max_outer_deviation < 0.05 and budget < 300.0
    report(
        8,
        ok,
        f"max |ratio-1| = {rep.max_outer_deviation:.2e} on the outer third "
        f"(pipeline {budget:.0f} s)",
    )


def test_criterion_09_martin_boundary_regimes(pipeline):
    rep = qw.verify_thm3(
        pipeline["model"], (1, 1), pipeline["analysis"],
        pipeline["chain_x"], pipeline["chain_y"],
        pipeline["table"], pipeline["table_ref"],
        pipeline["escape"].at(1, 1), pipeline["escape"].at(0, 0),
        diag=64, n_window=6, tolerance=0.02,
    )

    sym = qw.load_model("symmetric")
    sym_analysis = qw.analyze(sym)
    sym_cx = qw.solve_chain(sym, "x1", x_root=sym_analysis.x1)
    sym_cy = qw.solve_chain(sym, "y2", x_root=sym_analysis.y1)
    sym_esc = qw.escape_exact(sym, sym_analysis.t0, sources=[(2, 3), (0, 0)], tol=1e-7)
    spec = qw.boundary_spectrum(
        sym, (2, 3), 5, sym_analysis, sym_cx, sym_cy,
        sym_esc.at(2, 3), sym_esc.at(0, 0),
    )
    discrete_ok = spec.kind.startswith("discrete") and all(
        u == pytest.approx(sym_analysis.y1**n, rel=1e-12)
        for n, u in zip(range(-5, 6), spec.u_values)
    )

    ok = (
        rep.passed
        and rep.deviation_high < 0.02
        and rep.deviation_low < 0.02
        and rep.spectrum.strictly_monotone
        and rep.spectrum.bracketed()
        and discrete_ok
    )
    report(
        9,
        ok,
        f"directional devs {rep.deviation_high:.2e}/{rep.deviation_low:.2e}; "
        f"spectrum monotone={rep.spectrum.strictly_monotone} "
        f"bracketed={rep.spectrum.bracketed()}; symmetric lattice at powers of "
        f"y1={discrete_ok}",
    )


DETERMINISM_COMMANDS = [
    ["validate", "reference"],
    ["kernel", "nonsym"],
    ["chains", "reference", "--axis", "y"],
    ["simulate", "reference", "--start", "2,2", "--steps", "200"],
    ["simulate", "reference", "--start", "2,6", "--steps", "300", "--reps", "40",
     "--hitting", "tau,T1k", "--hit-k", "1"],
    ["green", "reference", "--source", "1,1", "--targets", "1,1;2,2;4,1",
     "--method", "exact", "--green-tol", "1e-4"],
    ["green", "reference", "--source", "1,1", "--targets", "1,1;2,2",
     "--method", "mc", "--reps", "300", "--steps", "1500"],
    ["green", "reference", "--source", "1,1", "--targets", "2,2;3,3",
     "--method", "contour", "--green-tol", "1e-5", "--escape-tol", "1e-5"],
    ["verify", "thm1", "reference", "--sweep-lo", "6", "--sweep-hi", "14",
     "--green-tol", "1e-8", "--escape-tol", "1e-7"],
    ["verify", "thm2", "reference", "--diag", "24",
     "--green-tol", "1e-6", "--escape-tol", "1e-6"],
    ["verify", "thm3", "reference", "--diag", "24",
     "--green-tol", "1e-6", "--escape-tol", "1e-6"],
    ["spectrum", "reference", "--source", "1,1", "--n-window", "3",
     "--escape-tol", "1e-6"],
]


def test_criterion_10_byte_reproducibility(tmp_path, capsys):
    failures = []
    for n, argv in enumerate(DETERMINISM_COMMANDS):
        outputs = []
        for run in (0, 1):
            csv = tmp_path / f"cmd{n}_run{run}.csv"
            args = list(argv) + ["--csv", str(csv)]
            if argv[0] == "verify":
                args += ["--svg", str(tmp_path / f"cmd{n}_run{run}.svg")]
            code = main(args)
            captured = capsys.readouterr()
            svg = tmp_path / f"cmd{n}_run{run}.svg"
            outputs.append(
                (
                    code,
                    captured.out,
                    csv.read_bytes() if csv.exists() else b"",
                    svg.read_bytes() if svg.exists() else b"",
                )
            )
        if outputs[0] != outputs[1] or outputs[0][0] != 0:
            failures.append(" ".join(argv))
    report(
        10,
        not failures,
        f"{len(DETERMINISM_COMMANDS)} commands byte-identical across reruns"
        if not failures
        else f"non-reproducible or failing: {failures}",
    )
