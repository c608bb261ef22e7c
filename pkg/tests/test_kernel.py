import cmath
import math
from math import gcd

import numpy as np
import pytest

import quadwalk as qw
from quadwalk.errors import NoSecondRoot
from quadwalk.kernel import KernelEvaluator, small_root_at
from quadwalk.model import StepDistribution

from conftest import NONSYM_INTERIOR, make_model


def quadratic_small_branch(x):
    """Independent evaluator of the small kernel branch for the nonsym
    interior: clearing denominators in
        x/6 + 1/(3x) + y/8 + 3/(8y) = 1
    gives (1/8) y^2 + B(x) y + 3/8 = 0 with B = x/6 + 1/(3x) - 1, and the
    small branch is the root through y = 1 at x = 1."""
    B = x / 6 + 1 / (3 * x) - 1
    disc = cmath.sqrt(B * B - 4 * (1 / 8) * (3 / 8))
    r1 = (-B - disc) / (2 / 8)
    r2 = (-B + disc) / (2 / 8)
    return r1 if abs(r1 - 1) < abs(r2 - 1) else r2


@pytest.fixture(scope="module")
def nonsym_model():
    return make_model(NONSYM_INTERIOR)


def test_roots_on_nonsym(nonsym_model):
    assert qw.one_d_root(nonsym_model, "x") == pytest.approx(2.0, abs=1e-12)
    assert qw.one_d_root(nonsym_model, "y") == pytest.approx(3.0, abs=1e-12)


def test_root_residual_certified(nonsym_model):
    ev = KernelEvaluator(nonsym_model)
    x1 = qw.one_d_root(nonsym_model, "x")
    y1 = qw.one_d_root(nonsym_model, "y")
    assert abs(ev.Q(x1, 1.0)) < 1e-10
    assert abs(ev.Q(1.0, y1)) < 1e-10


def test_symmetric_model_has_equal_roots(symmetric):
    assert qw.one_d_root(symmetric, "x") == pytest.approx(
        qw.one_d_root(symmetric, "y"), abs=1e-13
    )


def test_kernel_vanishes_at_one():
    for name in ("reference", "nonsym", "symmetric"):
        ev = KernelEvaluator(qw.load_model(name))
        assert abs(ev.Q(1.0, 1.0)) < 1e-14


def test_no_second_root_without_forward_mass():
    model = make_model({(-1, 0): 0.5, (0, -1): 0.25, (0, 1): 0.25})
    with pytest.raises(NoSecondRoot):
        qw.one_d_root(model, "x")


def test_small_branch_at_one(nonsym_model):
    assert qw.branch_Y0(nonsym_model, 1.0) == pytest.approx(1.0, abs=1e-13)


def test_small_branch_matches_quadratic_oracle(nonsym_model):
    for x in (1.001, 1.0 + 1e-3j, 0.995 + 2e-3j):
        y = qw.branch_Y0(nonsym_model, x)
        assert y == pytest.approx(quadratic_small_branch(x), abs=1e-11)
    assert qw.branch_Y0(nonsym_model, 1.001).real < 1.0


def test_branch_derivatives_match_finite_differences(nonsym_model):
    a, bb = qw.derivatives_at_one(nonsym_model)
    # drift ratio: -EX/EY = -(-1/6)/(-1/4) = -2/3
    assert a == pytest.approx(-2 / 3, abs=1e-14)
    # second derivative frozen from the quadratic oracle above: 4
    assert bb == pytest.approx(4.0, abs=1e-12)

    h = 1e-5
    fd1 = (qw.branch_Y0(nonsym_model, 1 + h) - qw.branch_Y0(nonsym_model, 1 - h)).real / (2 * h)
    assert fd1 == pytest.approx(a, abs=1e-6)
    h = 1e-3
    fd2 = (
        qw.branch_Y0(nonsym_model, 1 + h)
        - 2 * qw.branch_Y0(nonsym_model, 1.0)
        + qw.branch_Y0(nonsym_model, 1 - h)
    ).real / h**2
    assert fd2 == pytest.approx(bb, abs=1e-4)


def test_equal_drift_gives_unit_slope():
    model = make_model({(1, 0): 0.1, (-1, 0): 0.3, (0, 1): 0.1, (0, -1): 0.3,
                        (0, 0): 0.2})
    a, _ = qw.derivatives_at_one(model)
    assert a == pytest.approx(-1.0, abs=1e-14)


def test_concavity_margin_negative_on_random_models():
    rng = np.random.default_rng(314)
    for _ in range(20):
        offsets = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)]
        w = rng.random(len(offsets))
        w /= w.sum()
        entries = dict(zip(offsets, w))
        m = StepDistribution(entries, floor=(-1, -1)).mean()
        if m.m1 >= -1e-3 or m.m2 >= -1e-3:
            continue
        model = make_model(entries)
        a, bb = qw.derivatives_at_one(model)
        assert a * a - a - bb < 0.0


def test_small_branch_contracts_on_tangent_circles(nonsym_model):
    """|Y0| dips below 1 on circles internally tangent to the unit circle
    at 1, quadratically in the angle, with curvature
    ((1-eps)/2) * (a^2 - a - 2b + eps(2b - a^2))."""
    a, bb = qw.derivatives_at_one(nonsym_model)
    b = bb / 2
    for eps in (0.02, 0.05):
        for phi in (0.05, 0.12, 0.2, -0.12):
            x = eps + (1 - eps) * cmath.exp(1j * phi)
            assert abs(qw.branch_Y0(nonsym_model, x)) < 1.0
        phi = 1e-3
        x = eps + (1 - eps) * cmath.exp(1j * phi)
        coeff = (abs(qw.branch_Y0(nonsym_model, x)) - 1.0) / phi**2
        expected = (1 - eps) / 2 * (a * a - a - 2 * b + eps * (2 * b - a * a))
        assert coeff == pytest.approx(expected, rel=1e-2)


def test_large_root_oracle_and_ordering(nonsym_model):
    # clearing denominators in (1/8)y + (3/8)/y + c = 1 with
    # c = (1/6)(1.01) + (1/3)/1.01 gives y^2 + 8(c - 1)y + 3 = 0
    c = (1 / 6) * 1.01 + (1 / 3) / 1.01
    disc = math.sqrt((8 * (c - 1)) ** 2 - 12)
    oracle = (-8 * (c - 1) + disc) / 2
    big = qw.branch_Y1(nonsym_model, 0.01)
    assert big == pytest.approx(oracle, abs=1e-12)

    small = small_root_at(nonsym_model, 0.01)
    assert small < big
    assert small == pytest.approx(qw.branch_Y0(nonsym_model, 1.01).real, abs=1e-10)


def test_large_root_continuity_at_zero(nonsym_model):
    assert qw.branch_Y1(nonsym_model, 1e-7) == pytest.approx(3.0, abs=1e-4)


def test_critical_angle_values(nonsym_model, symmetric):
    t0, gamma0 = qw.critical_angle(nonsym_model)
    assert t0 == pytest.approx(math.log(2) / math.log(3), abs=1e-12)
    assert gamma0 == pytest.approx(math.atan(t0), abs=1e-15)

    t0s, gamma0s = qw.critical_angle(symmetric)
    assert t0s == pytest.approx(1.0, abs=1e-12)
    assert gamma0s == pytest.approx(math.pi / 4, abs=1e-12)


def test_constructed_model_with_integer_ratio():
    # x-marginal root 4 and y-marginal root 2 by the factorization
    # a x^2 - (a+b) x + b = a (x-1)(x - b/a); masses chosen so b/a = 4 and 2
    model = make_model({(1, 0): 0.1, (-1, 0): 0.4, (0, 1): 1 / 6, (0, -1): 1 / 3})
    assert qw.one_d_root(model, "x") == pytest.approx(4.0, abs=1e-12)
    assert qw.one_d_root(model, "y") == pytest.approx(2.0, abs=1e-12)
    t0, _ = qw.critical_angle(model)
    assert t0 == pytest.approx(2.0, abs=1e-12)
    verdict = qw.classify_t0(t0)
    assert verdict.rational and (verdict.p, verdict.q) == (2, 1)


def test_classify_simple_rationals():
    assert str(qw.classify_t0(1.0)) == "Rational(1, 1)"
    assert str(qw.classify_t0(0.5)) == "Rational(1, 2)"


def test_classify_log_ratio_is_not_rational_within_bound():
    t0 = math.log(2) / math.log(3)
    verdict = qw.classify_t0(t0, qmax=10**6, tol=1e-12)
    assert not verdict.rational
    assert str(verdict) == "NoRationalWithin(1000000)"


def test_classify_scale_consistency():
    for q in range(1, 101):
        for p in range(1, 101):
            if gcd(p, q) != 1:
                continue
            verdict = qw.classify_t0(p / q)
            assert verdict.rational, (p, q)
            assert (verdict.p, verdict.q) == (p, q)


def test_classify_respects_qmax():
    verdict = qw.classify_t0(1 / 997, qmax=500)
    assert not verdict.rational
    assert verdict.qmax == 500


def test_torus_distance_positive(nonsym_model, symmetric):
    assert qw.torus_check(nonsym_model, 256) > 1e-3
    assert qw.torus_check(symmetric, 256) > 1e-3


def test_torus_pattern_symmetric_under_swap(symmetric):
    ev = KernelEvaluator(symmetric)
    for s, t in [(0.3, 1.1), (2.0, 0.7), (1.5, 2.9)]:
        a = abs(complex(ev.interior_transform(cmath.exp(1j * s), cmath.exp(1j * t))) - 1)
        b = abs(complex(ev.interior_transform(cmath.exp(1j * t), cmath.exp(1j * s))) - 1)
        assert a == pytest.approx(b, abs=1e-14)


def test_torus_flags_periodic_support():
    # mass only on offsets with even coordinate sum: the transform returns
    # to 1 at angle (pi, pi), far from the excluded cap
    model = make_model({(1, 1): 0.2, (-1, -1): 0.4, (1, -1): 0.2, (-1, 1): 0.2})
    assert qw.torus_check(model, 256) < 1e-12


def test_exit_rate_margin_positive(nonsym_model):
    t_grid = np.geomspace(0.1, 10.0, 25)
    assert qw.item8_check(nonsym_model, 0.01, t_grid) > 0.0
    t0, _ = qw.critical_angle(nonsym_model)
    assert qw.item8_check(nonsym_model, 0.01, [t0]) > 0.0
    # eps -> 0 with t fixed: margin tends to y1 - min(x1, y1) = 1
    assert qw.item8_check(nonsym_model, 1e-8, [1.0]) == pytest.approx(1.0, abs=1e-5)


def test_analyze_bundles_everything(ref_analysis):
    assert ref_analysis.x1 == pytest.approx(2.0, abs=1e-9)
    assert ref_analysis.y1 == pytest.approx(3.0, abs=1e-9)
    assert ref_analysis.concavity_margin() < 0.0
    assert ref_analysis.branch_radius > 1e-3
    assert not ref_analysis.verdict.rational
    y = ref_analysis.y0(1.0 + 1e-3)
    assert abs(y - quadratic_small_branch(1.0 + 1e-3)) < 1e-11
