import math

import pytest

import quadwalk as qw
from quadwalk.asymptotics import ray_targets, thm3_targets
from quadwalk.errors import ResidualFloor


@pytest.fixture(scope="module")
def ref_escape_at(ref_escape):
    return ref_escape.at(1, 1)


def test_thm1_vertical(reference, ref_table, ref_chain_x, ref_escape_at):
    rep = qw.verify_thm1(
        reference, (1, 1), 1, range(8, 29), ref_table, ref_chain_x, ref_escape_at
    )
    assert rep.passed
    assert rep.fitted_slope < 0
    assert rep.decay_ratio >= 1e3
    # residuals shrink essentially monotonically until the numeric floor
    rs = rep.residuals
    assert rs[0] > rs[5] > rs[10]


def test_thm1_horizontal(reference, ref_table, ref_chain_y, ref_escape_at):
    rep = qw.verify_thm1(
        reference,
        (1, 1),
        1,
        range(8, 29),
        ref_table,
        ref_chain_y,
        ref_escape_at,
        axis="horizontal",
    )
    assert rep.passed
    assert rep.limit_value == pytest.approx(
        ref_escape_at.p_right * ref_chain_y.mass(1) / ref_chain_y.V, abs=1e-12
    )


def test_thm1_axis_chain_mismatch_rejected(reference, ref_table, ref_chain_y, ref_escape_at):
    with pytest.raises(ValueError):
        qw.verify_thm1(
            reference, (1, 1), 1, range(8, 20), ref_table, ref_chain_y, ref_escape_at
        )


def test_thm1_symmetric_model_is_axis_symmetric(symmetric):
    analysis = qw.analyze(symmetric)
    cx = qw.solve_chain(symmetric, "x1", x_root=analysis.x1)
    cy = qw.solve_chain(symmetric, "y2", x_root=analysis.y1)
    targets = [(1, j) for j in range(6, 21)] + [(i, 1) for i in range(6, 21)]
    table = qw.green_exact(symmetric, (2, 2), targets, tol=1e-8)
    esc = qw.escape_exact(symmetric, analysis.t0, sources=[(2, 2)], tol=1e-7).at(2, 2)
    rv = qw.verify_thm1(symmetric, (2, 2), 1, range(6, 21), table, cx, esc)
    rh = qw.verify_thm1(
        symmetric, (2, 2), 1, range(6, 21), table, cy, esc, axis="horizontal"
    )
    assert rv.passed and rh.passed
    # swapping the axes maps the model to itself, so the two residual
    # sequences coincide up to solver noise
    for a, b in zip(rv.residuals, rh.residuals):
        assert a == pytest.approx(b, abs=1e-9)


def test_thm1_floor_detected(reference, ref_chain_x, ref_escape_at):
    rough = qw.green_exact(reference, (1, 1), [(1, 20)], tol=2e-4)
    with pytest.raises(ResidualFloor):
        qw.verify_thm1(
            reference, (1, 1), 1, range(12, 31), rough, ref_chain_x, ref_escape_at
        )


def test_ray_targets_cover_both_orientations():
    shallow = ray_targets(math.atan(0.5), 10, 30)
    steep = ray_targets(math.atan(2.0), 10, 30)
    assert all(abs(j - 0.5 * i) <= 0.5 + 1e-9 for (i, j) in shallow)
    assert all(abs(i - 0.5 * j) <= 0.5 + 1e-9 for (i, j) in steep)
    for pts in (shallow, steep):
        assert all(10 <= i + j <= 30 for (i, j) in pts)
        assert len(pts) >= 10


def test_thm2_along_critical_ray(reference, ref_analysis, ref_table,
                                 ref_chain_x, ref_chain_y, ref_escape_at):
    rep = qw.verify_thm2(
        reference,
        (1, 1),
        ref_analysis.gamma0,
        (12, 36),
        ref_table,
        ref_chain_x,
        ref_chain_y,
        ref_escape_at,
    )
    assert rep.passed
    assert rep.max_outer_deviation < 0.05


def test_thm2_off_critical_rays(reference, ref_table, ref_chain_x, ref_chain_y,
                                ref_escape_at):
    for gamma in (math.atan(0.15), math.atan(2.5)):
        rep = qw.verify_thm2(
            reference, (1, 1), gamma, (12, 32), ref_table,
            ref_chain_x, ref_chain_y, ref_escape_at,
        )
        assert rep.passed


def test_martin_kernel_reference_ratio_is_one(ref_table):
    for target in [(2, 2), (5, 1), (0, 7)]:
        assert qw.martin_kernel(ref_table, ref_table, target) == 1.0


def test_boundary_spectrum_reference(reference, ref_analysis, ref_chain_x,
                                     ref_chain_y, ref_escape):
    spec = qw.boundary_spectrum(
        reference, (1, 1), 6, ref_analysis, ref_chain_x, ref_chain_y,
        ref_escape.at(1, 1), ref_escape.at(0, 0),
    )
    assert spec.kind.startswith("dense")
    assert spec.strictly_monotone
    assert spec.bracketed()
    assert spec.limit_up == pytest.approx(
        ref_escape.at(1, 1).p_up / ref_escape.at(0, 0).p_up, abs=1e-12
    )
    assert spec.limit_down == pytest.approx(
        ref_escape.at(1, 1).p_right / ref_escape.at(0, 0).p_right, abs=1e-12
    )
    # endpoints of the evaluated family approach the directional limits
    assert abs(spec.kernel_values[-1] - spec.limit_up) < abs(
        spec.kernel_values[0] - spec.limit_up
    )


def test_boundary_spectrum_discrete_for_symmetric(symmetric):
    analysis = qw.analyze(symmetric)
    cx = qw.solve_chain(symmetric, "x1", x_root=analysis.x1)
    cy = qw.solve_chain(symmetric, "y2", x_root=analysis.y1)
    esc = qw.escape_exact(symmetric, analysis.t0, sources=[(2, 3), (0, 0)], tol=1e-7)
    spec = qw.boundary_spectrum(
        symmetric, (2, 3), 4, analysis, cx, cy, esc.at(2, 3), esc.at(0, 0)
    )
    assert spec.kind.startswith("discrete")
    # rational ratio 1/1: the family sits on integer powers of y1 = 3
    for n, u in zip(range(-4, 5), spec.u_values):
        assert u == pytest.approx(3.0**n, rel=1e-12)
    assert spec.strictly_monotone


def test_spectrum_constant_when_sources_coincide(reference, ref_analysis,
                                                 ref_chain_x, ref_chain_y, ref_escape):
    spec = qw.boundary_spectrum(
        reference, (0, 0), 4, ref_analysis, ref_chain_x, ref_chain_y,
        ref_escape.at(0, 0), ref_escape.at(0, 0),
    )
    assert not spec.strictly_monotone
    assert all(v == pytest.approx(1.0, abs=1e-14) for v in spec.kernel_values)


def test_thm3_targets_sit_on_the_rays():
    high, low = thm3_targets(60)
    assert high == (12, 48) and low == (48, 12)
