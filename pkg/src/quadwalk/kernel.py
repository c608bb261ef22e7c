"""Kernel polynomials of the walk and their root structure.

For a step family with transform ``M(x, y) = sum p(di, dj) x^di y^dj`` the
associated kernel is the polynomial ``x^a y^b (M(x, y) - 1)`` cleared of
negative powers.  Everything the asymptotic analysis needs lives on the
zero set of the interior kernel ``Q``:

* ``x1 > 1`` and ``y1 > 1``, the nontrivial positive roots of
  ``Q(x, 1) = 0`` and ``Q(1, y) = 0``;
* the small implicit branch ``Y0(x)`` through ``(1, 1)``, continued by
  Newton iteration, with derivatives at 1 available in closed form from
  the step moments;
* the large positive root ``Y1(1 + eps)`` of ``Q(1 + eps, .) = 0``;
* the critical ratio ``t0 = log x1 / log y1`` and its angle
  ``gamma0 = arctan t0``, whose rationality is probed by a bounded
  continued-fraction search.

The rationality verdict is deliberately a bounded-denominator statement:
no floating-point computation can certify irrationality.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import BranchLoss, NoSecondRoot
from .model import QuadrantModel

NEWTON_SEGMENTS = 32
NEWTON_TOL = 1e-13


class KernelEvaluator:
    """Evaluates the four kernel families at (vectorized) complex points."""

    def __init__(self, model: QuadrantModel):
        self.model = model
        self.k0 = model.k0
        self._interior = model.interior.float_items()
        self._horiz = [d.float_items() for d in model.horiz]
        self._vert = [d.float_items() for d in model.vert]
        self._corner = [[d.float_items() for d in row] for row in model.corner]

    @staticmethod
    def _transform(items, x, y):
        acc = 0.0
        for di, dj, p in items:
            acc = acc + p * x**di * y**dj
        return acc

    def interior_transform(self, x, y):
        """mu-hat(x, y), the interior step transform."""
        return self._transform(self._interior, x, y)

    def Q(self, x, y):
        return x**self.k0 * y**self.k0 * (self.interior_transform(x, y) - 1.0)

    def q_horiz(self, ell: int, x, y):
        return x**self.k0 * y**ell * (self._transform(self._horiz[ell], x, y) - 1.0)

    def q_vert(self, k: int, x, y):
        return x**k * y**self.k0 * (self._transform(self._vert[k], x, y) - 1.0)

    def q_corner(self, k: int, ell: int, x, y):
        return x**k * y**ell * (self._transform(self._corner[k][ell], x, y) - 1.0)

    def dQ_dx(self, x, y):
        acc = 0.0
        for di, dj, p in self._interior:
            e = di + self.k0
            if e != 0:
                acc = acc + p * e * x ** (e - 1) * y ** (dj + self.k0)
        return acc - self.k0 * x ** (self.k0 - 1) * y**self.k0

    def dQ_dy(self, x, y):
        acc = 0.0
        for di, dj, p in self._interior:
            e = dj + self.k0
            if e != 0:
                acc = acc + p * e * y ** (e - 1) * x ** (di + self.k0)
        return acc - self.k0 * y ** (self.k0 - 1) * x**self.k0


def _axis_marginal(model: QuadrantModel, axis: str) -> Dict[int, float]:
    return model.interior.marginal(axis)


def _laurent(coeffs: Dict[int, float]) -> Callable[[float], float]:
    items = sorted(coeffs.items())

    def f(u: float) -> float:
        return sum(c * u**d for d, c in items)

    return f


def _laurent_derivative(coeffs: Dict[int, float]) -> Callable[[float], float]:
    items = [(d, c) for d, c in sorted(coeffs.items()) if d != 0]

    def f(u: float) -> float:
        return sum(c * d * u ** (d - 1) for d, c in items)

    return f


def one_d_root(model: QuadrantModel, axis: str = "x") -> float:
    """Unique root > 1 of the one-variable interior kernel on the given axis.

    The marginal transform ``P`` is strictly convex on (0, inf) with
    ``P(1) = 1`` and ``P'(1) < 0`` under negative drift, so the second
    crossing of level 1 is bracketed by the minimizer of ``P`` and any
    point where ``P`` exceeds 1 again.

    Raises :class:`NoSecondRoot` when no mass moves in the positive
    direction and ``P`` therefore never re-crosses 1.
    """
    marg = _axis_marginal(model, axis)
    P = _laurent(marg)
    dP = _laurent_derivative(marg)

    m = sum(d * c for d, c in marg.items())
    if m >= 0:
        raise ValueError(f"one_d_root needs negative {axis}-drift, got {m:.6g}")
    if max(marg) <= 0:
        raise NoSecondRoot(
            f"no positive {axis}-steps: the kernel never re-crosses 1 "
            "(model defect: escape along this axis is impossible)"
        )

    # crude upper seed from the support span and smallest positive mass
    span = max(marg) - min(marg)
    bound = 1.0 + 2.0 * span / min(c for c in marg.values() if c > 0)

    hi = 2.0
    while dP(hi) <= 0:
        hi *= 2.0
        if hi > 1e12:
            raise NoSecondRoot("transform derivative never turns positive")
    tau = brentq(dP, 1.0, hi, xtol=1e-14, rtol=8.9e-16)

    hi = max(bound, 2.0 * tau)
    while P(hi) <= 1.0:
        hi *= 2.0
        if hi > 1e15:
            raise NoSecondRoot("transform never re-crosses 1 below the search cap")
    root = brentq(lambda u: P(u) - 1.0, tau, hi, xtol=1e-14, rtol=8.9e-16)
    if abs(P(root) - 1.0) > 1e-12:
        raise NoSecondRoot(f"root residual {abs(P(root) - 1.0):.2e} exceeds 1e-12")
    return root


def branch_Y0(model: QuadrantModel, x: complex, segments: int = NEWTON_SEGMENTS) -> complex:
    """Small branch of Q(x, .) = 0 through (1, 1), at a point x near 1.

    Newton continuation along the straight segment from 1 to ``x``, seeded
    at y = 1.  Raises :class:`BranchLoss` when an intermediate Newton
    solve fails to converge, in which case the caller should shrink
    ``|x - 1|``.
    """
    items = model.interior.float_items()

    def F(xv, yv):
        return sum(p * xv**di * yv**dj for di, dj, p in items) - 1.0

    def dF(xv, yv):
        return sum(p * dj * xv**di * yv ** (dj - 1) for di, dj, p in items if dj != 0)

    y = 1.0 + 0.0j
    for s in range(1, segments + 1):
        xv = 1.0 + (s / segments) * (complex(x) - 1.0)
        converged = False
        for _ in range(60):
            f = F(xv, y)
            if abs(f) < NEWTON_TOL:
                converged = True
                break
            d = dF(xv, y)
            if d == 0:
                break
            step = f / d
            y = y - step
            if not (abs(y) < 1e6):
                break
        else:
            converged = abs(F(xv, y)) < NEWTON_TOL
        if not converged or not (abs(y) < 1e6):
            raise BranchLoss(
                f"Newton continuation lost the small branch at x={xv!r} "
                f"(segment {s}/{segments}); shrink |x - 1|"
            )
    return y


def branch_Y1(model: QuadrantModel, eps: float) -> float:
    """Larger positive root of Q(1 + eps, .) = 0.

    Bracketing mirrors :func:`one_d_root` applied to the tilted transform
    ``P_eps(y) = sum_j (sum_i mu(i, j) (1 + eps)^i) y^j``.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    xv = 1.0 + eps
    tilted: Dict[int, float] = {}
    for (di, dj), p in model.interior.entries.items():
        tilted[dj] = tilted.get(dj, 0.0) + float(p) * xv**di
    P = _laurent(tilted)
    dP = _laurent_derivative(tilted)
    if max(tilted) <= 0:
        raise NoSecondRoot("no upward steps: Q(1+eps, .) has no large positive root")

    hi = 2.0
    while dP(hi) <= 0:
        hi *= 2.0
        if hi > 1e12:
            raise NoSecondRoot("tilted transform derivative never turns positive")
    if dP(1.0) >= 0:
        # eps too large: the minimizer slid below 1 and the small root
        # may have merged with the large one
        lo = brentq(dP, 1e-9, hi, xtol=1e-14, rtol=8.9e-16)
    else:
        lo = brentq(dP, 1.0, hi, xtol=1e-14, rtol=8.9e-16)
    if P(lo) >= 1.0:
        raise NoSecondRoot(f"Q(1+eps, .) has no positive roots for eps={eps:g}")

    span = max(tilted) - min(tilted)
    hi = max(1.0 + 2.0 * span / min(c for c in tilted.values() if c > 0), 2.0 * lo)
    while P(hi) <= 1.0:
        hi *= 2.0
        if hi > 1e15:
            raise NoSecondRoot("tilted transform never re-crosses 1 below the cap")
    root = brentq(lambda u: P(u) - 1.0, lo, hi, xtol=1e-14, rtol=8.9e-16)
    if abs(P(root) - 1.0) > 1e-12:
        raise NoSecondRoot(f"root residual {abs(P(root) - 1.0):.2e} exceeds 1e-12")
    return root


def small_root_at(model: QuadrantModel, eps: float) -> float:
    """Small positive root of Q(1 + eps, .) = 0 (the real trace of Y0)."""
    xv = 1.0 + eps
    tilted: Dict[int, float] = {}
    for (di, dj), p in model.interior.entries.items():
        tilted[dj] = tilted.get(dj, 0.0) + float(p) * xv**di
    P = _laurent(tilted)
    dP = _laurent_derivative(tilted)
    hi = 2.0
    while dP(hi) <= 0:
        hi *= 2.0
    lo_min = brentq(dP, 1e-9, hi, xtol=1e-14, rtol=8.9e-16)
    if P(lo_min) >= 1.0:
        raise NoSecondRoot(f"Q(1+eps, .) has no positive roots for eps={eps:g}")
    lo = lo_min
    while P(lo) <= 1.0:
        lo /= 2.0
        if lo < 1e-12:
            raise NoSecondRoot("small root ran into 0")
    return brentq(lambda u: P(u) - 1.0, lo, lo_min, xtol=1e-14, rtol=8.9e-16)


def derivatives_at_one(model: QuadrantModel) -> Tuple[float, float]:
    """First and second derivative of the small branch at 1, in closed form.

    Differentiating ``M(x, Y0(x)) = 1`` twice at x = 1 gives

        Y0'(1)  = -EX / EY
        Y0''(1) = -(Mxx + 2 a Mxy + a^2 Myy) / EY,   a = Y0'(1),

    with ``Mxx = E[X(X-1)]``, ``Myy = E[Y(Y-1)]``, ``Mxy = E[XY]`` the
    second factorial moments of the interior step (X, Y).
    """
    mo = model.interior.moments()
    ex, ey = mo["EX"], mo["EY"]
    if ey == 0:
        raise ValueError("derivatives_at_one needs nonzero vertical drift")
    a = -ex / ey
    mxx = mo["EX2"] - ex
    myy = mo["EY2"] - ey
    mxy = mo["EXY"]
    bb = -(mxx + 2.0 * a * mxy + a * a * myy) / ey
    return a, bb


def critical_angle(model: QuadrantModel, x1: Optional[float] = None,
                   y1: Optional[float] = None) -> Tuple[float, float]:
    """Critical ratio t0 = log x1 / log y1 and its angle arctan t0."""
    if x1 is None:
        x1 = one_d_root(model, "x")
    if y1 is None:
        y1 = one_d_root(model, "y")
    t0 = math.log(x1) / math.log(y1)
    return t0, math.atan(t0)


@dataclass(frozen=True)
class RationalityVerdict:
    """Outcome of the bounded rational-approximation search for t0.

    ``Rational(p, q)`` states that t0 agrees with p/q within ``tol`` and
    that the continued fraction of the floating-point value provides
    strong evidence of exactness (it terminates there, or the next
    partial quotient is at least ``min_next_quotient``).  The negative
    verdict only asserts that no denominator up to ``qmax`` qualifies.
    """

    rational: bool
    p: Optional[int]
    q: Optional[int]
    qmax: int
    tol: float

    def __str__(self) -> str:
        if self.rational:
            return f"Rational({self.p}, {self.q})"
        return f"NoRationalWithin({self.qmax})"


def classify_t0(
    t0: float,
    qmax: int = 10**6,
    tol: float = 1e-12,
    min_next_quotient: int = 10**6,
) -> RationalityVerdict:
    """Search the continued fraction of t0 for a credible rational value.

    A convergent p/q with q <= qmax is accepted only when it matches t0
    within ``tol`` *and* the expansion either terminates there or jumps to
    a partial quotient >= ``min_next_quotient``.  A merely good rational
    approximation (which every real number possesses) is not evidence of
    rationality; a double that is exactly p/q exhibits an astronomically
    large next quotient, which is.
    """
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    target = Fraction(t0)

    terms: List[int] = []
    rem = target
    while True:
        a = rem.numerator // rem.denominator
        terms.append(a)
        frac = rem - a
        if frac == 0:
            break
        rem = 1 / frac

    p_prev, q_prev = 1, 0
    p_cur, q_cur = terms[0], 1
    for k in range(len(terms)):
        if k > 0:
            p_prev, q_prev, p_cur, q_cur = (
                p_cur,
                q_cur,
                terms[k] * p_cur + p_prev,
                terms[k] * q_cur + q_prev,
            )
        if q_cur > qmax:
            break
        err = abs(target - Fraction(p_cur, q_cur))
        if err > tol:
            continue
        terminal = k == len(terms) - 1
        if terminal or terms[k + 1] >= min_next_quotient:
            return RationalityVerdict(True, p_cur, q_cur, qmax, tol)
    return RationalityVerdict(False, None, None, qmax, tol)


def torus_check(model: QuadrantModel, grid_n: int = 256, cap_radius: float = 0.2) -> float:
    """Distance of the interior transform from 1 on the unit torus.

    Samples ``|mu-hat(e^{i s}, e^{i t}) - 1|`` on a grid_n x grid_n grid and
    returns the minimum outside a small cap around angle (0, 0).  A
    strictly positive value certifies, at grid resolution, that the kernel
    has no other zeros with both variables on the unit circle; a minimum
    near 0 away from the origin flags a periodic sublattice.
    """
    if grid_n < 64:
        raise ValueError("grid_n must be >= 64")
    theta = 2.0 * math.pi * np.arange(grid_n) / grid_n
    zx = np.exp(1j * theta)[:, None]
    zy = np.exp(1j * theta)[None, :]
    acc = np.zeros((grid_n, grid_n), dtype=complex)
    for di, dj, p in model.interior.float_items():
        acc += p * zx**di * zy**dj
    dist = np.abs(acc - 1.0)
    wrap = np.minimum(theta, 2.0 * math.pi - theta)
    rad = np.hypot(wrap[:, None], wrap[None, :])
    mask = rad > cap_radius
    return float(dist[mask].min())


def item8_check(
    model: QuadrantModel,
    eps: float,
    t_grid: Sequence[float],
    x1: Optional[float] = None,
    y1: Optional[float] = None,
) -> float:
    """Worst margin of (1+eps) * Y1(1+eps)^t over min(x1, y1^t) on a t-grid.

    Positivity for all t is what lets the outer contour be pushed past the
    unit torus in the tail estimates; this samples it directly.
    """
    if x1 is None:
        x1 = one_d_root(model, "x")
    if y1 is None:
        y1 = one_d_root(model, "y")
    big = branch_Y1(model, eps)
    worst = math.inf
    for t in t_grid:
        if t <= 0:
            raise ValueError("t grid must be positive")
        margin = (1.0 + eps) * big**t - min(x1, y1**t)
        worst = min(worst, margin)
    return worst


@dataclass
class KernelAnalysis:
    """Bundle of every analytic quantity derived from the interior kernel."""

    x1: float
    y1: float
    a: float              # Y0'(1)
    b: float              # Y0''(1) / 2
    t0: float
    gamma0: float
    verdict: RationalityVerdict
    branch_radius: float  # |x - 1| within which Newton continuation is trusted
    _model: QuadrantModel

    def y0(self, x: complex) -> complex:
        """Small branch evaluator; valid within the discovered radius."""
        return branch_Y0(self._model, x)

    def y1_at(self, eps: float) -> float:
        """Large positive root of Q(1+eps, .) = 0."""
        return branch_Y1(self._model, eps)

    @property
    def second_derivative(self) -> float:
        return 2.0 * self.b

    def concavity_margin(self) -> float:
        """a^2 - a - 2b, strictly negative for any admissible step law."""
        return self.a * self.a - self.a - 2.0 * self.b

    def rows(self) -> List[Tuple[str, str]]:
        return [
            ("x1", repr(self.x1)),
            ("y1", repr(self.y1)),
            ("t0", repr(self.t0)),
            ("gamma0", repr(self.gamma0)),
            ("Y0'(1)", repr(self.a)),
            ("Y0''(1)/2", repr(self.b)),
            ("verdict", str(self.verdict)),
        ]


def analyze(
    model: QuadrantModel,
    qmax: int = 10**6,
    tol: float = 1e-12,
) -> KernelAnalysis:
    """Compute roots, branch data, the critical angle and its verdict.

    The trusted radius for the small branch is found adaptively: starting
    from 0.25 it is halved until Newton continuation succeeds on an
    8-point circle of that radius.
    """
    ev = KernelEvaluator(model)
    q11 = abs(complex(ev.Q(1.0, 1.0)))
    if q11 > 1e-14:
        raise ValueError(f"Q(1,1) = {q11:.2e}; rows do not sum to 1")

    x1 = one_d_root(model, "x")
    y1 = one_d_root(model, "y")
    a, bb = derivatives_at_one(model)
    t0, gamma0 = critical_angle(model, x1, y1)
    verdict = classify_t0(t0, qmax=qmax, tol=tol)

    radius = 0.25
    while radius > 1e-6:
        try:
            for ang in range(8):
                x = 1.0 + radius * cmath.exp(2j * math.pi * ang / 8)
                y = branch_Y0(model, x)
                if abs(ev.Q(x, y)) > 1e-10:
                    raise BranchLoss("residual too large on test circle")
            break
        except BranchLoss:
            radius /= 2.0
    else:
        raise BranchLoss("no usable branch radius found")

    return KernelAnalysis(
        x1=x1,
        y1=y1,
        a=a,
        b=bb / 2.0,
        t0=t0,
        gamma0=gamma0,
        verdict=verdict,
        branch_radius=radius,
        _model=model,
    )
