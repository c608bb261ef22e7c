"""Green functions, escape probabilities and their analytic cross-oracles.

Exact values come from sparse direct solves on finite windows with
absorbing caps.  Absorption only discards trajectories, so window Green
values increase monotonically to the true ones as the window grows; the
per-entry difference between successive windows is the reported error
bracket, and growth continues until it is below tolerance at the
requested targets.  (Folding the overflow back onto the caps is not an
option here: it would make the finite chain stochastic, hence recurrent,
and its Green function infinite.)

Escape probabilities solve the discrete Dirichlet problem ``h = P h``
with boundary data on the states beyond the caps: 1 on the side of the
critical ray where the vertical-escape channel exits, 0 on the other.
The two escape routes are complementary, so the up- and right-values sum
to one by construction; Monte-Carlo classification provides an
independent check.

Two further representations of the same Green numbers close the loop:
generating functions assembled from a solved window (with geometric tail
completion) must satisfy the kernel functional equation, and a double
contour quadrature of that equation must reproduce the window values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .chains import ChainSolution
from .errors import QuadratureUnstable, WindowExplosion
from .kernel import KernelEvaluator
from .model import QuadrantModel
from .simulate import StreamRNG, Walker

State = Tuple[int, int]


@dataclass(frozen=True)
class Truncation:
    """Window bounds for a quadrant solve."""

    Lx: int
    Ly: int
    cap_policy: str = "absorb"

    def __post_init__(self):
        if self.cap_policy != "absorb":
            raise ValueError(
                "only the absorbing cap is sound for Green solves; error "
                "brackets come from window growth, not a reflecting variant"
            )

    def states(self) -> int:
        return (self.Lx + 1) * (self.Ly + 1)


class QuadrantWindow:
    """Absorbing-window linear algebra shared by Green and escape solves."""

    def __init__(self, model: QuadrantModel, Lx: int, Ly: int,
                 ray_slope: Optional[float] = None):
        self.model = model
        self.Lx = Lx
        self.Ly = Ly
        k0 = model.k0
        ny = Ly + 1
        n = (Lx + 1) * ny
        rows: List[np.ndarray] = []
        cols: List[np.ndarray] = []
        vals: List[np.ndarray] = []
        b_up = np.zeros(n)

        def add_block(I: np.ndarray, J: np.ndarray, dist):
            S = I * ny + J
            for di, dj, p in dist.float_items():
                TI = I + di
                TJ = J + dj
                inside = (TI <= Lx) & (TJ <= Ly)
                rows.append(S[inside])
                cols.append(TI[inside] * ny + TJ[inside])
                vals.append(np.full(int(inside.sum()), p))
                if ray_slope is not None and not inside.all():
                    out = ~inside
                    up = TJ[out] > ray_slope * TI[out]
                    np.add.at(b_up, S[out][up], p)

        II, JJ = np.meshgrid(np.arange(k0, Lx + 1), np.arange(k0, Ly + 1), indexing="ij")
        add_block(II.ravel(), JJ.ravel(), model.interior)
        for ell in range(k0):
            I = np.arange(k0, Lx + 1)
            add_block(I, np.full_like(I, ell), model.horiz[ell])
        for k in range(k0):
            J = np.arange(k0, Ly + 1)
            add_block(np.full_like(J, k), J, model.vert[k])
        for k in range(k0):
            for ell in range(k0):
                add_block(np.array([k]), np.array([ell]), model.corner[k][ell])

        P = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        ).tocsc()
        self._A = (sp.identity(n, format="csc") - P)
        self._lu = splu(self._A)
        self._b_up = b_up

    def green_grid(self, source: State) -> np.ndarray:
        """Expected visits from ``source`` to every window state."""
        ny = self.Ly + 1
        rhs = np.zeros((self.Lx + 1) * ny)
        rhs[source[0] * ny + source[1]] = 1.0
        g = self._lu.solve(rhs, trans="T")
        return g.reshape(self.Lx + 1, ny)

    def escape_up_grid(self) -> np.ndarray:
        """Probability of exiting above the critical ray, per start state."""
        h = self._lu.solve(self._b_up)
        return h.reshape(self.Lx + 1, self.Ly + 1)

    def balance_residual(self, grid: np.ndarray, source: State) -> float:
        """max |g - delta - g P| over the window (defining identity)."""
        ny = self.Ly + 1
        g = grid.reshape(-1)
        r = self._A.T @ g
        r[source[0] * ny + source[1]] -= 1.0
        return float(np.abs(r).max())


@dataclass
class GreenTable:
    """Exact window Green values with per-target growth brackets.

    Entries near the absorbing caps are depressed by the truncation; the
    per-entry gap against the previous window flags them, so downstream
    summations must restrict themselves to entries with small gaps.
    """

    source: State
    truncation: Truncation
    grid: np.ndarray                       # final (larger) window values
    gap_grid: np.ndarray                   # |final - previous| on previous extent
    values: Dict[State, float]
    error_gap: Dict[State, float]
    balance_residual: float
    tol: float = 1e-8

    def value(self, i: int, j: int) -> float:
        if 0 <= i <= self.truncation.Lx and 0 <= j <= self.truncation.Ly:
            return float(self.grid[i, j])
        raise KeyError(f"target ({i}, {j}) outside the solved window")

    def gap(self, i: int, j: int) -> float:
        if i < self.gap_grid.shape[0] and j < self.gap_grid.shape[1]:
            return float(self.gap_grid[i, j])
        return math.inf


def _window_sequence(start: int, growth: float = 1.6) -> Iterable[int]:
    w = start
    while True:
        yield w
        w = max(w + 8, int(w * growth))


def green_exact(
    model: QuadrantModel,
    source: State,
    targets: Optional[Sequence[State]] = None,
    tol: float = 1e-8,
    min_window: Optional[int] = None,
    max_states: int = 1_200_000,
    growth: float = 1.6,
) -> GreenTable:
    """Green values from ``source``, certified by window-growth stabilization.

    The window grows geometrically until the values at every requested
    target move by less than ``tol`` between consecutive windows.  Raises
    :class:`WindowExplosion` when the state budget is exhausted first.
    """
    k0 = model.k0
    targets = list(targets) if targets else [(k0, k0)]
    span = model.max_jump()
    need = max(max(i for i, _ in targets), max(j for _, j in targets))
    start = max(4 * k0, min_window or 0, need + span + 10, 24)

    prev_grid = None
    prev_W = None
    for W in _window_sequence(start, growth):
        if (W + 1) ** 2 > max_states:
            raise WindowExplosion(
                f"window {W}^2 exceeds the {max_states}-state budget at tol={tol:g}"
            )
        win = QuadrantWindow(model, W, W)
        grid = win.green_grid(source)
        if prev_grid is not None:
            sub = grid[: prev_W + 1, : prev_W + 1]
            gap_grid = np.abs(sub - prev_grid)
            worst = max(gap_grid[i, j] for (i, j) in targets)
            if worst < tol:
                residual = win.balance_residual(grid, source)
                return GreenTable(
                    source=source,
                    truncation=Truncation(W, W),
                    grid=grid,
                    gap_grid=gap_grid,
                    values={t: float(grid[t]) for t in targets},
                    error_gap={t: float(gap_grid[t]) for t in targets},
                    balance_residual=residual,
                    tol=tol,
                )
        prev_grid = grid
        prev_W = W


@dataclass(frozen=True)
class EscapeProbabilities:
    """Escape-route split from one source state.

    ``p_up`` is the probability of escaping along the vertical axis (the
    total time spent in the low horizontal strip stays finite); it is the
    factor attached to the vertical-limit profile pi1(i)/V1.  ``p_right``
    is the complementary horizontal escape.
    """

    p_up: float
    p_right: float
    method: str
    ci: Optional[float] = None

    @property
    def total(self) -> float:
        return self.p_up + self.p_right


@dataclass
class EscapeSolve:
    """Dirichlet-solve escape probabilities on a window of sources."""

    grid_up: np.ndarray
    window: int
    stabilization: float
    ray_slope: float

    def at(self, i: int, j: int) -> EscapeProbabilities:
        h = float(self.grid_up[i, j])
        return EscapeProbabilities(p_up=h, p_right=1.0 - h, method="exact-solve")


def escape_exact(
    model: QuadrantModel,
    ray_slope: float,
    sources: Optional[Sequence[State]] = None,
    tol: float = 1e-6,
    min_window: Optional[int] = None,
    max_states: int = 1_200_000,
    growth: float = 1.6,
) -> EscapeSolve:
    """Vertical-escape probabilities by window-grown Dirichlet solves.

    Boundary data beyond the caps is split by the critical ray
    ``j = ray_slope * i``; the window grows until the values at the
    requested sources stabilize within ``tol``.
    """
    k0 = model.k0
    sources = list(sources) if sources else [(k0, k0), (0, 0)]
    span = model.max_jump()
    need = max(max(i for i, _ in sources), max(j for _, j in sources))
    start = max(4 * k0, min_window or 0, need + span + 10, 32)

    prev = None
    for W in _window_sequence(start, growth):
        if (W + 1) ** 2 > max_states:
            raise WindowExplosion(
                f"escape window {W}^2 exceeds the {max_states}-state budget"
            )
        win = QuadrantWindow(model, W, W, ray_slope=ray_slope)
        grid = win.escape_up_grid()
        if prev is not None:
            worst = max(abs(grid[s] - prev[s]) for s in sources)
            if worst < tol:
                return EscapeSolve(grid_up=grid, window=W,
                                   stabilization=float(worst), ray_slope=ray_slope)
        prev = grid


def escape_mc(
    model: QuadrantModel,
    source: State,
    ray_slope: float,
    reps: int,
    seed: int,
    commit_distance: int = 400,
    max_steps: int = 200_000,
    confidence_z: float = 2.576,
    stream_base: int = 0,
) -> EscapeProbabilities:
    """Monte-Carlo escape split: classify each path by the critical ray
    once it is ``commit_distance`` away from the origin."""
    walker = Walker(model, "Z")
    up = 0
    decided = 0
    for r in range(reps):
        rng = StreamRNG(seed, stream_base + r)
        s = source
        for _ in range(max_steps):
            s = walker.step(s, rng)
            if s[0] + s[1] >= commit_distance:
                decided += 1
                if s[1] > ray_slope * s[0]:
                    up += 1
                break
    if decided == 0:
        raise WindowExplosion("no Monte-Carlo path committed; raise max_steps")
    p = up / decided
    half = confidence_z * math.sqrt(max(p * (1 - p), 1.0 / decided) / decided)
    return EscapeProbabilities(p_up=p, p_right=1.0 - p, method="monte-carlo", ci=half)


@dataclass
class GreenMCEstimate:
    mean: float
    ci_half: float
    censor_bound: float
    reps: int

    def covers(self, value: float) -> bool:
        return abs(value - self.mean) <= self.ci_half + self.censor_bound


def green_mc(
    model: QuadrantModel,
    source: State,
    targets: Sequence[State],
    max_steps: int,
    reps: int,
    seed: int,
    confidence_z: float = 2.576,
    stream_base: int = 0,
) -> Dict[State, GreenMCEstimate]:
    """Monte-Carlo mean visit counts with CLT confidence intervals.

    Paths stop early once they are 60 lattice units beyond the target
    panel (a return from that far contributes visits below any tolerance
    of interest here).  Paths still near the panel at the horizon count as
    censored and widen the interval by the censored fraction times the
    largest single-path count seen for the target.
    """
    t_idx = {t: n for n, t in enumerate(targets)}
    bi = max(i for i, _ in targets) + 60
    bj = max(j for _, j in targets) + 60
    walker = Walker(model, "Z")
    counts = np.zeros((reps, len(targets)))
    censored = 0
    for r in range(reps):
        rng = StreamRNG(seed, stream_base + r)
        s = source
        n = t_idx.get(s)
        if n is not None:
            counts[r, n] += 1.0
        for _ in range(max_steps):
            s = walker.step(s, rng)
            n = t_idx.get(s)
            if n is not None:
                counts[r, n] += 1.0
            if s[0] > bi or s[1] > bj:
                break
        else:
            censored += 1
    out = {}
    frac = censored / reps
    for t, n in t_idx.items():
        col = counts[:, n]
        mean = float(col.mean())
        sd = float(col.std(ddof=1)) if reps > 1 else 0.0
        half = confidence_z * sd / math.sqrt(reps)
        bound = frac * float(col.max(initial=1.0))
        out[t] = GreenMCEstimate(mean=mean, ci_half=half, censor_bound=bound, reps=reps)
    return out


class GeneratingFunctions:
    """Window sums of the Green values, completed by their proven limits.

    Along each axis the Green values converge to an escape probability
    times a one-dimensional stationary profile; subtracting those limits
    inside the window and summing them in closed form outside makes every
    evaluator accurate well beyond the raw window truncation.  The
    functional-equation residual ties all of them to the kernels.
    """

    def __init__(
        self,
        table: GreenTable,
        model: QuadrantModel,
        chain_x: ChainSolution,
        chain_y: ChainSolution,
        escape: EscapeProbabilities,
        trust_gap: Optional[float] = None,
    ):
        self.model = model
        self.k0 = model.k0
        self.table = table
        self.ev = KernelEvaluator(model)
        self.p_up = escape.p_up
        self.p_right = escape.p_right
        self.chain_x = chain_x
        self.chain_y = chain_y

        k0 = self.k0
        Lx = table.truncation.Lx
        Ly = table.truncation.Ly

        # keep only entries whose window-growth gap is certified small;
        # rim entries are cap-depressed and must fall back to the limits
        if trust_gap is None:
            trust_gap = table.tol
        trusted = np.zeros((Lx + 1, Ly + 1), dtype=bool)
        gx, gy = table.gap_grid.shape
        trusted[:gx, :gy] = table.gap_grid <= trust_gap
        g = np.where(trusted, table.grid, 0.0)

        # vertical-strip columns and horizontal-strip rows with their limits
        self.ctil = [self.p_up * chain_x.mass(k) / chain_x.V for k in range(k0)]
        self.cl = [self.p_right * chain_y.mass(ell) / chain_y.V for ell in range(k0)]
        self._gl_coeff = [
            np.where(trusted[k0:, ell], g[k0:, ell] - self.cl[ell], 0.0)
            for ell in range(k0)
        ]
        self._gt_coeff = [
            np.where(trusted[k, k0:], g[k, k0:] - self.ctil[k], 0.0)
            for k in range(k0)
        ]

        # interior minus its two-sided limit profile
        pi1 = np.array([chain_x.mass(i) for i in range(Lx + 1)])
        pi2 = np.array([chain_y.mass(j) for j in range(Ly + 1)])
        u = (
            self.p_up / chain_x.V * pi1[:, None]
            + self.p_right / chain_y.V * pi2[None, :]
        )
        self._G_coeff = np.where(trusted[k0:, k0:], g[k0:, k0:] - u[k0:, k0:], 0.0)
        self._corner = {(k, ell): float(table.grid[k, ell]) for k in range(k0) for ell in range(k0)}

    # -- one-dimensional stationary transforms, geometric tails completed --

    def _stationary_series(self, chain: ChainSolution, z):
        k0 = self.k0
        coeff = chain.pi[k0:]
        powers = np.power.outer(np.asarray(z, dtype=complex), np.arange(len(coeff)))
        head = powers @ coeff
        L = len(chain.pi) - 1
        rate = chain.tail.rate
        tail = chain.A * rate ** (-(L + 1)) * np.asarray(z, dtype=complex) ** (L + 1 - k0) / (
            1.0 - np.asarray(z, dtype=complex) / rate
        )
        return head + tail

    @staticmethod
    def _poly(coeff: np.ndarray, z):
        powers = np.power.outer(np.asarray(z, dtype=complex), np.arange(len(coeff)))
        return powers @ coeff

    def g_l(self, ell: int, x):
        """Generating function of the row-ell Green values (i >= k0)."""
        x = np.asarray(x, dtype=complex)
        return self._poly(self._gl_coeff[ell], x) + self.cl[ell] / (1.0 - x)

    def g_tilde(self, k: int, y):
        """Generating function of the column-k Green values (j >= k0)."""
        y = np.asarray(y, dtype=complex)
        return self._poly(self._gt_coeff[k], y) + self.ctil[k] / (1.0 - y)

    def f_corner(self, x, y):
        """Corner kernel combination plus the source monomial."""
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        i0, j0 = self.table.source
        acc = x**i0 * y**j0
        for (k, ell), gval in self._corner.items():
            acc = acc + gval * self.ev.q_corner(k, ell, x, y)
        return acc

    def G(self, x, y):
        """Interior double generating function."""
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        px = np.power.outer(x, np.arange(self._G_coeff.shape[0]))
        py = np.power.outer(y, np.arange(self._G_coeff.shape[1]))
        interior = np.einsum("...i,ij,...j->...", px, self._G_coeff, py)
        s1 = self._stationary_series(self.chain_x, x)
        s2 = self._stationary_series(self.chain_y, y)
        limit = (
            self.p_up / self.chain_x.V * s1 / (1.0 - y)
            + self.p_right / self.chain_y.V * s2 / (1.0 - x)
        )
        return interior + limit

    def numerator(self, x, y):
        """Right-hand side of the kernel functional equation."""
        acc = self.f_corner(x, y)
        for ell in range(self.k0):
            acc = acc + self.ev.q_horiz(ell, x, y) * self.g_l(ell, x)
        for k in range(self.k0):
            acc = acc + self.ev.q_vert(k, x, y) * self.g_tilde(k, y)
        return acc

    def functional_equation_residual(self, x, y) -> float:
        """|Q G + sum q' g + sum q'' g~ + f| at one bidisk point."""
        r = self.ev.Q(x, y) * self.G(x, y) + self.numerator(x, y)
        return float(np.max(np.abs(r)))


class ContourOracle:
    """Double trapezoid quadrature recovering Green values from the kernels.

    The functional equation writes the interior generating function as
    ``G = -N / Q``; extracting its Taylor coefficient at a target by a
    product of circle integrals of radius 1 - eps gives an independent
    route to every interior Green value.  Trapezoid sums on circles of an
    analytic integrand converge spectrally in the node count.
    """

    def __init__(self, model: QuadrantModel, gens: GeneratingFunctions,
                 eps: float = 0.1, quad_n: int = 512):
        if not 0.0 < eps < 0.2:
            raise ValueError("eps must lie in (0, 0.2)")
        if quad_n < 256:
            raise ValueError("quad_n must be >= 256")
        self.k0 = model.k0
        self.quad_n = quad_n
        r = 1.0 - eps
        nodes = r * np.exp(2j * math.pi * np.arange(quad_n) / quad_n)
        self._x = nodes
        self._y = nodes
        ev = KernelEvaluator(model)
        X = nodes[:, None]
        Y = nodes[None, :]
        N = gens.f_corner(X, Y)
        glx = [gens.g_l(ell, nodes) for ell in range(self.k0)]
        gty = [gens.g_tilde(k, nodes) for k in range(self.k0)]
        for ell in range(self.k0):
            N = N + ev.q_horiz(ell, X, Y) * glx[ell][:, None]
        for k in range(self.k0):
            N = N + ev.q_vert(k, X, Y) * gty[k][None, :]
        self._W = N / ev.Q(X, Y)

    def value(self, i: int, j: int, imag_tol: float = 1e-8) -> float:
        if i < self.k0 or j < self.k0:
            raise ValueError("the contour representation covers interior targets")
        wx = self._x ** (-(i - self.k0))
        wy = self._y ** (-(j - self.k0))
        total = -(wx @ self._W @ wy) / self.quad_n**2
        if abs(total.imag) > imag_tol:
            raise QuadratureUnstable(
                f"imaginary part {total.imag:.2e} at target ({i}, {j}); "
                "raise quad_n or move eps away from kernel zeros"
            )
        return float(total.real)


def contour_green_oracle(
    model: QuadrantModel,
    gens: GeneratingFunctions,
    target: State,
    eps: float = 0.1,
    quad_n: int = 512,
) -> float:
    """One-shot contour quadrature for a single interior target."""
    return ContourOracle(model, gens, eps=eps, quad_n=quad_n).value(*target)
