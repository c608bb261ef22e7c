"""Quadrant walk declaration, validation and derived local/induced models.

A walk on the lattice quadrant moves by one of four families of step
distributions, selected by the homogeneity domain of the current state:

* interior          ``i >= k0 and j >= k0``   -> ``interior``
* horizontal strip  ``i >= k0 and j <  k0``   -> ``horiz[j]``
* vertical strip    ``i <  k0 and j >= k0``   -> ``vert[i]``
* corner            ``i <  k0 and j <  k0``   -> ``corner[i][j]``

Support floors on each family guarantee that every step taken from the
quadrant lands back in the quadrant.  The auxiliary walks Z0 (free plane),
Z1 (right half-plane, vertical coordinate unconstrained) and Z2 (upper
half-plane) reuse the same families and drive the analysis of escape along
the axes, together with the one-dimensional chains induced by projecting
Z1 on its first coordinate and Z2 on its second.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence, Tuple, Union

Number = Union[int, float, Fraction]
Offset = Tuple[int, int]

ROW_SUM_TOL = 1e-12


def _as_float(p: Number) -> float:
    return float(p)


@dataclass(frozen=True)
class DriftVector:
    m1: float
    m2: float

    def __iter__(self):
        return iter((self.m1, self.m2))


class StepDistribution:
    """Finitely supported probability distribution on lattice offsets.

    Probabilities may be exact :class:`~fractions.Fraction` values or
    floats; mixing is allowed.  ``floor`` is the componentwise lower bound
    the support must respect so that steps never leave the state space.
    """

    __slots__ = ("entries", "floor")

    def __init__(self, entries: Mapping[Offset, Number], floor: Offset = (None, None)):
        merged: Dict[Offset, Number] = {}
        for (di, dj), p in entries.items():
            if not (isinstance(di, int) and isinstance(dj, int)):
                raise TypeError(f"offsets must be integer pairs, got ({di}, {dj})")
            if p == 0:
                continue
            if (di, dj) in merged:
                merged[(di, dj)] = merged[(di, dj)] + p
            else:
                merged[(di, dj)] = p
        self.entries: Dict[Offset, Number] = dict(sorted(merged.items()))
        self.floor = floor

    def __repr__(self):
        return f"StepDistribution({self.entries!r}, floor={self.floor!r})"

    def __eq__(self, other):
        return (
            isinstance(other, StepDistribution)
            and self.entries == other.entries
            and self.floor == other.floor
        )

    def items(self):
        return self.entries.items()

    def float_items(self) -> List[Tuple[int, int, float]]:
        return [(di, dj, _as_float(p)) for (di, dj), p in self.entries.items()]

    @property
    def is_exact(self) -> bool:
        return all(isinstance(p, (int, Fraction)) for p in self.entries.values())

    def total_mass(self) -> Number:
        return sum(self.entries.values())

    def row_sum_error(self) -> float:
        return abs(_as_float(self.total_mass()) - 1.0)

    def floor_violations(self) -> List[Offset]:
        fx, fy = self.floor
        bad = []
        for (di, dj) in self.entries:
            if (fx is not None and di < fx) or (fy is not None and dj < fy):
                bad.append((di, dj))
        return bad

    def mean(self) -> DriftVector:
        m1 = sum(di * _as_float(p) for (di, dj), p in self.entries.items())
        m2 = sum(dj * _as_float(p) for (di, dj), p in self.entries.items())
        return DriftVector(m1, m2)

    def moments(self) -> Dict[str, float]:
        """First and second moments of the step (EX, EY, EX2, EY2, EXY)."""
        ex = ey = ex2 = ey2 = exy = 0.0
        for (di, dj), p in self.entries.items():
            w = _as_float(p)
            ex += di * w
            ey += dj * w
            ex2 += di * di * w
            ey2 += dj * dj * w
            exy += di * dj * w
        return {"EX": ex, "EY": ey, "EX2": ex2, "EY2": ey2, "EXY": exy}

    def marginal(self, axis: str) -> Dict[int, float]:
        """Marginal law of one displacement coordinate ('x' or 'y')."""
        out: Dict[int, float] = {}
        pick = 0 if axis == "x" else 1
        for off, p in self.entries.items():
            d = off[pick]
            out[d] = out.get(d, 0.0) + _as_float(p)
        return dict(sorted(out.items()))

    def support_span(self) -> Tuple[int, int, int, int]:
        dis = [di for (di, _) in self.entries]
        djs = [dj for (_, dj) in self.entries]
        return min(dis), max(dis), min(djs), max(djs)


def drift(dist: StepDistribution) -> DriftVector:
    """Mean step of a distribution, computed by direct summation."""
    return dist.mean()


def moment_transform(dist: StepDistribution, alpha: Tuple[float, float]) -> float:
    """Exponential moment sum(p * exp(a1*di + a2*dj)); exact for finite support."""
    import math

    a1, a2 = alpha
    return sum(_as_float(p) * math.exp(a1 * di + a2 * dj) for (di, dj), p in dist.entries.items())


def mixture(p: StepDistribution, q: StepDistribution, lam: float) -> StepDistribution:
    """Convex combination lam*p + (1-lam)*q, keeping the common floor."""
    out: Dict[Offset, Number] = {}
    for off, w in p.entries.items():
        out[off] = out.get(off, 0.0) + lam * _as_float(w)
    for off, w in q.entries.items():
        out[off] = out.get(off, 0.0) + (1.0 - lam) * _as_float(w)
    fx = min(p.floor[0], q.floor[0]) if p.floor[0] is not None and q.floor[0] is not None else None
    fy = min(p.floor[1], q.floor[1]) if p.floor[1] is not None and q.floor[1] is not None else None
    return StepDistribution(out, floor=(fx, fy))


class QuadrantModel:
    """Homogeneity width ``k0`` plus the four step-distribution families."""

    def __init__(
        self,
        k0: int,
        interior: StepDistribution,
        horiz: Sequence[StepDistribution],
        vert: Sequence[StepDistribution],
        corner: Sequence[Sequence[StepDistribution]],
        name: str = "",
    ):
        if k0 < 1:
            raise ValueError("k0 must be a positive integer")
        if len(horiz) != k0 or len(vert) != k0:
            raise ValueError("need exactly k0 boundary rows per axis")
        if len(corner) != k0 or any(len(row) != k0 for row in corner):
            raise ValueError("corner grid must be k0 x k0")
        self.k0 = k0
        self.interior = interior
        self.horiz = tuple(horiz)
        self.vert = tuple(vert)
        self.corner = tuple(tuple(row) for row in corner)
        self.name = name

    def measure_at(self, i: int, j: int) -> StepDistribution:
        """Step distribution used by the quadrant walk at state (i, j)."""
        k0 = self.k0
        if i >= k0 and j >= k0:
            return self.interior
        if i >= k0:
            return self.horiz[j]
        if j >= k0:
            return self.vert[i]
        return self.corner[i][j]

    def local_measure(self, kind: str, i: int, j: int) -> StepDistribution:
        """Step distribution of an auxiliary walk Z0/Z1/Z2 at state (i, j)."""
        k0 = self.k0
        if kind == "Z0":
            return self.interior
        if kind == "Z1":
            return self.vert[i] if 0 <= i < k0 else self.interior
        if kind == "Z2":
            return self.horiz[j] if 0 <= j < k0 else self.interior
        raise ValueError(f"unknown local walk kind {kind!r}")

    def families(self):
        """Yield (label, distribution) for every declared family member."""
        yield "interior", self.interior
        for j, d in enumerate(self.horiz):
            yield f"horiz[{j}]", d
        for i, d in enumerate(self.vert):
            yield f"vert[{i}]", d
        for i, row in enumerate(self.corner):
            for j, d in enumerate(row):
                yield f"corner[{i},{j}]", d

    def max_jump(self) -> int:
        """Largest absolute displacement over all families (window padding)."""
        m = 0
        for _, d in self.families():
            lo_x, hi_x, lo_y, hi_y = d.support_span()
            m = max(m, abs(lo_x), abs(hi_x), abs(lo_y), abs(hi_y))
        return m

    def drift(self) -> DriftVector:
        return self.interior.mean()

    def canonical_hash(self) -> str:
        """SHA-256 over a canonical text rendering; used in output headers."""
        parts = [f"k0={self.k0}"]
        for label, d in self.families():
            for (di, dj), p in d.entries.items():
                if isinstance(p, Fraction):
                    ptxt = f"{p.numerator}/{p.denominator}"
                else:
                    ptxt = repr(float(p))
                parts.append(f"{label}:{di},{dj}={ptxt}")
        return hashlib.sha256("\n".join(parts).encode()).hexdigest()


def expected_floor(model: QuadrantModel, label: str) -> Offset:
    """Support floor each family must respect so steps stay in the quadrant."""
    k0 = model.k0
    if label == "interior":
        return (-k0, -k0)
    kind, _, idx = label.partition("[")
    if kind == "horiz":
        j = int(idx.rstrip("]"))
        return (-k0, -j)
    if kind == "vert":
        i = int(idx.rstrip("]"))
        return (-i, -k0)
    i, j = (int(t) for t in idx.rstrip("]").split(","))
    return (-i, -j)


@dataclass
class CheckResult:
    name: str
    passed: bool
    message: str


@dataclass
class ModelReport:
    checks: List[CheckResult] = field(default_factory=list)

    def add(self, name: str, passed: bool, message: str):
        self.checks.append(CheckResult(name, passed, message))

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_text(self) -> str:
        width = max((len(c.name) for c in self.checks), default=0)
        lines = []
        for c in self.checks:
            tag = "pass" if c.passed else "FAIL"
            lines.append(f"{tag}  {c.name.ljust(width)}  {c.message}")
        return "\n".join(lines)


def validate_model(model: QuadrantModel) -> ModelReport:
    """Run every structural check and return the full report.

    Failures are report entries, never exceptions.  Irreducibility is
    checked by reachability on a finite window and reported as a heuristic;
    positivity of the escape speeds is out of scope here and lives with the
    induced-chain solver.
    """
    report = ModelReport()
    k0 = model.k0

    exact = all(d.is_exact for _, d in model.families())
    worst = 0.0
    for label, d in model.families():
        if exact:
            bad = d.total_mass() != 1
            worst = max(worst, d.row_sum_error())
        else:
            err = d.row_sum_error()
            worst = max(worst, err)
            bad = err > ROW_SUM_TOL
        if bad:
            report.add("row-sums", False, f"{label} sums to {float(d.total_mass())!r}")
            break
    else:
        kindtxt = "exactly" if exact else f"within {ROW_SUM_TOL:g}"
        report.add("row-sums", True, f"all families sum to 1 {kindtxt} (worst error {worst:.2e})")

    neg = [
        (label, off, p)
        for label, d in model.families()
        for off, p in d.entries.items()
        if _as_float(p) < 0
    ]
    report.add(
        "nonnegative",
        not neg,
        "all probabilities nonnegative" if not neg else f"negative mass, e.g. {neg[0]}",
    )

    floor_bad = []
    for label, d in model.families():
        fx, fy = expected_floor(model, label)
        for (di, dj) in d.entries:
            if di < fx or dj < fy:
                floor_bad.append((label, (di, dj)))
    report.add(
        "support-floors",
        not floor_bad,
        "every family respects its support floor"
        if not floor_bad
        else f"floor violated at {floor_bad[:3]}",
    )

    n_offsets = sum(len(d.entries) for _, d in model.families())
    report.add("finite-support", True, f"{n_offsets} offsets across all families")

    # Floors imply quadrant closure; re-check explicitly on a small window.
    escapees = []
    for i in range(2 * k0 + 2):
        for j in range(2 * k0 + 2):
            for (di, dj) in model.measure_at(i, j).entries:
                if i + di < 0 or j + dj < 0:
                    escapees.append(((i, j), (di, dj)))
    report.add(
        "quadrant-closure",
        not escapees,
        "all transitions from the test window stay in the quadrant"
        if not escapees
        else f"step leaves the quadrant: {escapees[:3]}",
    )

    if report.ok:
        # boundary rows may need several up-and-over moves before they can
        # turn back, so the padded window must leave real headroom
        span = model.max_jump()
        core = 3 * k0 + 10
        win = core + 4 * span + 4
        for kind in ("Z", "Z0", "Z1", "Z2"):
            ok, msg = _core_reachability(model, kind, core, win)
            report.add(f"irreducible-{kind} (heuristic)", ok, msg)

    m = model.drift()
    report.add(
        "negative-drift",
        m.m1 < 0 and m.m2 < 0,
        f"interior drift ({m.m1:.6g}, {m.m2:.6g})"
        + ("" if m.m1 < 0 and m.m2 < 0 else " must have both coordinates < 0"),
    )

    return report


def _core_reachability(model: QuadrantModel, kind: str, core: int, win: int):
    """Irreducibility heuristic for one of the walks Z/Z0/Z1/Z2.

    All edges within a padded window participate; the verdict only
    concerns the inner core, so states near the rim are not penalized for
    jumps leaving the window.  Core states reachable from the reference
    state must reach it back (the restricted chain is irreducible); core
    states the walk cannot enter at all are inessential and only reported.
    """
    k0 = model.k0
    if kind == "Z":
        states = [(i, j) for i in range(win + 1) for j in range(win + 1)]
        center = (k0, k0)
        rows = lambda s: [
            (s[0] + di, s[1] + dj) for (di, dj) in model.measure_at(*s).entries
        ]
        in_core = lambda s: s[0] <= core and s[1] <= core
    elif kind == "Z0":
        states = [(i, j) for i in range(-win, win + 1) for j in range(-win, win + 1)]
        center = (0, 0)
        rows = lambda s: [
            (s[0] + di, s[1] + dj) for (di, dj) in model.interior.entries
        ]
        in_core = lambda s: abs(s[0]) <= core and abs(s[1]) <= core
    elif kind == "Z1":
        states = [(i, j) for i in range(win + 1) for j in range(-win, win + 1)]
        center = (k0, 0)
        rows = lambda s: [
            (s[0] + di, s[1] + dj)
            for (di, dj) in model.local_measure("Z1", *s).entries
        ]
        in_core = lambda s: s[0] <= core and abs(s[1]) <= core
    else:
        states = [(i, j) for i in range(-win, win + 1) for j in range(win + 1)]
        center = (0, k0)
        rows = lambda s: [
            (s[0] + di, s[1] + dj)
            for (di, dj) in model.local_measure("Z2", *s).entries
        ]
        in_core = lambda s: abs(s[0]) <= core and s[1] <= core

    index = {s: n for n, s in enumerate(states)}
    fwd: Dict[int, List[int]] = {}
    bwd: Dict[int, List[int]] = {}
    for s, n in index.items():
        for t in rows(s):
            m = index.get(t)
            if m is None:
                continue
            fwd.setdefault(n, []).append(m)
            bwd.setdefault(m, []).append(n)

    def bfs(adj, start):
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen

    c = index[center]
    reach_from = bfs(fwd, c)
    reach_to = bfs(bwd, c)
    stranded = [
        s
        for s, n in index.items()
        if in_core(s) and n in reach_from and n not in reach_to
    ]
    if stranded:
        return (
            False,
            f"{len(stranded)} reachable core states cannot return to {center}, "
            f"e.g. {stranded[:3]}",
        )
    unreachable = [s for s, n in index.items() if in_core(s) and n not in reach_from]
    ncore = sum(1 for s in states if in_core(s))
    msg = f"reachable class of the {ncore}-state core strongly connected through {center}"
    if unreachable:
        msg += f"; {len(unreachable)} inessential core states never entered, e.g. {unreachable[:3]}"
    return True, msg


class InducedChain:
    """One-coordinate chain obtained by marginalizing a half-plane walk.

    ``axis='x1'`` projects the right-half-plane walk Z1 on its first
    coordinate; ``axis='y2'`` projects Z2 on its second.  Rows for states
    ``k >= k0`` are translation invariant.
    """

    def __init__(self, axis: str, k0: int, interior_row: Dict[int, float],
                 boundary_rows: Sequence[Dict[int, float]]):
        self.axis = axis
        self.k0 = k0
        self.interior_row = dict(sorted(interior_row.items()))
        self.boundary_rows = [dict(sorted(r.items())) for r in boundary_rows]

    def displacement_row(self, k: int) -> Dict[int, float]:
        """Law of the displacement k' - k out of state k."""
        if k >= self.k0:
            return self.interior_row
        return self.boundary_rows[k]

    def row(self, k: int) -> Dict[int, float]:
        """Law of the next state k' out of state k, clipped to be >= 0."""
        out: Dict[int, float] = {}
        for d, p in self.displacement_row(k).items():
            kp = k + d
            if kp < 0:
                raise ValueError(f"induced row at {k} steps to negative state {kp}")
            out[kp] = out.get(kp, 0.0) + p
        return out

    def mean_displacement(self, k: int) -> float:
        return sum(d * p for d, p in self.displacement_row(k).items())


def induced_chain(model: QuadrantModel, axis: str) -> InducedChain:
    """Project Z1 (axis='x1') or Z2 (axis='y2') onto a 1-D chain."""
    if axis == "x1":
        interior = model.interior.marginal("x")
        boundary = [d.marginal("x") for d in model.vert]
    elif axis == "y2":
        interior = model.interior.marginal("y")
        boundary = [d.marginal("y") for d in model.horiz]
    else:
        raise ValueError("axis must be 'x1' or 'y2'")
    return InducedChain(axis, model.k0, interior, boundary)


def vertical_kick(model: QuadrantModel, i: int) -> float:
    """Mean vertical displacement of Z1 out of column i."""
    if 0 <= i < model.k0:
        return model.vert[i].mean().m2
    return model.interior.mean().m2


def horizontal_kick(model: QuadrantModel, j: int) -> float:
    """Mean horizontal displacement of Z2 out of row j."""
    if 0 <= j < model.k0:
        return model.horiz[j].mean().m1
    return model.interior.mean().m1
