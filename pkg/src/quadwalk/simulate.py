"""Trajectory engine for the quadrant walk and its auxiliary walks.

Randomness comes from counter-based Philox streams keyed by
``(seed, stream)``, so every replica owns an independent, reproducible
stream and parallel splits merge deterministically regardless of worker
order.  Paths over the four walk kinds share one stepping core:

* ``Z``  : the quadrant walk itself,
* ``Z0`` : the free interior walk on the whole plane,
* ``Z1`` : right half-plane walk (vertical coordinate unconstrained),
* ``Z2`` : upper half-plane walk.

Hitting-time statistics report censoring explicitly; a stopping time that
has not resolved within ``max_steps`` is counted as censored, never
imputed.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .model import QuadrantModel, StepDistribution

State = Tuple[int, int]

_BLOCK = 4096


class StreamRNG:
    """Uniform variates from a Philox stream keyed by (seed, stream)."""

    def __init__(self, seed: int, stream: int):
        self.seed = seed
        self.stream = stream
        bitgen = np.random.Philox(key=np.array([seed & (2**64 - 1), stream & (2**64 - 1)],
                                               dtype=np.uint64))
        self._gen = np.random.Generator(bitgen)
        self._buf: List[float] = []
        self._pos = 0

    def uniform(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


class _Sampler:
    """Inverse-CDF sampler over the offsets of one step distribution."""

    __slots__ = ("offsets", "cum")

    def __init__(self, dist: StepDistribution):
        self.offsets: List[State] = []
        self.cum: List[float] = []
        acc = 0.0
        for (di, dj), p in dist.entries.items():
            acc += float(p)
            self.offsets.append((di, dj))
            self.cum.append(acc)
        self.cum[-1] = max(self.cum[-1], 1.0)

    def draw(self, u: float) -> State:
        return self.offsets[bisect_right(self.cum, u)]


class Walker:
    """Steps one of the walk kinds using per-domain samplers."""

    def __init__(self, model: QuadrantModel, kind: str = "Z"):
        if kind not in ("Z", "Z0", "Z1", "Z2"):
            raise ValueError(f"unknown walk kind {kind!r}")
        self.model = model
        self.kind = kind
        self.k0 = model.k0
        self._interior = _Sampler(model.interior)
        self._horiz = [_Sampler(d) for d in model.horiz]
        self._vert = [_Sampler(d) for d in model.vert]
        self._corner = [[_Sampler(d) for d in row] for row in model.corner]

    def sampler_at(self, i: int, j: int) -> _Sampler:
        k0 = self.k0
        if self.kind == "Z0":
            return self._interior
        if self.kind == "Z1":
            return self._vert[i] if 0 <= i < k0 else self._interior
        if self.kind == "Z2":
            return self._horiz[j] if 0 <= j < k0 else self._interior
        if i >= k0 and j >= k0:
            return self._interior
        if i >= k0:
            return self._horiz[j]
        if j >= k0:
            return self._vert[i]
        return self._corner[i][j]

    def step(self, state: State, rng: StreamRNG) -> State:
        di, dj = self.sampler_at(*state).draw(rng.uniform())
        return (state[0] + di, state[1] + dj)

    def in_state_space(self, state: State) -> bool:
        i, j = state
        if self.kind == "Z":
            return i >= 0 and j >= 0
        if self.kind == "Z1":
            return i >= 0
        if self.kind == "Z2":
            return j >= 0
        return True


@dataclass
class PathConfig:
    """One reproducible trajectory request."""

    model: QuadrantModel
    start: State
    max_steps: int
    seed: int
    stream: int = 0
    kind: str = "Z"

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


def simulate_path(cfg: PathConfig) -> Iterator[State]:
    """Yield the path (including the start state) for ``max_steps`` steps."""
    walker = Walker(cfg.model, cfg.kind)
    if not walker.in_state_space(cfg.start):
        raise ValueError(f"start {cfg.start} outside the {cfg.kind} state space")
    rng = StreamRNG(cfg.seed, cfg.stream)
    state = cfg.start
    yield state
    for _ in range(cfg.max_steps):
        state = walker.step(state, rng)
        yield state


@dataclass
class TimeStat:
    """Empirical summary of one stopping time over replicas."""

    name: str
    finite: int
    censored: int
    mean: float
    stderr: float

    @property
    def replicas(self) -> int:
        return self.finite + self.censored


@dataclass
class HittingReport:
    replicas: int
    max_steps: int
    stats: Dict[str, TimeStat]

    def __getitem__(self, name: str) -> TimeStat:
        return self.stats[name]


# stopping-time definitions: (walk kind, detector factory)
# each detector maps (state, n) -> bool, evaluated after the n-th step
def _detectors(k0: int, params: Dict[str, int]):
    k = params.get("k")
    ell = params.get("l")
    return {
        "tau_state": ("Z", lambda s, n: s == (k, ell)),
        "tau": ("Z", lambda s, n: s[1] < k0),
        "tau1_state": ("Z1", lambda s, n: s == (k, ell)),
        "tau1": ("Z1", lambda s, n: s[1] < k0),
        "T1k": ("Z1", lambda s, n: s[0] == k),
        "T1cap": ("Z1", lambda s, n: s[0] <= max(k0 - 1, k if k is not None else 0)),
        "Tcap": ("Z", lambda s, n: s[0] <= max(k0 - 1, k if k is not None else 0)),
        "tau2k": ("Z2", lambda s, n: s[1] == k),
    }


KNOWN_TIMES = ("tau_state", "tau", "tau1_state", "tau1", "T1k", "T1cap", "Tcap", "tau2k")


def hitting_times(
    model: QuadrantModel,
    which: Sequence[str],
    start: State,
    reps: int,
    max_steps: int,
    seed: int,
    params: Optional[Dict[str, int]] = None,
    stream_base: int = 0,
) -> HittingReport:
    """Monte-Carlo law of the requested stopping times.

    Times needing a target state take it from ``params`` (keys ``k`` and
    ``l``).  Replica r uses stream ``stream_base + r``; times sharing a
    walk kind are resolved on the same trajectory.
    """
    params = params or {}
    detectors = _detectors(model.k0, params)
    for name in which:
        if name not in detectors:
            raise ValueError(f"unknown stopping time {name!r}; known: {KNOWN_TIMES}")
        if name in ("tau_state", "tau1_state", "T1k", "T1cap", "Tcap", "tau2k"):
            if params.get("k") is None:
                raise ValueError(f"stopping time {name!r} needs params['k']")
        if name in ("tau_state", "tau1_state") and params.get("l") is None:
            raise ValueError(f"stopping time {name!r} needs params['l']")

    by_kind: Dict[str, List[str]] = {}
    for name in which:
        by_kind.setdefault(detectors[name][0], []).append(name)

    samples: Dict[str, List[int]] = {name: [] for name in which}
    censored: Dict[str, int] = {name: 0 for name in which}

    for kind, names in by_kind.items():
        walker = Walker(model, kind)
        for r in range(reps):
            rng = StreamRNG(seed, stream_base + r)
            state = start
            pending = set(names)
            n = 0
            while pending and n < max_steps:
                state = walker.step(state, rng)
                n += 1
                for name in list(pending):
                    if detectors[name][1](state, n):
                        samples[name].append(n)
                        pending.discard(name)
            for name in pending:
                censored[name] += 1

    stats = {}
    for name in which:
        xs = samples[name]
        fin = len(xs)
        if fin:
            mean = sum(xs) / fin
            var = sum((x - mean) ** 2 for x in xs) / max(fin - 1, 1)
            se = math.sqrt(var / fin)
        else:
            mean = math.nan
            se = math.nan
        stats[name] = TimeStat(name, fin, censored[name], mean, se)
    return HittingReport(replicas=reps, max_steps=max_steps, stats=stats)


@dataclass
class SlopeEstimate:
    mean: float
    stderr: float
    reps: int
    steps: int


def fluid_limit_experiment(
    model: QuadrantModel,
    axis: str,
    n: int,
    reps: int,
    seed: int,
    start: Optional[State] = None,
    stream_base: int = 0,
) -> SlopeEstimate:
    """Monte-Carlo slope of the unconstrained coordinate of a half-plane walk.

    For ``axis='x1'`` this runs Z1 and returns the law-of-large-numbers
    slope ``Y1(n)/n`` whose limit is the vertical escape speed; for
    ``axis='y2'`` it runs Z2 and estimates the horizontal speed.
    """
    if axis == "x1":
        kind, coord = "Z1", 1
        start = start or (model.k0, 0)
    elif axis == "y2":
        kind, coord = "Z2", 0
        start = start or (0, model.k0)
    else:
        raise ValueError("axis must be 'x1' or 'y2'")
    walker = Walker(model, kind)
    slopes = []
    for r in range(reps):
        rng = StreamRNG(seed, stream_base + r)
        state = start
        for _ in range(n):
            state = walker.step(state, rng)
        slopes.append((state[coord] - start[coord]) / n)
    mean = sum(slopes) / reps
    var = sum((s - mean) ** 2 for s in slopes) / max(reps - 1, 1)
    return SlopeEstimate(mean=mean, stderr=math.sqrt(var / reps), reps=reps, steps=n)


@dataclass
class ReturnEstimate:
    """Return-probability estimate with a normal-approximation CI."""

    probability: float
    ci_low: float
    ci_high: float
    returned: int
    censored: int
    reps: int
    max_steps: int

    @property
    def green_self_value(self) -> float:
        """1 / (1 - return probability), the expected visits to the start."""
        return 1.0 / (1.0 - self.probability)


def transience_probe(
    model: QuadrantModel,
    state: State,
    max_steps: int,
    reps: int,
    seed: int,
    confidence_z: float = 2.576,
    stream_base: int = 0,
) -> ReturnEstimate:
    """Estimate the probability of ever returning to ``state``.

    Replicas that neither return nor exceed ``max_steps`` do not exist
    (paths run the full horizon), so censoring here means "no return seen
    within the horizon": those replicas count as non-returns and their
    number is reported, since a longer horizon could only raise the
    estimate.
    """
    walker = Walker(model, "Z")
    returned = 0
    for r in range(reps):
        rng = StreamRNG(seed, stream_base + r)
        s = state
        for _ in range(max_steps):
            s = walker.step(s, rng)
            if s == state:
                returned += 1
                break
    p = returned / reps
    half = confidence_z * math.sqrt(max(p * (1.0 - p), 1.0 / reps) / reps)
    return ReturnEstimate(
        probability=p,
        ci_low=max(0.0, p - half),
        ci_high=min(1.0, p + half),
        returned=returned,
        censored=reps - returned,
        reps=reps,
        max_steps=max_steps,
    )


def empirical_step_law(
    model: QuadrantModel,
    state: State,
    samples: int,
    seed: int,
    kind: str = "Z",
    stream: int = 0,
) -> Dict[State, int]:
    """Histogram of single steps out of ``state``; chi-square fodder."""
    walker = Walker(model, kind)
    rng = StreamRNG(seed, stream)
    counts: Dict[State, int] = {}
    for _ in range(samples):
        i, j = walker.step(state, rng)
        d = (i - state[0], j - state[1])
        counts[d] = counts.get(d, 0) + 1
    return counts
