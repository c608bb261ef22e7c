"""Stationary measures, escape speeds and tail constants of induced chains.

The one-dimensional chain induced by a half-plane walk is positive
recurrent whenever the relevant interior drift coordinate is negative.
Its stationary vector is obtained by a sparse direct solve of the
equilibrium equations on a truncated state range, with the overflow mass
folded onto the cap state so the truncated matrix stays stochastic; the
truncation is doubled until the head masses stabilize.

The stationary tail decays geometrically with rate 1/x1 (x1 being the
nontrivial root of the interior kernel on that axis) and a computable
prefactor; both the fitted and the closed-form prefactor are produced so
they can cross-check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import FitUnstable, NotConverged
from .kernel import KernelEvaluator, one_d_root
from .model import InducedChain, QuadrantModel, induced_chain

MAX_STATES = 10**6


def _truncated_matrix(chain: InducedChain, L: int) -> sp.csr_matrix:
    """Transition matrix on {0..L} with overflow folded onto state L."""
    rows = []
    cols = []
    vals = []
    # translation-invariant bulk, vectorized over k
    for d, p in chain.interior_row.items():
        k = np.arange(chain.k0, L + 1)
        kp = np.minimum(k + d, L)
        if np.any(kp < 0):
            raise ValueError("induced chain steps below 0 from a bulk state")
        rows.append(k)
        cols.append(kp)
        vals.append(np.full(k.shape, p))
    for k in range(min(chain.k0, L + 1)):
        for d, p in chain.boundary_rows[k].items():
            kp = min(k + d, L)
            if kp < 0:
                raise ValueError(f"induced chain steps below 0 from state {k}")
            rows.append(np.array([k]))
            cols.append(np.array([kp]))
            vals.append(np.array([p]))
    P = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(L + 1, L + 1),
    )
    return P.tocsr()


def _solve_stationary(P: sp.csr_matrix) -> np.ndarray:
    """Solve pi P = pi, sum(pi) = 1 by replacing one balance equation."""
    n = P.shape[0]
    A = (P.T - sp.identity(n, format="csr")).tolil()
    A[0, :] = 1.0
    b = np.zeros(n)
    b[0] = 1.0
    pi = spsolve(A.tocsr(), b)
    return pi


def stationary(
    chain: InducedChain,
    L: Optional[int] = None,
    tol: float = 1e-12,
) -> Tuple[np.ndarray, int]:
    """Stationary vector of the induced chain on an adaptive truncation.

    Starting from ``L`` (default 256) the range is doubled until the head
    masses pi(0..k0-1) move by less than ``tol``.  Raises
    :class:`NotConverged` past one million states, which signals an
    almost-null-recurrent input.
    """
    m = sum(d * p for d, p in chain.interior_row.items())
    if m >= 0:
        raise NotConverged(
            f"induced {chain.axis} chain has nonnegative bulk drift {m:.6g}; "
            "no stationary distribution"
        )
    L = L or 256
    prev_head = None
    while L <= MAX_STATES:
        pi = _solve_stationary(_truncated_matrix(chain, L))
        head = pi[: chain.k0].copy()
        if prev_head is not None and np.max(np.abs(head - prev_head)) < tol:
            return pi, L
        prev_head = head
        L *= 2
    raise NotConverged(f"stationary truncation exceeded {MAX_STATES} states")


def residual_l1(chain: InducedChain, pi: np.ndarray) -> float:
    """l1 residual ||pi P - pi|| on the truncated range."""
    P = _truncated_matrix(chain, len(pi) - 1)
    return float(np.abs(pi @ P - pi).sum())


def speed(model: QuadrantModel, axis: str, pi: np.ndarray) -> float:
    """Escape speed along the axis transverse to the induced chain.

    The transverse mean step is the interior value except on the k0
    boundary columns (rows), so the stationary average collapses to the
    interior drift plus finitely many boundary corrections; no truncation
    of the infinite sum is involved.
    """
    k0 = model.k0
    if axis == "x1":
        bulk = model.interior.mean().m2
        kicks = [d.mean().m2 for d in model.vert]
    elif axis == "y2":
        bulk = model.interior.mean().m1
        kicks = [d.mean().m1 for d in model.horiz]
    else:
        raise ValueError("axis must be 'x1' or 'y2'")
    v = bulk
    for k in range(k0):
        v += float(pi[k]) * (kicks[k] - bulk)
    return v


@dataclass
class TailEstimate:
    """Geometric-tail prefactor of the stationary vector, two ways."""

    A_fit: float
    A_closed: float
    rate: float            # pi(i) ~ A * rate^(-i)
    fitted_rate: float     # free-slope fit, for diagnostics
    quality: float         # relative gap between the two prefactors
    window: Tuple[int, int]


def tail_constant(
    pi: np.ndarray,
    model: QuadrantModel,
    axis: str,
    x_root: Optional[float] = None,
    fit_window: Optional[Tuple[int, int]] = None,
) -> TailEstimate:
    """Fit pi(i) ~ A / root^i and evaluate the closed-form prefactor.

    The fit fixes the decay rate at the kernel root and regresses only the
    intercept on ``fit_window`` (default: the middle half of the
    truncation).  The closed form divides the boundary kernels weighted by
    the head masses by the kernel derivative at the root:

        A = sum_k pi(k) q''_k(root, 1) / (root^(1-k0) * dQ/dx(root, 1))

    for the x1 chain, and symmetrically for y2.  Their relative gap is
    returned as ``quality``.
    """
    axis_letter = "x" if axis == "x1" else "y"
    if x_root is None:
        x_root = one_d_root(model, axis_letter)
    L = len(pi) - 1
    if fit_window is None:
        fit_window = (L // 2, (3 * L) // 4)
    lo, hi = fit_window
    if hi - lo < 8:
        raise FitUnstable(f"fit window {fit_window} has fewer than 8 states")
    idx = np.arange(lo, hi + 1)
    vals = pi[lo : hi + 1]
    if np.any(vals <= 0):
        raise FitUnstable("stationary masses vanish inside the fit window")
    logs = np.log(vals)
    log_rate = math.log(x_root)

    A_fit = float(np.exp(np.mean(logs + idx * log_rate)))
    slope, _ = np.polyfit(idx, logs, 1)
    fitted_rate = float(np.exp(-slope))

    ev = KernelEvaluator(model)
    k0 = model.k0
    if axis == "x1":
        num = sum(float(pi[k]) * complex(ev.q_vert(k, x_root, 1.0)).real for k in range(k0))
        den = x_root ** (1 - k0) * complex(ev.dQ_dx(x_root, 1.0)).real
    else:
        num = sum(float(pi[k]) * complex(ev.q_horiz(k, 1.0, x_root)).real for k in range(k0))
        den = x_root ** (1 - k0) * complex(ev.dQ_dy(1.0, x_root)).real
    A_closed = num / den

    quality = abs(A_fit - A_closed) / abs(A_closed) if A_closed != 0 else math.inf
    return TailEstimate(A_fit, A_closed, x_root, fitted_rate, quality, fit_window)


@dataclass
class ChainSolution:
    """Stationary solution of one induced chain plus derived quantities."""

    axis: str
    pi: np.ndarray
    L: int
    residual: float
    V: float
    tail: TailEstimate

    def mass(self, k: int) -> float:
        return float(self.pi[k]) if 0 <= k <= self.L else 0.0

    @property
    def A(self) -> float:
        """Tail prefactor; the closed form when both estimates agree within
        1 percent, otherwise the fit (and `tail.quality` flags the gap)."""
        return self.tail.A_closed if self.tail.quality <= 0.01 else self.tail.A_fit


def solve_chain(
    model: QuadrantModel,
    axis: str,
    tol: float = 1e-12,
    L: Optional[int] = None,
    x_root: Optional[float] = None,
) -> ChainSolution:
    """Full pipeline for one axis: stationary vector, speed, tail constant."""
    chain = induced_chain(model, axis)
    pi, L_used = stationary(chain, L=L, tol=tol)
    res = residual_l1(chain, pi)
    V = speed(model, axis, pi)
    tail = tail_constant(pi, model, axis, x_root=x_root)
    return ChainSolution(axis=axis, pi=pi, L=L_used, residual=res, V=V, tail=tail)
