"""Dense two-phase primal simplex.

Problems are given in general form::

    minimize    c @ x
    subject to  G @ x <= h,  A @ x == b,  x >= lower

``lower`` defaults to 0; a ``-inf`` entry makes the variable free (it is split
as ``x+ - x-``).  Entering columns follow Bland's rule; the leaving row uses a
Harris ratio test, reverting to Bland's row rule on long degenerate runs.
The result is a deterministic function of the input.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import dger as _dger

__all__ = ["LPStatus", "LinearProgram", "LpSolution", "solve"]

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
PHASE1_TOL = 1e-8
# basic values this small are round-off from degenerate pivots and are
# treated as exact zeros in the ratio test
ZERO_TOL = 1e-12
HARRIS_TOL = 1e-11
# consecutive degenerate pivots before the row choice falls back to Bland's rule
BLAND_AFTER = 50


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class LinearProgram:
    c: np.ndarray
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    lower: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.G, self.h = _rows(self.G, self.h, n, "inequality")
        self.A, self.b = _rows(self.A, self.b, n, "equality")
        if self.lower is None:
            self.lower = np.zeros(n)
        else:
            self.lower = np.asarray(self.lower, dtype=float).reshape(-1)
            if self.lower.size != n:
                raise ValueError("lower bounds must match the number of variables")
            if np.any(np.isnan(self.lower)) or np.any(self.lower == np.inf):
                raise ValueError("lower bounds must be finite or -inf")
        for name in ("c", "G", "h", "A", "b"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} has non-finite entries")

    @property
    def n_vars(self) -> int:
        return self.c.size


def _rows(M, rhs, n, what):
    if M is None:
        if rhs is not None and np.size(rhs):
            raise ValueError(f"{what} right-hand side given without a matrix")
        return np.zeros((0, n)), np.zeros(0)
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    if M.shape[1] != n or M.shape[0] != rhs.size:
        raise ValueError(f"{what} constraints have shape {M.shape} with {rhs.size} right-hand sides; expected n={n}")
    return M, rhs


@dataclass
class LpSolution:
    status: LPStatus
    x: np.ndarray
    objective_value: float
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status is LPStatus.OPTIMAL


class _Tableau:
    """Rows ``B^-1 [M | rhs]`` with a reduced-cost row kept alongside."""

    def __init__(self, M, rhs, basis):
        self.T = np.hstack([M, rhs[:, None]])
        self.basis = np.array(basis, dtype=np.int64)
        self.d = np.zeros(self.T.shape[1])
        self.iterations = 0

    def set_costs(self, cost):
        T = self.T
        cb = cost[self.basis]
        self.d = np.concatenate([cost, [0.0]]) - cb @ T

    def pivot(self, r, e):
        T = self.T
        T[r] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        # in-place rank-1 update; T is C-ordered so update its transpose view
        _dger(-1.0, T[r], col, a=T.T, overwrite_a=True)
        T[:, e] = 0.0
        T[r, e] = 1.0
        self.d -= self.d[e] * T[r]
        self.d[e] = 0.0
        self.basis[r] = e
        self.iterations += 1
        rhs = T[:, -1]
        rhs[(rhs < 0.0) & (rhs > -HARRIS_TOL)] = 0.0

    def run(self, n_cols, max_iter):
        """Bland-rule iterations over the first ``n_cols`` columns."""
        T = self.T
        degenerate_run = 0
        while True:
            neg = np.flatnonzero(self.d[:n_cols] < -COST_TOL)
            if neg.size == 0:
                return LPStatus.OPTIMAL
            if self.iterations >= max_iter:
                return LPStatus.ITERATION_LIMIT
            e = int(neg[0])
            col = T[:, e]
            ok = col > PIVOT_TOL
            if not np.any(ok):
                return LPStatus.UNBOUNDED
            rows = np.flatnonzero(ok)
            # basic values below ZERO_TOL (including negative round-off) count as 0
            rhs = np.maximum(T[rows, -1], 0.0)
            rhs[rhs < ZERO_TOL] = 0.0
            pivots = col[rows]
            if degenerate_run < BLAND_AFTER:
                # Harris two-pass test: among rows whose ratio is within a small
                # tolerance of the minimum, take the largest pivot element
                theta = np.min((rhs + HARRIS_TOL) / pivots)
                cand = np.flatnonzero(rhs / pivots <= theta)
                r = int(rows[cand[np.argmax(pivots[cand])]])
            else:
                # long degenerate stretch: strict Bland row choice cannot cycle
                ratios = rhs / pivots
                tied = rows[ratios <= ratios.min()]
                r = int(tied[np.argmin(self.basis[tied])])
            degenerate_run = degenerate_run + 1 if T[r, -1] <= ZERO_TOL else 0
            self.pivot(r, e)


def _standard_form(lp: LinearProgram):
    """Return (M, rhs, cost, offset, recover) with M x' = rhs, x' >= 0."""
    n = lp.n_vars
    free = np.isneginf(lp.lower)
    shift = np.where(free, 0.0, lp.lower)
    # columns: x' (n), x- for free vars, slacks for G rows
    n_free = int(free.sum())
    m_in, m_eq = lp.G.shape[0], lp.A.shape[0]
    neg_cols = np.zeros((n, n_free))
    neg_cols[np.flatnonzero(free), np.arange(n_free)] = -1.0

    blocks = []
    if m_in:
        blocks.append(np.hstack([lp.G, lp.G @ neg_cols, np.eye(m_in)]))
    if m_eq:
        blocks.append(np.hstack([lp.A, lp.A @ neg_cols, np.zeros((m_eq, m_in))]))
    M = np.vstack(blocks) if blocks else np.zeros((0, n + n_free + m_in))
    rhs = np.concatenate([lp.h - lp.G @ shift, lp.b - lp.A @ shift])
    cost = np.concatenate([lp.c, lp.c @ neg_cols, np.zeros(m_in)])
    offset = float(lp.c @ shift)

    def recover(xs):
        return shift + xs[:n] + neg_cols @ xs[n : n + n_free]

    return M, rhs, cost, offset, recover, m_in


def _refine(M, rhs, basis, x):
    """Recompute basic values from the original data to shed pivot round-off."""
    try:
        xb = np.linalg.solve(M[:, basis], rhs)
    except np.linalg.LinAlgError:
        return x
    if np.any(xb < -1e-9):
        return x
    out = np.zeros_like(x)
    out[basis] = np.clip(xb, 0.0, None)
    if np.linalg.norm(M @ out - rhs, np.inf) <= np.linalg.norm(M @ x - rhs, np.inf):
        return out
    return x


def solve(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    M, rhs, cost, offset, recover, m_in = _standard_form(lp)
    m, N = M.shape
    if max_iter is None:
        max_iter = 50 * (m + N)

    M = M.copy()
    rhs = rhs.copy()
    if m == 0:
        if np.any(cost < -COST_TOL):
            return LpSolution(LPStatus.UNBOUNDED, recover(np.zeros(N)), -np.inf)
        x = recover(np.zeros(N))
        return LpSolution(LPStatus.OPTIMAL, x, float(lp.c @ x))

    # Inequality rows with a negative right-hand side share one artificial
    # column (-1 in every inequality row), pivoted in on the most negative
    # row; equality rows are sign-flipped and get one artificial each.
    m_eq = m - m_in
    basis = np.empty(m, dtype=np.int64)
    basis[:m_in] = N - m_in + np.arange(m_in)
    eq_flip = rhs[m_in:] < 0
    M[m_in:][eq_flip] *= -1.0
    rhs[m_in:][eq_flip] *= -1.0
    shared = m_in > 0 and bool(np.any(rhs[:m_in] < 0))
    n_art = m_eq + int(shared)
    art = np.zeros((m, n_art))
    art[m_in + np.arange(m_eq), np.arange(m_eq)] = 1.0
    basis[m_in:] = N + np.arange(m_eq)
    if shared:
        art[:m_in, -1] = -1.0

    tab = _Tableau(np.hstack([M, art]), rhs, basis)
    if shared:
        tab.pivot(int(np.argmin(rhs[:m_in])), N + n_art - 1)
        tab.iterations = 0
    if n_art:
        tab.set_costs(np.concatenate([np.zeros(N), np.ones(n_art)]))
        status = tab.run(N + n_art, max_iter)
        if status is LPStatus.ITERATION_LIMIT:
            return _finish(LPStatus.ITERATION_LIMIT, tab, N, recover, lp)
        scale = max(1.0, float(np.abs(rhs).max()))
        if -tab.d[-1] > PHASE1_TOL * scale:
            return _finish(LPStatus.INFEASIBLE, tab, N, recover, lp)
        # drive zero-level artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if tab.basis[r] >= N:
                cand = np.flatnonzero(np.abs(tab.T[r, :N]) > PIVOT_TOL)
                if cand.size:
                    tab.pivot(r, int(cand[0]))
                else:
                    keep[r] = False
        tab.T = np.hstack([tab.T[keep][:, :N], tab.T[keep][:, -1:]])
        tab.basis = tab.basis[keep]
        M, rhs = M[keep], rhs[keep]
    else:
        tab.T = np.hstack([tab.T[:, :N], tab.T[:, -1:]])

    tab.set_costs(cost)
    status = tab.run(N, max_iter)
    log.debug("simplex: %d rows, %d cols, %d iterations, %s", m, N, tab.iterations, status.value)
    if status is not LPStatus.OPTIMAL:
        return _finish(status, tab, N, recover, lp)
    xs = np.zeros(N)
    xs[tab.basis] = np.clip(tab.T[:, -1], 0.0, None)
    xs = _refine(M, rhs, tab.basis, xs)
    x = recover(xs)
    return LpSolution(LPStatus.OPTIMAL, x, float(cost @ xs + offset), tab.iterations)


def _finish(status, tab, N, recover, lp):
    xs = np.zeros(N)
    real = tab.basis < N
    xs[tab.basis[real]] = tab.T[real, -1]
    x = recover(xs)
    obj = float(lp.c @ x) if status is not LPStatus.UNBOUNDED else -np.inf
    return LpSolution(status, x, obj, tab.iterations)
