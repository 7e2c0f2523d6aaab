"""Dense symmetric eigendecomposition by cyclic Jacobi rotations.

Rotations are applied in round-robin order: each round pairs every index
with exactly one other, so the ``p/2`` rotations of a round touch disjoint
rows/columns and are applied together with vectorized updates.  A sweep is
``p - 1`` rounds and visits every off-diagonal pair once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from popspec.errors import NonConvergenceError, NotPSDError
from popspec.spectral import EmpiricalSpectrum

__all__ = ["SymMatrix", "sym_eigs", "sym_sqrt", "scm_eigenvalues", "covariance"]

MAX_SWEEPS = 100
OFF_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SymMatrix:
    data: np.ndarray

    def __post_init__(self):
        A = np.array(self.data, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {A.shape}")
        scale = np.abs(A).max() if A.size else 0.0
        if np.abs(A - A.T).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("matrix is not symmetric")
        A = 0.5 * (A + A.T)
        A.setflags(write=False)
        object.__setattr__(self, "data", A)

    @property
    def p(self) -> int:
        return self.data.shape[0]


def _as_sym(A) -> SymMatrix:
    return A if isinstance(A, SymMatrix) else SymMatrix(A)


@lru_cache(maxsize=32)
def _schedule(p: int):
    """Round-robin pairings (circle method) as (P, Q) index arrays per round."""
    m = p + (p % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        P, Q = [], []
        for i in range(m // 2):
            x, y = players[i], players[m - 1 - i]
            if x < p and y < p:
                P.append(min(x, y))
                Q.append(max(x, y))
        rounds.append((np.array(P, dtype=np.int64), np.array(Q, dtype=np.int64)))
        players = [players[0], players[-1], *players[1:-1]]
    return tuple(rounds)


def sym_eigs(A, max_sweeps: int = MAX_SWEEPS, vectors: bool = True):
    """Eigenvalues (descending) and orthonormal eigenvectors (as columns).

    With ``vectors=False`` the rotations are not accumulated and the second
    return value is None.
    """
    S = _as_sym(A)
    p = S.p
    A = S.data.copy()
    V = np.eye(p)
    norm = np.linalg.norm(A)
    if p > 1:
        rounds = _schedule(p)
        for sweep in range(max_sweeps + 1):
            off = np.linalg.norm(A - np.diag(np.diag(A)))
            if off <= OFF_TOL * norm:
                break
            if sweep == max_sweeps:
                raise NonConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
            for P, Q in rounds:
                apq = A[P, Q]
                live = apq != 0.0
                if not np.any(live):
                    continue
                P, Q, apq = P[live], Q[live], apq[live]
                theta = (A[Q, Q] - A[P, P]) / (2.0 * apq)
                with np.errstate(divide="ignore", over="ignore"):
                    t = np.where(
                        np.abs(theta) > 1e150,
                        0.5 / theta,
                        np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0)),
                    )
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                AP, AQ = A[:, P], A[:, Q]
                A[:, P] = AP * c - AQ * s
                A[:, Q] = AP * s + AQ * c
                RP, RQ = A[P, :], A[Q, :]
                A[P, :] = c[:, None] * RP - s[:, None] * RQ
                A[Q, :] = s[:, None] * RP + c[:, None] * RQ
                A[P, Q] = 0.0
                A[Q, P] = 0.0
                if vectors:
                    VP, VQ = V[:, P], V[:, Q]
                    V[:, P] = VP * c - VQ * s
                    V[:, Q] = VP * s + VQ * c
    vals = np.diag(A).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], (V[:, order] if vectors else None)


def sym_sqrt(A) -> SymMatrix:
    """Principal square root of a positive semi-definite matrix."""
    vals, vecs = sym_eigs(A)
    scale = np.abs(vals).max(initial=0.0)
    if vals.size and vals[-1] < -1e-10 * scale:
        raise NotPSDError(f"matrix has eigenvalue {vals[-1]!r}")
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    return SymMatrix(0.5 * (root + root.T))


def covariance(X, centered: bool = False) -> np.ndarray:
    """``X'X/n``, or ``(X - mean)'(X - mean)/(n - 1)`` when ``centered``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("data matrix must be two-dimensional")
    n = X.shape[0]
    if centered:
        if n < 2:
            raise ValueError("n must be at least 2")
        Xc = X - X.mean(axis=0)
        S = Xc.T @ Xc / (n - 1)
    else:
        if n < 1:
            raise ValueError("n must be at least 1")
        S = X.T @ X / n
    return 0.5 * (S + S.T)


def scm_eigenvalues(X, centered: bool = False) -> EmpiricalSpectrum:
    """Sample covariance eigenvalues packaged with the effective sample size.

    The centered estimator spends one degree of freedom on the mean, so the
    spectrum carries ``n - 1``.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if p < 1:
        raise ValueError("p must be at least 1")
    vals, _ = sym_eigs(covariance(X, centered), vectors=False)
    tol = 1e-12 * max(abs(vals[0]), 1e-300)
    if vals[-1] < -tol:
        raise NotPSDError(f"sample covariance has eigenvalue {vals[-1]!r}")
    return EmpiricalSpectrum(np.clip(vals, 0.0, None), n - 1 if centered else n)
