"""Closed-form Marchenko-Pastur kernels ``K(M, v) = int lam dM(lam) / (1 + lam v)``.

With ``g = 1 + a v``, ``h = b - a`` and ``x = h v / g`` the interval kinds are

    uniform     a/g + h r1(x) / g**2
    linear_inc  a/g + 2 h r2(x) / g**2
    linear_dec  a/g + 2 h (r1(x) - r2(x)) / g**2

(see ``_logseries``), which is ``1/v - log(1 + x)/(h v**2)`` etc. rearranged so
that nothing cancels when ``|v|`` or ``h`` is small.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from popspec import _logseries
from popspec.spectral import BasisMeasure, Kind, _kind_arrays

__all__ = ["KernelMatrix", "kernel", "kernel_values", "kernel_matrix", "mp_residual", "first_moment", "first_moments"]


def _check_v(v):
    v = np.asarray(v, dtype=complex)
    if np.any(v.imag <= 0):
        raise ValueError("kernel needs Im v > 0")
    return v


def _kernel_arrays(kinds, a, b, v):
    """Broadcast kernel values: rows follow ``v``, columns follow the atoms."""
    vv = v.reshape(-1, 1)
    g = 1.0 + a * vv
    h = b - a
    x = h * vv / g
    base = a / g
    pts = kinds == 0
    r1 = _logseries.r1(x)
    r2 = _logseries.r2(x)
    tail = np.where(
        kinds == 1, h * r1, np.where(kinds == 2, 2.0 * h * r2, 2.0 * h * (r1 - r2))
    ) / (g * g)
    return np.where(pts, base, base + tail)


def kernel(M: BasisMeasure, v: complex) -> complex:
    v = _check_v(v)
    kinds, a, b = _kind_arrays([M])
    return complex(_kernel_arrays(kinds, a, b, v.reshape(1))[0, 0])


def kernel_values(atoms: Sequence[BasisMeasure], v) -> np.ndarray:
    """J x K array of kernels for every v in ``v`` and every atom."""
    v = _check_v(v).reshape(-1)
    kinds, a, b = _kind_arrays(atoms)
    return _kernel_arrays(kinds, a, b, v)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    entries: np.ndarray
    v_values: np.ndarray
    dictionary: tuple

    @property
    def shape(self):
        return self.entries.shape


def kernel_matrix(dictionary: Sequence[BasisMeasure], v_values) -> KernelMatrix:
    v = np.asarray(v_values, dtype=complex).reshape(-1)
    entries = kernel_values(dictionary, v)
    if not np.all(np.isfinite(entries)):
        raise FloatingPointError("non-finite kernel entry")
    return KernelMatrix(entries, v, tuple(dictionary))


def mp_residual(weights, km: KernelMatrix, pairs, c: float) -> np.ndarray:
    """e_j = 1/v_j + z_j - c * sum_k w_k K(M_k, v_j)."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != km.entries.shape[1]:
        raise ValueError(f"expected {km.entries.shape[1]} weights, got {w.size}")
    if len(pairs) != km.entries.shape[0]:
        raise ValueError(f"expected {km.entries.shape[0]} pairs, got {len(pairs)}")
    z = np.array([pr.z for pr in pairs], dtype=complex)
    v = np.array([pr.v for pr in pairs], dtype=complex)
    return 1.0 / v + z - c * (km.entries @ w)


def first_moment(M: BasisMeasure) -> float:
    if M.kind is Kind.POINT:
        return M.a
    if M.kind is Kind.UNIFORM:
        return 0.5 * (M.a + M.b)
    if M.kind is Kind.LINEAR_INC:
        return (M.a + 2.0 * M.b) / 3.0
    return (2.0 * M.a + M.b) / 3.0


def first_moments(atoms: Sequence[BasisMeasure]) -> np.ndarray:
    return np.array([first_moment(m) for m in atoms])
