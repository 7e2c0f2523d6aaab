"""Cancellation-free remainders of the complex ``log(1 + x)`` series.

The interval-kind Stieltjes transforms and kernels all reduce to

    r1(x) = (x - log(1 + x)) / x**2              = sum_k (-1)**k x**k / (k + 2)
    r2(x) = (log(1 + x) - x + x**2 / 2) / x**3   = sum_k (-1)**k x**k / (k + 3)

Below ``SERIES_RADIUS`` the power series is used; above it the closed form
is well conditioned.  The logarithm is always the principal branch.
"""

import numpy as np

SERIES_RADIUS = 0.25
_N_TERMS = 40  # 0.25**40 ~ 1e-24


def _horner(x, offset):
    acc = np.zeros_like(x)
    for k in range(_N_TERMS - 1, -1, -1):
        acc = acc * (-x) + 1.0 / (k + offset)
    return acc


def small_mask(x):
    return np.abs(x) < SERIES_RADIUS


def r1(x):
    x = np.asarray(x, dtype=complex)
    out = np.empty_like(x)
    small = small_mask(x)
    out[small] = _horner(x[small], 2)
    big = x[~small]
    out[~small] = (big - np.log1p(big)) / big**2
    return out


def r2(x):
    x = np.asarray(x, dtype=complex)
    out = np.empty_like(x)
    small = small_mask(x)
    out[small] = _horner(x[small], 3)
    big = x[~small]
    out[~small] = (np.log1p(big) - big + 0.5 * big**2) / big**3
    return out
