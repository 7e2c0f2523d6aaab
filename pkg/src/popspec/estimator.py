"""Population spectrum estimation by L-infinity inversion of the MP equation.

Pipeline: rescale the sample eigenvalues by ``l_1``, build grid pairs, build a
dictionary on ``[l_p/l_1, 1]``, minimize ``max_j max(|Re e_j|, |Im e_j|)`` over
mixture weights with the simplex solver, then map the mixture back to the
original units.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from popspec import lp as lpmod
from popspec.errors import DegenerateSpectrumError, LPError
from popspec.grid import GridConfig, GridPair, build_grid
from popspec.kernels import first_moments, kernel_values
from popspec.spectral import BasisMeasure, EmpiricalSpectrum, Kind, SpectralDistribution

__all__ = [
    "SHAPES",
    "DictionarySpec",
    "EstimateResult",
    "build_dictionary",
    "assemble_lp",
    "solve_pairs",
    "estimate",
    "isolated_mass_check",
]

log = logging.getLogger(__name__)

SHAPES = ("uniform", "linear_inc", "linear_dec")
_SHAPE_CTORS = {
    "uniform": BasisMeasure.uniform,
    "linear_inc": BasisMeasure.linear_inc,
    "linear_dec": BasisMeasure.linear_dec,
}


@dataclass(frozen=True)
class DictionarySpec:
    """Dictionary layout.  ``support`` is filled in by :func:`estimate` when None."""

    point_mass_spacing: float = 0.005
    dyadic_scales: tuple[int, ...] = tuple(range(2, 9))
    shapes: tuple[str, ...] = ()
    support: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.point_mass_spacing > 0:
            raise ValueError("point_mass_spacing must be positive")
        bad = set(self.shapes) - set(SHAPES)
        if bad:
            raise ValueError(f"unknown shapes {sorted(bad)}")
        if self.shapes and not self.dyadic_scales:
            raise ValueError("interval shapes need at least one dyadic scale")

    @classmethod
    def points_only(cls, **kw) -> "DictionarySpec":
        return cls(shapes=(), **kw)

    @classmethod
    def full(cls, **kw) -> "DictionarySpec":
        return cls(shapes=SHAPES, **kw)

    def with_support(self, lo: float, hi: float) -> "DictionarySpec":
        return DictionarySpec(self.point_mass_spacing, self.dyadic_scales, self.shapes, (lo, hi))


def build_dictionary(spec: DictionarySpec) -> list[BasisMeasure]:
    """Point masses on a regular grid, then dyadic intervals by (scale, index, shape).

    A degenerate support ``lo == hi`` yields the single point mass at ``lo``.
    """
    if spec.support is None:
        raise ValueError("dictionary support is not set")
    lo, hi = spec.support
    if hi < lo:
        raise ValueError("dictionary support must satisfy lo <= hi")
    if hi == lo:
        return [BasisMeasure.point(lo)]
    s = spec.point_mass_spacing
    count = int(math.floor((hi - lo) / s + 1e-9))
    locs = lo + s * np.arange(count + 1)
    if hi - locs[-1] > 1e-9 * max(1.0, hi):
        locs = np.append(locs, hi)
    else:
        locs[-1] = hi
    atoms = [BasisMeasure.point(t) for t in locs]
    zeta = hi - lo
    for k in spec.dyadic_scales:
        width = zeta / 2**k
        for j in range(2**k):
            a = lo + j * width
            b = hi if j == 2**k - 1 else lo + (j + 1) * width
            for shape in SHAPES:
                if shape in spec.shapes:
                    atoms.append(_SHAPE_CTORS[shape](a, b))
    return atoms


def assemble_lp(
    pairs: Sequence[GridPair],
    dictionary: Sequence[BasisMeasure],
    c: float,
    moment_target: float | None = None,
    extra_rows: tuple[np.ndarray, np.ndarray] | None = None,
) -> lpmod.LinearProgram:
    """Variables ``(w_1..w_K, u)``; minimize ``u``.

    ``extra_rows`` is an optional ``(G, h)`` block of additional inequality
    rows over ``(w, u)``, e.g. for a smoothness penalty.
    """
    if not pairs:
        raise ValueError("need at least one grid pair")
    if not dictionary:
        raise ValueError("need at least one dictionary element")
    z = np.array([pr.z for pr in pairs], dtype=complex)
    v = np.array([pr.v for pr in pairs], dtype=complex)
    K = len(dictionary)
    coef = c * kernel_values(dictionary, v)  # e_j = base_j - coef_j . w
    base = 1.0 / v + z
    ones = np.ones((len(pairs), 1))
    # |Re e_j| <= u and |Im e_j| <= u as four rows per pair
    G = np.vstack(
        [
            np.hstack([-coef.real, -ones]),
            np.hstack([coef.real, -ones]),
            np.hstack([-coef.imag, -ones]),
            np.hstack([coef.imag, -ones]),
        ]
    )
    h = np.concatenate([-base.real, base.real, -base.imag, base.imag])
    if extra_rows is not None:
        G = np.vstack([G, extra_rows[0]])
        h = np.concatenate([h, extra_rows[1]])
    A = [np.concatenate([np.ones(K), [0.0]])]
    b = [1.0]
    if moment_target is not None:
        A.append(np.concatenate([first_moments(dictionary), [0.0]]))
        b.append(moment_target)
    cost = np.zeros(K + 1)
    cost[-1] = 1.0
    return lpmod.LinearProgram(cost, G, h, np.array(A), np.array(b))


def linf_residual(weights, pairs: Sequence[GridPair], dictionary: Sequence[BasisMeasure], c: float) -> np.ndarray:
    """Per-pair ``max(|Re e_j|, |Im e_j|)`` for the given weights."""
    z = np.array([pr.z for pr in pairs], dtype=complex)
    v = np.array([pr.v for pr in pairs], dtype=complex)
    e = 1.0 / v + z - c * (kernel_values(dictionary, v) @ np.asarray(weights, dtype=float))
    return np.maximum(np.abs(e.real), np.abs(e.imag))


@dataclass
class EstimateResult:
    distribution: SpectralDistribution
    objective: float
    lp_optimum: float
    weights: np.ndarray
    grid_pairs_used: int
    scale_factor: float
    residuals: np.ndarray = field(repr=False)
    warnings: list[str] = field(default_factory=list)
    lp_iterations: int = 0
    scaled_distribution: SpectralDistribution | None = field(default=None, repr=False)

    def population_eigenvalues(self, p: int) -> np.ndarray:
        return self.distribution.population_eigenvalues(p)

    def to_dict(self) -> dict:
        return {
            "distribution": self.distribution.to_dict(),
            "objective": float(self.objective),
            "lp_optimum": float(self.lp_optimum),
            "scale_factor": float(self.scale_factor),
            "grid_pairs_used": int(self.grid_pairs_used),
            "warnings": list(self.warnings),
        }


def _spread_lp(pairs, dictionary, c, bound, moment_target=None) -> lpmod.LinearProgram:
    """Variables ``(w_1..w_K, s)``: minimize ``s`` with ``w_k <= s`` and every
    residual component within ``bound``."""
    z = np.array([pr.z for pr in pairs], dtype=complex)
    v = np.array([pr.v for pr in pairs], dtype=complex)
    K = len(dictionary)
    coef = c * kernel_values(dictionary, v)
    base = 1.0 / v + z
    zeros = np.zeros((len(pairs), 1))
    G = np.vstack(
        [
            np.hstack([-coef.real, zeros]),
            np.hstack([coef.real, zeros]),
            np.hstack([-coef.imag, zeros]),
            np.hstack([coef.imag, zeros]),
            np.hstack([np.eye(K), -np.ones((K, 1))]),
        ]
    )
    h = np.concatenate([bound - base.real, bound + base.real, bound - base.imag, bound + base.imag, np.zeros(K)])
    A = [np.concatenate([np.ones(K), [0.0]])]
    b = [1.0]
    if moment_target is not None:
        A.append(np.concatenate([first_moments(dictionary), [0.0]]))
        b.append(moment_target)
    cost = np.zeros(K + 1)
    cost[-1] = 1.0
    return lpmod.LinearProgram(cost, G, h, np.array(A), np.array(b))


TIE_BREAKS = ("vertex", "spread")


def solve_pairs(
    pairs: Sequence[GridPair],
    dictionary: Sequence[BasisMeasure],
    c: float,
    moment_target: float | None = None,
    tie_break: str = "vertex",
    tie_tol: float = 1e-7,
):
    """Solve the L-infinity problem on given pairs.

    The optimum is rarely unique.  ``"vertex"`` (the default) keeps the
    simplex vertex of the first stage.  ``"spread"`` runs a second LP that
    picks, among weight vectors whose residual stays within ``tie_tol`` of the
    optimum, one with the smallest largest weight; it grows by one row per
    atom and is slow on the interval dictionaries.

    Returns ``(distribution, optimum, raw weights, iterations)``.
    """
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
    prog = assemble_lp(pairs, dictionary, c, moment_target)
    sol = lpmod.solve(prog)
    if not sol.ok:
        raise LPError(sol.status, f"LP stage failed: {sol.status.value}")
    u = float(sol.x[-1])
    w = sol.x[:-1]
    iters = sol.iterations
    if tie_break == "spread" and len(dictionary) > 1:
        sol2 = lpmod.solve(_spread_lp(pairs, dictionary, c, u + tie_tol, moment_target))
        iters += sol2.iterations
        if sol2.ok:
            w = sol2.x[:-1]
        else:
            log.warning("tie-break LP ended with %s; keeping the first-stage vertex", sol2.status.value)
    dist = SpectralDistribution.from_weights(dictionary, np.where(np.abs(w) < 1e-12, 0.0, w))
    return dist, u, w, iters


def estimate(
    spec: EmpiricalSpectrum,
    grid_cfg: GridConfig | None = None,
    dict_spec: DictionarySpec | None = None,
    moment_constraint: bool = False,
    tie_break: str = "vertex",
    tie_tol: float = 1e-7,
) -> EstimateResult:
    """Estimate the population spectral distribution from a sample spectrum."""
    grid_cfg = grid_cfg or GridConfig()
    dict_spec = dict_spec or DictionarySpec()
    if spec.p < 2:
        raise ValueError("estimation needs p >= 2")
    l1 = float(spec.eigenvalues[0])
    if not l1 > 0:
        raise DegenerateSpectrumError("largest eigenvalue must be positive")

    scaled = spec.scaled(1.0 / l1)
    pairs = build_grid(scaled, grid_cfg)
    lo = float(scaled.eigenvalues[-1])
    dictionary = build_dictionary(dict_spec.with_support(min(lo, 1.0), 1.0))
    target = float(np.mean(scaled.eigenvalues)) if moment_constraint else None
    c = spec.ratio

    dist_scaled, u, w, iters = solve_pairs(pairs, dictionary, c, target, tie_break, tie_tol)
    residuals = linf_residual(w, pairs, dictionary, c)
    result = EstimateResult(
        distribution=dist_scaled.scaled(l1),
        objective=float(residuals.max()),
        lp_optimum=u,
        weights=w,
        grid_pairs_used=len(pairs),
        scale_factor=l1,
        residuals=residuals,
        lp_iterations=iters,
        scaled_distribution=dist_scaled,
    )
    result.warnings = isolated_mass_check(result, spec.p)
    log.debug("estimate: p=%d c=%.3g pairs=%d atoms=%d u=%.3g", spec.p, c, len(pairs), len(dictionary), u)
    return result


def _gap(atom: BasisMeasure, other: BasisMeasure) -> float:
    return max(other.a - atom.b, atom.a - other.b, 0.0)


def isolated_mass_check(result, p: int) -> list[str]:
    """Warn about light point masses far from the rest of the estimate.

    Such atoms (weight below ``1/(p+1)``) can be skipped entirely by the
    quantile rule, so the matching eigenvalue would be lost.  "Far" means a
    gap of more than 10% of the support width.
    """
    dist = result.distribution if isinstance(result, EstimateResult) else result
    live = dist.live_atoms()
    if len(live) < 2:
        return []
    lo, hi = dist.support
    width = hi - lo
    warnings = []
    for i, (atom, w) in enumerate(live):
        if atom.kind is not Kind.POINT or not 0 < w < 1.0 / (p + 1):
            continue
        gap = min(_gap(atom, other) for j, (other, _) in enumerate(live) if j != i)
        if gap > 0.1 * width:
            warnings.append(
                f"isolated point mass at {atom.a!r} with weight {w:.3g} < 1/(p+1); "
                "the quantile rule may miss this eigenvalue"
            )
    return warnings
