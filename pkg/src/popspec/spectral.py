"""Probability measures on [0, inf) built from a small dictionary of shapes.

A :class:`SpectralDistribution` is a finite mixture of :class:`BasisMeasure`
atoms (point masses and three densities on intervals).  It stands in for the
population spectral distribution and its estimate; the sample side is the
:class:`EmpiricalSpectrum`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from popspec import _logseries

__all__ = [
    "Kind",
    "BasisMeasure",
    "SpectralDistribution",
    "EmpiricalSpectrum",
    "cdf_eval",
    "quantile",
    "population_eigenvalues",
    "stieltjes",
    "companion_transform",
    "levy_distance",
    "mp_law_support",
    "mp_law_density",
]

WEIGHT_SUM_TOL = 1e-9


class Kind(enum.Enum):
    POINT = "point"
    UNIFORM = "uniform"
    LINEAR_INC = "linear_inc"
    LINEAR_DEC = "linear_dec"


@dataclass(frozen=True)
class BasisMeasure:
    """One dictionary element.

    Point masses store their location in both ``a`` and ``b``.  Interval
    kinds have densities ``1/h``, ``2(x-a)/h**2`` and ``2(b-x)/h**2`` on
    ``[a, b]`` with ``h = b - a``.
    """

    kind: Kind
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("basis measure locations must be finite")
        if self.a < 0:
            raise ValueError(f"basis measure must live on [0, inf), got a={self.a}")
        if self.kind is Kind.POINT:
            if self.a != self.b:
                raise ValueError("point mass needs a == b")
        elif not self.b > self.a:
            raise ValueError(f"interval needs a < b, got [{self.a}, {self.b}]")

    @classmethod
    def point(cls, t: float) -> "BasisMeasure":
        return cls(Kind.POINT, float(t), float(t))

    @classmethod
    def uniform(cls, a: float, b: float) -> "BasisMeasure":
        return cls(Kind.UNIFORM, float(a), float(b))

    @classmethod
    def linear_inc(cls, a: float, b: float) -> "BasisMeasure":
        return cls(Kind.LINEAR_INC, float(a), float(b))

    @classmethod
    def linear_dec(cls, a: float, b: float) -> "BasisMeasure":
        return cls(Kind.LINEAR_DEC, float(a), float(b))

    @property
    def t(self) -> float:
        if self.kind is not Kind.POINT:
            raise AttributeError("only point masses have a location t")
        return self.a

    def scaled(self, factor: float) -> "BasisMeasure":
        """Image of the measure under x -> factor * x."""
        return BasisMeasure(self.kind, self.a * factor, self.b * factor)

    def to_dict(self) -> dict:
        if self.kind is Kind.POINT:
            return {"kind": self.kind.value, "t": self.a}
        return {"kind": self.kind.value, "a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, d: dict) -> "BasisMeasure":
        kind = Kind(d["kind"])
        if kind is Kind.POINT:
            return cls.point(d["t"])
        return cls(kind, float(d["a"]), float(d["b"]))


def _kind_arrays(atoms: Sequence[BasisMeasure]):
    kinds = np.array([list(Kind).index(m.kind) for m in atoms], dtype=np.int8)
    a = np.array([m.a for m in atoms], dtype=float)
    b = np.array([m.b for m in atoms], dtype=float)
    return kinds, a, b


_POINT, _UNIFORM, _INC, _DEC = range(4)


@dataclass(frozen=True, eq=False)
class SpectralDistribution:
    """Mixture ``sum_k weights[k] * atoms[k]``.

    Weights must be nonnegative and sum to one within ``WEIGHT_SUM_TOL``.
    Zero-weight atoms are kept (they keep the weights aligned with a
    dictionary) but are skipped by every evaluation.
    """

    atoms: tuple
    weights: np.ndarray
    _kinds: np.ndarray = field(init=False, repr=False)
    _a: np.ndarray = field(init=False, repr=False)
    _b: np.ndarray = field(init=False, repr=False)
    _w: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        atoms = tuple(self.atoms)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if len(atoms) == 0:
            raise ValueError("distribution needs at least one atom")
        if len(atoms) != weights.size:
            raise ValueError("atoms and weights must have the same length")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("weights must be finite and nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {weights.sum()!r}, expected 1")
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        live = [i for i in range(len(atoms)) if weights[i] > 0]
        kinds, a, b = _kind_arrays([atoms[i] for i in live])
        object.__setattr__(self, "_kinds", kinds)
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_b", b)
        object.__setattr__(self, "_w", weights[live])

    # -- constructors -----------------------------------------------------

    @classmethod
    def point_masses(cls, locations: Iterable[float], weights: Iterable[float] | None = None):
        locs = [float(t) for t in locations]
        if weights is None:
            weights = np.full(len(locs), 1.0 / len(locs))
        return cls(tuple(BasisMeasure.point(t) for t in locs), np.asarray(weights, dtype=float))

    @classmethod
    def from_weights(cls, atoms: Sequence[BasisMeasure], raw_weights) -> "SpectralDistribution":
        """Build from solver output: clamp round-off negatives, then renormalize."""
        w = np.array(raw_weights, dtype=float)
        if np.any(w < -1e-9):
            raise ValueError(f"weight {w.min()!r} is too negative to be round-off")
        w[w < 0] = 0.0
        return cls(tuple(atoms), w / w.sum())

    # -- basic queries ----------------------------------------------------

    @property
    def support(self) -> tuple[float, float]:
        return float(self._a.min()), float(self._b.max())

    def live_atoms(self):
        """(atom, weight) pairs with positive weight."""
        return [(m, w) for m, w in zip(self.atoms, self.weights) if w > 0]

    def scaled(self, factor: float) -> "SpectralDistribution":
        return SpectralDistribution(tuple(m.scaled(factor) for m in self.atoms), self.weights)

    def mean(self) -> float:
        k, a, b = self._kinds, self._a, self._b
        m = np.where(k == _POINT, a, 0.0)
        m = np.where(k == _UNIFORM, 0.5 * (a + b), m)
        m = np.where(k == _INC, (a + 2 * b) / 3, m)
        m = np.where(k == _DEC, (2 * a + b) / 3, m)
        return float(self._w @ m)

    def mass_in(self, lo: float, hi: float) -> float:
        """Mass of the closed interval [lo, hi]."""
        return float(self.cdf(hi) - self.cdf_left(lo))

    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([self._a, self._b]))

    @property
    def has_continuous_part(self) -> bool:
        return bool(np.any(self._kinds != _POINT))

    # -- CDF ---------------------------------------------------------------

    def _cdf(self, x, left: bool):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        out = np.zeros(flat.shape)
        pts = self._kinds == _POINT
        if np.any(pts):
            order = np.argsort(self._a[pts], kind="stable")
            locs = self._a[pts][order]
            cum = np.concatenate([[0.0], np.cumsum(self._w[pts][order])])
            idx = np.searchsorted(locs, flat, side="left" if left else "right")
            out += cum[idx]
        if not np.all(pts):
            k, a, b, w = (arr[~pts] for arr in (self._kinds, self._a, self._b, self._w))
            h = b - a
            chunk = max(1, 2_000_000 // max(1, k.size))
            for s in range(0, flat.size, chunk):
                u = np.clip((flat[s : s + chunk, None] - a) / h, 0.0, 1.0)
                frac = np.where(k == _UNIFORM, u, np.where(k == _INC, u * u, u * (2.0 - u)))
                out[s : s + chunk] += frac @ w
        out = np.clip(out, 0.0, 1.0)
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def cdf(self, x):
        """P(X <= x)."""
        return self._cdf(x, left=False)

    def cdf_left(self, x):
        """P(X < x)."""
        return self._cdf(x, left=True)

    # -- quantiles -----------------------------------------------------------

    def quantile(self, q: float) -> float:
        """Generalized inverse ``inf{x : cdf(x) >= q}``."""
        if not 0.0 < q < 1.0:
            raise ValueError(f"quantile level must lie in (0, 1), got {q!r}")
        # cumulative sums of 1/p weights carry ~1e-16 noise
        target = q - 1e-12
        bps = self.breakpoints()
        values = self.cdf(bps)
        i = int(np.searchsorted(values, target, side="left"))
        if i == 0 or i >= bps.size:
            return float(bps[min(i, bps.size - 1)])
        lo, hi = float(bps[i - 1]), float(bps[i])
        # jump at bps[i] covers the level, or continuous crossing inside (lo, hi)
        if self.cdf_left(hi) < target:
            return hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if self.cdf(mid) >= q:
                hi = mid
            else:
                lo = mid
        return hi

    def population_eigenvalues(self, p: int) -> np.ndarray:
        if p < 1:
            raise ValueError("p must be at least 1")
        levels = (p + 1 - np.arange(1, p + 1)) / (p + 1)
        return np.array([self.quantile(q) for q in levels])

    # -- transforms ----------------------------------------------------------

    def stieltjes(self, z):
        """m(z) = integral of dG(x) / (x - z) for Im z > 0 (vectorized over z)."""
        z = np.asarray(z, dtype=complex)
        if np.any(z.imag <= 0):
            raise ValueError("Stieltjes transform needs Im z > 0")
        zz = z.reshape(-1, 1)
        k, a, b = self._kinds, self._a, self._b
        h = np.where(k == _POINT, 1.0, b - a)
        d = a - zz
        y = h / d
        small = _logseries.small_mask(y) | (k == _POINT)

        # series route (also covers point masses: 1/(t - z))
        ys = np.where(small, y, 0.0)
        r1 = _logseries.r1(ys)
        series = np.where(
            k == _POINT,
            1.0 / d,
            np.where(
                k == _UNIFORM,
                (1.0 - ys * r1) / d,
                np.where(k == _INC, 2.0 * r1 / d, 2.0 * (1.0 - (1.0 + ys) * r1) / d),
            ),
        )
        # closed-form route for |y| large: L = log((b - z)/(a - z))
        yl = np.where(small, 1.0, y)
        L = np.log1p(yl)
        direct = np.where(
            k == _UNIFORM,
            L / h,
            np.where(k == _INC, 2.0 / h**2 * (h - d * L), 2.0 / h**2 * ((b - zz) * L - h)),
        )
        vals = np.where(small, series, direct)
        out = vals @ self._w
        return out.reshape(z.shape) if z.ndim else complex(out[0])

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "atoms": [m.to_dict() for m in self.atoms],
            "weights": [float(w) for w in self.weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralDistribution":
        return cls(tuple(BasisMeasure.from_dict(a) for a in d["atoms"]), np.asarray(d["weights"], float))

    def default_cdf_grid(self, points: int = 1000) -> np.ndarray:
        lo, hi = self.support
        if hi == lo:
            lo, hi = lo - 0.5 * max(abs(lo), 1.0) * 0.1, hi + 0.5 * max(abs(hi), 1.0) * 0.1
        return np.linspace(lo, hi, points)


@dataclass(frozen=True, eq=False)
class EmpiricalSpectrum:
    """Sample eigenvalues ``l_1 >= ... >= l_p`` with the sample size ``n``."""

    eigenvalues: np.ndarray
    n: int

    def __post_init__(self):
        ev = np.array(self.eigenvalues, dtype=float).reshape(-1)
        if ev.size == 0:
            raise ValueError("spectrum needs at least one eigenvalue")
        if not np.all(np.isfinite(ev)):
            raise ValueError("eigenvalues must be finite")
        if np.any(ev < 0):
            raise ValueError(f"covariance eigenvalues must be >= 0, got {ev.min()!r}")
        if int(self.n) < 1:
            raise ValueError("n must be at least 1")
        ev = np.sort(ev)[::-1].copy()
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "n", int(self.n))

    @property
    def p(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def ratio(self) -> float:
        return self.p / self.n

    def scaled(self, factor: float) -> "EmpiricalSpectrum":
        return EmpiricalSpectrum(self.eigenvalues * factor, self.n)

    def distribution(self) -> SpectralDistribution:
        """F_p: mass 1/p at every sample eigenvalue."""
        return SpectralDistribution.point_masses(self.eigenvalues)

    def stieltjes(self, z):
        z = np.asarray(z, dtype=complex)
        if np.any(z.imag <= 0):
            raise ValueError("Stieltjes transform needs Im z > 0")
        out = np.mean(1.0 / (self.eigenvalues - z.reshape(-1, 1)), axis=1)
        return out.reshape(z.shape) if z.ndim else complex(out[0])

    def companion(self, z):
        """v(z) = -(1 - p/n)/z + (p/n) m(z): Stieltjes transform of X X*/n."""
        z = np.asarray(z, dtype=complex)
        c = self.ratio
        return -(1.0 - c) / z + c * self.stieltjes(z)

    def companion_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        c = self.ratio
        inv = 1.0 / (self.eigenvalues - z.reshape(-1, 1))
        out = (1.0 - c) / z.reshape(-1) ** 2 + c * np.mean(inv * inv, axis=1)
        return out.reshape(z.shape) if z.ndim else complex(out[0])


# ---------------------------------------------------------------------------
# functional API


def cdf_eval(dist: SpectralDistribution, x):
    return dist.cdf(x)


def quantile(dist: SpectralDistribution, q: float) -> float:
    return dist.quantile(q)


def population_eigenvalues(dist: SpectralDistribution, p: int) -> np.ndarray:
    return dist.population_eigenvalues(p)


def stieltjes(dist: SpectralDistribution, z):
    return dist.stieltjes(z)


def companion_transform(spec: EmpiricalSpectrum, z):
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr.imag <= 0):
        raise ValueError("companion transform needs Im z > 0")
    return spec.companion(z)


def _levy_sup(F, G, eps, F_bps, G_bps, grid):
    """Largest violations of F(x-eps)-eps <= G(x) and G(x) <= F(x+eps)+eps.

    Arguments are paired explicitly so that jumps at ``t`` are hit without
    relying on ``(t + eps) - eps == t`` in floating point.
    """
    # sup_x F(x - eps) - G(x)
    xf = np.concatenate([G_bps - eps, F_bps])
    xg = np.concatenate([G_bps, F_bps + eps])
    # sup_x G(x) - F(x + eps)
    yg = np.concatenate([G_bps, F_bps - eps])
    yf = np.concatenate([G_bps + eps, F_bps])
    if grid is not None:
        xf = np.concatenate([xf, grid - eps])
        xg = np.concatenate([xg, grid])
        yg = np.concatenate([yg, grid])
        yf = np.concatenate([yf, grid + eps])
    s1 = np.max(F.cdf(xf) - G.cdf(xg))
    s2 = np.max(G.cdf(yg) - F.cdf(yf))
    return max(s1, s2)


def levy_distance(F: SpectralDistribution, G: SpectralDistribution, tol: float = 1e-7) -> float:
    """Levy distance by bisection on eps.

    Exact (up to ``tol``) for point-mass mixtures; with continuous parts the
    inequalities are also checked on a uniform grid of step <= 1e-4.
    """
    F_bps, G_bps = F.breakpoints(), G.breakpoints()
    grid = None
    if F.has_continuous_part or G.has_continuous_part:
        lo = min(F_bps[0], G_bps[0]) - 1.0
        hi = max(F_bps[-1], G_bps[-1]) + 1.0
        grid = np.linspace(lo, hi, int(math.ceil((hi - lo) / 1e-4)) + 1)
    if _levy_sup(F, G, 0.0, F_bps, G_bps, grid) <= 1e-15:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _levy_sup(F, G, mid, F_bps, G_bps, grid) <= mid:
            hi = mid
        else:
            lo = mid
    return hi


def mp_law_support(gamma: float) -> tuple[float, float]:
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma!r}")
    s = math.sqrt(gamma)
    return (1.0 - s) ** 2, (1.0 + s) ** 2


def mp_law_density(gamma: float, x):
    """Marchenko-Pastur density for identity population covariance, gamma <= 1."""
    lo, hi = mp_law_support(gamma)
    x = np.asarray(x, dtype=float)
    inside = (x > lo) & (x < hi) & (x > 0)
    xs = np.where(inside, x, 1.0)
    dens = np.sqrt(np.clip((hi - xs) * (xs - lo), 0.0, None)) / (2.0 * math.pi * xs * gamma)
    out = np.where(inside, dens, 0.0)
    return out if out.ndim else float(out)
