"""Monte-Carlo studies: identity, two-point and Toeplitz population covariances.

Each repetition draws Gaussian data ``X = Y Sigma^{1/2}``, estimates the
population spectral distribution, and records the Levy distances of the
estimate and of the raw sample spectrum to the true ``H_p``.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from popspec.errors import MonteCarloAbort, PopSpecError
from popspec.estimator import DictionarySpec, estimate
from popspec.grid import GridConfig
from popspec.linalg import scm_eigenvalues, sym_eigs, sym_sqrt
from popspec.spectral import EmpiricalSpectrum, SpectralDistribution, levy_distance

__all__ = [
    "CovarianceModel",
    "EstimatorConfig",
    "RepRecord",
    "McReport",
    "population_spectrum",
    "covariance_matrix",
    "standard_normals",
    "sample_data",
    "rep_seed",
    "run_rep",
    "monte_carlo",
]

log = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.1
CASES = ("identity", "two-point", "toeplitz")


@dataclass(frozen=True)
class CovarianceModel:
    kind: str
    p: int
    value_low: float = 1.0
    value_high: float = 2.0
    fraction_high: float = 0.5
    rho: float = 0.3

    def __post_init__(self):
        if self.kind not in CASES:
            raise ValueError(f"unknown covariance model {self.kind!r}; pick one of {CASES}")
        if self.p < 2:
            raise ValueError("p must be at least 2")
        if not 0.0 < self.fraction_high < 1.0:
            raise ValueError("fraction_high must lie in (0, 1)")
        if not abs(self.rho) < 1.0:
            raise ValueError("|rho| must be below 1")

    @classmethod
    def identity(cls, p: int) -> "CovarianceModel":
        return cls("identity", p)

    @classmethod
    def two_point(cls, p: int, value_low=1.0, value_high=2.0, fraction_high=0.5) -> "CovarianceModel":
        return cls("two-point", p, value_low, value_high, fraction_high)

    @classmethod
    def toeplitz(cls, p: int, rho: float = 0.3) -> "CovarianceModel":
        return cls("toeplitz", p, rho=rho)

    @property
    def is_diagonal(self) -> bool:
        return self.kind != "toeplitz"

    def diagonal(self) -> np.ndarray:
        """Diagonal of Sigma for the diagonal models (low values first)."""
        if self.kind == "identity":
            return np.ones(self.p)
        if self.kind == "two-point":
            # odd p: the extra eigenvalue goes to the low value
            n_high = int(math.floor(self.p * self.fraction_high))
            return np.concatenate([np.full(self.p - n_high, self.value_low), np.full(n_high, self.value_high)])
        raise ValueError("Toeplitz covariance is not diagonal")


def covariance_matrix(model: CovarianceModel) -> np.ndarray:
    if model.is_diagonal:
        return np.diag(model.diagonal())
    idx = np.arange(model.p)
    return model.rho ** np.abs(idx[:, None] - idx[None, :])


def population_spectrum(model: CovarianceModel):
    """Return ``(H_p, eigenvalues)`` with eigenvalues in descending order."""
    if model.kind == "identity":
        return SpectralDistribution.point_masses([1.0], [1.0]), np.ones(model.p)
    if model.is_diagonal:
        lam = np.sort(model.diagonal())[::-1]
    else:
        lam, _ = sym_eigs(covariance_matrix(model), vectors=False)
    locs, counts = np.unique(lam, return_counts=True)
    return SpectralDistribution.point_masses(locs, counts / model.p), lam


def standard_normals(seed: int, size: int) -> np.ndarray:
    """Box-Muller normals from a Philox (counter-based) stream."""
    gen = np.random.Generator(np.random.Philox(seed))
    half = (size + 1) // 2
    u1 = 1.0 - gen.random(half)  # (0, 1]
    u2 = gen.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * half)
    out[0::2] = r * np.cos(2.0 * np.pi * u2)
    out[1::2] = r * np.sin(2.0 * np.pi * u2)
    return out[:size]


def sample_data(model: CovarianceModel, n: int, seed: int) -> np.ndarray:
    if n < 2:
        raise ValueError("n must be at least 2")
    Y = standard_normals(seed, n * model.p).reshape(n, model.p)
    if model.is_diagonal:
        return Y * np.sqrt(model.diagonal())
    return Y @ sym_sqrt(covariance_matrix(model)).data


def rep_seed(master_seed: int, rep: int) -> int:
    """Seed of repetition ``rep``; depends only on (master_seed, rep)."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(rep,))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class EstimatorConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    dictionary: DictionarySpec = field(default_factory=DictionarySpec)
    moment_constraint: bool = False
    tie_break: str = "vertex"
    tie_tol: float = 1e-7


@dataclass
class RepRecord:
    rep: int
    seed: int
    status: str
    levy_est: float = math.nan
    levy_raw: float = math.nan
    objective: float = math.nan
    l_max: float = math.nan
    l_min: float = math.nan
    wall_time: float = 0.0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def ratio(self) -> float:
        """d_L(estimate, H_p) / d_L(F_p, H_p); below 1 means the estimate wins."""
        return self.levy_est / self.levy_raw if self.ok and self.levy_raw > 0 else math.nan

    @property
    def estimator_wins(self) -> bool:
        return self.ok and self.levy_est < self.levy_raw

    CSV_FIELDS = ("rep", "seed", "status", "levy_est", "levy_raw", "ratio", "objective", "l_max", "l_min")

    def csv_row(self) -> tuple:
        return (
            self.rep, self.seed, self.status, self.levy_est, self.levy_raw,
            self.ratio, self.objective, self.l_max, self.l_min,
        )


@dataclass
class McReport:
    model: CovarianceModel
    n: int
    master_seed: int
    records: list[RepRecord]
    population: SpectralDistribution
    # first successful repetition, kept for CDF overlays
    example: dict | None = None

    @property
    def succeeded(self) -> list[RepRecord]:
        return [r for r in self.records if r.ok]

    @property
    def failures(self) -> list[RepRecord]:
        return [r for r in self.records if not r.ok]

    def summary(self) -> dict:
        ok = sorted(self.succeeded, key=lambda r: r.rep)
        ratios = np.array([r.ratio for r in ok])
        est = np.array([r.levy_est for r in ok])
        raw = np.array([r.levy_raw for r in ok])

        def q(arr, level):
            return float(np.quantile(arr, level)) if arr.size else math.nan

        return {
            "case": self.model.kind,
            "p": self.model.p,
            "n": self.n,
            "rho": self.model.rho if self.model.kind == "toeplitz" else None,
            "master_seed": self.master_seed,
            "reps": len(self.records),
            "failed": len(self.failures),
            "ok_fraction": float(np.mean([r.estimator_wins for r in ok])) if ok else math.nan,
            "fraction_ratio_below_1": float(np.mean(ratios < 1)) if ok else math.nan,
            "median_ratio": q(ratios, 0.5),
            "ratio_quartiles": [q(ratios, 0.25), q(ratios, 0.75)],
            "median_levy_est": q(est, 0.5),
            "median_levy_raw": q(raw, 0.5),
        }


def run_rep(model: CovarianceModel, n: int, rep: int, master_seed: int, cfg: EstimatorConfig, H=None):
    """One repetition; returns ``(RepRecord, example or None)``."""
    if H is None:
        H, _ = population_spectrum(model)
    seed = rep_seed(master_seed, rep)
    t0 = time.perf_counter()
    try:
        X = sample_data(model, n, seed)
        spec = scm_eigenvalues(X)
        res = estimate(spec, cfg.grid, cfg.dictionary, cfg.moment_constraint, cfg.tie_break, cfg.tie_tol)
        F = spec.distribution()
        rec = RepRecord(
            rep=rep,
            seed=seed,
            status="ok",
            levy_est=levy_distance(res.distribution, H),
            levy_raw=levy_distance(F, H),
            objective=res.objective,
            l_max=float(spec.eigenvalues[0]),
            l_min=float(spec.eigenvalues[-1]),
        )
        example = {"F_p": F, "H_hat": res.distribution, "eigenvalues": spec.eigenvalues}
    except PopSpecError as exc:
        rec = RepRecord(rep=rep, seed=seed, status=type(exc).__name__, message=str(exc))
        example = None
    rec.wall_time = time.perf_counter() - t0
    return rec, example


def _run_rep_star(args):
    return run_rep(*args)


def monte_carlo(
    model: CovarianceModel,
    n: int,
    reps: int,
    master_seed: int,
    cfg: EstimatorConfig | None = None,
    threads: int = 1,
) -> McReport:
    if reps < 1:
        raise ValueError("reps must be at least 1")
    cfg = cfg or EstimatorConfig()
    H, _ = population_spectrum(model)
    jobs = [(model, n, r, master_seed, cfg, H) for r in range(reps)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_rep_star, jobs))
    else:
        results = [_run_rep_star(j) for j in jobs]
    results.sort(key=lambda pair: pair[0].rep)
    records = [rec for rec, _ in results]
    example = next((ex for _, ex in results if ex is not None), None)
    report = McReport(model, n, master_seed, records, H, example)
    failed = report.failures
    if len(failed) > MAX_FAILURE_FRACTION * reps:
        detail = "; ".join(f"rep {r.rep}: {r.status} {r.message}" for r in failed[:5])
        raise MonteCarloAbort(f"{len(failed)} of {reps} repetitions failed ({detail})", failed)
    for r in failed:
        log.warning("rep %d failed: %s %s", r.rep, r.status, r.message)
    return report
