"""Matched pairs ``(z_j, v_j)`` with ``v_j = v_F(z_j)`` for the residual equations."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from popspec.errors import NonConvergenceError, TooFewPairsError
from popspec.spectral import EmpiricalSpectrum

__all__ = ["GridMode", "GridConfig", "GridPair", "build_v_targets", "invert_v", "build_grid", "MIN_PAIRS"]

MIN_PAIRS = 10
SELF_CONSISTENCY_TOL = 1e-9
_IM_FLOOR = 1e-8
_MAX_HALVINGS = 30


class GridMode(enum.Enum):
    V_FIRST = "vfirst"
    Z_FIRST = "zfirst"


@dataclass(frozen=True)
class GridConfig:
    mode: GridMode = GridMode.V_FIRST
    real_spacing: float = 0.02
    real_range: tuple[float, float] = (0.0, 1.0)
    imag_levels: tuple[float, ...] = (1e-3, 1e-2)
    newton_tol: float = 1e-12
    newton_max_iter: int = 100
    # explicit z points for Z_FIRST; overrides the rectangular grid when given
    z_points: tuple[complex, ...] | None = field(default=None)

    def __post_init__(self):
        if not self.real_spacing > 0:
            raise ValueError("real_spacing must be positive")
        if self.real_range[1] < self.real_range[0]:
            raise ValueError("real_range must be increasing")
        if not self.imag_levels or any(not lvl > 0 for lvl in self.imag_levels):
            raise ValueError("imag_levels must be nonempty and positive")
        if self.z_points is not None and any(complex(z).imag <= 0 for z in self.z_points):
            raise ValueError("z_points must lie in the upper half-plane")


@dataclass(frozen=True)
class GridPair:
    z: complex
    v: complex

    def __post_init__(self):
        if not (self.z.imag > 0 and self.v.imag > 0):
            raise ValueError(f"grid pair outside the upper half-plane: z={self.z}, v={self.v}")


def _real_axis(cfg: GridConfig) -> np.ndarray:
    lo, hi = cfg.real_range
    count = int(np.floor((hi - lo) / cfg.real_spacing + 1e-9)) + 1
    return lo + cfg.real_spacing * np.arange(count)


def build_v_targets(cfg: GridConfig) -> np.ndarray:
    """One horizontal segment per imaginary level, in level order."""
    re = _real_axis(cfg)
    return np.concatenate([re + 1j * lvl for lvl in cfg.imag_levels])


def invert_v(spec: EmpiricalSpectrum, v_target: complex, tol: float = 1e-12, max_iter: int = 100) -> complex:
    """Solve ``v_F(z) = v_target`` for ``z`` in the upper half-plane.

    Newton from ``z0 = -1/v_target`` with step halving whenever a full step
    does not reduce the residual; iterates leaving the half-plane are reflected.
    """
    v_target = complex(v_target)
    if v_target.imag <= 0:
        raise ValueError("v_target must have positive imaginary part")
    z = -1.0 / v_target
    thresh = tol * (1.0 + abs(v_target))
    f = complex(spec.companion(z)) - v_target
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            if abs(f) <= thresh:
                return z
            step = f / complex(spec.companion_derivative(z))
            # full Newton step unless it fails to reduce |f|; then halve
            t = 1.0
            for _ in range(_MAX_HALVINGS):
                cand = z - t * step
                if cand.imag <= 0:
                    cand = complex(cand.real, max(-cand.imag, _IM_FLOOR))
                f_cand = complex(spec.companion(cand)) - v_target
                if np.isfinite(f_cand) and abs(f_cand) < abs(f):
                    break
                t *= 0.5
            if not (np.isfinite(cand) and np.isfinite(f_cand)):
                break
            z, f = cand, f_cand
    if np.isfinite(z) and abs(f) <= thresh:
        return z
    raise NonConvergenceError(f"Newton did not reach v={v_target} (last residual {abs(f):.3g})")


def build_grid(spec: EmpiricalSpectrum, cfg: GridConfig | None = None) -> list[GridPair]:
    cfg = cfg or GridConfig()
    pairs = []
    if cfg.mode is GridMode.V_FIRST:
        for target in build_v_targets(cfg):
            try:
                z = invert_v(spec, target, cfg.newton_tol, cfg.newton_max_iter)
            except NonConvergenceError:
                continue
            v = complex(spec.companion(z))
            if v.imag > 0 and abs(v - target) <= SELF_CONSISTENCY_TOL:
                pairs.append(GridPair(z, v))
    else:
        if cfg.z_points is not None:
            zs = np.array(cfg.z_points, dtype=complex)
        else:
            zs = build_v_targets(cfg)
        for z, v in zip(zs, spec.companion(zs)):
            pairs.append(GridPair(complex(z), complex(v)))
    if len(pairs) < min(MIN_PAIRS, _requested(cfg)):
        raise TooFewPairsError(f"only {len(pairs)} grid pairs survived (need {MIN_PAIRS})")
    return pairs


def _requested(cfg: GridConfig) -> int:
    if cfg.mode is GridMode.Z_FIRST and cfg.z_points is not None:
        return len(cfg.z_points)
    return len(build_v_targets(cfg))
