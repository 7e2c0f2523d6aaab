"""Estimate population covariance spectra by inverting the Marchenko-Pastur equation.

The sample spectrum determines the companion Stieltjes transform ``v(z)`` on a
grid; the population spectral distribution is the mixture of dictionary
measures whose Marchenko-Pastur residuals at those points have the smallest
L-infinity norm, found by linear programming.
"""

from popspec.errors import (
    DegenerateSpectrumError,
    LPError,
    MonteCarloAbort,
    NonConvergenceError,
    NotPSDError,
    PopSpecError,
    TooFewPairsError,
)
from popspec.estimator import DictionarySpec, EstimateResult, estimate
from popspec.grid import GridConfig, GridMode, GridPair, build_grid
from popspec.spectral import (
    BasisMeasure,
    EmpiricalSpectrum,
    Kind,
    SpectralDistribution,
    levy_distance,
    mp_law_density,
)

__version__ = "0.1.0"

__all__ = [
    "BasisMeasure",
    "DegenerateSpectrumError",
    "DictionarySpec",
    "EmpiricalSpectrum",
    "EstimateResult",
    "GridConfig",
    "GridMode",
    "GridPair",
    "Kind",
    "LPError",
    "MonteCarloAbort",
    "NonConvergenceError",
    "NotPSDError",
    "PopSpecError",
    "SpectralDistribution",
    "TooFewPairsError",
    "build_grid",
    "estimate",
    "levy_distance",
    "mp_law_density",
]
