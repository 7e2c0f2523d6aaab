"""PNG renderings of the CSV plot data (optional; the CSV files are the primary output).

Uses the Agg canvas directly so nothing touches pyplot's global state.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = ["cdf_overlay", "ratio_histogram", "density_curve"]

FIGSIZE = (6.0, 4.0)
DPI = 120


def _new_axes(xlabel: str, ylabel: str):
    fig = Figure(figsize=FIGSIZE, dpi=DPI)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    return fig, ax


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="png")
    return path


def cdf_overlay(path, x, curves: Mapping[str, np.ndarray], title: str = "") -> Path:
    """Step plots of several CDFs sampled on a common grid."""
    fig, ax = _new_axes("x", "CDF")
    for label, y in curves.items():
        ax.step(x, y, where="post", label=label, linewidth=1.2)
    ax.set_ylim(-0.02, 1.02)
    ax.legend(frameon=False, loc="lower right")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def ratio_histogram(path, edges, counts, title: str = "") -> Path:
    fig, ax = _new_axes("d_L(estimate, H) / d_L(F, H)", "repetitions")
    edges = np.asarray(edges, dtype=float)
    ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", edgecolor="k", linewidth=0.5)
    ax.axvline(1.0, color="C3", linestyle="--", linewidth=1.0)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def density_curve(path, x, y, title: str = "") -> Path:
    fig, ax = _new_axes("x", "density")
    ax.plot(x, y, linewidth=1.2)
    ax.set_ylim(bottom=0.0)
    if title:
        ax.set_title(title)
    return _save(fig, path)
