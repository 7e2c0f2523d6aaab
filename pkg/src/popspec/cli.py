"""Command-line entry point: ``popspec estimate | simulate | mp-law``.

Exit codes: 0 success, 1 usage or I/O problem, 2 computation failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from popspec import io
from popspec.errors import (
    DegenerateSpectrumError,
    LPError,
    MonteCarloAbort,
    NonConvergenceError,
    NotPSDError,
    PopSpecError,
    TooFewPairsError,
)
from popspec.estimator import TIE_BREAKS, DictionarySpec, estimate
from popspec.grid import GridConfig, GridMode, build_grid
from popspec.linalg import scm_eigenvalues
from popspec.simulation import CASES, CovarianceModel, EstimatorConfig, RepRecord, monte_carlo
from popspec.spectral import EmpiricalSpectrum, mp_law_density, mp_law_support

log = logging.getLogger("popspec")

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2

# which pipeline stage each failure belongs to, for error messages
_STAGES = (
    (TooFewPairsError, "grid construction"),
    (LPError, "linear program"),
    (DegenerateSpectrumError, "eigenvalue scaling"),
    (NotPSDError, "eigendecomposition"),
    (NonConvergenceError, "eigendecomposition"),
)


class UsageError(Exception):
    pass


def _stage(exc: PopSpecError) -> str:
    for kind, name in _STAGES:
        if isinstance(exc, kind):
            return name
    return "estimation"


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc.strerror}") from None
    return out


def _estimator_flags(p: argparse.ArgumentParser):
    p.add_argument("--grid-mode", choices=[m.value for m in GridMode], default=GridMode.V_FIRST.value)
    p.add_argument("--dict", dest="dictionary", choices=("points", "full"), default="points",
                   help="point masses only, or point masses plus dyadic interval densities")
    p.add_argument("--moment-constraint", action="store_true", help="match the mean of the sample eigenvalues")
    p.add_argument("--tie-break", choices=TIE_BREAKS, default="vertex",
                   help="how to choose among (near-)optimal LP solutions")
    p.add_argument("--figures", action="store_true", help="also render PNG figures next to the CSV files")


def _estimator_config(args) -> EstimatorConfig:
    dict_spec = DictionarySpec.full() if args.dictionary == "full" else DictionarySpec.points_only()
    return EstimatorConfig(
        grid=GridConfig(mode=GridMode(args.grid_mode)),
        dictionary=dict_spec,
        moment_constraint=args.moment_constraint,
        tie_break=args.tie_break,
    )


def _load_spectrum(args) -> EmpiricalSpectrum:
    try:
        if args.eigenvalues is not None:
            if args.n is None:
                raise UsageError("--eigenvalues needs --n (the sample size)")
            return EmpiricalSpectrum(io.read_eigenvalues(args.eigenvalues), args.n)
        X = io.read_matrix(args.data)
    except OSError as exc:
        raise UsageError(f"cannot read {exc.filename}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if X.shape[0] < 2:
        raise UsageError("n must be at least 2")
    try:
        return scm_eigenvalues(X, centered=args.center)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_estimate(args) -> int:
    spec = _load_spectrum(args)
    if spec.p < 2:
        raise UsageError("estimation needs at least 2 eigenvalues")
    out = _out_dir(args.out)
    cfg = _estimator_config(args)
    res = estimate(spec, cfg.grid, cfg.dictionary, cfg.moment_constraint, cfg.tie_break)

    io.write_json(out / "estimate.json", {**res.to_dict(), "p": spec.p, "n": spec.n})
    lam = res.population_eigenvalues(spec.p)
    io.write_csv(out / "eigenvalues.csv", ("i", "lambda_hat"), zip(range(1, spec.p + 1), lam))
    x = res.distribution.default_cdf_grid()
    cdf = res.distribution.cdf(x)
    io.write_csv(out / "cdf.csv", ("x", "cdf"), zip(x, cdf))
    if args.dump_grid:
        pairs = build_grid(spec.scaled(1.0 / res.scale_factor), cfg.grid)
        io.write_csv(out / "grid.csv", ("re_z", "im_z", "re_v", "im_v"),
                     ((pr.z.real, pr.z.imag, pr.v.real, pr.v.imag) for pr in pairs))
    if args.figures:
        from popspec import plotting

        F = spec.distribution()
        plotting.cdf_overlay(out / "cdf.png", x, {"sample F_p": F.cdf(x), "estimate": cdf})

    print(f"objective={io.fmt(res.objective)} lp_optimum={io.fmt(res.lp_optimum)} pairs={res.grid_pairs_used}")
    for w in res.warnings:
        print(f"warning: {w}")
    return EXIT_OK


def _histogram(ratios: np.ndarray):
    top = max(2.0, math.ceil(10.0 * ratios.max()) / 10.0) if ratios.size else 2.0
    edges = np.linspace(0.0, top, 41)
    counts, _ = np.histogram(ratios, bins=edges)
    return edges, counts


def cmd_simulate(args) -> int:
    if args.p < 2 or args.n < 2 or args.reps < 1 or args.threads < 1:
        raise UsageError("need --p >= 2, --n >= 2, --reps >= 1, --threads >= 1")
    try:
        model = CovarianceModel(args.case, args.p, rho=args.rho)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _out_dir(args.out)
    cfg = _estimator_config(args)
    try:
        report = monte_carlo(model, args.n, args.reps, args.seed, cfg, threads=args.threads)
    except MonteCarloAbort as exc:
        io.write_csv(out / "reps.csv", RepRecord.CSV_FIELDS, (r.csv_row() for r in sorted(exc.failures, key=lambda r: r.rep)))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE

    io.write_csv(out / "reps.csv", RepRecord.CSV_FIELDS, (r.csv_row() for r in report.records))
    summary = report.summary()
    io.write_json(out / "summary.json", summary)

    ratios = np.array([r.ratio for r in report.succeeded])
    edges, counts = _histogram(ratios)
    io.write_csv(out / "ratio_hist.csv", ("bin_lo", "bin_hi", "count"), zip(edges[:-1], edges[1:], counts))
    curves = None
    if report.example is not None:
        F, Hhat, H = report.example["F_p"], report.example["H_hat"], report.population
        lo = min(F.support[0], Hhat.support[0], H.support[0])
        hi = max(F.support[1], Hhat.support[1], H.support[1])
        pad = 0.05 * (hi - lo)
        x = np.linspace(lo - pad, hi + pad, 1000)
        curves = {"F_p": F.cdf(x), "H_hat": Hhat.cdf(x), "H_p": H.cdf(x)}
        io.write_csv(out / "cdf_overlay.csv", ("x", *curves), zip(x, *curves.values()))
    if args.figures:
        from popspec import plotting

        title = f"{args.case}, p={args.p}, n={args.n}"
        plotting.ratio_histogram(out / "ratio_hist.png", edges, counts, title)
        if curves is not None:
            plotting.cdf_overlay(out / "cdf_overlay.png", x, curves, title)

    print(
        f"ok_fraction={io.fmt(summary['ok_fraction'])} "
        f"median_levy_est={io.fmt(summary['median_levy_est'])} "
        f"median_levy_raw={io.fmt(summary['median_levy_raw'])}"
    )
    return EXIT_OK


def _edge_clustered(lo: float, hi: float, points: int) -> np.ndarray:
    """Grid on [lo, hi] that crowds both ends.

    The density has square-root edges (and a 1/sqrt(x) pole at 0 when
    gamma = 1); in the variable t the integrand is smooth, so the trapezoid
    rule over the emitted rows recovers the unit mass.
    """
    t = np.linspace(0.0, 1.0, points)
    x = lo + (hi - lo) * ((1.0 - np.cos(np.pi * t)) / 2.0) ** 2
    x[-1] = hi
    return x


def cmd_mp_law(args) -> int:
    if not 0.0 < args.gamma <= 1.0:
        raise UsageError(f"--gamma must lie in (0, 1], got {args.gamma!r}")
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    lo, hi = mp_law_support(args.gamma)
    x = _edge_clustered(lo, hi, args.points)
    dens = mp_law_density(args.gamma, x)
    out = _out_dir(args.out)
    io.write_csv(out / "mp_law.csv", ("x", "density"), zip(x, dens))
    if args.figures:
        from popspec import plotting

        plotting.density_curve(out / "mp_law.png", x, dens, f"gamma={args.gamma!r}")
    print(f"support=[{io.fmt(lo)}, {io.fmt(hi)}] points={args.points}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="popspec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the population spectrum from sample eigenvalues or data")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--eigenvalues", type=Path, help="CSV with one sample eigenvalue per line")
    src.add_argument("--data", type=Path, help="CSV data matrix, one observation per row")
    p.add_argument("--n", type=int, help="sample size (with --eigenvalues)")
    p.add_argument("--center", action="store_true", help="center the data and divide by n-1")
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--dump-grid", action="store_true", help="write the (z, v) pairs to grid.csv")
    _estimator_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="Monte-Carlo study for one covariance model")
    p.add_argument("--case", choices=CASES, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rho", type=float, default=0.3, help="Toeplitz decay (toeplitz case only)")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--out", type=Path, default=Path("."))
    _estimator_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mp-law", help="tabulate the Marchenko-Pastur density")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--points", type=int, default=1000, help="grid size; points cluster near the support edges")
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_mp_law)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage; fold that into our usage code
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: cannot write {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    except PopSpecError as exc:
        print(f"error: {_stage(exc)} failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
