import csv
import json

import numpy as np
import pytest

from popspec.cli import main
from popspec.simulation import CovarianceModel, sample_data


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def ones_file(tmp_path):
    f = tmp_path / "ones.csv"
    f.write_text("\n".join(["1.0"] * 100) + "\n")
    return f


def test_estimate_from_constant_eigenvalues(tmp_path, ones_file, capsys):
    out = tmp_path / "out"
    assert main(["estimate", "--eigenvalues", str(ones_file), "--n", "500", "--out", str(out), "--dump-grid"]) == 0
    res = json.loads((out / "estimate.json").read_text())
    lam = np.array([float(r["lambda_hat"]) for r in rows(out / "eigenvalues.csv")])
    assert res["p"] == 100 and res["n"] == 500 and lam.size == 100
    # mass of the estimate in [0.8, 1.2], read off the emitted CDF
    cdf = rows(out / "cdf.csv")
    x = np.array([float(r["x"]) for r in cdf])
    F = np.array([float(r["cdf"]) for r in cdf])
    assert F[-1] == pytest.approx(1.0)
    inside = F[x <= 1.2].max(initial=0.0) - F[x < 0.8].max(initial=0.0)
    assert inside >= 0.9
    assert len(rows(out / "grid.csv")) == res["grid_pairs_used"]
    assert capsys.readouterr().out.startswith("objective=")


def test_estimate_from_data_with_figures(tmp_path):
    X = sample_data(CovarianceModel.two_point(20), 100, seed=3)
    data = tmp_path / "x.csv"
    np.savetxt(data, X, delimiter=",")
    out = tmp_path / "out"
    assert main(["estimate", "--data", str(data), "--center", "--out", str(out), "--figures"]) == 0
    assert (out / "cdf.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert json.loads((out / "estimate.json").read_text())["n"] == 99


def test_estimate_missing_file(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert main(["estimate", "--eigenvalues", str(missing), "--n", "10", "--out", str(tmp_path)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_estimate_single_row(tmp_path, capsys):
    data = tmp_path / "one.csv"
    data.write_text("1,2,3\n")
    assert main(["estimate", "--data", str(data), "--out", str(tmp_path)]) == 1
    assert "n must be at least 2" in capsys.readouterr().err


def test_estimate_usage_errors(tmp_path, ones_file, capsys):
    assert main(["estimate", "--eigenvalues", str(ones_file), "--out", str(tmp_path)]) == 1  # no --n
    assert main(["estimate"]) == 1
    assert main(["estimate", "--eigenvalues", str(ones_file), "--data", str(ones_file)]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("1\nx\n")
    assert main(["estimate", "--eigenvalues", str(bad), "--n", "5", "--out", str(tmp_path)]) == 1
    capsys.readouterr()


def test_estimate_computation_failure_names_stage(tmp_path, capsys):
    f = tmp_path / "zeros.csv"
    f.write_text("0\n0\n0\n")
    assert main(["estimate", "--eigenvalues", str(f), "--n", "10", "--out", str(tmp_path)]) == 2
    assert "eigenvalue scaling failed" in capsys.readouterr().err


def simulate(out, *extra):
    return main(["simulate", "--p", "20", "--n", "100", "--reps", "3", "--seed", "7", "--out", str(out), *extra])


def test_simulate_outputs(tmp_path, capsys):
    out = tmp_path / "s"
    assert simulate(out, "--case", "identity", "--figures") == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("ok_fraction=") and "median_levy_est=" in line and "median_levy_raw=" in line
    reps = rows(out / "reps.csv")
    assert [r["rep"] for r in reps] == ["0", "1", "2"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["reps"] == 3 and summary["case"] == "identity"
    hist = rows(out / "ratio_hist.csv")
    assert len(hist) == 40 and sum(int(h["count"]) for h in hist) == 3
    overlay = rows(out / "cdf_overlay.csv")
    assert len(overlay) == 1000 and set(overlay[0]) == {"x", "F_p", "H_hat", "H_p"}
    for png in ("ratio_hist.png", "cdf_overlay.png"):
        assert (out / png).stat().st_size > 0


def test_simulate_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert simulate(a, "--case", "toeplitz") == 0
    assert simulate(b, "--case", "toeplitz", "--threads", "2") == 0
    for name in ("reps.csv", "summary.json", "ratio_hist.csv", "cdf_overlay.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_simulate_toeplitz_rho_and_odd_two_point(tmp_path):
    assert main(["simulate", "--case", "toeplitz", "--rho", "0.5", "--p", "10", "--n", "50",
                 "--reps", "1", "--seed", "1", "--out", str(tmp_path / "t")]) == 0
    assert json.loads((tmp_path / "t" / "summary.json").read_text())["rho"] == 0.5
    assert main(["simulate", "--case", "two-point", "--p", "101", "--n", "505",
                 "--reps", "1", "--seed", "1", "--out", str(tmp_path / "p")]) == 0
    H_p = np.array([float(r["H_p"]) for r in rows(tmp_path / "p" / "cdf_overlay.csv")])
    x = np.array([float(r["x"]) for r in rows(tmp_path / "p" / "cdf_overlay.csv")])
    # 51 of 101 population eigenvalues sit at the low value 1
    assert H_p[(x >= 1.0) & (x < 2.0)][0] == pytest.approx(51 / 101)


def test_simulate_usage_errors(tmp_path, capsys):
    assert main(["simulate", "--case", "identity", "--p", "1", "--n", "10", "--reps", "1",
                 "--seed", "1", "--out", str(tmp_path)]) == 1
    assert main(["simulate", "--case", "nope", "--p", "5", "--n", "10", "--reps", "1", "--seed", "1"]) == 1
    assert main(["simulate", "--case", "identity", "--p", "5", "--n", "10", "--reps", "1"]) == 1  # no seed
    capsys.readouterr()


@pytest.mark.parametrize("gamma, support", [("1", (0.0, 4.0)), ("0.25", (0.25, 2.25))])
def test_mp_law(tmp_path, gamma, support, capsys):
    assert main(["mp-law", "--gamma", gamma, "--out", str(tmp_path), "--figures"]) == 0
    data = np.loadtxt(tmp_path / "mp_law.csv", delimiter=",", skiprows=1)
    assert data.shape == (1000, 2)
    assert data[0, 0] == pytest.approx(support[0], abs=1e-12) and data[-1, 0] == pytest.approx(support[1], abs=1e-12)
    assert np.all(np.diff(data[:, 0]) > 0) and np.all(data[:, 1] >= 0)
    assert abs(np.trapezoid(data[:, 1], data[:, 0]) - 1) <= 1e-3
    assert (tmp_path / "mp_law.png").exists()
    assert capsys.readouterr().out.startswith("support=[")


@pytest.mark.parametrize("gamma", ["0", "1.5", "-0.2"])
def test_mp_law_rejects_gamma(tmp_path, gamma, capsys):
    assert main(["mp-law", "--gamma", gamma, "--out", str(tmp_path)]) == 1
    assert "gamma" in capsys.readouterr().err
