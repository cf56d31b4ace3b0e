import math
import pathlib

import pytest

import mddra

DATA = pathlib.Path(__file__).resolve().parents[1] / "data"


def test_version():
    assert mddra.__version__ == "1.0.0"


def test_two_point_divergence():
    assert abs(mddra.js_divergence([0.5, 0.5], [1.0, 0.0]) - 0.31128) <= 1e-5
    assert mddra.js_divergence([1, 2, 3], [2, 4, 6]) <= 1e-15


def test_report_matches_direct_evaluation():
    cap = [[2.0, 1.0], [1.0, 3.0]]
    dem = [[1.0, 1.0], [2.0, 2.0]]
    r = mddra.iree_report(cap, dem, [4.0, 5.0], nx=2)
    xi = [mddra.js_divergence(c, d) for c, d in zip(cap, dem)]
    matched = sum(min(sum(c), sum(d)) for c, d in zip(cap, dem))
    assert r["kappa"] == pytest.approx(sum(xi), rel=1e-12)
    assert r["eta_lb"] == pytest.approx((1 - min(sum(xi), 1.0)) * matched / 9.0, rel=1e-12)
    with pytest.raises(mddra.ShapeError):
        mddra.iree_report([[1.0]], [[1.0]], [1.0], nx=2)


def test_queue_step_contracts():
    nxt, drift = mddra.queue_drift_step(2.0, 0.5)
    assert nxt == pytest.approx(1.0)
    assert drift == pytest.approx(-3.0)
    with pytest.raises(mddra.DomainError):
        mddra.queue_drift_step(1.0, 2.5)


def test_config_errors_name_the_key():
    with pytest.raises(mddra.ConfigError, match="zeta_min"):
        mddra.config_json(None, ["mddra.zeta_min=1.5"])
    assert len(mddra.config_hash()) == 16


def test_toy_run_matches_golden_csv():
    out = mddra.run_experiment(DATA / "toy.yaml")
    traces = [t["csv"].splitlines(keepends=True) for t in out["traces"] if t["scheme"] == "mddra"]
    assert len(traces) == 2
    assert traces[0][0].rstrip("\n").split(",") == mddra.csv_columns()
    joined = traces[0][0] + "".join(line for t in traces for line in t[1:])
    assert joined == (DATA / "golden_toy_mddra.csv").read_text()
    assert all(math.isfinite(s["final_eta_T"]) for s in out["summary"])


def test_cli_exit_codes():
    assert mddra.cli(["version"]) == 0
    assert mddra.cli(["optimize", "-c", "/nonexistent.yaml"]) == 2
