import math
import os
from pathlib import Path

import numpy as np
import pytest

import svilab

SOURCE = Path(os.environ.get("SVILAB_SOURCE_DIR", Path(__file__).resolve().parents[2]))
BUNDLED = SOURCE / "configs" / "two_ball_figure1.toml"


def test_kkt_two_ball():
    r = svilab.kkt("two_ball")
    assert r["active_set"] == [1, 2]
    assert r["multipliers"] == pytest.approx([1 / (4 * math.sqrt(3))] * 2, abs=1e-10)
    assert r["sosc_min_eig"] == pytest.approx(1 / math.sqrt(3), abs=1e-10)
    assert np.allclose(r["predicted_covariance"], np.diag([0.0, 3.0, 0.0]), atol=1e-10)


def test_config_error_names_key():
    with pytest.raises(svilab.ConfigError, match="gamma"):
        svilab.canonical_config(overrides={"schedule.gamma": 1.2})
    assert issubclass(svilab.ConfigError, ValueError)


def test_bundled_config_overrides_round_trip():
    text = svilab.canonical_config(BUNDLED, {"K": 2000, "R": 8})
    assert "K = 2000" in text
    assert "gamma = 0.75" in text


def test_small_clt_run_writes_bundle(tmp_path):
    out = tmp_path / "bundle"
    b = svilab.clt(BUNDLED, {"K": 2000, "R": 20}, out=out)
    assert b["exit_code"] == 0
    names = {f["name"] for f in b["files"]}
    assert {"kkt_report.json", "clt_report.json", "clt_deviations.csv"} <= names
    assert (out / "manifest.json").exists()
    assert b["reports"]["clt"]["predicted_variance_tangent"] == pytest.approx([3.0])


def test_rerun_is_deterministic():
    a = svilab.run(overrides={"K": 1000, "R": 6, "seed": 3})
    b = svilab.run(overrides={"K": 1000, "R": 6, "seed": 3}, threads=2)
    assert a["reports"] == b["reports"]


def test_sfb_and_saa_near_solution():
    xstar = np.array([0.0, 0.0, math.sqrt(3.0)])
    avg, last = svilab.sfb("two_ball", iterations=20000, seed=5)
    assert np.linalg.norm(avg - xstar) < 0.1
    sol, residual = svilab.saa_solve("two_ball", samples=2000, seed=5)
    assert np.linalg.norm(sol - xstar) < 0.2
    assert residual < 1e-6


def test_projections():
    x = np.array([0.3, 1.5, 1.0])
    y = svilab.project_manifold("two_ball", x)
    assert y[0] == pytest.approx(0.0, abs=1e-12)
    assert np.hypot(y[1], y[2]) == pytest.approx(math.sqrt(3.0), abs=1e-12)
    p = svilab.project_feasible("two_ball", np.array([0.0, 0.0, 5.0]))
    assert p == pytest.approx([0.0, 0.0, math.sqrt(3.0)], abs=1e-8)
    with pytest.raises(svilab.OutOfChart):
        svilab.project_manifold("two_ball", np.zeros(3))


def test_ks_statistic():
    assert svilab.ks_statistic([0.0], 0.0, 1.0) == pytest.approx(0.5)
