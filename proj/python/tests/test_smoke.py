import csv
import math

import numpy as np
import pytest

import jpsnhmm


def test_linear_moments_match_sampling():
    mu = np.array([1.0, 0.5, 0.2])
    sigma = np.eye(3)
    lam = np.array([1.5])
    mean, var = jpsnhmm.linear_moments(1, 1, mu, sigma, lam)
    # E(Y) = mu_y + lambda sqrt(2 / pi), Var(Y) = sigma_yy + lambda^2 (1 - 2 / pi)
    assert mean[0] == pytest.approx(0.2 + 1.5 * math.sqrt(2 / math.pi))
    assert var[0] == pytest.approx(1 + 2.25 * (1 - 2 / math.pi))
    theta, y = jpsnhmm.sample_jpsn(1, 1, mu, sigma, lam, 200000, seed=3)
    assert theta.shape == (200000, 1)
    assert np.all((theta >= 0) & (theta < 2 * math.pi))
    assert abs(y.mean() - mean[0]) < 4 * math.sqrt(var[0] / len(y))


def test_circular_helpers():
    alpha, zeta = jpsnhmm.circular_mean([0.1, 0.2, 0.3])
    assert alpha == pytest.approx(0.2)
    assert zeta < 1
    alpha, zeta = jpsnhmm.circular_mean([0.0, math.pi])
    assert alpha is None
    assert jpsnhmm.ape([0.0, 1.0], [0.0, 1.0]) == 0.0
    assert jpsnhmm.ape([0.0], [math.pi]) == pytest.approx(2.0)
    assert math.isclose(jpsnhmm.mse([1.0, float("nan")], [3.0, 0.0]), 4.0)
    with pytest.raises(ValueError):
        jpsnhmm.circular_mean([])


def test_workflow(tmp_path):
    sim = tmp_path / "sim"
    jpsnhmm.simulate("three-state", str(sim), seed=5, length=120)
    with open(sim / "data.csv") as f:
        rows = list(csv.reader(f))
    assert len(rows) == 121
    series = jpsnhmm.ingest(str(sim / "data.csv"))
    assert series["theta"].shape == (120, 2)
    assert series["y"].shape == (120, 2)

    cfg = "iterations = 40\nburn_in = 20\nthin = 2\ntruncation = 4\n"
    out = jpsnhmm.fit(str(sim / "data.csv"), str(tmp_path / "fit"), config=cfg, seed=2)
    assert out["draws"] == 10
    assert sum(out["k_posterior"].values()) == pytest.approx(1.0)

    jpsnhmm.summarize(out["archive"], str(tmp_path / "sum"), mc_size=200)
    assert (tmp_path / "sum" / "states.csv").exists()

    res = jpsnhmm.verify(out["archive"], str(sim / "data.csv"), str(tmp_path / "ver"), config=cfg)
    assert set(res) == {"shdp-hmm", "baseline"}
    assert all(0 <= v <= 2 for v in res["shdp-hmm"]["ape"])


def test_bad_config_raises(tmp_path):
    with pytest.raises(ValueError):
        jpsnhmm.fit("missing.csv", str(tmp_path), config="no_such_key = 1\n")
