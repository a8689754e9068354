import json

import numpy as np
import pytest

import kivafair


def test_sectors():
    names = kivafair.sectors()
    assert len(names) == 12
    assert "Personal Use" in names


def test_ols_matches_lstsq():
    x, y = kivafair.generate_regression(200, np.array([1.0, -2.0, 0.5]), seed=3)
    coef, _ = kivafair.fit_ols(x, y)
    ref = np.linalg.lstsq(x, y, rcond=None)[0]
    assert np.allclose(coef, ref, rtol=1e-10, atol=1e-12)


def test_gibbs_is_seeded_and_sparse():
    x, y = kivafair.generate_regression(300, np.array([2.0, 0.0, 0.0, -1.5]), seed=4)
    hyper = kivafair.SpikeSlabHyper()
    hyper.burn_in, hyper.draws, hyper.seed = 200, 600, 9
    a = kivafair.run_gibbs(x, y, hyper)
    b = kivafair.run_gibbs(x, y, hyper)
    assert np.array_equal(a.beta, b.beta)
    assert a.beta.shape == (600, 4)
    incl = a.inclusion_probabilities()
    assert incl[0] > 0.9 and incl[3] > 0.9
    assert np.all(a.beta[a.pi == 0] == 0.0)


def test_fair_sampler_lambda_zero_is_plain():
    d = kivafair.generate_causal(400, np.array([1.0, 0.5]), effect=1.0, seed=2)
    hyper = kivafair.SpikeSlabHyper()
    hyper.burn_in, hyper.draws = 100, 200
    plain = kivafair.run_gibbs(d["x"], d["y"], hyper, intercept=0)
    fair = kivafair.run_fair_gibbs(d["x"], d["y"], d["w"], 0.0, hyper, intercept=0)
    assert np.array_equal(plain.beta, fair.beta)


def test_dre_reduces_to_naive():
    d = kivafair.generate_causal(500, np.array([1.0]), effect=2.0, seed=5)
    y, w = d["y"], d["w"]
    zero = np.zeros_like(y)
    share = np.full_like(y, w.mean())
    dre, influence = kivafair.ate_dre(y, w, zero, zero, share)
    naive = kivafair.ate_naive(y, w)
    assert dre["estimate"] == pytest.approx(naive["estimate"], abs=1e-10)
    assert abs(influence.mean()) < 1e-8 * np.linalg.norm(y)


def test_errors_carry_codes():
    with pytest.raises(kivafair.KivafairError) as info:
        kivafair.ate_naive(np.ones(3), np.zeros(3))
    assert info.value.code == "EmptyTreatmentGroup"


def test_pipeline_round_trip(tmp_path):
    config = kivafair.synth(str(tmp_path / "in"), kind="biased", loans=500, seed=2)
    out = str(tmp_path / "out")
    report = kivafair.ingest(str(config), output_dir=out)
    assert report["rows_kept"] == 500
    fit = kivafair.ols(str(config), model="M2", output_dir=out)
    assert len(fit["coefficients"]) == 27
    fast = {"output_dir": out, "hyper": {"burn_in": 100, "draws": 200}}
    rows = kivafair.ate(str(config), **fast)
    assert len(rows) == 12
    fair = kivafair.fair(str(config), **fast)
    assert [r["sector"] for r in fair] == kivafair.sectors()
    with open(tmp_path / "out" / "resolved_config.json") as fh:
        assert json.load(fh)["seed"] == 2
