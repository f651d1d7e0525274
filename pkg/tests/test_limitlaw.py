"""Window values, limit-law evaluators, the censored KS statistic, and
the end-to-end experiment runner."""

import math

import numpy as np
import pytest

import vislab.boolean
from vislab.boolean import BooleanParams, RadiusLaw
from vislab.cylinders import CylinderParams
from vislab.interlacements import InterlacementParams
from vislab.limitlaw import (
    ExperimentConfig,
    ModelKind,
    aperture_cap,
    exact_survival,
    ks_statistic,
    limit_rate,
    limit_survival,
    run_experiment,
    simulate_q_samples,
    visibility_window,
)
from vislab.mathcore import RngStream


def bm_params(alpha=0.1, d=2):
    return BooleanParams(alpha, RadiusLaw.constant(1.0), d)


def test_visibility_window_values():
    assert math.isclose(visibility_window(ModelKind.BM, 5, 100.0), 0.01)
    assert visibility_window(ModelKind.PC, 2, 7.0) == 1.0
    assert math.isclose(visibility_window(ModelKind.PC, 3, 10.0), 0.1)
    r = math.e ** 10
    assert math.isclose(visibility_window(ModelKind.BI, 3, r),
                        100.0 * math.e ** -10)
    assert math.isclose(visibility_window("bi", 4, 50.0), 0.02)
    with pytest.raises(ValueError):
        visibility_window(ModelKind.BI, 2, 10.0)
    with pytest.raises(ValueError):
        visibility_window(ModelKind.BM, 2, 1.0)


def test_model_kind_parse():
    assert ModelKind.parse("BM") is ModelKind.BM
    assert ModelKind.parse("pc") is ModelKind.PC
    with pytest.raises(ValueError):
        ModelKind.parse("bmx")


def test_limit_rate_and_survival():
    assert math.isclose(limit_rate(ModelKind.BM, bm_params(0.3)), 0.3)
    pc = CylinderParams(0.3, 1.0, 2)
    assert math.isclose(limit_survival(ModelKind.PC, pc, 2.0),
                        math.exp(-0.6))
    bi = InterlacementParams(1.0, 1.0, 3)
    assert math.isclose(limit_survival(ModelKind.BI, bi, 1.0),
                        math.exp(-math.pi / 2.0))
    assert limit_survival(ModelKind.BM, bm_params(), 0.0) == 1.0
    with pytest.raises(TypeError):
        limit_rate(ModelKind.BM, pc)
    with pytest.raises(ValueError):
        limit_survival(ModelKind.PC, pc, -1.0)


def test_exact_survival_dispatch():
    p = bm_params(0.05)
    direct = vislab.boolean.conditional_survival_exact(p, 50.0, 2.0)
    assert math.isclose(exact_survival(ModelKind.BM, p, 50.0, 2.0), direct)
    pc = CylinderParams(0.3, 1.0, 2)
    assert math.isclose(exact_survival(ModelKind.PC, pc, 50.0, 2.0),
                        math.exp(-0.6))
    with pytest.raises(ValueError):
        exact_survival(ModelKind.BI, InterlacementParams(1.0, 1.0, 3),
                       50.0, 1.0)


def test_ks_single_sample_at_median():
    cdf = lambda t: 1.0 - np.exp(-np.asarray(t))
    assert math.isclose(ks_statistic([math.log(2.0)], cdf), 0.5)


def test_ks_degenerate_zeros():
    cdf = lambda t: 1.0 - np.exp(-np.asarray(t))
    assert ks_statistic([0.0] * 100, cdf) >= 0.99


def test_ks_contracts():
    cdf = lambda t: np.asarray(t)
    with pytest.raises(ValueError):
        ks_statistic([2.0, 1.0], cdf)
    with pytest.raises(ValueError):
        ks_statistic([], cdf)
    with pytest.raises(ValueError):
        ks_statistic([0.5], cdf, censor_at=0.0)
    assert 0.0 <= ks_statistic([0.25, 0.5, 0.75], cdf) <= 1.0


def test_ks_calibration_under_the_99_percent_band():
    # samples drawn from the reference law itself: the 1.63/sqrt(n) band
    # holds with probability ~0.99
    n = 10_000
    band = 1.63 / math.sqrt(n)
    cdf = lambda t: 1.0 - np.exp(-np.asarray(t))
    passes = 0
    for seed in range(20):
        u = RngStream(900 + seed).uniform(n)
        samples = np.sort(-np.log1p(-u))
        if ks_statistic(samples, cdf) <= band:
            passes += 1
    assert passes >= 18


def test_ks_censored_matches_reference_law():
    # exponential samples censored at 1: restricted comparison stays tight
    n = 5000
    cdf = lambda t: 1.0 - np.exp(-np.asarray(t))
    u = RngStream(17).uniform(n)
    samples = np.sort(np.minimum(-np.log1p(-u), 1.0))
    ks = ks_statistic(samples, cdf, censor_at=1.0)
    assert ks <= 1.63 / math.sqrt(n)
    # against a wrong law the censored statistic still discriminates
    wrong = lambda t: 1.0 - np.exp(-2.0 * np.asarray(t))
    assert ks_statistic(samples, wrong, censor_at=1.0) > 0.1


def test_aperture_cap_clamps():
    assert math.isclose(aperture_cap(ModelKind.BM, 2, 100.0), 0.5)
    assert math.isclose(aperture_cap(ModelKind.PC, 2, 10.0), 9.0)
    with pytest.raises(ValueError):
        aperture_cap(ModelKind.BM, 2, 100.0, 0.0)


def test_experiment_config_validation():
    good = dict(model=ModelKind.BM, params=bm_params(), r_list=(30.0, 60.0),
                n_scenes=200, s_grid=(0.5, 1.0), seed=3)
    cfg = ExperimentConfig(**good)
    assert cfg.r_list == (30.0, 60.0)
    assert cfg.to_dict()["params"]["radius_law"]["kind"] == "constant"
    with pytest.raises(ValueError):
        ExperimentConfig(**{**good, "r_list": (60.0, 30.0)})
    with pytest.raises(ValueError):
        ExperimentConfig(**{**good, "n_scenes": 50})
    with pytest.raises(ValueError):
        ExperimentConfig(**{**good, "s_grid": (1.0, 1.0)})
    with pytest.raises(TypeError):
        ExperimentConfig(**{**good, "params": CylinderParams(0.3, 1.0, 2)})
    with pytest.raises(ValueError):
        ExperimentConfig(**{**good, "q_cap_multiplier": -1.0})


def test_simulate_q_samples_rejects_path_model():
    with pytest.raises(ValueError):
        simulate_q_samples(ModelKind.BI, InterlacementParams(0.5, 1.0, 4),
                           50.0, 100, RngStream(0))


def test_run_experiment_boolean_scenes():
    cfg = ExperimentConfig(ModelKind.BM, bm_params(0.1), (30.0, 60.0),
                           400, (0.5, 1.0, 2.0), seed=5)
    report = run_experiment(cfg)
    assert report.to_dict()["lambda"] == pytest.approx(0.1)
    assert len(report.records) == 2
    band = 1.63 / math.sqrt(400)
    for rec in report.records:
        assert rec["kind"] == "scenes"
        assert 0.0 <= rec["ks_exact"] <= band
        assert 0.0 <= rec["ks_limit"] <= 1.0
        assert 0.0 <= rec["censored_fraction"] < 0.05
        for entry in rec["survival"]:
            assert entry["lo"] <= entry["estimate"] <= entry["hi"]
            # r >= 30 sits near the limit law already
            assert abs(entry["estimate"] - entry["limit"]) < 0.12


def test_run_experiment_reproducible_and_thread_stable():
    cfg = ExperimentConfig(ModelKind.PC, CylinderParams(5.0, 1.0, 2),
                           (5.0, 10.0), 150, (0.1, 0.3), seed=9)
    a = run_experiment(cfg, threads=1)
    b = run_experiment(cfg, threads=4)
    assert a.to_dict() == b.to_dict()
    # planar line scenes follow Exp(alpha) tightly even at r = 5
    assert a.records[0]["ks_limit"] < 0.15


def test_run_experiment_functional_path_records():
    cfg = ExperimentConfig(ModelKind.BI, InterlacementParams(0.5, 1.0, 4),
                           (50.0,), 20_000, (1.0,), seed=11)
    report = run_experiment(cfg)
    rec = report.records[0]
    assert rec["kind"] == "functional"
    assert rec["n_walkers"] == 20_000
    entry = rec["survival"][0]
    assert 0.0 < entry["lo"] <= entry["estimate"] <= entry["hi"] <= 1.0
    assert math.isclose(entry["limit"], math.exp(-math.pi / 2.0))


def test_run_experiment_isolates_per_r_failures(monkeypatch):
    real = vislab.boolean.sample_conditional_scene

    def flaky(params, r, q_cap, stream):
        if r > 40.0:
            raise RuntimeError("synthetic failure")
        return real(params, r, q_cap, stream)

    monkeypatch.setattr(vislab.boolean, "sample_conditional_scene", flaky)
    cfg = ExperimentConfig(ModelKind.BM, bm_params(0.1), (30.0, 60.0),
                           150, (1.0,), seed=13)
    report = run_experiment(cfg)
    assert report.records[0]["kind"] == "scenes"
    assert report.records[1]["kind"] == "failed"
    assert "synthetic failure" in report.records[1]["failure"]