import numpy as np
import pytest

from citest import TestConfig
from simlab import (
    GENERATORS,
    SimSpec,
    default_test_config,
    gen_convergence,
    gen_highhigh,
    gen_lowhigh,
    generate,
    ks_statistic,
    load_model_table,
    qq_data,
    run_experiment,
    run_power_curve,
)
from utils import ArgumentError, ConfigurationError


def test_model_table_lists_all_models():
    table = load_model_table()
    assert set(table) == {"convergence", "univariate", "low-low", "low-high", "high-high"}
    assert table["low-low"]["psi_grid"] == [0.0, 0.05, 0.1, 0.15, 0.2]
    assert table["high-high"]["hidden_width"] == 600


def test_sim_spec_resolves_defaults():
    spec = SimSpec(model="low-high").resolved()
    assert spec.dims == (5, 5, 50)
    assert spec.n == 1000
    assert spec.setting == 1
    conv = SimSpec(model="convergence", dims=(5, 5, 5), n=100).resolved()
    assert conv.dims == (5, 5, 5)
    assert conv.setting is None


@pytest.mark.parametrize(
    "kwargs",
    [
        {"model": "nope"},
        {"model": "low-low", "setting": 5},
        {"model": "low-low", "reps": 0},
        {"model": "low-low", "psi": -0.1},
        {"model": "low-low", "dims": (2, 2, 2)},
        {"model": "convergence", "n": 3},
        {"model": "convergence", "n": 0},
        {"model": "convergence", "dims": ()},
    ],
)
def test_sim_spec_rejects_invalid_cells(kwargs):
    with pytest.raises(ConfigurationError):
        SimSpec(**kwargs).resolved()


@pytest.mark.parametrize("model", sorted(GENERATORS))
@pytest.mark.parametrize("setting", [1, 2, 3, 4])
def test_generators_shapes_and_determinism(model, setting):
    spec = SimSpec(model=model, setting=setting, psi=0.2, n=20).resolved()
    data = generate(spec, seed=7)
    assert data.n == 20
    assert data.dims == spec.dims
    again = generate(spec, seed=7)
    np.testing.assert_array_equal(data.y, again.y)
    assert np.all(np.isfinite(data.y))


def test_convergence_truth_and_noise():
    data = gen_convergence((2, 3, 4), 4000, seed=1)
    assert data.truth["B1"].shape == (4, 2)
    assert data.truth["B2"].shape == (4, 3)
    resid = data.x - data.z @ data.truth["B1"]
    assert resid.std() == pytest.approx(1.0, abs=0.05)


def test_lowhigh_sparsity_patterns():
    b1 = gen_lowhigh(1, 0.1, 10, seed=0).truth["B1"]
    assert np.all(b1[3:] == 0) and np.all(b1[:3] != 0)
    b1 = gen_lowhigh(2, 0.1, 10, seed=0).truth["B1"]
    assert np.count_nonzero(b1) == 3 and np.all(b1[:3, 0] != 0)


def test_highhigh_block_sparsity():
    data = gen_highhigh(3, 0.1, 10, seed=0)
    for key in ("B1", "B2", "B3"):
        b = data.truth[key]
        assert np.count_nonzero(b) == 9
        assert np.all(b[:3, :3] != 0)


def test_qq_data_examples():
    assert qq_data([0.5]) == [(0.5, 0.5)]
    grid = [(i - 0.5) / 10 for i in range(1, 11)]
    pairs = qq_data(list(reversed(grid)))
    for theory, empirical in pairs:
        assert theory == pytest.approx(empirical)
    assert ks_statistic(grid) == pytest.approx(0.05)
    with pytest.raises(ArgumentError):
        qq_data([])
    with pytest.raises(ArgumentError):
        ks_statistic([])


def test_default_test_config_uses_model_table():
    cfg = default_test_config("low-high")
    assert cfg.flow.hidden_width == 80
    assert cfg.m == 2
    cfg = default_test_config("high-high", m=1, epochs=10, B=50)
    assert cfg.m == 1 and cfg.flow.epochs == 10 and cfg.B == 50
    assert cfg.flow.hidden_width == 600


def test_run_experiment_oracle_convergence():
    spec = SimSpec(model="convergence", n=100, reps=4, seed=3)
    cfg = TestConfig(B=20, oracle=True)
    result = run_experiment(spec, cfg)
    assert len(result.pvalues) == 4 and len(set(result.seeds)) == 4
    assert 0.0 <= result.rejection_rate <= 1.0
    frame = result.to_frame()
    assert len(frame) == 5
    assert frame.iloc[-1]["replication"] == "summary"
    assert frame.iloc[-1]["reject"] == pytest.approx(result.rejection_rate)

    parallel = run_experiment(spec, TestConfig(B=20, oracle=True, workers=2))
    assert parallel.pvalues == result.pvalues


def test_run_experiment_rejects_bad_alpha():
    with pytest.raises(ConfigurationError):
        run_experiment(SimSpec(model="convergence", n=20, reps=1), TestConfig(oracle=True), alpha=1.5)


def test_run_power_curve_table():
    spec = SimSpec(model="convergence", n=80, reps=2)
    table = run_power_curve(spec, [0.0, 0.5], TestConfig(B=10, oracle=True))
    assert list(table["psi"]) == [0.0, 0.5]
    assert set(table.columns) >= {"model", "psi", "reps", "measure", "direction", "rejection_rate"}
    assert list(table["reps"]) == [2, 2]


def _quick_cfg(model, **overrides):
    return default_test_config(model, **overrides)


@pytest.mark.slow
def test_type_one_error_calibration():
    spec = SimSpec(model="convergence", dims=(1, 1, 1), n=500, reps=200, seed=1)
    result = run_experiment(spec, _quick_cfg("convergence", B=100, m=1, workers=4))
    assert 0.02 <= result.rejection_rate <= 0.10
    assert ks_statistic(result.pvalues) < 0.115


@pytest.mark.slow
def test_power_on_low_low_setting_one():
    cfg = _quick_cfg("low-low", B=100, m=5, workers=4)
    psis = [0.0, 0.05, 0.1, 0.15, 0.2]
    table = run_power_curve(SimSpec(model="low-low", setting=1, n=500, reps=100), psis, cfg)
    rates = table["rejection_rate"].to_numpy()
    assert 0.01 <= rates[0] <= 0.11
    assert 0.50 <= rates[2] <= 0.90
    assert rates[-1] >= 0.85
    # monotone in psi up to Monte Carlo noise
    assert np.all(np.diff(rates) >= -0.07)


@pytest.mark.slow
def test_measures_agree_on_univariate_model():
    spec = SimSpec(model="univariate", setting=1, n=500, reps=100)
    psis = [0.0, 0.2, 0.4]
    dc = run_power_curve(spec, psis, _quick_cfg("univariate", measure="dc", workers=4))
    ipc = run_power_curve(spec, psis, _quick_cfg("univariate", measure="ipc", workers=4))
    gaps = np.abs(dc["rejection_rate"].to_numpy() - ipc["rejection_rate"].to_numpy())
    assert np.all(gaps <= 0.20)
    assert dc["rejection_rate"].iloc[-1] > dc["rejection_rate"].iloc[0]
    assert ipc["rejection_rate"].iloc[-1] > ipc["rejection_rate"].iloc[0]


@pytest.mark.slow
def test_directions_agree_on_univariate_model():
    spec = SimSpec(model="univariate", setting=1, n=500, reps=100)
    psis = [0.0, 0.2, 0.4]
    dc1 = run_power_curve(spec, psis, _quick_cfg("univariate", direction="dc1", workers=4))
    dc2 = run_power_curve(spec, psis, _quick_cfg("univariate", direction="dc2", workers=4))
    gaps = np.abs(dc1["rejection_rate"].to_numpy() - dc2["rejection_rate"].to_numpy())
    assert np.all(gaps <= 0.10)
