"""Storage-lifetime series, decay fits, and model selection."""

import numpy as np
import pytest

from vapormem.lifetime import (LifetimeSeries, fit_lifetime,
                               make_synthetic_series, select_model,
                               series_from_csv, series_to_csv)

TAU = 224e-9
HOLDS = np.arange(13) * 40e-9


def test_series_validation():
    with pytest.raises(ValueError, match="two points"):
        LifetimeSeries(np.array([0.0]), np.array([1.0]))
    with pytest.raises(ValueError, match="increasing"):
        LifetimeSeries(np.array([0.0, 2e-9, 1e-9]), np.ones(3))
    with pytest.raises(ValueError, match="match"):
        LifetimeSeries(np.array([0.0, 1e-9]), np.ones(3))
    with pytest.raises(ValueError, match="finite"):
        LifetimeSeries(np.array([0.0, 1e-9]), np.array([1.0, np.nan]))
    with pytest.raises(ValueError, match="positive"):
        LifetimeSeries(np.array([0.0, 1e-9]), np.ones(2), np.array([1.0, 0.0]))


def test_scaled_accumulates_provenance():
    series = LifetimeSeries(HOLDS[:3], np.array([0.3, 0.2, 0.1]),
                            np.full(3, 0.01))
    double = series.scaled(2.0)
    assert np.allclose(double.efficiency, 2 * series.efficiency)
    assert np.allclose(double.uncertainty, 0.02)
    assert double.scale_factor == 2.0
    assert double.scaled(0.5).scale_factor == 1.0


def test_noiseless_exponential_recovered_exactly():
    series = make_synthetic_series("exponential", 0.24, TAU, HOLDS)
    fit = fit_lifetime(series)
    assert fit.converged and not fit.failed
    assert fit.amplitude == pytest.approx(0.24, rel=1e-9)
    assert fit.timescale_s == pytest.approx(TAU, rel=1e-9)
    assert np.allclose(fit.predict(HOLDS), series.efficiency, rtol=1e-8)


def test_noiseless_gaussian_recovered_exactly():
    series = make_synthetic_series("gaussian", 0.24, TAU, HOLDS)
    fit = fit_lifetime(series, model="gaussian")
    assert fit.converged and not fit.failed
    assert fit.amplitude == pytest.approx(0.24, rel=1e-9)
    assert fit.timescale_s == pytest.approx(TAU, rel=1e-9)


def test_model_selection_noiseless_both_directions():
    exp_series = make_synthetic_series("exponential", 0.24, TAU, HOLDS)
    gauss_series = make_synthetic_series("gaussian", 0.24, TAU, HOLDS)
    assert select_model(exp_series).model == "exponential"
    assert select_model(gauss_series).model == "gaussian"


def test_wrong_model_has_larger_residuals():
    series = make_synthetic_series("exponential", 0.24, TAU, HOLDS)
    right = fit_lifetime(series, model="exponential")
    wrong = fit_lifetime(series, model="gaussian")
    assert right.sse < wrong.sse
    assert right.aic < wrong.aic


def test_noisy_fit_ci_covers_truth():
    series = make_synthetic_series("exponential", 0.24, TAU, HOLDS,
                                   noise_sigma=0.005, seed=11)
    fit = fit_lifetime(series)
    lo, hi = fit.timescale_ci95
    assert lo < TAU < hi
    assert fit.timescale_sigma > 0
    assert fit.timescale_s == pytest.approx(TAU, rel=0.25)


def test_bootstrap_ci_brackets_estimate():
    series = make_synthetic_series("exponential", 0.24, TAU, HOLDS,
                                   noise_sigma=0.005, seed=4)
    fit = fit_lifetime(series, bootstrap=150, seed=5)
    assert fit.bootstrap_ci95 is not None
    lo, hi = fit.bootstrap_ci95
    assert 0 < lo < hi
    assert lo < fit.timescale_s * 1.5 and hi > fit.timescale_s * 0.5


def test_constant_series_flags_failure():
    series = LifetimeSeries(HOLDS, np.full(HOLDS.shape, 0.1))
    fit = fit_lifetime(series)
    assert fit.failed and not fit.converged
    assert "degenerate" in fit.message
    assert np.isnan(fit.timescale_s)


def test_fit_validation():
    series = make_synthetic_series("exponential", 0.24, TAU, HOLDS)
    with pytest.raises(ValueError, match="model"):
        fit_lifetime(series, model="stretched")
    short = LifetimeSeries(HOLDS[:2], np.array([0.2, 0.1]))
    with pytest.raises(ValueError, match="three points"):
        fit_lifetime(short)


def test_csv_roundtrip_with_uncertainty(tmp_path):
    series = make_synthetic_series("exponential", 0.24, TAU, HOLDS,
                                   noise_sigma=0.004, seed=2)
    path = tmp_path / "series.csv"
    text = series_to_csv(series, path)
    assert text.splitlines()[0] == "hold_time_s,efficiency,uncertainty"
    back = series_from_csv(path)
    assert np.array_equal(back.hold_time_s, series.hold_time_s)
    assert np.array_equal(back.efficiency, series.efficiency)
    assert np.array_equal(back.uncertainty, series.uncertainty)


def test_csv_roundtrip_without_uncertainty(tmp_path):
    series = make_synthetic_series("exponential", 0.24, TAU, HOLDS)
    path = tmp_path / "series.csv"
    series_to_csv(series, path)
    back = series_from_csv(path)
    assert back.uncertainty is None
    assert np.array_equal(back.efficiency, series.efficiency)
    path.write_text("time,eff\n0,1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="header"):
        series_from_csv(path)
