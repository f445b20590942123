"""Histogramming, background correction, and counting figures of merit."""

import numpy as np
import pytest

import oracles
from vapormem.counting import (CountSummary, Histogram, corrected_noise,
                               eta_det_hbt, figures_of_merit, histogram,
                               internal_efficiency, invert_eta_det_hbt,
                               snr_from_summary)
from vapormem.timetags import RateProfile, generate_timetags

BIN = 0.54e-9
# Published counting totals: retrieved-window counts, blocked-run counts,
# and a flat offset summing to 7325 over a 40-bin ROI.
GOLDEN = CountSummary(n_ret=4.46e5, n_noise_blocked=4.28e4,
                      offset_per_bin=7325.0 / 40.0, n_roi_bins=40,
                      roi_start_s=13.5e-9, roi_width_s=40 * BIN)


def make_histogram_pair():
    """Signal/blocked histograms with a known flat offset in the quiet tail."""
    edges = BIN * np.arange(51)
    rng = np.random.default_rng(7)
    blocked = rng.integers(50, 150, size=50)
    signal = blocked + 7  # flat spurious floor present only when signal is on
    roi = Histogram(edges, blocked).region_mask(13.5e-9, 19.98e-9)
    signal[roi] += 900
    quiet = Histogram(edges, blocked).region_mask(21.6e-9, 27e-9)
    return Histogram(edges, signal), Histogram(edges, blocked), roi, quiet


def test_histogram_validation():
    edges = np.array([0.0, 1.0, 3.0])
    with pytest.raises(ValueError, match="uniform"):
        Histogram(edges, np.array([1, 1]))
    with pytest.raises(ValueError, match="non-negative"):
        Histogram(np.array([0.0, 1.0, 2.0]), np.array([1, -1]))
    with pytest.raises(ValueError, match="length"):
        Histogram(np.array([0.0, 1.0, 2.0]), np.array([1, 1, 1]))
    with pytest.raises(ValueError, match="increasing"):
        Histogram(np.array([0.0, 0.0, 1.0]), np.array([1, 1]))


def test_histogram_properties_and_regions():
    edges = BIN * np.arange(11)
    counts = np.arange(10)
    hist = Histogram(edges, counts)
    assert hist.bin_width_s == pytest.approx(BIN, rel=1e-12)
    assert hist.total_counts == 45
    # half-open [start, stop): the bin whose center sits at stop is excluded
    assert hist.region_counts(0.0, 2 * BIN) == 0 + 1
    assert hist.region_counts(2 * BIN, 5 * BIN) == 2 + 3 + 4


def test_histogram_from_stream_counts_everything_in_window():
    t = np.linspace(0.0, 27e-9, 55)
    profile = RateProfile(t, np.full(t.shape, 5e6))
    stream = generate_timetags(profile, None, 30000, 1.0, seed=12)
    hist = histogram(stream, BIN, (0.0, 27e-9))
    assert hist.counts.size == 50
    assert hist.total_counts == stream.n_records
    ch0 = histogram(stream, BIN, (0.0, 27e-9), channels=[0])
    ch1 = histogram(stream, BIN, (0.0, 27e-9), channels=[1])
    assert ch0.total_counts + ch1.total_counts == hist.total_counts


def test_histogram_window_validation():
    t = np.linspace(0.0, 27e-9, 55)
    stream = generate_timetags(RateProfile(t, np.full(t.shape, 1e6)), None,
                               1000, 1.0, seed=13)
    with pytest.raises(ValueError, match="integer number of bins"):
        histogram(stream, BIN, (0.0, 27.2e-9))
    with pytest.raises(ValueError, match="positive"):
        histogram(stream, -BIN, (0.0, 27e-9))
    with pytest.raises(ValueError, match="positive"):
        histogram(stream, BIN, (10e-9, 10e-9))


def test_corrected_noise_recovers_constructed_offset():
    sig, blk, roi, quiet = make_histogram_pair()
    summary = corrected_noise(sig, blk, quiet_region_s=(21.6e-9, 27e-9),
                              roi_s=(13.5e-9, 6.48e-9))
    assert summary.offset_per_bin == pytest.approx(7.0, abs=1e-12)
    assert summary.n_roi_bins == int(roi.sum()) == 12
    assert summary.n_ret == sig.counts[roi].sum()
    assert summary.n_noise_blocked == blk.counts[roi].sum()
    assert summary.n_noise == pytest.approx(blk.counts[roi].sum() + 7.0 * 12)
    assert summary.n_signal == pytest.approx(900 * 12)
    n_quiet = int(quiet.sum())
    var = (sig.counts[quiet].sum() + blk.counts[quiet].sum()) / n_quiet**2
    assert summary.var_offset_per_bin == pytest.approx(var, rel=1e-12)


def test_corrected_noise_validation():
    sig, blk, _, _ = make_histogram_pair()
    other = Histogram(0.5e-9 * np.arange(55), np.zeros(54, dtype=int))
    with pytest.raises(ValueError, match="binning"):
        corrected_noise(sig, other, (21.6e-9, 27e-9), (13.5e-9, 6.48e-9))
    with pytest.raises(ValueError, match="overlaps"):
        corrected_noise(sig, blk, (15e-9, 27e-9), (13.5e-9, 6.48e-9))
    with pytest.raises(ValueError, match="positive length"):
        corrected_noise(sig, blk, (27e-9, 21.6e-9), (13.5e-9, 6.48e-9))
    with pytest.raises(ValueError, match="no bins"):
        corrected_noise(sig, blk, (26.9e-9, 26.95e-9), (13.5e-9, 6.48e-9))


def test_snr_golden():
    snr, sigma = snr_from_summary(GOLDEN)
    assert GOLDEN.n_noise == pytest.approx(50125.0, abs=1e-9)
    assert snr == pytest.approx(446000.0 / 50125.0 - 1.0, rel=1e-12)
    assert snr == pytest.approx(7.8978, abs=5e-4)
    assert sigma > 0


def test_snr_requires_positive_noise():
    empty = CountSummary(100.0, 0.0, 0.0, 12, 13.5e-9, 6.48e-9)
    with pytest.raises(ValueError, match="noise"):
        snr_from_summary(empty)


def test_hbt_detection_efficiency_matches_oracle():
    assert eta_det_hbt(0.97, 0.888) == pytest.approx(
        oracles.hbt_detection_probability(0.97, 0.888), rel=1e-12)
    assert eta_det_hbt(0.97, 0.888) == pytest.approx(0.6999, abs=1e-4)
    # linear regime: eta_hbt -> alpha_sq * eta_det as alpha_sq -> 0
    assert eta_det_hbt(1e-6, 0.5) == pytest.approx(5e-7, rel=1e-5)
    with pytest.warns(UserWarning, match="saturating"):
        eta_det_hbt(2.5, 0.9)
    with pytest.raises(ValueError):
        eta_det_hbt(-0.1, 0.5)


def test_hbt_inversion_roundtrip():
    eta = eta_det_hbt(0.97, 0.888)
    assert invert_eta_det_hbt(0.97, eta) == pytest.approx(0.888, abs=1e-9)
    with pytest.raises(ValueError, match="eta_hbt"):
        invert_eta_det_hbt(0.97, 0.99)


def test_figures_of_merit_golden():
    report = figures_of_merit(GOLDEN, alpha_sq=0.97, eta_det=0.888,
                              n_triggers=18_100_000, eta_det_hbt_given=0.70)
    assert report.eta_hbt == 0.70
    assert report.snr == pytest.approx(7.8978, abs=5e-4)
    assert report.eta_e2e == pytest.approx(395875.0 / (0.70 * 18_100_000),
                                           rel=1e-12)
    assert report.eta_e2e == pytest.approx(0.031245, abs=1e-5)
    assert report.mu_1 == pytest.approx(0.70 / report.snr, rel=1e-12)
    assert report.mu_1 == pytest.approx(0.08863, abs=1e-4)
    assert report.mu_1_defined
    assert report.eta_int_zero_delay is None


def test_figures_of_merit_computed_eta_hbt_close_to_calibrated():
    report = figures_of_merit(GOLDEN, alpha_sq=0.97, eta_det=0.888,
                              n_triggers=18_100_000)
    assert report.eta_hbt == pytest.approx(0.6999, abs=1e-4)
    assert report.eta_e2e == pytest.approx(0.03125, abs=2e-5)
    assert report.eta_hbt_sigma > 0  # alpha_sq calibration propagates


def test_figures_of_merit_includes_internal_efficiency_when_asked():
    report = figures_of_merit(GOLDEN, alpha_sq=0.97, eta_det=0.888,
                              n_triggers=18_100_000, eta_det_hbt_given=0.70,
                              passive_transmission=0.195, hold_time_s=80e-9,
                              memory_lifetime_s=224e-9)
    expect = report.eta_e2e / 0.195 * np.exp(80.0 / 224.0)
    assert report.eta_int_zero_delay == pytest.approx(expect, rel=1e-12)
    assert 0.21 < report.eta_int_zero_delay < 0.27
    assert report.eta_int_zero_delay_sigma > 0


def test_figures_of_merit_validation():
    with pytest.raises(ValueError, match="n_triggers"):
        figures_of_merit(GOLDEN, 0.97, 0.888, 0)
    with pytest.raises(ValueError, match="eta_det_hbt_given"):
        figures_of_merit(GOLDEN, 0.97, 0.888, 100, eta_det_hbt_given=1.5)


def test_internal_efficiency_formula():
    assert internal_efficiency(0.0312, 0.195, 80e-9, 224e-9) == pytest.approx(
        0.0312 / 0.195 * np.exp(80.0 / 224.0), rel=1e-12)
    assert internal_efficiency(0.0312, 1.0, 0.0, 224e-9) == 0.0312
    with pytest.raises(ValueError, match="transmission"):
        internal_efficiency(0.03, 0.0, 80e-9, 224e-9)
    with pytest.raises(ValueError, match="lifetime"):
        internal_efficiency(0.03, 0.195, 80e-9, 0.0)


def test_mu_1_undefined_when_signal_below_noise():
    weak = CountSummary(n_ret=100.0, n_noise_blocked=150.0,
                        offset_per_bin=0.0, n_roi_bins=12,
                        roi_start_s=13.5e-9, roi_width_s=6.48e-9)
    report = figures_of_merit(weak, 0.97, 0.888, 1000)
    assert not report.mu_1_defined
    assert np.isnan(report.mu_1)
