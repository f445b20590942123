"""Histogramming, background correction, and counting figures of merit.

The analysis mirrors a gated single-photon counting experiment: arrival
times from both detector channels are histogrammed per trigger, a
retrieval region of interest (ROI) is integrated, and the background is
estimated from a control acquisition with the signal input blocked plus
a flat spurious-floor offset measured in a quiet region of the signal
run itself.

Conventions:
- N_ret: total signal-run counts inside the ROI.
- N_noise = blocked-run ROI counts + offset_per_bin * n_roi_bins, where
  offset_per_bin is the mean per-bin excess (signal - blocked) over the
  quiet region.
- SNR = N_ret / N_noise - 1.
- eta_det_hbt = 2 (1 - exp(-alpha_sq eta_det / 2)): probability that a
  weak coherent pulse with mean photon number alpha_sq yields at least
  one count on either arm of a 50:50 split with per-arm efficiency
  eta_det, normalized per input photon.
- eta_e2e = (N_ret - N_noise) / (eta_det_hbt * n_triggers).
- mu_1 = eta_det_hbt / SNR: input mean photon number at which the
  retrieved signal would equal the noise level.

Uncertainties combine Poisson counting errors with the calibration
uncertainties of alpha_sq and eta_det in quadrature.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .timetags import TimeTagStream

__all__ = [
    "Histogram",
    "histogram",
    "CountSummary",
    "corrected_noise",
    "snr_from_summary",
    "eta_det_hbt",
    "invert_eta_det_hbt",
    "FoMReport",
    "figures_of_merit",
    "internal_efficiency",
]


@dataclass(frozen=True)
class Histogram:
    """Counts on a uniform time-bin grid (seconds since trigger)."""

    bin_edges_s: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges_s, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("need at least one bin")
        widths = np.diff(edges)
        if np.any(widths <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if not np.allclose(widths, widths[0], rtol=1e-9, atol=0):
            raise ValueError("bins must be uniform")
        if counts.shape != (edges.size - 1,):
            raise ValueError("counts length must match bin count")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "bin_edges_s", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def bin_width_s(self) -> float:
        return float(self.bin_edges_s[1] - self.bin_edges_s[0])

    @property
    def bin_centers_s(self) -> np.ndarray:
        return 0.5 * (self.bin_edges_s[1:] + self.bin_edges_s[:-1])

    @property
    def total_counts(self) -> int:
        return int(self.counts.sum())

    def region_mask(self, start_s: float, stop_s: float) -> np.ndarray:
        """Bins whose centers fall inside [start, stop)."""
        c = self.bin_centers_s
        return (c >= start_s) & (c < stop_s)

    def region_counts(self, start_s: float, stop_s: float) -> int:
        return int(self.counts[self.region_mask(start_s, stop_s)].sum())


def histogram(stream: TimeTagStream, bin_width_s: float,
              window_s: tuple[float, float],
              channels=None) -> Histogram:
    """Histogram arrival times; channels are summed (default: all)."""
    if bin_width_s <= 0:
        raise ValueError("bin width must be positive")
    t0, t1 = window_s
    if t1 <= t0:
        raise ValueError("window must have positive length")
    n_bins = int(round((t1 - t0) / bin_width_s))
    # atol=0: default absolute tolerance would swallow any mismatch on
    # nanosecond-scale windows
    if n_bins < 1 or not np.isclose(n_bins * bin_width_s, t1 - t0,
                                    rtol=1e-6, atol=0.0):
        raise ValueError("window length must be an integer number of bins")
    if channels is not None:
        stream = stream.select_channels(channels)
    edges = t0 + bin_width_s * np.arange(n_bins + 1)
    counts, _ = np.histogram(stream.timestamps_s(), bins=edges)
    return Histogram(edges, counts.astype(np.int64))


@dataclass(frozen=True)
class CountSummary:
    """ROI totals after background correction.

    offset_per_bin is estimated in a quiet region of the unblocked run
    and captures the flat spurious floor present only when the signal
    input is on (finite pulse-carver extinction); n_noise adds it to the
    blocked-run ROI counts. var_offset_per_bin is its Poisson variance.
    """

    n_ret: float
    n_noise_blocked: float
    offset_per_bin: float
    n_roi_bins: int
    roi_start_s: float
    roi_width_s: float
    var_offset_per_bin: float = 0.0

    @property
    def n_noise(self) -> float:
        return self.n_noise_blocked + self.offset_per_bin * self.n_roi_bins

    @property
    def n_signal(self) -> float:
        return self.n_ret - self.n_noise


def corrected_noise(signal_hist: Histogram, blocked_hist: Histogram,
                    quiet_region_s: tuple[float, float],
                    roi_s: tuple[float, float]) -> CountSummary:
    """Background-corrected ROI totals from a signal/blocked run pair.

    roi_s is (start, width). The quiet region must contain at least one
    bin and must not overlap the ROI.
    """
    if signal_hist.bin_edges_s.shape != blocked_hist.bin_edges_s.shape or \
            not np.allclose(signal_hist.bin_edges_s, blocked_hist.bin_edges_s):
        raise ValueError("signal and blocked histograms must share binning")
    q0, q1 = quiet_region_s
    roi_start, roi_width = roi_s
    roi_stop = roi_start + roi_width
    if q1 <= q0:
        raise ValueError("quiet region must have positive length")
    if max(q0, roi_start) < min(q1, roi_stop):
        raise ValueError("quiet region overlaps the ROI")
    quiet = signal_hist.region_mask(q0, q1)
    n_quiet = int(quiet.sum())
    if n_quiet == 0:
        raise ValueError("quiet region contains no bins")
    diff = signal_hist.counts[quiet] - blocked_hist.counts[quiet]
    offset = float(diff.mean())
    # Poisson variance of the per-bin offset estimate
    var_offset = float((signal_hist.counts[quiet].sum()
                        + blocked_hist.counts[quiet].sum()) / n_quiet**2)
    roi_mask = signal_hist.region_mask(roi_start, roi_stop)
    n_roi_bins = int(roi_mask.sum())
    if n_roi_bins == 0:
        raise ValueError("ROI contains no bins")
    return CountSummary(
        n_ret=float(signal_hist.counts[roi_mask].sum()),
        n_noise_blocked=float(blocked_hist.counts[roi_mask].sum()),
        offset_per_bin=offset,
        n_roi_bins=n_roi_bins,
        roi_start_s=roi_start,
        roi_width_s=roi_width,
        var_offset_per_bin=var_offset,
    )


def snr_from_summary(summary: CountSummary) -> tuple[float, float]:
    """(SNR, Poisson one-sigma). SNR = n_ret / n_noise - 1."""
    n_noise = summary.n_noise
    if n_noise <= 0:
        raise ValueError("SNR undefined for non-positive noise counts")
    value = summary.n_ret / n_noise - 1.0
    var_noise = summary.n_noise_blocked \
        + summary.n_roi_bins**2 * summary.var_offset_per_bin
    sigma = np.sqrt(summary.n_ret / n_noise**2
                    + (summary.n_ret / n_noise**2)**2 * var_noise)
    return float(value), float(sigma)


def eta_det_hbt(alpha_sq: float, eta_det: float) -> float:
    """Heralding efficiency of the HBT detection pair per input photon.

    Warns when alpha_sq * eta_det > 1: there the click probability
    saturates and the per-photon normalization loses meaning.
    """
    if alpha_sq < 0 or not 0 <= eta_det <= 1:
        raise ValueError("need alpha_sq >= 0 and eta_det in [0, 1]")
    if alpha_sq * eta_det > 1:
        warnings.warn(
            "alpha_sq * eta_det > 1: detection is saturating and the "
            "per-photon efficiency normalization is unreliable",
            stacklevel=2)
    return float(2.0 * (1.0 - np.exp(-alpha_sq * eta_det / 2.0)))


def invert_eta_det_hbt(alpha_sq: float, eta_hbt: float) -> float:
    """Detector efficiency that reproduces a measured eta_det_hbt."""
    if alpha_sq <= 0:
        raise ValueError("alpha_sq must be positive")
    top = eta_det_hbt(alpha_sq, 1.0)
    if not 0 < eta_hbt < top:
        raise ValueError(f"eta_hbt must lie in (0, {top:.4f}) for this alpha_sq")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return float(brentq(lambda e: eta_det_hbt(alpha_sq, e) - eta_hbt,
                            0.0, 1.0, xtol=1e-12))


@dataclass(frozen=True)
class FoMReport:
    """Counting figures of merit with one-sigma uncertainties."""

    snr: float
    snr_sigma: float
    eta_hbt: float
    eta_hbt_sigma: float
    eta_e2e: float
    eta_e2e_sigma: float
    mu_1: float
    mu_1_sigma: float
    mu_1_defined: bool
    n_triggers: int
    alpha_sq: float
    eta_det: float
    eta_int_zero_delay: float | None = None
    eta_int_zero_delay_sigma: float | None = None


def figures_of_merit(summary: CountSummary, alpha_sq: float, eta_det: float,
                     n_triggers: int, alpha_sq_sigma: float = 0.06,
                     eta_det_sigma: float = 0.0,
                     passive_transmission: float | None = None,
                     hold_time_s: float | None = None,
                     memory_lifetime_s: float | None = None,
                     eta_det_hbt_given: float | None = None,
                     eta_det_hbt_given_sigma: float = 0.0) -> FoMReport:
    """Counting figures of merit from background-corrected totals.

    Poisson errors on all counts combine in quadrature with the
    calibration uncertainties of alpha_sq and eta_det propagated through
    eta_det_hbt. An independently calibrated eta_det^HBT can be supplied
    via eta_det_hbt_given, which then replaces the value computed from
    alpha_sq and eta_det. When passive_transmission, hold_time_s, and
    memory_lifetime_s are all given, the zero-delay internal efficiency
    is included.
    """
    if n_triggers <= 0:
        raise ValueError("n_triggers must be positive")
    snr, snr_sigma = snr_from_summary(summary)
    if eta_det_hbt_given is not None:
        if not 0.0 < eta_det_hbt_given <= 1.0:
            raise ValueError("eta_det_hbt_given must be in (0, 1]")
        eta_hbt = float(eta_det_hbt_given)
        eta_hbt_sigma = float(eta_det_hbt_given_sigma)
    else:
        eta_hbt = eta_det_hbt(alpha_sq, eta_det)
        # d(eta_hbt)/d(alpha_sq) and /d(eta_det) for calibration propagation
        core = np.exp(-alpha_sq * eta_det / 2.0)
        eta_hbt_sigma = float(np.hypot(eta_det * core * alpha_sq_sigma,
                                       alpha_sq * core * eta_det_sigma))

    n_noise = summary.n_noise
    n_signal = summary.n_signal
    eta_e2e = n_signal / (eta_hbt * n_triggers)
    var_noise = summary.n_noise_blocked \
        + summary.n_roi_bins**2 * summary.var_offset_per_bin
    var_counts = summary.n_ret + var_noise
    eta_e2e_sigma = float(np.sqrt(
        var_counts / (eta_hbt * n_triggers)**2
        + (n_signal / (eta_hbt**2 * n_triggers))**2 * eta_hbt_sigma**2))

    mu_1_defined = snr > 0
    if mu_1_defined:
        mu_1 = eta_hbt / snr
        mu_1_sigma = float(np.hypot(eta_hbt_sigma / snr,
                                    eta_hbt * snr_sigma / snr**2))
    else:
        mu_1, mu_1_sigma = float("nan"), float("nan")

    eta_int = eta_int_sigma = None
    if None not in (passive_transmission, hold_time_s, memory_lifetime_s):
        eta_int = internal_efficiency(eta_e2e, passive_transmission,
                                      hold_time_s, memory_lifetime_s)
        eta_int_sigma = eta_int * eta_e2e_sigma / eta_e2e if eta_e2e else None

    return FoMReport(snr=snr, snr_sigma=snr_sigma, eta_hbt=eta_hbt,
                     eta_hbt_sigma=eta_hbt_sigma, eta_e2e=float(eta_e2e),
                     eta_e2e_sigma=eta_e2e_sigma, mu_1=mu_1,
                     mu_1_sigma=mu_1_sigma, mu_1_defined=mu_1_defined,
                     n_triggers=int(n_triggers), alpha_sq=float(alpha_sq),
                     eta_det=float(eta_det), eta_int_zero_delay=eta_int,
                     eta_int_zero_delay_sigma=eta_int_sigma)


def internal_efficiency(eta_e2e: float, passive_transmission: float,
                        hold_time_s: float, memory_lifetime_s: float) -> float:
    """Memory-internal efficiency extrapolated to zero storage time.

    Removes the passive optical transmission of the analysis chain and
    the exponential decay accumulated over the hold time.
    """
    if passive_transmission <= 0:
        raise ValueError("passive transmission must be positive")
    if memory_lifetime_s <= 0:
        raise ValueError("memory lifetime must be positive")
    return float(eta_e2e / passive_transmission
                 * np.exp(hold_time_s / memory_lifetime_s))
