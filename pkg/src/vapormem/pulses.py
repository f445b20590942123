"""Sampled complex pulse waveforms for the memory solver.

A PulseShape is a uniform time grid plus complex envelope samples. Signal
pulses are normalized so that the integral of |E|^2 over time equals the
declared mean photon number; control pulses carry the Rabi frequency
Omega(t) in rad/s.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "PulseShape",
    "gaussian_control",
    "signal_template",
    "decaying_sinusoid",
    "pulse_from_csv",
    "pulse_to_csv",
]


@dataclass(frozen=True)
class PulseShape:
    """Uniformly sampled complex envelope."""

    time_s: np.ndarray
    envelope: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.time_s, dtype=float)
        env = np.asarray(self.envelope, dtype=complex)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("time grid needs at least two samples")
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise ValueError("time grid must be strictly increasing")
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
            raise ValueError("time grid must be uniform")
        if env.shape != t.shape:
            raise ValueError("envelope and time grid shapes differ")
        if not np.all(np.isfinite(env.view(float))):
            raise ValueError("envelope must be finite")
        object.__setattr__(self, "time_s", t)
        object.__setattr__(self, "envelope", env)

    @property
    def dt(self) -> float:
        return float(self.time_s[1] - self.time_s[0])

    @property
    def duration(self) -> float:
        return float(self.time_s[-1] - self.time_s[0])

    def photon_number(self) -> float:
        """Trapezoid integral of |envelope|^2 over time."""
        return float(np.trapezoid(np.abs(self.envelope) ** 2, self.time_s))

    def peak(self) -> float:
        return float(np.max(np.abs(self.envelope)))

    def at(self, t: np.ndarray | float) -> np.ndarray | complex:
        """Envelope at arbitrary times, zero outside the sampled window."""
        re = np.interp(t, self.time_s, self.envelope.real, left=0.0, right=0.0)
        im = np.interp(t, self.time_s, self.envelope.imag, left=0.0, right=0.0)
        out = re + 1j * im
        if np.isscalar(t):
            return complex(out)
        return out

    def normalized(self, photon_number: float) -> "PulseShape":
        """Rescale so the |envelope|^2 integral equals photon_number."""
        current = self.photon_number()
        if current <= 0:
            raise ValueError("cannot normalize an all-zero pulse")
        scale = np.sqrt(photon_number / current)
        return PulseShape(self.time_s, self.envelope * scale)

    def scaled(self, factor: complex) -> "PulseShape":
        return PulseShape(self.time_s, self.envelope * factor)

    def shifted(self, dt_s: float) -> "PulseShape":
        return PulseShape(self.time_s + dt_s, self.envelope)


def _grid(t_start: float, t_stop: float, dt: float) -> np.ndarray:
    n = int(round((t_stop - t_start) / dt))
    return t_start + dt * np.arange(n + 1)


def gaussian_control(peak_omega_rad_s: float, fwhm_s: float, center_s: float,
                     t_start: float | None = None, t_stop: float | None = None,
                     dt_s: float = 2e-11) -> PulseShape:
    """Gaussian Rabi-frequency pulse Omega(t)."""
    if t_start is None:
        t_start = center_s - 2.5 * fwhm_s
    if t_stop is None:
        t_stop = center_s + 2.5 * fwhm_s
    t = _grid(t_start, t_stop, dt_s)
    env = peak_omega_rad_s * np.exp(-4.0 * np.log(2.0) * (t - center_s) ** 2 / fwhm_s**2)
    return PulseShape(t, env.astype(complex))


def signal_template(photon_number: float = 1.0,
                    rise_s: float = 0.5e-9,
                    decay_s: float = 1.5e-9,
                    window_s: float = 6.48e-9,
                    dt_s: float = 2e-11) -> PulseShape:
    """Fast-rise, exponential-decay signal template over a fixed window.

    shape(t) = (1 - exp(-t/rise)) * exp(-t/decay) on [0, window], then
    normalized to the requested mean photon number.
    """
    t = _grid(0.0, window_s, dt_s)
    shape = (1.0 - np.exp(-t / rise_s)) * np.exp(-t / decay_s)
    pulse = PulseShape(t, shape.astype(complex))
    return pulse.normalized(photon_number)


def decaying_sinusoid(amplitude_rad_s: float, frequency_hz: float,
                      decay_s: float, t_stop: float,
                      t_start: float = 0.0, dt_s: float = 2e-11) -> PulseShape:
    """Ringing waveform for control leakage during the hold."""
    t = _grid(t_start, t_stop, dt_s)
    local = t - t_start
    env = amplitude_rad_s * np.exp(-local / decay_s) * np.sin(2.0 * np.pi * frequency_hz * local)
    return PulseShape(t, env.astype(complex))


def pulse_to_csv(pulse: PulseShape, path: str | Path | None = None) -> str:
    """CSV rendering `time_s,re,im`; written to path if given."""
    buf = io.StringIO()
    buf.write("time_s,re,im\n")
    for t, e in zip(pulse.time_s, pulse.envelope):
        buf.write(f"{t:.12e},{e.real:.12e},{e.imag:.12e}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def pulse_from_csv(source: str | Path) -> PulseShape:
    """Parse the `time_s,re,im` format back into a PulseShape."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) or "\n" not in str(source) else str(source)
    rows = text.strip().splitlines()
    if not rows or rows[0].strip() != "time_s,re,im":
        raise ValueError("expected header 'time_s,re,im'")
    data = np.array([[float(x) for x in row.split(",")] for row in rows[1:]])
    if data.size == 0:
        raise ValueError("empty pulse file")
    return PulseShape(data[:, 0], data[:, 1] + 1j * data[:, 2])
