"""Synthetic time-tagged detection events and their file formats.

Events are produced per trigger by inhomogeneous Poisson sampling of a
rate profile, thinned by the detector efficiency, and split 50:50 over
two detector channels (Hanbury Brown-Twiss arrangement after the memory,
with the two channels added downstream).

File formats:

- CSV with header `trigger_index,channel,timestamp_ps`.
- Headerless little-endian binary, 16 bytes per record:
  uint64 trigger index, uint16 channel, uint16 reserved (zero),
  uint32 timestamp in ps since the trigger.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "RateProfile",
    "TimeTagStream",
    "generate_timetags",
    "stream_to_csv",
    "stream_from_csv",
    "stream_to_binary",
    "stream_from_binary",
]

_RECORD_DTYPE = np.dtype([("trigger", "<u8"), ("channel", "<u2"),
                          ("reserved", "<u2"), ("timestamp_ps", "<u4")])


@dataclass(frozen=True)
class RateProfile:
    """Detection-rate profile within one trigger window.

    rate_hz is the true (pre-detector) mean photon arrival rate at each
    time sample; the expected number of photons per trigger is the
    trapezoid integral of rate over time.
    """

    time_s: np.ndarray
    rate_hz: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.time_s, dtype=float)
        r = np.asarray(self.rate_hz, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("rate profile needs at least two samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("profile time grid must be strictly increasing")
        if r.shape != t.shape:
            raise ValueError("rate and time shapes differ")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise ValueError("rates must be finite and non-negative")
        object.__setattr__(self, "time_s", t)
        object.__setattr__(self, "rate_hz", r)

    def mean_per_trigger(self) -> float:
        return float(np.trapezoid(self.rate_hz, self.time_s))


@dataclass(frozen=True)
class TimeTagStream:
    """Sorted detection records plus acquisition metadata."""

    trigger_index: np.ndarray
    channel: np.ndarray
    timestamp_ps: np.ndarray
    n_triggers: int
    repetition_rate_hz: float = 0.0
    eta_det: float = 1.0

    def __post_init__(self):
        trig = np.asarray(self.trigger_index, dtype=np.int64)
        chan = np.asarray(self.channel, dtype=np.int64)
        ts = np.asarray(self.timestamp_ps, dtype=np.int64)
        if not (trig.shape == chan.shape == ts.shape):
            raise ValueError("record columns must have equal length")
        if ts.size and ts.min() < 0:
            raise ValueError("timestamps must be non-negative")
        if ts.size and ts.max() >= 2**32:
            raise ValueError("timestamps must fit a 32-bit ps counter")
        if self.n_triggers < 0:
            raise ValueError("n_triggers must be non-negative")
        if trig.size and (trig.min() < 0 or trig.max() >= self.n_triggers):
            raise ValueError("trigger indices must lie in [0, n_triggers)")
        order = np.lexsort((ts, trig))
        object.__setattr__(self, "trigger_index", trig[order])
        object.__setattr__(self, "channel", chan[order])
        object.__setattr__(self, "timestamp_ps", ts[order])

    @property
    def n_records(self) -> int:
        return int(self.trigger_index.size)

    def timestamps_s(self) -> np.ndarray:
        return self.timestamp_ps * 1e-12

    def select_channels(self, channels) -> "TimeTagStream":
        mask = np.isin(self.channel, np.asarray(channels))
        return TimeTagStream(self.trigger_index[mask], self.channel[mask],
                             self.timestamp_ps[mask], self.n_triggers,
                             self.repetition_rate_hz, self.eta_det)


def _sample_profile(profile: RateProfile, n_events: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Arrival times drawn from the normalized profile via inverse CDF."""
    t = profile.time_s
    r = profile.rate_hz
    # CDF on the sample grid by cumulative trapezoid
    seg = 0.5 * (r[1:] + r[:-1]) * np.diff(t)
    cdf = np.concatenate([[0.0], np.cumsum(seg)])
    total = cdf[-1]
    if total <= 0:
        return np.empty(0)
    u = rng.random(n_events) * total
    return np.interp(u, cdf, t)


def generate_timetags(signal_profile: RateProfile | None,
                      noise_profile: RateProfile | None,
                      n_triggers: int, eta_det: float, seed: int,
                      repetition_rate_hz: float = 0.0,
                      channels: tuple[int, int] = (0, 1)) -> TimeTagStream:
    """Monte-Carlo detection record for n_triggers experiment repetitions.

    Each profile contributes an inhomogeneous Poisson process per trigger;
    detection applies eta_det thinning and a 50:50 channel split.
    Reproducible for a given seed.
    """
    if not 0 <= eta_det <= 1:
        raise ValueError("eta_det must lie in [0, 1]")
    if n_triggers < 0:
        raise ValueError("n_triggers must be non-negative")
    rng = np.random.default_rng(seed)
    times = []
    for profile in (signal_profile, noise_profile):
        if profile is None:
            continue
        mean_detected = profile.mean_per_trigger() * eta_det * n_triggers
        n_events = int(rng.poisson(mean_detected)) if mean_detected > 0 else 0
        times.append(_sample_profile(profile, n_events, rng))
    if times:
        t_all = np.concatenate(times)
    else:
        t_all = np.empty(0)
    n = t_all.size
    trig = rng.integers(0, max(n_triggers, 1), size=n) if n_triggers > 0 else np.zeros(n, dtype=np.int64)
    chan = np.where(rng.random(n) < 0.5, channels[0], channels[1])
    ts_ps = np.round(t_all * 1e12).astype(np.int64)
    ts_ps = np.clip(ts_ps, 0, 2**32 - 1)
    return TimeTagStream(trig, chan, ts_ps, n_triggers,
                         repetition_rate_hz, eta_det)


def stream_to_csv(stream: TimeTagStream, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    buf.write("trigger_index,channel,timestamp_ps\n")
    for trig, chan, ts in zip(stream.trigger_index, stream.channel,
                              stream.timestamp_ps):
        buf.write(f"{trig},{chan},{ts}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def stream_from_csv(path: str | Path, n_triggers: int | None = None,
                    repetition_rate_hz: float = 0.0,
                    eta_det: float = 1.0) -> TimeTagStream:
    text = Path(path).read_text(encoding="utf-8")
    rows = text.strip().splitlines()
    if not rows or rows[0].strip() != "trigger_index,channel,timestamp_ps":
        raise ValueError("expected header 'trigger_index,channel,timestamp_ps'")
    if len(rows) > 1:
        data = np.array([[int(x) for x in row.split(",")] for row in rows[1:]],
                        dtype=np.int64)
    else:
        data = np.empty((0, 3), dtype=np.int64)
    if n_triggers is None:
        n_triggers = int(data[:, 0].max()) + 1 if data.size else 0
    return TimeTagStream(data[:, 0], data[:, 1], data[:, 2], n_triggers,
                         repetition_rate_hz, eta_det)


def stream_to_binary(stream: TimeTagStream, path: str | Path) -> int:
    """Write 16-byte little-endian records; returns the record count."""
    rec = np.zeros(stream.n_records, dtype=_RECORD_DTYPE)
    rec["trigger"] = stream.trigger_index
    rec["channel"] = stream.channel
    rec["timestamp_ps"] = stream.timestamp_ps
    Path(path).write_bytes(rec.tobytes())
    return stream.n_records


def stream_from_binary(path: str | Path, n_triggers: int | None = None,
                       repetition_rate_hz: float = 0.0,
                       eta_det: float = 1.0) -> TimeTagStream:
    raw = Path(path).read_bytes()
    if len(raw) % _RECORD_DTYPE.itemsize:
        raise ValueError(
            f"binary stream length {len(raw)} is not a multiple of "
            f"{_RECORD_DTYPE.itemsize}-byte records"
        )
    rec = np.frombuffer(raw, dtype=_RECORD_DTYPE)
    if n_triggers is None:
        n_triggers = int(rec["trigger"].max()) + 1 if rec.size else 0
    return TimeTagStream(rec["trigger"].astype(np.int64),
                         rec["channel"].astype(np.int64),
                         rec["timestamp_ps"].astype(np.int64),
                         n_triggers, repetition_rate_hz, eta_det)
