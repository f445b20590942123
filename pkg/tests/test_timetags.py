"""Time-tag synthesis and serialization."""

import numpy as np
import pytest

from vapormem.timetags import (RateProfile, TimeTagStream, generate_timetags,
                               stream_from_binary, stream_from_csv,
                               stream_to_binary, stream_to_csv)

WINDOW = 27e-9


def flat_profile(rate_hz, t0=0.0, t1=WINDOW):
    t = np.linspace(t0, t1, 55)
    return RateProfile(t, np.full(t.shape, rate_hz))


def test_rate_profile_validation():
    t = np.linspace(0.0, 1e-9, 5)
    with pytest.raises(ValueError, match="increasing"):
        RateProfile(t[::-1], np.ones(5))
    with pytest.raises(ValueError, match="shape"):
        RateProfile(t, np.ones(4))
    with pytest.raises(ValueError, match="non-negative"):
        RateProfile(t, -np.ones(5))


def test_mean_per_trigger_is_rate_integral():
    profile = flat_profile(1e6)
    assert profile.mean_per_trigger() == pytest.approx(1e6 * WINDOW, rel=1e-12)


def test_generation_is_deterministic_per_seed():
    profile = flat_profile(2e6)
    a = generate_timetags(profile, None, 5000, 0.9, seed=42)
    b = generate_timetags(profile, None, 5000, 0.9, seed=42)
    c = generate_timetags(profile, None, 5000, 0.9, seed=43)
    assert np.array_equal(a.timestamp_ps, b.timestamp_ps)
    assert np.array_equal(a.trigger_index, b.trigger_index)
    assert not np.array_equal(a.timestamp_ps, c.timestamp_ps)


def test_poisson_totals_and_thinning():
    profile = flat_profile(1e6)  # mean 0.027 per trigger
    n_trig = 40000
    full = generate_timetags(profile, None, n_trig, 1.0, seed=1)
    half = generate_timetags(profile, None, n_trig, 0.5, seed=2)
    mean = profile.mean_per_trigger() * n_trig
    assert full.n_records == pytest.approx(mean, abs=5 * np.sqrt(mean))
    assert half.n_records == pytest.approx(0.5 * mean,
                                             abs=5 * np.sqrt(0.5 * mean))


def test_channel_split_is_balanced():
    stream = generate_timetags(flat_profile(2e6), None, 50000, 1.0, seed=3)
    n0 = int(np.sum(stream.channel == 0))
    n1 = int(np.sum(stream.channel == 1))
    assert n0 + n1 == stream.n_records
    assert abs(n0 - n1) < 5 * np.sqrt(n0 + n1)


def test_custom_channel_pair():
    stream = generate_timetags(flat_profile(2e6), None, 5000, 1.0, seed=4,
                               channels=(3, 7))
    assert set(np.unique(stream.channel)) <= {3, 7}
    only3 = stream.select_channels([3])
    assert np.all(only3.channel == 3)


def test_timestamps_stay_inside_profile_support():
    stream = generate_timetags(flat_profile(1e7, t0=5e-9, t1=20e-9), None,
                               20000, 1.0, seed=5)
    ts = stream.timestamps_s()
    assert ts.min() >= 5e-9 - 1e-12
    assert ts.max() <= 20e-9 + 1e-12


def test_inverse_cdf_reproduces_profile_shape():
    # density proportional to t on [0, W]: mean arrival = 2W/3
    t = np.linspace(0.0, WINDOW, 101)
    ramp = RateProfile(t, 1e7 * t / WINDOW)
    stream = generate_timetags(ramp, None, 100000, 1.0, seed=6)
    ts = stream.timestamps_s()
    sem = ts.std() / np.sqrt(ts.size)
    assert ts.mean() == pytest.approx(2 * WINDOW / 3, abs=5 * sem)


def test_records_sorted_by_trigger_then_time():
    stream = generate_timetags(flat_profile(5e6), None, 300, 1.0, seed=7)
    trig = stream.trigger_index
    assert np.all(np.diff(trig) >= 0)
    same = np.diff(trig) == 0
    assert np.all(np.diff(stream.timestamp_ps)[same] >= 0)


def test_two_profiles_add_their_rates():
    signal = flat_profile(1e6)
    noise = flat_profile(3e6)
    stream = generate_timetags(signal, noise, 30000, 1.0, seed=8)
    mean = (signal.mean_per_trigger() + noise.mean_per_trigger()) * 30000
    assert stream.n_records == pytest.approx(mean, abs=5 * np.sqrt(mean))


def test_stream_validation():
    with pytest.raises(ValueError):
        TimeTagStream(np.array([0]), np.array([0]), np.array([-5]), 10)
    with pytest.raises(ValueError):
        TimeTagStream(np.array([0]), np.array([0]), np.array([2**32]), 10)
    with pytest.raises(ValueError):
        TimeTagStream(np.array([12]), np.array([0]), np.array([100]), 10)


def test_generation_validation():
    with pytest.raises(ValueError, match="eta_det"):
        generate_timetags(flat_profile(1e6), None, 10, 1.5, seed=0)
    with pytest.raises(ValueError, match="n_triggers"):
        generate_timetags(flat_profile(1e6), None, -1, 0.5, seed=0)


def test_csv_roundtrip_exact(tmp_path):
    stream = generate_timetags(flat_profile(5e6), None, 1000, 0.8, seed=9,
                               repetition_rate_hz=3e5)
    path = tmp_path / "tags.csv"
    text = stream_to_csv(stream, path)
    assert text.splitlines()[0] == "trigger_index,channel,timestamp_ps"
    back = stream_from_csv(path, n_triggers=1000, repetition_rate_hz=3e5)
    assert np.array_equal(back.trigger_index, stream.trigger_index)
    assert np.array_equal(back.channel, stream.channel)
    assert np.array_equal(back.timestamp_ps, stream.timestamp_ps)


def test_binary_roundtrip_exact(tmp_path):
    stream = generate_timetags(flat_profile(5e6), None, 1000, 0.8, seed=10)
    path = tmp_path / "tags.bin"
    n_rec = stream_to_binary(stream, path)
    assert n_rec == stream.n_records
    assert path.stat().st_size == 16 * n_rec
    back = stream_from_binary(path, n_triggers=1000)
    assert np.array_equal(back.trigger_index, stream.trigger_index)
    assert np.array_equal(back.channel, stream.channel)
    assert np.array_equal(back.timestamp_ps, stream.timestamp_ps)


def test_binary_rejects_truncated_file(tmp_path):
    stream = generate_timetags(flat_profile(5e6), None, 500, 0.8, seed=11)
    path = tmp_path / "tags.bin"
    stream_to_binary(stream, path)
    data = path.read_bytes()
    path.write_bytes(data[:-7])
    with pytest.raises(ValueError, match="16"):
        stream_from_binary(path, n_triggers=500)
