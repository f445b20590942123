"""Etalon stack: Airy response, dB additivity, suppression budgets."""

import numpy as np
import pytest

import oracles
from vapormem.filters import (EtalonSpec, FilterChain, chain_transmission,
                              chain_transmission_db, control_suppression_budget,
                              etalon_transmission)

SIGNAL_ETALON = EtalonSpec(fsr_hz=71.1e9, fwhm_hz=1.19e9, peak_transmission=0.90)


def test_finesse_definition():
    assert SIGNAL_ETALON.finesse == pytest.approx(71.1 / 1.19, rel=1e-12)


def test_airy_curve_matches_oracle():
    # implementation uses the high-finesse coefficient (2F/pi)^2; the exact
    # half-width identity differs by O((FWHM/FSR)^2), far below 1e-3 here
    grid = np.linspace(-0.6 * 71.1e9, 0.6 * 71.1e9, 2001)
    got = etalon_transmission(SIGNAL_ETALON, grid)
    want = oracles.airy_transmission(grid, 71.1e9, 1.19e9, 0.90)
    assert np.allclose(got, want, rtol=1e-3)


def test_peak_and_periodicity():
    assert etalon_transmission(SIGNAL_ETALON, 0.0) == pytest.approx(0.90, rel=1e-12)
    assert etalon_transmission(SIGNAL_ETALON, 71.1e9) == pytest.approx(0.90, rel=1e-9)
    assert etalon_transmission(SIGNAL_ETALON, -71.1e9) == pytest.approx(0.90, rel=1e-9)


def test_fwhm_is_half_peak():
    t_half = etalon_transmission(SIGNAL_ETALON, 1.19e9 / 2.0)
    assert t_half == pytest.approx(0.45, rel=2e-4)


def test_suppression_at_half_fsr_matches_oracle():
    t_peak = etalon_transmission(SIGNAL_ETALON, 0.0)
    t_half_fsr = etalon_transmission(SIGNAL_ETALON, 71.1e9 / 2.0)
    got_db = 10.0 * np.log10(t_peak / t_half_fsr)
    want_db = oracles.airy_suppression_at_half_fsr_db(71.1e9, 1.19e9)
    assert got_db == pytest.approx(want_db, abs=0.01)
    assert got_db == pytest.approx(31.6, abs=0.1)


def test_center_offset_shifts_response():
    spec = EtalonSpec(fsr_hz=71.1e9, fwhm_hz=1.19e9, peak_transmission=0.90,
                      center_offset_hz=5e9)
    assert etalon_transmission(spec, 5e9) == pytest.approx(0.90, rel=1e-12)
    assert etalon_transmission(spec, 0.0) < 0.05


def test_etalon_validation():
    with pytest.raises(ValueError):
        EtalonSpec(fsr_hz=1e9, fwhm_hz=2e9)
    with pytest.raises(ValueError):
        EtalonSpec(fsr_hz=71.1e9, fwhm_hz=1.19e9, peak_transmission=0.0)


def test_chain_db_is_sum_of_singles():
    chain = FilterChain(etalons=(SIGNAL_ETALON,) * 3)
    for detuning in (35.55e9, 10e9, 3.7e9):
        total = chain_transmission_db(chain, detuning)
        singles = sum(
            chain_transmission_db(FilterChain(etalons=(SIGNAL_ETALON,)), detuning)
            for _ in range(3))
        assert abs(total - singles) < 1e-9


def test_chain_scalar_transmission_on_peak():
    chain = FilterChain(etalons=(SIGNAL_ETALON,) * 3,
                        broadband_transmission=0.95)
    _, scalar = chain_transmission(chain, np.zeros(5))
    assert scalar == pytest.approx(0.9**3 * 0.95, rel=1e-9)


def test_chain_transmission_spectrum_shape_and_bounds():
    chain = FilterChain(etalons=(SIGNAL_ETALON,) * 2)
    grid = np.linspace(-40e9, 40e9, 501)
    amp = np.exp(-((grid / 5e9) ** 2)).astype(complex)
    out, scalar = chain_transmission(chain, grid, amplitude=amp)
    assert out.shape == grid.shape
    assert 0.0 < scalar < 1.0
    assert np.all(np.abs(out) <= np.abs(amp) + 1e-15)


def test_chain_transmission_shape_mismatch_raises():
    chain = FilterChain(etalons=(SIGNAL_ETALON,))
    with pytest.raises(ValueError, match="shape"):
        chain_transmission(chain, np.zeros(5), amplitude=np.zeros(4, complex))


def test_polarization_and_floor_flags_add_exactly():
    chain = FilterChain(etalons=(SIGNAL_ETALON,),
                        polarization_suppression_db=80.0,
                        broadband_floor_db=40.0)
    base = chain_transmission_db(chain, 20e9)
    with_pol = chain_transmission_db(chain, 20e9, include_polarization=True)
    with_floor = chain_transmission_db(chain, 20e9, include_broadband_floor=True)
    assert with_pol - base == pytest.approx(80.0, abs=1e-12)
    assert with_floor - base == pytest.approx(40.0, abs=1e-12)


def test_control_suppression_budget_scaling():
    chain = FilterChain(etalons=(SIGNAL_ETALON,) * 3,
                        polarization_suppression_db=80.0)
    detuning = 35.0948e9  # control offset from the signal line
    residual = control_suppression_budget(chain, 1e9, detuning)
    total_db = chain_transmission_db(chain, detuning, include_polarization=True)
    assert residual == pytest.approx(1e9 * 10 ** (-total_db / 10.0), rel=1e-12)
    assert control_suppression_budget(chain, 0.0, detuning) == 0.0
    assert residual < 1e-8  # >170 dB of rejection leaves nothing


def test_chain_validation():
    with pytest.raises(ValueError):
        FilterChain(broadband_transmission=0.0)
    with pytest.raises(ValueError):
        FilterChain(polarization_suppression_db=-3.0)
