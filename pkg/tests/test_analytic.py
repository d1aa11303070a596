import math

import numpy as np
import pytest

from omramsey.analytic import (
    analytic_spectrum,
    classic_ramsey,
    fringe_scales,
    gated_ramsey_intensity,
    ramsey_amplitudes,
    steady_omit,
)
from omramsey.exceptions import DomainError
from omramsey.model import detunings, transfer_rate
from omramsey.schedule import first_pulse_gate
from omramsey.types import DetuningGrid, Detunings, PhysicalParams, PulseSchedule
from omramsey.utils import hz_to_rad_per_us, rad_per_us_to_hz


def test_bare_probe_without_coupling(params, schedule):
    bare = PhysicalParams.create(params.kappa, params.gamma_m, params.omega_m, 0.0)
    amplitudes = ramsey_amplitudes(bare, schedule, 0.3)

    assert amplitudes.beta_r == 0
    assert amplitudes.alpha_r == pytest.approx(1.0)


def test_central_fringe_has_no_phase(params, schedule):
    amplitudes = ramsey_amplitudes(params, schedule, 0.0)

    assert amplitudes.phi == 0.0
    assert amplitudes.mu == pytest.approx(
        params.gamma_m * 4.0 / 2 + transfer_rate(params) * 1.0
    )
    assert amplitudes.beta_r.real < 0
    assert amplitudes.beta_r.imag == pytest.approx(0.0, abs=1e-15)


def test_first_pulse_memory_is_lost_at_large_mu(schedule):
    lossy = PhysicalParams.from_frequencies(30e6, 3e6, 94e6, 0.58e6)
    y = 0.7
    amplitudes = ramsey_amplitudes(lossy, schedule, y)
    assert amplitudes.mu >= 30

    rate = transfer_rate(lossy)
    z = 1j * y + rate
    fresh = lossy.big_g * (np.exp(-z * schedule.tau2) - 1) / z
    assert amplitudes.beta_r == pytest.approx(fresh, rel=1e-12)


def test_written_weight_differs_from_steady_state(params):
    # long pulses, no gap, zero readout delay: both forms should reduce to
    # the continuous-probe response at x = y = 0
    s = PulseSchedule.second_pair(200.0, 0.0, 200.0)
    steady = steady_omit(params, Detunings(params.omega_m, 0.0, 0.0))

    exact = ramsey_amplitudes(params, s, 0.0, coupling_weight=1.0)
    written = ramsey_amplitudes(params, s, 0.0)
    assert exact.alpha_r == pytest.approx(steady, rel=1e-9)
    assert abs(written.alpha_r - steady) > 0.1 * abs(steady)


def test_steady_omit_limits(params):
    bare = PhysicalParams.create(params.kappa, params.gamma_m, params.omega_m, 0.0)
    assert steady_omit(bare, Detunings(0.0, 0.0, 0.0)) == pytest.approx(1.0)

    dip = steady_omit(params, Detunings(params.omega_m, 0.0, 0.0))
    half = params.kappa / 2
    assert dip == pytest.approx(half / (half + 2 * params.big_g**2 / params.gamma_m))
    assert abs(dip) == pytest.approx(0.308, abs=1e-3)

    far = detunings(params, params.omega_m + 1e4)
    lorentzian = params.kappa_e / complex(half, far.x)
    assert steady_omit(params, far) == pytest.approx(lorentzian, rel=1e-3)


def test_steady_omit_is_even_on_resonance(params):
    y = np.linspace(-3.0, 3.0, 61)
    response = np.abs(steady_omit(params, Detunings(params.omega_m - y, y, y))) ** 2
    mirrored = np.abs(steady_omit(params, Detunings(params.omega_m + y, -y, -y))) ** 2

    assert np.allclose(response, mirrored, rtol=1e-12, atol=0)


def test_classic_ramsey():
    p_s, p_r = classic_ramsey(0.1, 2.0, 0.0, 5.0)
    assert p_s == pytest.approx(0.04)
    assert p_r == pytest.approx(0.08)

    p_s, _ = classic_ramsey(0.1, 2.0, math.pi, 5.0)
    assert p_s == pytest.approx(0.0, abs=1e-18)

    _, p_r = classic_ramsey(0.1, 2.0, 0.3, math.pi / 0.3)
    assert p_r == pytest.approx(0.0, abs=1e-12)


def test_classic_ramsey_period_with_flat_envelope():
    gap = 5.0
    delta = np.linspace(-2.0, 2.0, 41)
    _, p_r = classic_ramsey(1e4, 1e-4, delta, gap)
    _, shifted = classic_ramsey(1e4, 1e-4, delta + 2 * math.pi / gap, gap)

    assert np.allclose(p_r, shifted, rtol=1e-6)


def test_fringe_scales(params, schedule):
    scales = fringe_scales(params, schedule)

    assert rad_per_us_to_hz(scales.naive_period) == pytest.approx(200e3)
    assert scales.conditions.pump
    assert scales.conditions.readout
    assert not scales.conditions.coherence
    assert not scales.conditions.all

    long_gap = PulseSchedule.second_pair(4.0, 10.0, 1.0)
    assert rad_per_us_to_hz(fringe_scales(params, long_gap).naive_period) == (
        pytest.approx(90.909e3, rel=1e-4)
    )

    short = PulseSchedule.second_pair(4.0, 0.5, 0.5, gate_len=0.5)
    assert fringe_scales(params, short).conditions.coherence


def test_gated_intensity_is_vectorized(params, schedule):
    y = np.array([-0.5, 0.0, 0.5])
    values = gated_ramsey_intensity(params, schedule, y)

    assert values.shape == (3,)
    for k in range(3):
        expected = gated_ramsey_intensity(params, schedule, y[k])
        assert values[k] == pytest.approx(expected)


def test_gated_intensity_first_pulse_ignores_later_pulses(params, schedule):
    one = first_pulse_gate(schedule, 2.0)
    other = first_pulse_gate(PulseSchedule.second_pair(4.0, 9.0, 3.0), 2.0)

    assert gated_ramsey_intensity(params, one, 0.4) == pytest.approx(
        gated_ramsey_intensity(params, other, 0.4)
    )


def test_gated_intensity_needs_two_samples(params, schedule):
    with pytest.raises(DomainError):
        gated_ramsey_intensity(params, schedule, 0.0, samples=1)


def test_gated_intensity_without_probe(params):
    dark = PulseSchedule.second_pair(4.0, 4.0, 1.0, probe_amp=0j)

    assert gated_ramsey_intensity(params, dark, 0.2) == 0.0


def test_analytic_spectrum_axis(params, schedule, small_grid):
    spectrum = analytic_spectrum(params, schedule, small_grid)

    assert np.allclose(spectrum.offsets, small_grid.offsets())
    assert len(spectrum.intensity) == small_grid.points
    assert spectrum.grid is small_grid


def test_analytic_spectrum_dips_at_sideband(params, schedule):
    grid = DetuningGrid(span=hz_to_rad_per_us(0.2e6), points=201)
    spectrum = analytic_spectrum(params, schedule, grid)

    assert spectrum.offsets[np.argmin(spectrum.intensity)] == pytest.approx(
        0.0, abs=grid.step
    )
