from dataclasses import replace

import numpy as np
import pytest

from omramsey.analysis import FitOptions, fit, sweep
from omramsey.exceptions import FitError, ParameterError
from omramsey.types import DetuningGrid, Spectrum
from omramsey.utils import hz_to_rad_per_us

FIT_DT = 0.02


@pytest.fixture
def fit_grid() -> DetuningGrid:
    return DetuningGrid(points=201)


@pytest.fixture
def tiny_target(params, schedule) -> Spectrum:
    grid = DetuningGrid(span=hz_to_rad_per_us(0.6e6), points=21)
    return sweep(params, schedule, grid, sample_dt=0.05)


def test_fit_rejects_bad_free_parameters(tiny_target, params):
    with pytest.raises(FitError):
        fit(tiny_target, params, free=())
    with pytest.raises(FitError):
        fit(tiny_target, params, free=("omega_m",))
    with pytest.raises(FitError):
        fit(tiny_target, params, free=("big_g", "big_g"))


def test_fit_needs_more_points_than_parameters(params, schedule):
    grid = DetuningGrid(span=1.0, points=3)
    target = sweep(params, schedule, grid, sample_dt=0.05)

    with pytest.raises(FitError):
        fit(target, params, free=("big_g", "kappa", "gamma_m", "delta_offset"))


def test_fit_needs_positive_start(tiny_target, params):
    uncoupled = replace(params, big_g=0.0)

    with pytest.raises(FitError):
        fit(tiny_target, uncoupled)


def test_fit_options_validation():
    with pytest.raises(ParameterError):
        FitOptions(max_iter=0)
    with pytest.raises(ParameterError):
        FitOptions(jitter=1.0)
    with pytest.raises(ParameterError):
        FitOptions(stall_iterations=0)


def test_fit_reports_cap_without_converging(tiny_target, params, caplog):
    start = replace(params, big_g=0.7 * params.big_g)
    options = FitOptions(max_iter=2, sample_dt=0.05)

    result = fit(tiny_target, start, options=options)

    assert not result.converged
    assert result.iterations <= 2
    assert result.free == ("big_g",)
    assert "without converging" in caplog.text


def test_fit_is_deterministic_for_a_seed(tiny_target, params):
    start = replace(params, big_g=0.8 * params.big_g)
    options = FitOptions(max_iter=15, sample_dt=0.05, seed=3)

    first = fit(tiny_target, start, options=options)
    second = fit(tiny_target, start, options=options)

    assert first.params_hat == second.params_hat
    assert first.residual == second.residual


@pytest.mark.slow
def test_fit_recovers_coupling(params, schedule, fit_grid):
    target = sweep(params, schedule, fit_grid, sample_dt=FIT_DT)
    start = replace(params, big_g=0.7 * params.big_g)
    options = FitOptions(
        xatol=1e-10, fatol=1e-20, stall_tolerance=0.0, sample_dt=FIT_DT
    )

    result = fit(target, start, options=options)

    assert result.converged
    assert result.params_hat.big_g == pytest.approx(params.big_g, rel=1e-2)
    assert result.residual < 1e-8


@pytest.mark.slow
def test_fit_tolerates_noise(params, schedule, fit_grid, rng):
    clean = sweep(params, schedule, fit_grid, sample_dt=FIT_DT)
    noise = rng.normal(0.0, 0.01 * clean.intensity.max(), len(clean.intensity))
    target = replace(clean, intensity=np.abs(clean.intensity + noise))
    start = replace(params, big_g=0.7 * params.big_g)

    result = fit(target, start, options=FitOptions(sample_dt=FIT_DT))

    assert result.params_hat.big_g == pytest.approx(params.big_g, rel=5e-2)


@pytest.mark.slow
def test_fit_finds_detuning_offset(params, schedule, fit_grid):
    clean = sweep(params, schedule, fit_grid, sample_dt=FIT_DT)
    shift = 3 * fit_grid.step
    # the observed axis is offset: the feature at true offset o is read as o + shift
    target = replace(clean, delta_pl=clean.delta_pl + shift)

    result = fit(
        target,
        params,
        free=("delta_offset",),
        options=FitOptions(sample_dt=FIT_DT),
    )

    assert result.delta_offset == pytest.approx(shift, rel=1e-2)
