import numpy as np
import pytest

from omramsey.model import detunings
from omramsey.types import DetuningGrid, Detunings, PhysicalParams, PulseSchedule
from omramsey.utils import hz_to_rad_per_us


@pytest.fixture
def params() -> PhysicalParams:
    return PhysicalParams.from_frequencies(
        kappa=30e6, gamma_m=20e3, omega_m=94e6, big_g=0.58e6
    )


@pytest.fixture
def schedule() -> PulseSchedule:
    return PulseSchedule.second_pair(tau1=4.0, gap=4.0, tau2=1.0, gate_len=1.0)


@pytest.fixture
def det(params: PhysicalParams) -> Detunings:
    return detunings(params, params.omega_m + hz_to_rad_per_us(75e3))


@pytest.fixture
def small_grid() -> DetuningGrid:
    return DetuningGrid(span=hz_to_rad_per_us(0.6e6), points=41)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def random_params(rng: np.random.Generator) -> PhysicalParams:
    """A draw in the magnitude range of the published parameter sets."""
    return PhysicalParams.from_frequencies(
        kappa=rng.uniform(10e6, 50e6),
        gamma_m=rng.uniform(5e3, 50e3),
        omega_m=94e6,
        big_g=rng.uniform(0.1e6, 1e6),
        kappa_e=None,
    )


def random_detunings(rng: np.random.Generator, params: PhysicalParams) -> Detunings:
    offset = hz_to_rad_per_us(rng.uniform(-0.6e6, 0.6e6))
    return detunings(params, params.omega_m + offset)
