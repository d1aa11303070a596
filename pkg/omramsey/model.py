"""Physical parameters, derived rates and the pump-amplitude chain.

Everything in the internal unit system (µs, rad/µs) except the SI helpers
`power_to_amplitude`, `single_photon_coupling` and `carrier_from_wavelength`,
which take and return SI quantities. `amplitude_per_us` bridges the two."""

import logging
import math
import typing as T

import scipy.constants

from .exceptions import DomainError
from .types import Detunings, PhysicalParams, PumpState

logger = logging.getLogger(__name__)

# CODATA 2018, as shipped by scipy.constants.
HBAR = scipy.constants.hbar


def transfer_rate(params: PhysicalParams) -> float:
    """Photon-phonon transfer rate Gamma = 2 G^2 / kappa + gamma_m / 2."""
    return 2 * params.big_g**2 / params.kappa + params.gamma_m / 2


def detunings(params: PhysicalParams, delta_pl: float) -> Detunings:
    return Detunings(
        delta_pl=delta_pl,
        x=params.delta - delta_pl,
        y=params.omega_m - delta_pl,
    )


def power_to_amplitude(power: float, carrier: float, kappa: float) -> float:
    """E = sqrt(kappa P / (hbar omega)) for P in W, carrier and kappa in rad/s."""
    if power < 0:
        raise DomainError(f"power must be >= 0 (got {power})")
    if carrier <= 0 or kappa <= 0:
        raise DomainError("carrier frequency and kappa must be > 0")
    return math.sqrt(kappa * power / (HBAR * carrier))


def carrier_from_wavelength(wavelength: float) -> float:
    """Angular optical frequency (rad/s) of a vacuum wavelength in m."""
    if wavelength <= 0:
        raise DomainError(f"wavelength must be > 0 (got {wavelength})")
    return 2 * math.pi * scipy.constants.c / wavelength


def single_photon_coupling(
    omega_c: float, cavity_length: float, eff_mass: float, omega_m: float
) -> float:
    """g = (omega_c / L) sqrt(hbar / (m omega_m)), SI in and out (rad/s)."""
    for name, value in [
        ("omega_c", omega_c),
        ("cavity_length", cavity_length),
        ("eff_mass", eff_mass),
        ("omega_m", omega_m),
    ]:
        if not value > 0:
            raise DomainError(f"{name} must be > 0 (got {value})")
    return omega_c / cavity_length * math.sqrt(HBAR / (eff_mass * omega_m))


def amplitude_per_us(amplitude_per_s: float) -> float:
    """Convert a drive amplitude from sqrt(photons)/s to sqrt(photons)/µs."""
    return amplitude_per_s * 1e-6


def steady_pump(
    drive_amp: complex, params: PhysicalParams, g: T.Optional[float] = None
) -> PumpState:
    """Steady intracavity pump alpha0 and, when g is given, the static
    displacement beta0. drive_amp and g are in the internal unit system."""
    if not math.isfinite(abs(drive_amp)):
        raise DomainError("drive amplitude must be finite")

    alpha0 = complex(drive_amp) / complex(params.kappa / 2, params.delta)
    beta0 = None
    if g is not None:
        beta0 = g * abs(alpha0) ** 2 / complex(params.omega_m, -params.gamma_m / 2)
    return PumpState(alpha0=alpha0, beta0=beta0)


def pump_shift(alpha0: complex, g: float, omega_m: float) -> float:
    """Static radiation-pressure shift 2 |alpha0|^2 g^2 / omega_m.

    Reporting helper only: `PhysicalParams.delta` is taken to include it."""
    return 2 * abs(alpha0) ** 2 * g**2 / omega_m


def enhanced_coupling(alpha0: complex, g: float) -> float:
    """Driving-enhanced coupling G = |alpha0| g."""
    return abs(alpha0) * g


def check_regime(params: PhysicalParams) -> bool:
    if not params.ramsey_valid:
        logger.warning(
            "gamma_m = %.4g rad/us is not << kappa = %.4g rad/us; "
            "Ramsey fringes may not be resolvable",
            params.gamma_m,
            params.kappa,
        )
    return params.ramsey_valid
