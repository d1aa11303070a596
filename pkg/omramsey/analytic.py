"""Closed-form approximations used as cross-checks on the propagator.

The Ramsey amplitudes come from adiabatically eliminating the cavity
(alpha follows beta instantly, valid for kappa >> G, |x|). Under that
elimination beta relaxes at the transfer rate Gamma and picks up the phase
y per µs, which is all the fringe structure needs."""

import math
import typing as T

import numpy as np
from scipy.integrate import trapezoid

from .exceptions import DomainError
from .model import transfer_rate
from .types import (
    DetuningGrid,
    Detunings,
    FringeConditions,
    FringeScales,
    GateMode,
    PhysicalParams,
    PulseSchedule,
    RamseyAmplitudes,
    Spectrum,
)

ArrayLike = T.Union[float, np.ndarray]

# Advisory thresholds for tau1 Gamma >~ 1, tau2 Gamma < 1 and T gamma_m << 1.
PUMP_THRESHOLD = 0.5
READOUT_THRESHOLD = 1.0
COHERENCE_THRESHOLD = 0.1

# Factor multiplying G beta_R in alpha_R as written; 1 is the value the
# steady state requires.
WRITTEN_COUPLING_WEIGHT = 2.0


def _build_up(y: ArrayLike, rate: float, duration: ArrayLike) -> np.ndarray:
    """(exp(-(i y + Gamma) tau) - 1) / (i y + Gamma)."""
    z = 1j * np.asarray(y, dtype=float) + rate
    return (np.exp(-z * np.asarray(duration, dtype=float)) - 1) / z


def _drive_ratios(schedule: PulseSchedule) -> T.Tuple[complex, complex]:
    """Both pulse amplitudes relative to the first one."""
    first = complex(schedule.probe_amp)
    norm = first if first != 0 else 1.0
    return first / norm, schedule.second_probe / norm


def _second_pulse_readout(
    params: PhysicalParams,
    schedule: PulseSchedule,
    y: ArrayLike,
    s: ArrayLike,
    coupling_weight: float,
) -> T.Tuple[np.ndarray, np.ndarray]:
    """Normalized (beta_r, alpha_r) a time s into the second pulse."""
    rate = transfer_rate(params)
    half = params.kappa / 2
    first, second = _drive_ratios(schedule)

    phi = np.asarray(y) * (np.asarray(s) + schedule.gap)
    mu = params.gamma_m * schedule.gap / 2 + rate * np.asarray(s)
    stored = _build_up(y, rate, schedule.tau1) * np.exp(-1j * phi - mu) * first
    fresh = _build_up(y, rate, s) * second

    beta_r = params.big_g * (stored + fresh)
    alpha_r = (params.kappa_e / half) * (
        second + coupling_weight * params.big_g * beta_r / half
    )
    return beta_r, alpha_r


def ramsey_amplitudes(
    params: PhysicalParams,
    schedule: PulseSchedule,
    y: float,
    coupling_weight: float = WRITTEN_COUPLING_WEIGHT,
) -> RamseyAmplitudes:
    """Normalized mechanical and optical amplitudes at the end of the second
    pulse.

    beta_r = G [B(tau1) exp(-i phi - mu) + B(tau2)] with
    B(tau) = (exp(-(i y + Gamma) tau) - 1) / (i y + Gamma), and
    alpha_r = (kappa_e / (kappa/2)) (1 + w G beta_r / (kappa/2)). At critical
    coupling kappa_e = kappa/2 and this is (w G beta_r / kappa_e + 1)."""
    beta_r, alpha_r = _second_pulse_readout(
        params, schedule, y, schedule.tau2, coupling_weight
    )
    return RamseyAmplitudes(
        beta_r=complex(beta_r),
        alpha_r=complex(alpha_r),
        phi=y * (schedule.tau2 + schedule.gap),
        mu=params.gamma_m * schedule.gap / 2 + transfer_rate(params) * schedule.tau2,
    )


def steady_omit(params: PhysicalParams, det: Detunings) -> ArrayLike:
    """kappa_e alpha_ss / E_p for a continuous probe. Accepts array-valued
    detunings."""
    x = np.asarray(det.x, dtype=float)
    y = np.asarray(det.y, dtype=float)
    cavity = 1j * x + params.kappa / 2
    mechanics = 1j * y + params.gamma_m / 2
    result = params.kappa_e / (cavity + params.big_g**2 / mechanics)
    return complex(result) if result.ndim == 0 else result


def classic_ramsey(
    rabi_g: ArrayLike, tau: float, delta: ArrayLike, gap: float
) -> T.Tuple[ArrayLike, ArrayLike]:
    """Weak-pulse excitation probabilities (p_s, p_R) of a two-level atom.

    p_s = g^2 tau^2 sinc^2(delta tau / 2), p_R = p_s (cos(delta T) + 1), with
    the unnormalized sinc(z) = sin(z) / z."""
    delta = np.asarray(delta, dtype=float)
    g = np.asarray(rabi_g, dtype=float)
    # np.sinc is the normalized sin(pi z) / (pi z)
    p_s = g**2 * tau**2 * np.sinc(delta * tau / 2 / np.pi) ** 2
    p_r = p_s * (np.cos(delta * gap) + 1)
    if p_s.ndim == 0:
        return float(p_s), float(p_r)
    return p_s, p_r


def fringe_scales(params: PhysicalParams, schedule: PulseSchedule) -> FringeScales:
    rate = transfer_rate(params)
    span = schedule.gap + schedule.tau2
    return FringeScales(
        naive_period=2 * math.pi / span if span > 0 else math.inf,
        mu=params.gamma_m * schedule.gap / 2 + rate * schedule.tau2,
        conditions=FringeConditions(
            pump=schedule.tau1 * rate >= PUMP_THRESHOLD,
            readout=schedule.tau2 * rate < READOUT_THRESHOLD,
            coherence=schedule.gap * params.gamma_m < COHERENCE_THRESHOLD,
        ),
    )


def gated_ramsey_intensity(
    params: PhysicalParams,
    schedule: PulseSchedule,
    y: ArrayLike,
    samples: int = 201,
    coupling_weight: float = 1.0,
) -> ArrayLike:
    """Gate-averaged |alpha_r|^2 from the closed form.

    In second-pair mode the readout time runs over the gate; gate samples
    falling in the free-evolution gap count as zero. In first-pulse mode only
    the first pulse has acted, so the stored term is absent."""
    if samples < 2:
        raise DomainError(f"need >= 2 gate samples (got {samples})")

    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))[:, None]

    if schedule.gate_mode is GateMode.FIRST_PULSE:
        t = np.linspace(schedule.gate_start, schedule.gate_end, samples)
        first, _ = _drive_ratios(schedule)
        half = params.kappa / 2
        beta_r = params.big_g * _build_up(y, transfer_rate(params), t) * first
        alpha_r = (params.kappa_e / half) * (
            first + coupling_weight * params.big_g * beta_r / half
        )
        axis = t
    else:
        onset = schedule.tau1 + schedule.gap
        s = np.linspace(schedule.gate_start - onset, schedule.gate_end - onset, samples)
        _, alpha_r = _second_pulse_readout(
            params, schedule, y, np.clip(s, 0, None), coupling_weight
        )
        alpha_r = np.where(s >= 0, alpha_r, 0)
        axis = s

    power = np.abs(alpha_r) ** 2
    if schedule.probe_amp == 0:
        power = np.zeros_like(power)
    intensity = trapezoid(power, axis, axis=1) / (axis[-1] - axis[0])
    return float(intensity[0]) if scalar else intensity


def analytic_spectrum(
    params: PhysicalParams,
    schedule: PulseSchedule,
    grid: T.Optional[DetuningGrid] = None,
    samples: int = 201,
    coupling_weight: float = 1.0,
) -> Spectrum:
    """Closed-form counterpart of `analysis.sweep` on the same axis."""
    grid = grid if grid is not None else DetuningGrid()
    offsets = grid.offsets()
    intensity = gated_ramsey_intensity(
        params, schedule, -offsets, samples=samples, coupling_weight=coupling_weight
    )
    return Spectrum(
        delta_pl=params.omega_m + offsets,
        intensity=np.asarray(intensity),
        params=params,
        schedule=schedule,
        grid=grid,
    )
