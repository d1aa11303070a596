"""Exact propagation of the linearized sideband amplitudes.

Within a segment the coefficients are constant, so

    d/dt (alpha, beta) = A (alpha, beta) + b,
    A = [[-(i x + kappa/2), -G], [G, -(i y + gamma_m/2)]],  b = (E_p, 0),

is solved in closed form: v(t) = exp(A t) (v0 - v*) + v*, v* = -A^-1 b.
`rk_oracle` integrates the same system with classical RK4 and exists only
to check the closed form."""

import copy
import logging
import math
import typing as T

import numpy as np
from scipy.integrate import trapezoid

from .exceptions import DomainError, NumericalError, ScheduleError, map_exceptions
from .schedule import breakpoints, compile
from .types import (
    TIME_TOLERANCE,
    Detunings,
    PhysicalParams,
    PulseSchedule,
    Segment,
    SystemState,
    Trace,
)

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_DT = 1e-3
# Relative eigenvalue gap below which the Jordan-limit form is used.
DEGENERACY_THRESHOLD = 1e-9
# |q t| below which sinh(q t) / q is replaced by its series.
SERIES_THRESHOLD = 1e-4

exc = map_exceptions(
    {
        np.linalg.LinAlgError: NumericalError,
        FloatingPointError: NumericalError,
    }
)


def system_matrix(det: Detunings, params: PhysicalParams, g_on: bool) -> np.ndarray:
    big_g = params.big_g if g_on else 0.0
    return np.array(
        [
            [-complex(params.kappa / 2, det.x), -big_g],
            [big_g, -complex(params.gamma_m / 2, det.y)],
        ],
        dtype=complex,
    )


class SegmentPropagator:
    __slots__ = [
        "matrix",
        "fixed_point",
        "eigenvalues",
        "eigenvectors",
        "inverse_eigenvectors",
        "degenerate",
    ]

    matrix: np.ndarray
    fixed_point: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: T.Optional[np.ndarray]
    inverse_eigenvectors: T.Optional[np.ndarray]
    degenerate: bool

    def __init__(self, segment: Segment, det: Detunings, params: PhysicalParams):
        self.matrix = system_matrix(det, params, segment.g_on)
        self.fixed_point = self._fixed_point(segment.probe)

        eigenvalues, eigenvectors = np.linalg.eig(self.matrix)
        self.eigenvalues = eigenvalues
        spread = abs(eigenvalues[0] - eigenvalues[1])
        scale = max(abs(eigenvalues[0]), abs(eigenvalues[1]))
        self.degenerate = spread < DEGENERACY_THRESHOLD * scale

        if self.degenerate:
            logger.debug("near-degenerate eigenvalues %s, limit form", eigenvalues)
            self.eigenvectors = None
            self.inverse_eigenvectors = None
        else:
            self.eigenvectors = eigenvectors
            self.inverse_eigenvectors = np.linalg.inv(eigenvectors)

    def _fixed_point(self, probe: complex) -> np.ndarray:
        source = np.array([probe, 0j], dtype=complex)
        # kappa, gamma_m > 0 keep both eigenvalues in the left half-plane,
        # so A is always invertible.
        return -np.linalg.solve(self.matrix, source)

    def for_probe(self, probe: complex) -> "SegmentPropagator":
        """Same matrix and eigenbasis, driven by another probe amplitude."""
        propagator = copy.copy(self)
        propagator.fixed_point = self._fixed_point(probe)
        return propagator

    def evolve(self, v0: np.ndarray, elapsed: np.ndarray) -> np.ndarray:
        """States at each elapsed time (µs from segment start), shape (2, n)."""
        w0 = v0 - self.fixed_point

        if not self.degenerate:
            assert self.eigenvectors is not None
            assert self.inverse_eigenvectors is not None
            modes = self.inverse_eigenvectors @ w0
            phases = np.exp(np.outer(self.eigenvalues, elapsed))
            evolved = self.eigenvectors @ (modes[:, None] * phases)
            return evolved + self.fixed_point[:, None]

        # exp(A t) = exp(m t) [cosh(q t) I + sinh(q t)/q (A - m I)]
        a = self.matrix
        m = (a[0, 0] + a[1, 1]) / 2
        q = np.sqrt(((a[0, 0] - a[1, 1]) / 2) ** 2 + a[0, 1] * a[1, 0] + 0j)
        qt = q * elapsed
        sinhc = elapsed * (1 + qt**2 / 6 + qt**4 / 120)
        large = np.abs(qt) >= SERIES_THRESHOLD
        sinhc[large] = np.sinh(qt[large]) / q
        nilpotent = (a - m * np.eye(2)) @ w0
        evolved = np.exp(m * elapsed) * (
            np.cosh(qt) * w0[:, None] + sinhc * nilpotent[:, None]
        )
        return evolved + self.fixed_point[:, None]


@exc
def propagate_segment(
    state: SystemState, seg: Segment, det: Detunings, params: PhysicalParams
) -> SystemState:
    if seg.duration == 0:
        return state

    propagator = SegmentPropagator(seg, det, params)
    alpha, beta = propagator.evolve(state.as_vector(), np.array([seg.duration]))[:, 0]
    return SystemState(complex(alpha), complex(beta), state.t + seg.duration)


def _derivative(
    alpha: complex,
    beta: complex,
    a: complex,
    d: complex,
    big_g: float,
    probe: complex,
) -> T.Tuple[complex, complex]:
    return a * alpha - big_g * beta + probe, big_g * alpha + d * beta


def rk_oracle(
    state: SystemState,
    seg: Segment,
    det: Detunings,
    params: PhysicalParams,
    dt: float,
) -> SystemState:
    """Fixed-step classical RK4; the last step is shortened to land on the
    segment boundary."""
    if not dt > 0:
        raise DomainError(f"dt must be > 0 (got {dt})")

    a = -complex(params.kappa / 2, det.x)
    d = -complex(params.gamma_m / 2, det.y)
    big_g = params.big_g if seg.g_on else 0.0
    probe = complex(seg.probe)

    alpha, beta = state.alpha, state.beta
    steps = max(1, math.ceil(seg.duration / dt - 1e-9)) if seg.duration > 0 else 0
    elapsed = 0.0
    for k in range(steps):
        h = dt if k < steps - 1 else seg.duration - elapsed
        k1a, k1b = _derivative(alpha, beta, a, d, big_g, probe)
        k2a, k2b = _derivative(
            alpha + h / 2 * k1a, beta + h / 2 * k1b, a, d, big_g, probe
        )
        k3a, k3b = _derivative(
            alpha + h / 2 * k2a, beta + h / 2 * k2b, a, d, big_g, probe
        )
        k4a, k4b = _derivative(alpha + h * k3a, beta + h * k3b, a, d, big_g, probe)
        alpha += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        beta += h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
        elapsed += h

    return SystemState(alpha, beta, state.t + seg.duration)


@exc
def run_segments(
    segments: T.Sequence[Segment],
    det: Detunings,
    params: PhysicalParams,
    sample_dt: float = DEFAULT_SAMPLE_DT,
    breakpoints: T.Iterable[float] = (),
    initial: T.Optional[SystemState] = None,
    dense_window: T.Optional[T.Tuple[float, float]] = None,
) -> Trace:
    """Chain exact segment propagation and record samples.

    Samples are uniform (step <= sample_dt) between consecutive breakpoints;
    segment boundaries and the given breakpoints are always samples. With
    `dense_window`, intervals outside the window keep only their endpoints."""
    if not sample_dt > 0:
        raise DomainError(f"sample_dt must be > 0 (got {sample_dt})")

    state = initial if initial is not None else SystemState()
    cuts = sorted(breakpoints)

    times = [np.array([state.t])]
    alphas = [np.array([state.alpha], dtype=complex)]
    betas = [np.array([state.beta], dtype=complex)]

    # one eigenbasis per coupling state; only the fixed point follows the probe
    bases: dict[bool, SegmentPropagator] = {}

    start = state.t
    for segment in segments:
        if segment.duration == 0:
            continue
        end = start + segment.duration
        nodes = (
            [start]
            + [c for c in cuts if start + TIME_TOLERANCE < c < end - TIME_TOLERANCE]
            + [end]
        )

        if segment.g_on in bases:
            propagator = bases[segment.g_on].for_probe(segment.probe)
        else:
            propagator = SegmentPropagator(segment, det, params)
            bases[segment.g_on] = propagator
        v0 = np.array([alphas[-1][-1], betas[-1][-1]], dtype=complex)
        for left, right in zip(nodes[:-1], nodes[1:]):
            dense = dense_window is None or (
                right > dense_window[0] + TIME_TOLERANCE
                and left < dense_window[1] - TIME_TOLERANCE
            )
            count = max(1, math.ceil((right - left) / sample_dt - 1e-9)) if dense else 1
            t = np.linspace(left, right, count + 1)[1:]
            v = propagator.evolve(v0, t - start)
            times.append(t)
            alphas.append(v[0])
            betas.append(v[1])

        start = end

    return Trace(
        t=np.concatenate(times),
        alpha=np.concatenate(alphas),
        beta=np.concatenate(betas),
        sample_dt=sample_dt,
    )


def run_schedule(
    schedule: PulseSchedule,
    det: Detunings,
    params: PhysicalParams,
    sample_dt: float = DEFAULT_SAMPLE_DT,
    initial: T.Optional[SystemState] = None,
    gate_only: bool = False,
) -> Trace:
    """Trace of the whole schedule from the unexcited state (alpha = beta = 0).

    `gate_only` samples densely inside the detection gate only, which is all
    `gated_intensity` needs."""
    return run_segments(
        compile(schedule),
        det,
        params,
        sample_dt=sample_dt,
        breakpoints=breakpoints(schedule),
        initial=initial,
        dense_window=(schedule.gate_start, schedule.gate_end) if gate_only else None,
    )


def gated_intensity(
    trace: Trace, schedule: PulseSchedule, params: PhysicalParams
) -> float:
    """Gate-averaged |kappa_e alpha|^2 / |E_p|^2 (trapezoidal rule)."""
    start, end = schedule.gate_start, schedule.gate_end
    if start < trace.t[0] - TIME_TOLERANCE or end > trace.t[-1] + TIME_TOLERANCE:
        raise ScheduleError(
            f"gate [{start}, {end}] lies outside the trace "
            f"[{trace.t[0]}, {trace.t[-1]}]"
        )

    amplitude = abs(schedule.probe_amp)
    if amplitude == 0:
        return 0.0

    inside = (trace.t >= start - TIME_TOLERANCE) & (trace.t <= end + TIME_TOLERANCE)
    t = trace.t[inside]
    if len(t) < 2:
        raise ScheduleError("the gate window holds fewer than two trace samples")

    power = np.abs(params.kappa_e * trace.alpha[inside]) ** 2 / amplitude**2
    return float(trapezoid(power, t) / (t[-1] - t[0]))
