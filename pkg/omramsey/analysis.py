"""Detuning sweeps, fringe extraction, parameter scans and spectrum fits."""

import logging
import math
import typing as T
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np
from scipy.optimize import OptimizeResult, minimize
from scipy.signal import argrelextrema

from .axes import get_axis
from .exceptions import FitError, NumericalError, ParameterError, map_exceptions
from .model import check_regime, detunings
from .propagator import DEFAULT_SAMPLE_DT, gated_intensity, run_schedule
from .types import (
    DetuningGrid,
    FitResult,
    FringeReport,
    PhysicalParams,
    PulseSchedule,
    ScanAxis,
    ScanPoint,
    Spectrum,
)

logger = logging.getLogger(__name__)

FREE_PARAMETERS = ("big_g", "kappa", "gamma_m", "delta_offset")
# Points per fringe period below which minima positions are unreliable.
MIN_POINTS_PER_PERIOD = 10

exc = map_exceptions({FloatingPointError: NumericalError})


def _gated_point(
    params: PhysicalParams,
    schedule: PulseSchedule,
    sample_dt: float,
    delta_pl: float,
) -> float:
    trace = run_schedule(
        schedule, detunings(params, delta_pl), params, sample_dt, gate_only=True
    )
    return gated_intensity(trace, schedule, params)


def evaluate(
    params: PhysicalParams,
    schedule: PulseSchedule,
    delta_pl: np.ndarray,
    sample_dt: float,
    workers: int,
) -> np.ndarray:
    """Gated intensity at each probe-drive offset in `delta_pl`, in order."""
    point = partial(_gated_point, params, schedule, sample_dt)
    if workers <= 1:
        return np.fromiter(map(point, delta_pl), dtype=float, count=len(delta_pl))

    # map() keeps input order, so the result is independent of the pool size.
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return np.fromiter(
            executor.map(point, delta_pl), dtype=float, count=len(delta_pl)
        )


@exc
def sweep(
    params: PhysicalParams,
    schedule: PulseSchedule,
    grid: T.Optional[DetuningGrid] = None,
    sample_dt: float = DEFAULT_SAMPLE_DT,
    workers: int = 1,
) -> Spectrum:
    """Gated intensity at every probe-drive offset of the grid."""
    grid = grid if grid is not None else DetuningGrid()
    check_regime(params)

    delta_pl = params.omega_m + grid.offsets()
    logger.info(
        "sweeping %d detunings (tau1=%g, T=%g, tau2=%g us) on %d worker(s)",
        grid.points,
        schedule.tau1,
        schedule.gap,
        schedule.tau2,
        workers,
    )
    intensity = evaluate(params, schedule, delta_pl, sample_dt, workers)
    return Spectrum(
        delta_pl=delta_pl,
        intensity=intensity,
        params=params,
        schedule=schedule,
        grid=grid,
    )


def _refine(x: np.ndarray, y: np.ndarray, i: int) -> float:
    """Vertex of the parabola through the three points around index i."""
    if i == 0 or i == len(x) - 1:
        return float(x[i])

    left, mid, right = y[i - 1], y[i], y[i + 1]
    curvature = left - 2 * mid + right
    if curvature <= 0:
        return float(x[i])

    shift = min(max(0.5 * (left - right) / curvature, -0.5), 0.5)
    return float(x[i] + shift * (x[i + 1] - x[i - 1]) / 2)


def _visibility(intensity: np.ndarray, centre: int, maxima: np.ndarray) -> float:
    left = maxima[maxima < centre]
    right = maxima[maxima > centre]
    sides = ([intensity[left[-1]]] if len(left) else []) + (
        [intensity[right[0]]] if len(right) else []
    )
    if not sides:
        return 0.0

    high = float(np.mean(sides))
    low = float(intensity[centre])
    if high + low <= 0:
        return 0.0
    return min(max((high - low) / (high + low), 0.0), 1.0)


def extract(spectrum: Spectrum, band: T.Optional[float] = None) -> FringeReport:
    """Fringe observables on the offset axis.

    `band` is the full width (rad/µs) around the global minimum whose minima
    enter the period; it defaults to the whole spectrum."""
    offsets = spectrum.offsets
    intensity = spectrum.intensity

    centre = int(np.argmin(intensity))
    central_dip = _refine(offsets, intensity, centre)

    minima_idx = argrelextrema(intensity, np.less)[0]
    maxima_idx = argrelextrema(intensity, np.greater)[0]
    minima = tuple(_refine(offsets, intensity, i) for i in minima_idx)

    width = band if band is not None else float(offsets[-1] - offsets[0])
    if not width > 0:
        raise ParameterError(f"band must be > 0 (got {band})")

    in_band = sorted(m for m in minima if abs(m - central_dip) <= width / 2)
    period = float(np.mean(np.diff(in_band))) if len(in_band) >= 2 else None

    if period is not None:
        if spectrum.step > period / MIN_POINTS_PER_PERIOD:
            logger.warning(
                "grid step %.3g rad/us is coarse for a fringe period of %.3g rad/us",
                spectrum.step,
                period,
            )
        if band is not None and band < 3 * period:
            logger.warning("band %.3g rad/us spans fewer than 3 fringe periods", band)

    return FringeReport(
        central_dip=central_dip,
        minima=minima,
        period=period,
        visibility=_visibility(intensity, centre, maxima_idx),
    )


def default_band(schedule: PulseSchedule, grid: DetuningGrid) -> float:
    """Three naive fringe periods, capped at the grid span."""
    return min(grid.span, 3 * 2 * math.pi / (schedule.gap + schedule.tau2))


def scan(
    params: PhysicalParams,
    schedule: PulseSchedule,
    axis: T.Union[str, ScanAxis],
    values: T.Sequence[float],
    grid: T.Optional[DetuningGrid] = None,
    sample_dt: float = DEFAULT_SAMPLE_DT,
    workers: int = 1,
    band: T.Optional[float] = None,
) -> list[ScanPoint]:
    """Sweep and extract once per axis value, in the given order."""
    if not values:
        raise ParameterError("scan needs at least one value")

    axis = get_axis(axis) if isinstance(axis, str) else axis
    grid = grid if grid is not None else DetuningGrid()

    points = []
    for value in values:
        point_params, point_schedule = axis.apply(params, schedule, value)
        logger.info("scan %s = %g %s", axis.name, axis.display(value), axis.unit)
        spectrum = sweep(point_params, point_schedule, grid, sample_dt, workers)
        width = band if band is not None else default_band(point_schedule, grid)
        points.append(ScanPoint(value, spectrum, extract(spectrum, width)))

    return points


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 2000
    xatol: float = 1e-6
    fatol: float = 1e-12
    stall_iterations: int = 50
    stall_tolerance: float = 1e-12
    jitter: float = 0.05
    seed: int = 0
    sample_dt: float = DEFAULT_SAMPLE_DT
    workers: int = 1

    def __post_init__(self):
        if self.max_iter < 1:
            raise ParameterError(f"max_iter must be >= 1 (got {self.max_iter})")
        if not 0 <= self.jitter < 1:
            raise ParameterError(f"jitter must lie in [0, 1) (got {self.jitter})")
        if self.stall_iterations < 1:
            raise ParameterError("stall_iterations must be >= 1")


class _StallMonitor:
    """Stops the simplex once the best residual stops improving."""

    __slots__ = ["window", "tolerance", "best", "since", "iterations", "stalled"]

    def __init__(self, window: int, tolerance: float):
        self.window = window
        self.tolerance = tolerance
        self.best = math.inf
        self.since = 0
        self.iterations = 0
        self.stalled = False

    def __call__(self, intermediate_result: OptimizeResult):
        self.iterations += 1
        if self.best - intermediate_result.fun > self.tolerance:
            self.best = intermediate_result.fun
            self.since = 0
        else:
            self.since += 1

        if self.since >= self.window:
            self.stalled = True
            raise StopIteration


class _FitProblem:
    __slots__ = ["observed", "initial", "free", "options"]

    def __init__(
        self,
        observed: Spectrum,
        initial: PhysicalParams,
        free: T.Tuple[str, ...],
        options: FitOptions,
    ):
        self.observed = observed
        self.initial = initial
        self.free = free
        self.options = options

    def start(self) -> np.ndarray:
        theta = []
        for name in self.free:
            if name == "delta_offset":
                theta.append(0.0)
                continue
            value = getattr(self.initial, name)
            if not value > 0:
                raise FitError(f"initial {name} must be > 0 to fit it (got {value})")
            theta.append(math.log(value))
        return np.array(theta)

    def simplex(self, start: np.ndarray) -> np.ndarray:
        rng = np.random.default_rng(self.options.seed)
        jitter = self.options.jitter
        vertices = [start]
        for k, name in enumerate(self.free):
            step = 10 * self.observed.step if name == "delta_offset" else 0.1
            vertex = start.copy()
            vertex[k] += step * rng.uniform(1 - jitter, 1 + jitter)
            vertices.append(vertex)
        return np.array(vertices)

    def unpack(self, theta: np.ndarray) -> T.Tuple[PhysicalParams, float]:
        params, offset = self.initial, 0.0
        for name, value in zip(self.free, theta):
            if name == "delta_offset":
                offset = float(value)
            elif name == "kappa":
                params = params.with_kappa(math.exp(value))
            else:
                params = replace(params, **{name: math.exp(value)})
        return params, offset

    def model(self, theta: np.ndarray) -> np.ndarray:
        params, offset = self.unpack(theta)
        return evaluate(
            params,
            self.observed.schedule,
            self.observed.delta_pl - offset,
            self.options.sample_dt,
            self.options.workers,
        )

    def __call__(self, theta: np.ndarray) -> float:
        try:
            residual = self.model(theta) - self.observed.intensity
        except ParameterError:
            # exp() of a runaway log-parameter can leave the valid range
            return math.inf
        return float(np.sum(residual**2))


@exc
def fit(
    observed: Spectrum,
    initial: PhysicalParams,
    free: T.Iterable[str] = ("big_g",),
    options: T.Optional[FitOptions] = None,
) -> FitResult:
    """Least-squares fit of the sweep model to an observed spectrum.

    Rates are searched in log space, `delta_offset` linearly, with a seeded,
    jittered Nelder-Mead simplex. The schedule is taken from `observed`."""
    options = options if options is not None else FitOptions()
    free = tuple(free)

    if not free:
        raise FitError("no free parameters given")
    unknown = [name for name in free if name not in FREE_PARAMETERS]
    if unknown:
        raise FitError(
            f"cannot fit {', '.join(unknown)} "
            f"(choose from {', '.join(FREE_PARAMETERS)})"
        )
    if len(set(free)) != len(free):
        raise FitError("free parameters must not repeat")
    if len(observed.delta_pl) <= len(free):
        raise FitError(
            f"{len(observed.delta_pl)} observed points cannot constrain "
            f"{len(free)} free parameters"
        )

    problem = _FitProblem(observed, initial, free, options)
    start = problem.start()
    monitor = _StallMonitor(options.stall_iterations, options.stall_tolerance)

    logger.info("fitting %s to %d points", ", ".join(free), len(observed.delta_pl))
    result = minimize(
        problem,
        x0=start,
        method="Nelder-Mead",
        callback=monitor,
        options={
            "initial_simplex": problem.simplex(start),
            "xatol": options.xatol,
            "fatol": options.fatol,
            "maxiter": options.max_iter,
        },
    )

    converged = bool(result.success) or monitor.stalled
    if not converged:
        logger.warning("fit stopped without converging: %s", result.message)

    params_hat, offset = problem.unpack(result.x)
    return FitResult(
        params_hat=params_hat,
        residual=math.sqrt(result.fun / len(observed.delta_pl)),
        iterations=int(result.nit),
        converged=converged,
        free=free,
        delta_offset=offset,
        evaluations=int(result.nfev),
    )
