import abc
import cmath
import enum
import math
import typing as T
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ParameterError, ScheduleError, collect_violations
from .utils import hz_to_rad_per_us

# Relative regime threshold for gamma_m << kappa.
RAMSEY_REGIME_RATIO = 1e-2
# Absolute tolerance (µs) for gate and schedule edge comparisons.
TIME_TOLERANCE = 1e-9


class GateMode(str, enum.Enum):
    SECOND_PAIR = "second_pair"
    FIRST_PULSE = "first_pulse"


@dataclass(frozen=True)
class PhysicalParams:
    """Cavity and mechanical rates in rad/µs.

    `delta` is the effective cavity-drive detuning with the static
    radiation-pressure shift already folded in."""

    kappa: float
    kappa_e: float
    kappa_i: float
    gamma_m: float
    omega_m: float
    delta: float
    big_g: float

    def __post_init__(self):
        values = [
            self.kappa,
            self.kappa_e,
            self.kappa_i,
            self.gamma_m,
            self.omega_m,
            self.delta,
            self.big_g,
        ]
        violations = collect_violations(
            [
                (all(math.isfinite(v) for v in values), "all rates must be finite"),
                (self.kappa > 0, f"kappa must be > 0 (got {self.kappa})"),
                (self.kappa_e >= 0, f"kappa_e must be >= 0 (got {self.kappa_e})"),
                (self.kappa_i >= 0, f"kappa_i must be >= 0 (got {self.kappa_i})"),
                (
                    math.isclose(
                        self.kappa, self.kappa_e + self.kappa_i, rel_tol=1e-12
                    ),
                    "kappa must equal kappa_e + kappa_i",
                ),
                (self.gamma_m > 0, f"gamma_m must be > 0 (got {self.gamma_m})"),
                (self.omega_m > 0, f"omega_m must be > 0 (got {self.omega_m})"),
                (self.big_g >= 0, f"big_g must be >= 0 (got {self.big_g})"),
            ]
        )
        if violations:
            raise ParameterError(
                "invalid physical parameters: " + "; ".join(violations)
            )

    @classmethod
    def create(
        cls,
        kappa: float,
        gamma_m: float,
        omega_m: float,
        big_g: float,
        kappa_e: T.Optional[float] = None,
        delta: T.Optional[float] = None,
    ) -> "PhysicalParams":
        """Build from the total decay; kappa_e defaults to critical coupling
        and delta to the red-sideband lock (delta = omega_m)."""
        if kappa_e is None:
            kappa_e = kappa / 2
        return cls(
            kappa=kappa,
            kappa_e=kappa_e,
            kappa_i=kappa - kappa_e,
            gamma_m=gamma_m,
            omega_m=omega_m,
            delta=omega_m if delta is None else delta,
            big_g=big_g,
        )

    @classmethod
    def from_frequencies(
        cls,
        kappa: float,
        gamma_m: float,
        omega_m: float,
        big_g: float,
        kappa_e: T.Optional[float] = None,
        delta: T.Optional[float] = None,
    ) -> "PhysicalParams":
        """Same as `create`, but every argument is an ordinary frequency in Hz."""
        return cls.create(
            kappa=hz_to_rad_per_us(kappa),
            gamma_m=hz_to_rad_per_us(gamma_m),
            omega_m=hz_to_rad_per_us(omega_m),
            big_g=hz_to_rad_per_us(big_g),
            kappa_e=None if kappa_e is None else hz_to_rad_per_us(kappa_e),
            delta=None if delta is None else hz_to_rad_per_us(delta),
        )

    def with_kappa(self, kappa: float) -> "PhysicalParams":
        """Change the total decay while holding the kappa_e / kappa ratio."""
        kappa_e = kappa * (self.kappa_e / self.kappa)
        return replace(self, kappa=kappa, kappa_e=kappa_e, kappa_i=kappa - kappa_e)

    @property
    def ramsey_valid(self) -> bool:
        return self.gamma_m < self.kappa * RAMSEY_REGIME_RATIO

    @property
    def critically_coupled(self) -> bool:
        return math.isclose(self.kappa_e, self.kappa_i, rel_tol=1e-9)


@dataclass(frozen=True)
class Detunings:
    delta_pl: float
    x: float
    y: float


@dataclass(frozen=True)
class PumpState:
    alpha0: complex
    beta0: T.Optional[complex] = None


@dataclass(frozen=True)
class Segment:
    duration: float
    g_on: bool
    probe: complex

    def __post_init__(self):
        if not self.duration >= 0:
            raise ScheduleError(f"segment duration must be >= 0 (got {self.duration})")


@dataclass(frozen=True)
class PulseSchedule:
    """Two pulse pairs separated by a free-evolution gap, times in µs.

    In `second_pair` mode the gate's trailing edge defines tau2. `tail`
    extends the physical second pulse past the gate without changing
    what the gate sees."""

    tau1: float
    gap: float
    tau2: float
    gate_start: float
    gate_len: float
    probe_amp: complex = 1.0
    pulse2_phase: float = 0.0
    probe_amp2: T.Optional[complex] = None
    gate_mode: GateMode = GateMode.SECOND_PAIR
    tail: float = 0.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "gate_mode", GateMode(self.gate_mode))
        except ValueError:
            raise ScheduleError(f"unknown gate mode {self.gate_mode!r}")

        amps = [self.probe_amp] + ([] if self.probe_amp2 is None else [self.probe_amp2])
        checks = [
            (self.tau1 > 0, f"tau1 must be > 0 (got {self.tau1})"),
            (self.tau2 > 0, f"tau2 must be > 0 (got {self.tau2})"),
            (self.gap >= 0, f"gap must be >= 0 (got {self.gap})"),
            (self.gate_len > 0, f"gate_len must be > 0 (got {self.gate_len})"),
            (self.tail >= 0, f"tail must be >= 0 (got {self.tail})"),
            (
                all(cmath.isfinite(complex(a)) for a in amps),
                "probe amplitudes must be finite",
            ),
            (math.isfinite(self.pulse2_phase), "pulse2_phase must be finite"),
            (
                self.gate_start >= -TIME_TOLERANCE
                and self.gate_end <= self.horizon + TIME_TOLERANCE,
                f"gate [{self.gate_start}, {self.gate_end}] must lie inside "
                f"[0, {self.horizon}]",
            ),
        ]
        if self.gate_mode is GateMode.SECOND_PAIR:
            checks.append(
                (
                    abs(self.gate_end - self.second_pair_end) <= TIME_TOLERANCE,
                    f"gate trailing edge {self.gate_end} must equal "
                    f"tau1 + gap + tau2 = {self.second_pair_end}",
                )
            )
        else:
            checks.append(
                (
                    self.gate_end <= self.tau1 + TIME_TOLERANCE,
                    f"gate trailing edge {self.gate_end} must not exceed "
                    f"tau1 = {self.tau1}",
                )
            )

        violations = collect_violations(checks)
        if violations:
            raise ScheduleError("invalid pulse schedule: " + "; ".join(violations))

    @classmethod
    def second_pair(
        cls,
        tau1: float,
        gap: float,
        tau2: float,
        gate_len: float = 1.0,
        probe_amp: complex = 1.0,
        pulse2_phase: float = 0.0,
        probe_amp2: T.Optional[complex] = None,
        tail: float = 0.0,
    ) -> "PulseSchedule":
        return cls(
            tau1=tau1,
            gap=gap,
            tau2=tau2,
            gate_start=tau1 + gap + tau2 - gate_len,
            gate_len=gate_len,
            probe_amp=probe_amp,
            pulse2_phase=pulse2_phase,
            probe_amp2=probe_amp2,
            tail=tail,
        )

    @property
    def second_pair_end(self) -> float:
        return self.tau1 + self.gap + self.tau2

    @property
    def horizon(self) -> float:
        return self.second_pair_end + self.tail

    @property
    def gate_end(self) -> float:
        return self.gate_start + self.gate_len

    @property
    def second_probe(self) -> complex:
        amp = self.probe_amp if self.probe_amp2 is None else self.probe_amp2
        return complex(amp) * cmath.exp(1j * self.pulse2_phase)


@dataclass(frozen=True)
class SystemState:
    alpha: complex = 0j
    beta: complex = 0j
    t: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)


@dataclass(frozen=True, eq=False)
class Trace:
    """Dense samples of (alpha, beta); arrays share the time axis `t` (µs)."""

    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    sample_dt: float

    def __post_init__(self):
        if not (len(self.t) == len(self.alpha) == len(self.beta)):
            raise ParameterError("trace arrays must have equal length")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ParameterError("trace times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def samples(self) -> list[T.Tuple[float, SystemState]]:
        return [
            (float(t), SystemState(complex(a), complex(b), float(t)))
            for t, a, b in zip(self.t, self.alpha, self.beta)
        ]

    def rows(self) -> T.Iterator[T.Tuple[float, float, float, float, float]]:
        """(t_us, re_alpha, im_alpha, re_beta, im_beta) per sample."""
        for t, a, b in zip(self.t, self.alpha, self.beta):
            yield float(t), float(a.real), float(a.imag), float(b.real), float(b.imag)

    @property
    def final(self) -> SystemState:
        return SystemState(
            complex(self.alpha[-1]), complex(self.beta[-1]), float(self.t[-1])
        )


@dataclass(frozen=True)
class RamseyAmplitudes:
    beta_r: complex
    alpha_r: complex
    phi: float
    mu: float


@dataclass(frozen=True)
class FringeConditions:
    pump: bool  # tau1 * Gamma >~ 1
    readout: bool  # tau2 * Gamma < 1
    coherence: bool  # T * gamma_m << 1

    @property
    def all(self) -> bool:
        return self.pump and self.readout and self.coherence


@dataclass(frozen=True)
class FringeScales:
    naive_period: float
    mu: float
    conditions: FringeConditions


@dataclass(frozen=True)
class DetuningGrid:
    """Probe-drive offsets relative to the mechanical sideband, rad/µs.

    Grid point k sits at delta_pl = omega_m + offset_k, i.e. offset = -y."""

    center: float = 0.0
    span: float = field(default_factory=lambda: hz_to_rad_per_us(1.2e6))
    points: int = 2001

    def __post_init__(self):
        violations = collect_violations(
            [
                (self.points >= 2, f"grid needs >= 2 points (got {self.points})"),
                (self.span > 0, f"grid span must be > 0 (got {self.span})"),
                (math.isfinite(self.center), "grid center must be finite"),
            ]
        )
        if violations:
            raise ParameterError("invalid detuning grid: " + "; ".join(violations))

    @property
    def step(self) -> float:
        return self.span / (self.points - 1)

    def offsets(self) -> np.ndarray:
        return np.linspace(
            self.center - self.span / 2, self.center + self.span / 2, self.points
        )


@dataclass(frozen=True, eq=False)
class Spectrum:
    delta_pl: np.ndarray
    intensity: np.ndarray
    params: PhysicalParams
    schedule: PulseSchedule
    grid: T.Optional[DetuningGrid] = None

    def __post_init__(self):
        violations = collect_violations(
            [
                (len(self.delta_pl) >= 2, "spectrum needs >= 2 points"),
                (
                    len(self.delta_pl) == len(self.intensity),
                    "detuning and intensity arrays differ in length",
                ),
                (
                    bool(np.all(np.diff(self.delta_pl) > 0)),
                    "detuning grid must be strictly increasing",
                ),
                (
                    bool(np.all(np.isfinite(self.intensity))),
                    "intensities must be finite",
                ),
                (bool(np.all(self.intensity >= 0)), "intensities must be >= 0"),
            ]
        )
        if violations:
            raise ParameterError("invalid spectrum: " + "; ".join(violations))

    @property
    def points(self) -> list[T.Tuple[float, float]]:
        return [(float(d), float(i)) for d, i in zip(self.delta_pl, self.intensity)]

    @property
    def offsets(self) -> np.ndarray:
        return self.delta_pl - self.params.omega_m

    @property
    def y(self) -> np.ndarray:
        return -self.offsets

    @property
    def step(self) -> float:
        return float(np.min(np.diff(self.delta_pl)))


@dataclass(frozen=True)
class FringeReport:
    """Fringe observables on the offset axis (delta_pl - omega_m), rad/µs."""

    central_dip: float
    minima: T.Tuple[float, ...]
    period: T.Optional[float]
    visibility: float

    @property
    def has_fringes(self) -> bool:
        return self.period is not None


@dataclass(frozen=True)
class FitResult:
    params_hat: PhysicalParams
    residual: float
    iterations: int
    converged: bool
    free: T.Tuple[str, ...] = ()
    delta_offset: float = 0.0
    evaluations: int = 0


@dataclass(frozen=True)
class ScanPoint:
    value: float
    spectrum: Spectrum
    report: FringeReport


class ScanAxis(abc.ABC):
    name: T.ClassVar[str]
    unit: T.ClassVar[str]

    @abc.abstractmethod
    def apply(
        self, params: PhysicalParams, schedule: PulseSchedule, value: float
    ) -> T.Tuple[PhysicalParams, PulseSchedule]:
        ...

    @abc.abstractmethod
    def display(self, value: float) -> float:
        """Value in the axis' reporting unit."""
        ...

    @abc.abstractmethod
    def parse(self, value: T.Any) -> float:
        """Internal value from a scenario entry such as "2 us" or "10 kHz"."""
        ...
