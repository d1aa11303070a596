"""Scenario files: TOML documents with unit-suffixed quantities.

    [physical]
    kappa = "30 MHz"
    gamma_m = "20 kHz"
    omega_m = "94 MHz"
    big_g = "0.58 MHz"

    [schedule]
    tau1 = "4 us"
    gap = "4 us"
    tau2 = "1 us"

Frequencies are ordinary frequencies and become rad/µs here; times become
µs. Every problem found is collected into one `ScenarioError`."""

import csv
import importlib.resources
import logging
import re
import typing as T
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import toml

from .analysis import FREE_PARAMETERS, FitOptions
from .axes import get_axis, scan_label
from .exceptions import (
    DomainError,
    OmramseyException,
    ParameterError,
    ScenarioError,
    ScenarioIssue,
)
from .propagator import DEFAULT_SAMPLE_DT
from .schedule import first_pulse_gate
from .types import DetuningGrid, GateMode, PhysicalParams, PulseSchedule, Spectrum
from .utils import (
    format_frequency,
    format_time,
    hz_to_rad_per_us,
    parse_frequency,
    parse_time,
    rad_per_us_to_hz,
)

logger = logging.getLogger(__name__)

PRESET_FOLDER = "presets"

_HEADER = re.compile(r"^\s*\[\s*([A-Za-z0-9_\-]+)\s*\]")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")


@dataclass(frozen=True)
class RunOptions:
    sample_dt: float = DEFAULT_SAMPLE_DT
    out: str = "out"
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.sample_dt > 0:
            raise ParameterError(f"sample_dt must be > 0 (got {self.sample_dt})")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1 (got {self.workers})")


@dataclass(frozen=True)
class ScanSpec:
    """Axis name and values in internal units (µs or rad/µs)."""

    axis: str
    values: T.Tuple[float, ...]

    def __post_init__(self):
        axis = get_axis(self.axis)
        if not self.values:
            raise ParameterError("scan needs at least one value")

        labels = [scan_label(axis, v) for v in self.values]
        repeated = sorted({label for label in labels if labels.count(label) > 1})
        if repeated:
            raise ParameterError(
                f"scan values repeat as {', '.join(repeated)} {axis.unit}"
            )


@dataclass(frozen=True)
class FitSpec:
    free: T.Tuple[str, ...] = ("big_g",)
    max_iter: int = 2000
    jitter: float = 0.05

    def __post_init__(self):
        unknown = [name for name in self.free if name not in FREE_PARAMETERS]
        if unknown or not self.free:
            raise ParameterError(
                f"free parameters must be chosen from {', '.join(FREE_PARAMETERS)}"
            )

    def options(self, run: RunOptions) -> FitOptions:
        return FitOptions(
            max_iter=self.max_iter,
            jitter=self.jitter,
            seed=run.seed,
            sample_dt=run.sample_dt,
            workers=run.workers,
        )


@dataclass(frozen=True)
class Scenario:
    physical: PhysicalParams
    schedule: PulseSchedule
    grid: DetuningGrid = field(default_factory=DetuningGrid)
    run: RunOptions = field(default_factory=RunOptions)
    scan: T.Optional[ScanSpec] = None
    fit: T.Optional[FitSpec] = None


def _frequency(value: T.Any) -> float:
    return hz_to_rad_per_us(parse_frequency(value))


def _integer(value: T.Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DomainError(f"expected an integer, got {value!r}")
    return value


def _number(value: T.Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DomainError(f"expected a number, got {value!r}")
    return float(value)


def _text(value: T.Any) -> str:
    if not isinstance(value, str):
        raise DomainError(f"expected a string, got {value!r}")
    return value


def _amplitude(value: T.Any) -> complex:
    if isinstance(value, dict):
        extra = set(value) - {"re", "im"}
        if extra:
            raise DomainError(f"unknown amplitude keys {sorted(extra)} (use re, im)")
        return complex(_number(value.get("re", 0.0)), _number(value.get("im", 0.0)))
    return complex(_number(value))


def _values(value: T.Any) -> list[T.Any]:
    if not isinstance(value, list) or not value:
        raise DomainError(f"expected a non-empty list, got {value!r}")
    return value


def _names(value: T.Any) -> T.Tuple[str, ...]:
    if not isinstance(value, list):
        raise DomainError(f"expected a list of names, got {value!r}")
    return tuple(_text(v) for v in value)


# section -> key -> (converter, required)
SCHEMA: dict[str, dict[str, T.Tuple[T.Callable[[T.Any], T.Any], bool]]] = {
    "physical": {
        "kappa": (_frequency, True),
        "gamma_m": (_frequency, True),
        "omega_m": (_frequency, True),
        "big_g": (_frequency, True),
        "kappa_e": (_frequency, False),
        "delta": (_frequency, False),
    },
    "schedule": {
        "tau1": (parse_time, True),
        "gap": (parse_time, True),
        "tau2": (parse_time, True),
        "gate_len": (parse_time, False),
        "gate_start": (parse_time, False),
        "gate_mode": (_text, False),
        "gate_delay": (parse_time, False),
        "probe_amp": (_amplitude, False),
        "probe_amp2": (_amplitude, False),
        "pulse2_phase": (_number, False),
        "tail": (parse_time, False),
    },
    "grid": {
        "center": (_frequency, False),
        "span": (_frequency, False),
        "points": (_integer, False),
    },
    "run": {
        "sample_dt": (parse_time, False),
        "out": (_text, False),
        "workers": (_integer, False),
        "seed": (_integer, False),
    },
    "scan": {
        "axis": (_text, True),
        "values": (_values, True),
    },
    "fit": {
        "free": (_names, False),
        "max_iter": (_integer, False),
        "jitter": (_number, False),
    },
}
OPTIONAL_SECTIONS = ("grid", "run", "scan", "fit")


class _Reader:
    """Converts one parsed document, collecting issues with line numbers."""

    __slots__ = ["lines", "document", "source", "issues"]

    def __init__(self, text: str, document: dict[str, T.Any], source: str):
        self.lines = text.splitlines()
        self.document = document
        self.source = source
        self.issues: list[ScenarioIssue] = []

    def line_of(self, section: str, key: T.Optional[str] = None) -> T.Optional[int]:
        header = None
        current = None
        for number, line in enumerate(self.lines, start=1):
            match = _HEADER.match(line)
            if match:
                current = match.group(1)
                if current == section and header is None:
                    header = number
                continue
            if key is not None and current == section:
                match = _KEY.match(line)
                if match and match.group(1) == key:
                    return number
        return header

    def report(self, path: str, message: str):
        section, _, key = path.partition(".")
        self.issues.append(
            ScenarioIssue(path, self.line_of(section, key or None), message)
        )

    def check_layout(self):
        for section, body in self.document.items():
            if section not in SCHEMA:
                self.report(section, "unknown section")
                continue
            if not isinstance(body, dict):
                self.report(section, "expected a section table")
                continue
            for key in body:
                if key not in SCHEMA[section]:
                    self.report(f"{section}.{key}", "unknown key")

    def section(self, name: str) -> T.Optional[dict[str, T.Any]]:
        """Converted values of a section, or None when it is absent."""
        body = self.document.get(name)
        if not isinstance(body, dict):
            if name not in OPTIONAL_SECTIONS:
                for key, (_, required) in SCHEMA[name].items():
                    if required:
                        self.report(f"{name}.{key}", "missing required key")
            return None

        values = {}
        for key, (convert, required) in SCHEMA[name].items():
            if key not in body:
                if required:
                    self.report(f"{name}.{key}", "missing required key")
                continue
            try:
                values[key] = convert(body[key])
            except OmramseyException as e:
                self.report(f"{name}.{key}", str(e))
        return values

    def build(self, path: str, factory: T.Callable[[], T.Any]) -> T.Any:
        try:
            return factory()
        except OmramseyException as e:
            self.report(path, str(e))
            return None


def _schedule(values: dict[str, T.Any]) -> PulseSchedule:
    mode = GateMode(values.get("gate_mode", GateMode.SECOND_PAIR))
    gate_len = values.get("gate_len", 1.0)
    common = dict(
        tau1=values["tau1"],
        gap=values["gap"],
        tau2=values["tau2"],
        gate_len=gate_len,
        probe_amp=values.get("probe_amp", 1.0),
        pulse2_phase=values.get("pulse2_phase", 0.0),
        probe_amp2=values.get("probe_amp2"),
        tail=values.get("tail", 0.0),
    )

    if mode is GateMode.FIRST_PULSE:
        if "gate_delay" not in values:
            raise ParameterError("first_pulse gating needs gate_delay")
        if "gate_start" in values:
            raise ParameterError("use gate_delay, not gate_start, with first_pulse")
        base = PulseSchedule.second_pair(**common)
        return first_pulse_gate(base, values["gate_delay"])

    if "gate_delay" in values:
        raise ParameterError("gate_delay only applies to first_pulse gating")
    if "gate_start" in values:
        return PulseSchedule(gate_start=values["gate_start"], **common)
    return PulseSchedule.second_pair(**common)


def _gate_mode(value: T.Any) -> T.Any:
    try:
        return GateMode(value)
    except ValueError:
        raise ParameterError(
            f"unknown gate mode {value!r} "
            f"(choose from {', '.join(m.value for m in GateMode)})"
        )


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """Validate a scenario document and convert it to internal units."""
    try:
        document = toml.loads(text)
    except toml.TomlDecodeError as e:
        raise ScenarioError(
            f"{source} is not valid TOML",
            [ScenarioIssue(source, getattr(e, "lineno", None), e.msg)],
        ) from e

    reader = _Reader(text, document, source)
    reader.check_layout()

    physical = reader.section("physical")
    schedule_values = reader.section("schedule")
    grid_values = reader.section("grid") or {}
    run_values = reader.section("run") or {}
    scan_values = reader.section("scan")
    fit_values = reader.section("fit")

    if schedule_values and "gate_mode" in schedule_values:
        try:
            schedule_values["gate_mode"] = _gate_mode(schedule_values["gate_mode"])
        except ParameterError as e:
            reader.report("schedule.gate_mode", str(e))
            del schedule_values["gate_mode"]

    params = None
    if physical is not None and {"kappa", "gamma_m", "omega_m", "big_g"} <= set(
        physical
    ):
        params = reader.build("physical", lambda: PhysicalParams.create(**physical))

    schedule = None
    if schedule_values is not None and {"tau1", "gap", "tau2"} <= set(schedule_values):
        schedule = reader.build("schedule", lambda: _schedule(schedule_values))

    grid = reader.build("grid", lambda: DetuningGrid(**grid_values))
    run = reader.build("run", lambda: RunOptions(**run_values))

    scan = None
    if scan_values is not None and {"axis", "values"} <= set(scan_values):
        scan = reader.build("scan", lambda: _scan(scan_values))

    fit = None
    if fit_values is not None:
        fit = reader.build("fit", lambda: FitSpec(**fit_values))

    if reader.issues:
        count = len(reader.issues)
        raise ScenarioError(f"{source} has {count} problem(s)", reader.issues)

    assert params is not None and schedule is not None
    return Scenario(
        physical=params, schedule=schedule, grid=grid, run=run, scan=scan, fit=fit
    )


def _scan(values: dict[str, T.Any]) -> ScanSpec:
    axis = get_axis(values["axis"])
    parsed = tuple(axis.parse(v) for v in values["values"])
    return ScanSpec(axis=axis.name, values=parsed)


def _amplitude_entry(value: complex) -> T.Any:
    value = complex(value)
    if value.imag == 0:
        return value.real
    return {"re": value.real, "im": value.imag}


def _hz(omega: float) -> str:
    return format_frequency(rad_per_us_to_hz(omega))


def scenario_document(scenario: Scenario) -> dict[str, T.Any]:
    """The scenario as a TOML-ready mapping with explicit units."""
    p, s = scenario.physical, scenario.schedule
    schedule: dict[str, T.Any] = {
        "tau1": format_time(s.tau1),
        "gap": format_time(s.gap),
        "tau2": format_time(s.tau2),
        "gate_len": format_time(s.gate_len),
        "gate_mode": s.gate_mode.value,
        "probe_amp": _amplitude_entry(s.probe_amp),
        "pulse2_phase": s.pulse2_phase,
        "tail": format_time(s.tail),
    }
    if s.gate_mode is GateMode.FIRST_PULSE:
        schedule["gate_delay"] = format_time(s.gate_start)
    else:
        schedule["gate_start"] = format_time(s.gate_start)
    if s.probe_amp2 is not None:
        schedule["probe_amp2"] = _amplitude_entry(s.probe_amp2)

    document: dict[str, T.Any] = {
        "physical": {
            "kappa": _hz(p.kappa),
            "kappa_e": _hz(p.kappa_e),
            "gamma_m": _hz(p.gamma_m),
            "omega_m": _hz(p.omega_m),
            "delta": _hz(p.delta),
            "big_g": _hz(p.big_g),
        },
        "schedule": schedule,
        "grid": {
            "center": _hz(scenario.grid.center),
            "span": _hz(scenario.grid.span),
            "points": scenario.grid.points,
        },
        "run": {
            "sample_dt": format_time(scenario.run.sample_dt),
            "out": scenario.run.out,
            "workers": scenario.run.workers,
            "seed": scenario.run.seed,
        },
    }
    if scenario.scan is not None:
        axis = get_axis(scenario.scan.axis)
        unit_format = _hz if axis.unit == "Hz" else format_time
        document["scan"] = {
            "axis": scenario.scan.axis,
            "values": [unit_format(v) for v in scenario.scan.values],
        }
    if scenario.fit is not None:
        document["fit"] = {
            "free": list(scenario.fit.free),
            "max_iter": scenario.fit.max_iter,
            "jitter": scenario.fit.jitter,
        }
    return document


def dump_scenario(scenario: Scenario) -> str:
    return toml.dumps(scenario_document(scenario))


def _presets() -> T.Any:
    return importlib.resources.files("omramsey") / PRESET_FOLDER


def available_presets() -> list[str]:
    return sorted(
        entry.name.removesuffix(".toml")
        for entry in _presets().iterdir()
        if entry.name.endswith(".toml")
    )


def load_preset(name: str) -> Scenario:
    if name not in available_presets():
        raise ScenarioError(
            f"unknown preset {name!r} (available: {', '.join(available_presets())})"
        )
    text = (_presets() / f"{name}.toml").read_text(encoding="utf-8")
    return parse_scenario(text, source=f"preset {name}")


def resolve_scenario(reference: str) -> Scenario:
    """A scenario from a file path, or a shipped preset by name."""
    path = Path(reference)
    if path.is_file():
        logger.info("reading scenario %s", path)
        return parse_scenario(path.read_text(encoding="utf-8"), source=str(path))
    if reference in available_presets():
        logger.info("using preset %s", reference)
        return load_preset(reference)
    raise ScenarioError(
        f"{reference!r} is neither a scenario file nor a preset "
        f"(presets: {', '.join(available_presets())})"
    )


def load_observed(path: T.Union[str, Path], scenario: Scenario) -> Spectrum:
    """Read a `detuning_hz,intensity` CSV onto the scenario's probe axis."""
    path = Path(path)
    issues = []
    detuning, intensity = [], []
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        columns = [h.strip() for h in header[:2]] if header else []
        if columns != ["detuning_hz", "intensity"]:
            raise ScenarioError(
                f"{path} is not a spectrum file",
                [ScenarioIssue(str(path), 1, "expected header detuning_hz,intensity")],
            )
        for number, row in enumerate(reader, start=2):
            try:
                detuning.append(float(row[0]))
                intensity.append(float(row[1]))
            except (IndexError, ValueError):
                message = f"cannot read row {row!r}"
                issues.append(ScenarioIssue(str(path), number, message))

    if issues:
        raise ScenarioError(f"{path} has unreadable rows", issues)

    offsets = np.array([hz_to_rad_per_us(d) for d in detuning])
    try:
        return Spectrum(
            delta_pl=scenario.physical.omega_m + offsets,
            intensity=np.array(intensity),
            params=scenario.physical,
            schedule=scenario.schedule,
        )
    except ParameterError as e:
        raise ScenarioError(
            f"{path} is not a usable spectrum", [ScenarioIssue(str(path), None, str(e))]
        ) from e
