import typing as T
from dataclasses import replace

from .exceptions import ParameterError
from .types import PhysicalParams, PulseSchedule, ScanAxis
from .utils import hz_to_rad_per_us, parse_frequency, parse_time, rad_per_us_to_hz

scan_axes: dict[str, type[ScanAxis]] = {}


def scan_axis(*, name: str, unit: str):
    def _scan_axis(klass: type[ScanAxis]):
        klass.name = name
        klass.unit = unit
        scan_axes[name] = klass

        return klass

    return _scan_axis


def get_available_axes() -> T.Iterable[str]:
    return scan_axes.keys()


def scan_label(axis: ScanAxis, value: float) -> str:
    """Folder name of a scan value in the axis' reporting unit.

    12 significant digits drop unit-conversion noise but keep values such as
    4 and 4.0000001 apart."""
    return f"{axis.display(value):.12g}"


def get_axis(name: str) -> ScanAxis:
    if name not in scan_axes:
        raise ParameterError(
            f"unknown scan axis {name!r} (available: {', '.join(get_available_axes())})"
        )
    return scan_axes[name]()


@scan_axis(name="tau2", unit="us")
class Tau2Axis(ScanAxis):
    """Second pulse width; the gate stays at the trailing edge and shrinks
    to tau2 when tau2 is shorter than the configured gate."""

    def apply(
        self, params: PhysicalParams, schedule: PulseSchedule, value: float
    ) -> T.Tuple[PhysicalParams, PulseSchedule]:
        return params, _second_pair(schedule, tau2=value)

    def display(self, value: float) -> float:
        return value

    def parse(self, value: T.Any) -> float:
        return parse_time(value)


@scan_axis(name="gap", unit="us")
class GapAxis(ScanAxis):
    def apply(
        self, params: PhysicalParams, schedule: PulseSchedule, value: float
    ) -> T.Tuple[PhysicalParams, PulseSchedule]:
        return params, _second_pair(schedule, gap=value)

    def display(self, value: float) -> float:
        return value

    def parse(self, value: T.Any) -> float:
        return parse_time(value)


@scan_axis(name="gamma_m", unit="Hz")
class GammaMAxis(ScanAxis):
    def apply(
        self, params: PhysicalParams, schedule: PulseSchedule, value: float
    ) -> T.Tuple[PhysicalParams, PulseSchedule]:
        return replace(params, gamma_m=value), schedule

    def display(self, value: float) -> float:
        return rad_per_us_to_hz(value)

    def parse(self, value: T.Any) -> float:
        return hz_to_rad_per_us(parse_frequency(value))


def _second_pair(schedule: PulseSchedule, **changes: float) -> PulseSchedule:
    tau2 = changes.get("tau2", schedule.tau2)
    gate_len = min(schedule.gate_len, tau2)
    return PulseSchedule.second_pair(
        tau1=schedule.tau1,
        gap=changes.get("gap", schedule.gap),
        tau2=tau2,
        gate_len=gate_len,
        probe_amp=schedule.probe_amp,
        pulse2_phase=schedule.pulse2_phase,
        probe_amp2=schedule.probe_amp2,
        tail=schedule.tail,
    )
