import math
import typing as T

from .exceptions import DomainError

TWO_PI = 2.0 * math.pi

# Internal units: time in µs, angular frequency in rad/µs.
FREQUENCY_UNITS: dict[str, float] = {"GHz": 1e9, "MHz": 1e6, "kHz": 1e3, "Hz": 1.0}
TIME_UNITS: dict[str, float] = {"ms": 1e3, "us": 1.0, "µs": 1.0, "ns": 1e-3, "s": 1e6}

Quantity = T.Union[str, int, float]


def hz_to_rad_per_us(frequency: float) -> float:
    return TWO_PI * frequency * 1e-6


def rad_per_us_to_hz(omega: float) -> float:
    return omega / (TWO_PI * 1e-6)


def split_quantity(
    text: str, units: T.Iterable[str]
) -> T.Tuple[float, T.Optional[str]]:
    """Split "30 MHz" into (30.0, "MHz"). A bare number yields (value, None)."""
    text = text.strip()

    for unit in sorted(units, key=len, reverse=True):
        if text.endswith(unit):
            number = text.removesuffix(unit).strip()
            try:
                return float(number), unit
            except ValueError:
                break

    try:
        return float(text), None
    except ValueError:
        known = ", ".join(units)
        raise DomainError(
            f"cannot read a quantity from {text!r} (known units: {known})"
        )


def _parse(value: Quantity, units: dict[str, float], kind: str) -> float:
    if isinstance(value, bool):
        raise DomainError(f"expected a {kind}, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise DomainError(f"expected a {kind}, got {value!r}")

    number, unit = split_quantity(value, units)
    if not math.isfinite(number):
        raise DomainError(f"{kind} {value!r} is not finite")
    if unit is None:
        return number
    return number * units[unit]


def parse_frequency(value: Quantity) -> float:
    """Ordinary frequency in Hz from "30 MHz", "20 kHz" or a bare number of Hz."""
    return _parse(value, FREQUENCY_UNITS, "frequency")


def parse_time(value: Quantity) -> float:
    """Duration in µs from "4 us", "4 µs", "1e-6 s" or a bare number of µs."""
    return _parse(value, TIME_UNITS, "time")


def format_frequency(frequency: float) -> str:
    return f"{frequency!r} Hz"


def format_time(microseconds: float) -> str:
    return f"{microseconds!r} us"
