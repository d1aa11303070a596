import math

import pytest

from omramsey.exceptions import DomainError
from omramsey.utils import (
    format_frequency,
    format_time,
    hz_to_rad_per_us,
    parse_frequency,
    parse_time,
    rad_per_us_to_hz,
    split_quantity,
)


def test_frequency_conversion():
    assert hz_to_rad_per_us(1e6) == pytest.approx(2 * math.pi)
    assert rad_per_us_to_hz(2 * math.pi) == pytest.approx(1e6)


@pytest.mark.parametrize("frequency", [1.0, 20e3, 0.58e6, 30e6, 94.1e6, 1.5e9, -2.5e5])
def test_frequency_conversion_round_trip(frequency):
    assert rad_per_us_to_hz(hz_to_rad_per_us(frequency)) == pytest.approx(
        frequency, rel=1e-12
    )


def test_parse_frequency():
    assert parse_frequency("30 MHz") == pytest.approx(30e6)
    assert parse_frequency("20kHz") == pytest.approx(20e3)
    assert parse_frequency(" 1.5 GHz ") == pytest.approx(1.5e9)
    assert parse_frequency("12 Hz") == 12.0
    assert parse_frequency(500) == 500.0
    assert parse_frequency("250") == 250.0


def test_parse_time():
    assert parse_time("4 us") == 4.0
    assert parse_time("4 µs") == 4.0
    assert parse_time("1 ns") == pytest.approx(1e-3)
    assert parse_time("2 ms") == pytest.approx(2e3)
    assert parse_time("1e-6 s") == pytest.approx(1.0)


def test_parse_rejects_garbage():
    with pytest.raises(DomainError):
        parse_frequency("thirty MHz")
    with pytest.raises(DomainError):
        parse_time("4 parsecs")
    with pytest.raises(DomainError):
        parse_time(True)
    with pytest.raises(DomainError):
        parse_time(["4 us"])
    with pytest.raises(DomainError):
        parse_frequency("inf Hz")


def test_split_quantity_prefers_longest_unit():
    assert split_quantity("3 MHz", ["Hz", "MHz"]) == (3.0, "MHz")
    assert split_quantity("7", ["Hz"]) == (7.0, None)


def test_formatted_values_parse_back():
    assert parse_frequency(format_frequency(123456.789)) == 123456.789
    assert parse_time(format_time(0.1)) == 0.1
