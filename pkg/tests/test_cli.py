import csv
import json
import typing as T
from pathlib import Path

import numpy as np
import pytest

from omramsey.artifacts import DETUNING_AXIS
from omramsey.cli import EXIT_FAILED, EXIT_INVALID, EXIT_OK, build_parser, main

SCENARIO = """
[physical]
kappa = "30 MHz"
gamma_m = "20 kHz"
omega_m = "94 MHz"
big_g = "0.58 MHz"

[schedule]
tau1 = "4 us"
gap = "4 us"
tau2 = "1 us"

[grid]
span = "0.3 MHz"
points = 11

[run]
sample_dt = "50 ns"

[scan]
axis = "gap"
values = ["2 us", "4 us"]

[fit]
max_iter = 5
"""


@pytest.fixture
def scenario_file(tmp_path: Path) -> Path:
    path = tmp_path / "scenario.toml"
    path.write_text(SCENARIO, encoding="utf-8")
    return path


def _run(command: str, scenario: Path, out: Path, *extra: str) -> int:
    return main([command, "--scenario", str(scenario), "--out", str(out), *extra])


def _rows(path: Path) -> list[list[str]]:
    with path.open(newline="") as f:
        return list(csv.reader(f))


def _variant(tmp_path: Path, *changes: T.Tuple[str, str]) -> Path:
    text = SCENARIO
    for old, new in changes:
        assert old in text
        text = text.replace(old, new)
    path = tmp_path / "variant.toml"
    path.write_text(text, encoding="utf-8")
    return path


def test_sweep_writes_artifacts(scenario_file, tmp_path):
    out = tmp_path / "sweep"
    assert _run("sweep", scenario_file, out) == EXIT_OK

    rows = _rows(out / "spectrum.csv")
    assert rows[0] == ["detuning_hz", "intensity"]
    assert len(rows) == 12
    assert (out / "plot.svg").read_text().startswith("<svg")

    report = json.loads((out / "report.json").read_text())
    assert "detuning_hz" in report["axis"]

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "sweep"
    assert manifest["outputs"] == ["spectrum.csv", "report.json", "plot.svg"]
    assert manifest["runtime"]["workers"] == 1
    assert "workers" not in manifest["scenario"]["run"]


def test_sweep_output_does_not_depend_on_workers(scenario_file, tmp_path):
    assert _run("sweep", scenario_file, tmp_path / "one") == EXIT_OK
    assert _run("sweep", scenario_file, tmp_path / "many", "--workers", "3") == EXIT_OK

    for name in ("spectrum.csv", "report.json"):
        assert (tmp_path / "one" / name).read_bytes() == (
            tmp_path / "many" / name
        ).read_bytes()

    one = json.loads((tmp_path / "one" / "manifest.json").read_text())
    many = json.loads((tmp_path / "many" / "manifest.json").read_text())
    del one["runtime"], many["runtime"]
    assert one == many


def test_detuning_column_is_offset_from_sideband(scenario_file, tmp_path):
    out = tmp_path / "sweep"
    assert _run("sweep", scenario_file, out) == EXIT_OK

    detuning = np.array([float(row[0]) for row in _rows(out / "spectrum.csv")[1:]])
    # (delta_pl - omega_m) / 2pi, which is -y / 2pi
    assert detuning == pytest.approx(np.linspace(-0.15e6, 0.15e6, 11), abs=1e-6)
    assert np.all(np.diff(detuning) > 0)

    manifest = json.loads((out / "manifest.json").read_text())
    report = json.loads((out / "report.json").read_text())
    assert manifest["detuning_axis"] == DETUNING_AXIS
    assert report["axis"] == DETUNING_AXIS


def test_dark_trace_is_all_zero(tmp_path):
    dark = _variant(tmp_path, ('tau2 = "1 us"', 'tau2 = "1 us"\nprobe_amp = 0.0'))
    out = tmp_path / "trace"
    assert _run("trace", dark, out) == EXIT_OK

    rows = _rows(out / "trace.csv")[1:]
    assert len(rows) > 2
    assert all(float(value) == 0.0 for row in rows for value in row[1:])

    report = json.loads((out / "report.json").read_text())
    assert report["gated_intensity"] == 0.0


def test_trace_writes_samples(scenario_file, tmp_path):
    out = tmp_path / "trace"
    assert _run("trace", scenario_file, out) == EXIT_OK

    rows = _rows(out / "trace.csv")
    assert rows[0] == ["t_us", "re_alpha", "im_alpha", "re_beta", "im_beta"]
    assert float(rows[1][0]) == 0.0
    assert float(rows[-1][0]) == pytest.approx(9.0)

    report = json.loads((out / "report.json").read_text())
    assert report["samples"] == len(rows) - 1
    assert report["gated_intensity"] > 0


def test_scan_writes_one_spectrum_per_value(scenario_file, tmp_path):
    out = tmp_path / "scan"
    assert _run("scan", scenario_file, out) == EXIT_OK

    assert (out / "scan" / "2" / "spectrum.csv").exists()
    assert (out / "scan" / "4" / "spectrum.csv").exists()
    report = json.loads((out / "report.json").read_text())
    assert [point["value"] for point in report["points"]] == [2.0, 4.0]
    assert report["unit"] == "us"


def test_scan_keeps_close_values_apart(tmp_path):
    close = _variant(
        tmp_path, ('values = ["2 us", "4 us"]', 'values = ["4 us", "4.0000001 us"]')
    )
    out = tmp_path / "scan"
    assert _run("scan", close, out) == EXIT_OK

    assert sorted(p.name for p in (out / "scan").iterdir()) == ["4", "4.0000001"]
    outputs = json.loads((out / "manifest.json").read_text())["outputs"]
    assert len(outputs) == len(set(outputs))
    assert outputs[:2] == ["scan/4/spectrum.csv", "scan/4.0000001/spectrum.csv"]


def test_scan_values_sharing_a_folder_are_invalid(tmp_path):
    same = _variant(
        tmp_path, ('values = ["2 us", "4 us"]', 'values = ["4 us", "4000 ns"]')
    )
    out = tmp_path / "scan"

    assert _run("scan", same, out) == EXIT_INVALID
    assert not out.exists()


def test_fit_recovers_coupling_from_perturbed_start(scenario_file, tmp_path):
    assert _run("sweep", scenario_file, tmp_path / "sweep") == EXIT_OK
    observed = tmp_path / "sweep" / "spectrum.csv"

    perturbed = _variant(
        tmp_path,
        ('big_g = "0.58 MHz"', 'big_g = "0.5 MHz"'),
        ("max_iter = 5", "max_iter = 400"),
    )
    out = tmp_path / "fit"
    assert _run("fit", perturbed, out, "--observed", str(observed)) == EXIT_OK

    result = json.loads((out / "report.json").read_text())
    assert result["free"] == ["big_g"]
    assert result["converged"]
    assert result["params_hat"]["big_g_hz"] == pytest.approx(0.58e6, rel=1e-3)
    assert result["params_hat"]["kappa_hz"] == pytest.approx(30e6)
    assert len(_rows(out / "spectrum.csv")) == 12


def test_fit_without_observed_leaves_nothing(scenario_file, tmp_path):
    out = tmp_path / "fit"

    assert _run("fit", scenario_file, out) == EXIT_INVALID
    assert not out.exists()


def test_invalid_scenario_exits_with_validation_status(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('[physical]\nkappa = "thirty"\n', encoding="utf-8")

    assert _run("sweep", path, tmp_path / "out") == EXIT_INVALID
    assert _run("sweep", tmp_path / "absent.toml", tmp_path / "out") == EXIT_INVALID
    assert not (tmp_path / "out").exists()


def test_unwritable_output_fails(scenario_file, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a folder")

    assert _run("sweep", scenario_file, blocker / "out") == EXIT_FAILED


def test_parser_requires_scenario():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["sweep"])
    with pytest.raises(SystemExit):
        build_parser().parse_args(["plot", "--scenario", "fig3a"])
    with pytest.raises(SystemExit):
        build_parser().parse_args(["sweep", "--scenario", "fig3a", "-v", "-q"])
