import argparse
import datetime
import logging
import sys
import time
import typing as T
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .analysis import default_band, evaluate, extract, fit, scan, sweep
from .artifacts import (
    DETUNING_AXIS,
    SCHEMA_VERSION,
    ArtifactWriter,
    tool_version,
)
from .axes import get_axis, scan_label
from .exceptions import (
    DomainError,
    FitError,
    OmramseyException,
    ParameterError,
    ScenarioError,
)
from .model import detunings
from .propagator import gated_intensity, run_schedule
from .scenario import (
    FitSpec,
    Scenario,
    load_observed,
    resolve_scenario,
    scenario_document,
)
from .svg import LinePlot
from .types import FitResult, FringeReport, PhysicalParams, Spectrum
from .utils import rad_per_us_to_hz

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2
VALIDATION_ERRORS = (ParameterError, DomainError, ScenarioError, FitError)
PARAMETER_FIELDS = [f.name for f in fields(PhysicalParams)]
TRACE_COLUMNS = ["t_us", "re_alpha", "im_alpha", "re_beta", "im_beta"]

Observed = T.Optional[Path]
Command = T.Callable[[Scenario, ArtifactWriter, Observed], None]
commands: dict[str, Command] = {}


def command(*, name: str):
    def _command(f: Command) -> Command:
        commands[name] = f

        return f

    return _command


def get_available_commands() -> T.Iterable[str]:
    return commands.keys()


def _hz_list(values: T.Iterable[float]) -> list[float]:
    return [rad_per_us_to_hz(v) for v in values]


def report_payload(report: FringeReport) -> dict[str, T.Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "axis": DETUNING_AXIS,
        "central_dip_hz": rad_per_us_to_hz(report.central_dip),
        "minima_hz": _hz_list(report.minima),
        "period_hz": None if report.period is None else rad_per_us_to_hz(report.period),
        "visibility": report.visibility,
        "has_fringes": report.has_fringes,
    }


def params_payload(params: PhysicalParams) -> dict[str, float]:
    return {
        f"{name}_hz": rad_per_us_to_hz(getattr(params, name))
        for name in PARAMETER_FIELDS
    }


def fit_payload(result: FitResult) -> dict[str, T.Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "free": list(result.free),
        "params_hat": params_payload(result.params_hat),
        "delta_offset_hz": rad_per_us_to_hz(result.delta_offset),
        "residual": result.residual,
        "iterations": result.iterations,
        "evaluations": result.evaluations,
        "converged": result.converged,
    }


def _spectrum_rows(spectrum: Spectrum) -> T.Iterator[T.Tuple[float, float]]:
    for offset, intensity in zip(spectrum.offsets, spectrum.intensity):
        yield rad_per_us_to_hz(float(offset)), float(intensity)


def _write_spectrum(writer: ArtifactWriter, relative: str, spectrum: Spectrum):
    writer.write_csv(relative, ["detuning_hz", "intensity"], _spectrum_rows(spectrum))


def _spectrum_plot(title: str) -> LinePlot:
    return LinePlot(
        title, "probe detuning (kHz)", "gated intensity |k_e a|^2 / |E_p|^2"
    )


def _khz(spectrum: Spectrum) -> np.ndarray:
    return np.array([rad_per_us_to_hz(float(v)) for v in spectrum.offsets]) / 1e3


@command(name="trace")
def trace_command(scenario: Scenario, writer: ArtifactWriter, observed: Observed):
    """Time trace at the grid centre detuning."""
    params, schedule = scenario.physical, scenario.schedule
    det = detunings(params, params.omega_m + scenario.grid.center)
    trace = run_schedule(schedule, det, params, scenario.run.sample_dt)

    writer.write_csv("trace.csv", TRACE_COLUMNS, trace.rows())
    final = trace.final
    writer.write_json(
        "report.json",
        "trace_report",
        {
            "schema_version": SCHEMA_VERSION,
            "samples": len(trace),
            "sample_dt_us": trace.sample_dt,
            "gated_intensity": gated_intensity(trace, schedule, params),
            "final": {
                "t_us": final.t,
                "re_alpha": final.alpha.real,
                "im_alpha": final.alpha.imag,
                "re_beta": final.beta.real,
                "im_beta": final.beta.imag,
            },
        },
    )

    plot = LinePlot("Sideband amplitudes", "time (us)", "amplitude")
    plot.add_series("|k_e alpha|", trace.t, np.abs(params.kappa_e * trace.alpha))
    plot.add_series("|beta|", trace.t, np.abs(trace.beta))
    writer.write_text("plot.svg", plot.render())


@command(name="sweep")
def sweep_command(scenario: Scenario, writer: ArtifactWriter, observed: Observed):
    spectrum = sweep(
        scenario.physical,
        scenario.schedule,
        scenario.grid,
        scenario.run.sample_dt,
        scenario.run.workers,
    )
    report = extract(spectrum, default_band(scenario.schedule, scenario.grid))
    if report.period is not None:
        logger.info("fringe period %.4g kHz", rad_per_us_to_hz(report.period) / 1e3)

    _write_spectrum(writer, "spectrum.csv", spectrum)
    writer.write_json("report.json", "fringe_report", report_payload(report))

    s = scenario.schedule
    plot = _spectrum_plot(
        f"tau1 = {s.tau1:g} us, T = {s.gap:g} us, tau2 = {s.tau2:g} us"
    )
    plot.add_series("spectrum", _khz(spectrum), spectrum.intensity)
    writer.write_text("plot.svg", plot.render())


@command(name="scan")
def scan_command(scenario: Scenario, writer: ArtifactWriter, observed: Observed):
    if scenario.scan is None:
        raise ParameterError("the scan command needs a [scan] section")

    axis = get_axis(scenario.scan.axis)
    points = scan(
        scenario.physical,
        scenario.schedule,
        axis,
        scenario.scan.values,
        scenario.grid,
        scenario.run.sample_dt,
        scenario.run.workers,
    )

    plot = _spectrum_plot(f"{axis.name} scan")
    entries = []
    for point in points:
        label = scan_label(axis, point.value)
        _write_spectrum(writer, f"scan/{label}/spectrum.csv", point.spectrum)
        plot.add_series(
            f"{axis.name} = {label} {axis.unit}",
            _khz(point.spectrum),
            point.spectrum.intensity,
        )
        entries.append(
            {"value": axis.display(point.value), **report_payload(point.report)}
        )

    writer.write_json(
        "report.json",
        "scan_report",
        {
            "schema_version": SCHEMA_VERSION,
            "axis": axis.name,
            "unit": axis.unit,
            "points": entries,
        },
    )
    writer.write_text("plot.svg", plot.render())


@command(name="fit")
def fit_command(scenario: Scenario, writer: ArtifactWriter, observed: Observed):
    if observed is None:
        raise ParameterError("the fit command needs --observed <csv>")

    target = load_observed(observed, scenario)
    spec = scenario.fit if scenario.fit is not None else FitSpec()
    result = fit(target, scenario.physical, spec.free, spec.options(scenario.run))

    fitted = Spectrum(
        delta_pl=target.delta_pl,
        intensity=evaluate(
            result.params_hat,
            target.schedule,
            target.delta_pl - result.delta_offset,
            scenario.run.sample_dt,
            scenario.run.workers,
        ),
        params=result.params_hat,
        schedule=target.schedule,
    )

    _write_spectrum(writer, "spectrum.csv", fitted)
    writer.write_json("report.json", "fit_result", fit_payload(result))

    plot = _spectrum_plot("Fit")
    plot.add_series("observed", _khz(target), target.intensity)
    plot.add_series("fitted", _khz(fitted), fitted.intensity)
    writer.write_text("plot.svg", plot.render())


def _manifest(
    name: str,
    scenario: Scenario,
    writer: ArtifactWriter,
    started: datetime.datetime,
    wall_time: float,
) -> dict[str, T.Any]:
    document = scenario_document(scenario)
    # worker count and output folder do not change results
    runtime_only = {key: document["run"].pop(key) for key in ("workers", "out")}
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "omramsey",
        "version": tool_version(),
        "command": name,
        "seed": scenario.run.seed,
        "detuning_axis": DETUNING_AXIS,
        "scenario": document,
        "outputs": writer.relative(),
        "runtime": {
            "started": started.isoformat(timespec="seconds"),
            "wall_time_s": wall_time,
            **runtime_only,
        },
    }


def run_command(
    name: str, scenario: Scenario, observed: T.Optional[T.Union[str, Path]] = None
) -> int:
    """Run one command and write its artifacts under `scenario.run.out`.

    Returns the process exit status; on failure nothing is left behind."""
    if name not in commands:
        logger.error(
            "unknown command %r (choose from %s)",
            name,
            ", ".join(get_available_commands()),
        )
        return EXIT_INVALID

    started = datetime.datetime.now(datetime.timezone.utc)
    clock = time.perf_counter()
    try:
        with ArtifactWriter(scenario.run.out) as writer:
            target = None if observed is None else Path(observed)
            commands[name](scenario, writer, target)
            manifest = _manifest(
                name, scenario, writer, started, time.perf_counter() - clock
            )
            writer.write_json("manifest.json", "manifest", manifest)
    except VALIDATION_ERRORS as e:
        logger.error("%s", e)
        return EXIT_INVALID
    except (OmramseyException, OSError) as e:
        logger.error("%s failed: %s", name, e)
        return EXIT_FAILED
    except Exception:
        logger.exception("%s failed unexpectedly", name)
        return EXIT_FAILED

    logger.info("%s finished in %.2f s", name, time.perf_counter() - clock)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omramsey",
        description="Ramsey interferometry in pulsed cavity optomechanics.",
    )
    parser.add_argument("command", choices=sorted(get_available_commands()))
    parser.add_argument(
        "--scenario",
        required=True,
        help="scenario TOML file or preset name (e.g. fig3a)",
    )
    parser.add_argument("--out", help="output directory (overrides run.out)")
    parser.add_argument(
        "--workers", type=int, help="worker threads (overrides run.workers)"
    )
    parser.add_argument(
        "--seed", type=int, help="fit simplex seed (overrides run.seed)"
    )
    parser.add_argument("--observed", help="observed spectrum CSV for the fit command")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    return parser


def main(argv: T.Optional[T.Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        scenario = resolve_scenario(args.scenario)
        overrides = {
            key: value
            for key, value in (
                ("out", args.out),
                ("workers", args.workers),
                ("seed", args.seed),
            )
            if value is not None
        }
        if overrides:
            scenario = replace(scenario, run=replace(scenario.run, **overrides))
    except VALIDATION_ERRORS as e:
        logger.error("%s", e)
        return EXIT_INVALID
    except OSError as e:
        logger.error("cannot read scenario: %s", e)
        return EXIT_FAILED

    return run_command(args.command, scenario, args.observed)


if __name__ == "__main__":
    sys.exit(main())
