"""Result files: CSV tables, schema-checked JSON and the run manifest.

All writes of one run go through a single `ArtifactWriter`; if the run
fails, whatever it wrote is removed again."""

import csv
import io
import json
import logging
import threading
import typing as T
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from .exceptions import ArtifactError, SchemaError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
# -y / 2pi rather than y / 2pi, so the column grows with the probe frequency
DETUNING_AXIS = "detuning_hz = (omega_probe - omega_drive - omega_m) / 2pi = -y / 2pi"

Number = (int, float)
OptionalNumber = (type(None), int, float)

# name -> field -> accepted types
SCHEMAS: dict[str, dict[str, T.Tuple[type, ...]]] = {
    "fringe_report": {
        "schema_version": (str,),
        "axis": (str,),
        "central_dip_hz": Number,
        "minima_hz": (list,),
        "period_hz": OptionalNumber,
        "visibility": Number,
        "has_fringes": (bool,),
    },
    "fit_result": {
        "schema_version": (str,),
        "free": (list,),
        "params_hat": (dict,),
        "delta_offset_hz": Number,
        "residual": Number,
        "iterations": (int,),
        "evaluations": (int,),
        "converged": (bool,),
    },
    "scan_report": {
        "schema_version": (str,),
        "axis": (str,),
        "unit": (str,),
        "points": (list,),
    },
    "trace_report": {
        "schema_version": (str,),
        "samples": (int,),
        "sample_dt_us": Number,
        "gated_intensity": Number,
        "final": (dict,),
    },
    "manifest": {
        "schema_version": (str,),
        "tool": (str,),
        "version": (str,),
        "command": (str,),
        "seed": (int,),
        "detuning_axis": (str,),
        "scenario": (dict,),
        "outputs": (list,),
        "runtime": (dict,),
    },
}


def tool_version() -> str:
    try:
        return version("omramsey")
    except PackageNotFoundError:
        return "unknown"


def check_schema(name: str, payload: dict[str, T.Any]):
    if name not in SCHEMAS:
        raise SchemaError(f"no schema named {name!r}")

    schema = SCHEMAS[name]
    problems = [f"missing {key}" for key in schema if key not in payload]
    problems += [f"unexpected {key}" for key in payload if key not in schema]
    problems += [
        f"{key} has type {type(payload[key]).__name__}"
        for key, kinds in schema.items()
        if key in payload
        # bool is an int, but never a valid number here
        and (
            not isinstance(payload[key], kinds)
            or (isinstance(payload[key], bool) and bool not in kinds)
        )
    ]
    if payload.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        problems.append(f"schema_version is not {SCHEMA_VERSION}")
    if problems:
        raise SchemaError(f"{name} does not match its schema: " + "; ".join(problems))


def format_number(value: float) -> str:
    """17 significant digits, so equal floats give equal text."""
    return f"{value:.16e}"


class ArtifactWriter:
    __slots__ = ["root", "written", "created", "_lock"]

    root: Path
    written: list[Path]
    created: list[Path]

    def __init__(self, root: T.Union[str, Path]):
        self.root = Path(root)
        self.written = []
        self.created = []
        self._lock = threading.Lock()

    def __enter__(self) -> "ArtifactWriter":
        self._make_dirs(self.root)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            self.discard()
        return False

    def _make_dirs(self, folder: Path):
        missing = []
        while not folder.exists():
            missing.append(folder)
            folder = folder.parent
        for path in reversed(missing):
            path.mkdir()
            self.created.append(path)

    def discard(self):
        """Remove everything this writer produced."""
        with self._lock:
            for path in reversed(self.written):
                path.unlink(missing_ok=True)
            for folder in reversed(self.created):
                try:
                    folder.rmdir()
                except OSError:
                    pass
            if self.written:
                logger.info("removed %d partial output file(s)", len(self.written))
            self.written.clear()
            self.created.clear()

    def write_text(self, relative: T.Union[str, Path], text: str) -> Path:
        path = self.root / relative
        with self._lock:
            if path in self.written:
                raise ArtifactError(f"{path} was already written in this run")
            self._make_dirs(path.parent)
            path.write_text(text, encoding="utf-8")
            self.written.append(path)
        logger.info("wrote %s", path)
        return path

    def write_csv(
        self,
        relative: T.Union[str, Path],
        header: T.Sequence[str],
        rows: T.Iterable[T.Sequence[float]],
    ) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([format_number(v) for v in row] for row in rows)
        return self.write_text(relative, buffer.getvalue())

    def write_json(
        self, relative: T.Union[str, Path], schema: str, payload: dict[str, T.Any]
    ) -> Path:
        check_schema(schema, payload)
        text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
        return self.write_text(relative, text + "\n")

    def relative(self) -> list[str]:
        return [path.relative_to(self.root).as_posix() for path in self.written]
