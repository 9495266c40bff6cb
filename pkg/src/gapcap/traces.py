"""Measurement traces and their CSV representation.

Every CSV has a mandatory header row; lines starting with ``#`` are
ignored. Floats are written with ``repr`` so a file read back and written
again is byte-identical.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError

# kind -> (column names, x unit, y unit)
SCHEMAS = {
    "ringdown": (("time_s", "power_linear"), "s", "arb"),
    "omit": (("detuning_hz", "mag"), "Hz", "1"),
    "damping-vs-power": (("power_w", "gamma_tot_hz"), "W", "Hz"),
    "freq-vs-radius": (("radius_m", "freq_hz"), "m", "Hz"),
    "heating": (("cooperativity", "n_heat"), "1", "quanta"),
    "q-batch": (("value",), "index", "1"),
}

KINDS = tuple(SCHEMAS)


@dataclass
class Trace:
    x: np.ndarray
    y: np.ndarray
    kind: str
    x_unit: str = ""
    y_unit: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.kind not in SCHEMAS:
            raise InputError(f"unknown trace kind {self.kind!r}")
        if self.x.ndim != 1 or self.x.shape != self.y.shape:
            raise InputError("trace x and y must be 1-D with equal lengths")
        if not np.all(np.isfinite(self.y)) or not np.all(np.isfinite(self.x)):
            raise InputError("trace values must be finite")
        if self.kind not in ("damping-vs-power", "q-batch") and np.any(np.diff(self.x) <= 0):
            raise InputError("trace x must be strictly increasing")
        _, xu, yu = SCHEMAS[self.kind]
        self.x_unit = self.x_unit or xu
        self.y_unit = self.y_unit or yu

    def __len__(self):
        return self.x.size


def write_csv(path, columns: dict[str, np.ndarray], comments: tuple[str, ...] = ()) -> Path:
    path = Path(path)
    path.write_text(format_csv(columns, comments))
    return path


def format_csv(columns: dict[str, np.ndarray], comments: tuple[str, ...] = ()) -> str:
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write(",".join(names) + "\n")
    for row in zip(*arrays):
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def read_columns(path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    lines = [ln for ln in path.read_text().splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise InputError(f"{path}: missing header row")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise InputError(f"{path}: data row {lineno} has {len(row)} fields, expected {len(header)}")
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            raise InputError(f"{path}: non-numeric value in data row {lineno}") from None
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def read_trace(path, kind: str) -> Trace:
    """Read a CSV of the schema registered for ``kind``."""
    if kind not in SCHEMAS:
        raise InputError(f"unknown trace kind {kind!r}")
    names = SCHEMAS[kind][0]
    cols = read_columns(path)
    missing = [n for n in names if n not in cols]
    if missing:
        raise InputError(f"{path}: expected columns {','.join(names)}; missing {','.join(missing)}")
    if len(names) == 1:
        y = cols[names[0]]
        return Trace(np.arange(y.size, dtype=float), y, kind)
    return Trace(cols[names[0]], cols[names[1]], kind)


def write_trace(path, trace: Trace, comments: tuple[str, ...] = ()) -> Path:
    names = SCHEMAS[trace.kind][0]
    if len(names) == 1:
        return write_csv(path, {names[0]: trace.y}, comments)
    return write_csv(path, {names[0]: trace.x, names[1]: trace.y}, comments)
