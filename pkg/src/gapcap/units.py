"""Unit-suffixed quantity parsing.

Quantities in configuration files and CLI flags carry a unit suffix
(``70um``, ``350MPa``, ``6 GHz``) and are converted to SI base units on
input. Frequencies parse to cyclic Hz; use :func:`to_angular` for rad/s.
"""

from __future__ import annotations

import math
import re

from .errors import DomainError

TWO_PI = 2.0 * math.pi

_PREFIX = {"f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "µ": 1e-6, "m": 1e-3,
           "": 1.0, "k": 1e3, "M": 1e6, "G": 1e9}

# base symbol -> (dimension, factor to SI)
_BASE = {
    "m": ("length", 1.0),
    "Pa": ("stress", 1.0),
    "Hz": ("frequency", 1.0),
    "K": ("temperature", 1.0),
    "g": ("mass", 1e-3),
    "F": ("capacitance", 1.0),
    "H": ("inductance", 1.0),
    "W": ("power", 1.0),
    "s": ("time", 1.0),
}

_SPECIAL = {
    "kg/m3": ("density", 1.0),
    "g/cm3": ("density", 1e3),
    "1/m": ("curvature", 1.0),
    "nm/mm": ("strain", 1e-6),
    "um/mm": ("strain", 1e-3),
    "m/m": ("strain", 1.0),
    "rad/s": ("frequency", 1.0 / TWO_PI),
    "dBm": ("power_dbm", 1.0),
    "%": ("fraction", 1e-2),
}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY = re.compile(rf"^\s*(?P<num>{_NUMBER})\s*(?P<unit>(?:1/|[^\s\d]).*?)?\s*$")

UNIT_HELP = {
    "length": "m (accepts nm, um, mm)",
    "stress": "Pa (accepts kPa, MPa, GPa)",
    "frequency": "Hz, cyclic (accepts kHz, MHz, GHz, rad/s)",
    "temperature": "K (accepts mK)",
    "mass": "kg (accepts ng, ug, mg, g)",
    "capacitance": "F (accepts fF, pF)",
    "inductance": "H (accepts pH, nH)",
    "power": "W (accepts mW, uW, nW)",
    "time": "s (accepts ms, us)",
    "density": "kg/m3 (accepts g/cm3)",
    "curvature": "1/m",
    "strain": "nm/mm (accepts m/m)",
    "fraction": "dimensionless (accepts %)",
    "number": "dimensionless",
}


def _lookup(unit: str) -> tuple[str, float]:
    if unit in _SPECIAL:
        return _SPECIAL[unit]
    if unit == "kg":
        return "mass", 1.0
    # longest base symbol first so "Pa" is not read as prefix "P" + "a"
    for base in sorted(_BASE, key=len, reverse=True):
        if unit.endswith(base):
            prefix = unit[: -len(base)]
            if prefix in _PREFIX:
                dim, factor = _BASE[base]
                return dim, factor * _PREFIX[prefix]
    raise DomainError(f"unknown unit {unit!r}")


def parse_quantity(value, dimension: str, *, field: str | None = None,
                   bare_factor: float = 1.0) -> float:
    """Parse ``value`` into SI base units of ``dimension``.

    Bare numbers (int/float, or strings without a suffix) are multiplied
    by ``bare_factor`` (1 means already in base units). A suffix of the
    wrong dimension raises :class:`DomainError` naming ``field``.
    """
    label = f"{field}: " if field else ""
    if isinstance(value, bool):
        raise DomainError(f"{label}expected a {dimension} quantity, got {value!r}")
    if isinstance(value, (int, float)):
        out = float(value) * bare_factor
    else:
        m = _QUANTITY.match(str(value))
        if not m:
            raise DomainError(f"{label}cannot parse quantity {value!r}")
        num = float(m.group("num"))
        unit = (m.group("unit") or "").strip()
        if not unit:
            out = num * bare_factor
        else:
            try:
                dim, factor = _lookup(unit)
            except DomainError:
                raise DomainError(f"{label}unknown unit {unit!r} in {value!r}") from None
            if dim != dimension:
                raise DomainError(
                    f"{label}expected {dimension} ({UNIT_HELP.get(dimension, '')}), "
                    f"got {dim} unit {unit!r}")
            out = num * factor
    if not math.isfinite(out):
        raise DomainError(f"{label}non-finite quantity {value!r}")
    return out


def to_angular(hz: float) -> float:
    return TWO_PI * hz


def to_cyclic(rad_s: float) -> float:
    return rad_s / TWO_PI


def format_quantity(value: float, unit: str) -> str:
    """Canonical text form used when serializing: full-precision repr + unit."""
    return f"{float(value)!r}{unit}"
