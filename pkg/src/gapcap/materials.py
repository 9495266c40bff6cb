"""Material property tables and thin-film stress.

Curves are piecewise-linear in temperature. The default aluminium and
silicon tables are *calibrated defaults*: published low-temperature
Y(T)/alpha(T) data for the film/substrate pair are not available, so the
rows are chosen to reproduce a cool-down stress of roughly 300 MPa from
room temperature to 10 mK. Every row is user-overridable via
:func:`load_material`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError, InputError, RangeError

ROOM_TEMPERATURE = 293.0
CURVE_SPAN = (0.01, 300.0)


@dataclass(frozen=True)
class Curve:
    """Piecewise-linear property curve sampled at strictly increasing temperatures."""

    temperatures: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.temperatures, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise InputError("curve needs >= 2 matching temperature/value samples")
        if not np.all(np.diff(t) > 0):
            raise InputError("curve temperatures must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise InputError("curve samples must be finite")
        object.__setattr__(self, "temperatures", tuple(float(x) for x in t))
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    @property
    def span(self) -> tuple[float, float]:
        return self.temperatures[0], self.temperatures[-1]

    def covers(self, t_low: float, t_high: float) -> bool:
        lo, hi = self.span
        return lo <= t_low and t_high <= hi


def interpolate_property(curve: Curve, T):
    """Linearly interpolate ``curve`` at temperature(s) ``T`` (K).

    Sample points are reproduced exactly. Raises :class:`RangeError` when
    any ``T`` lies outside the tabulated span.
    """
    T_arr = np.asarray(T, dtype=float)
    lo, hi = curve.span
    if np.any(T_arr < lo) or np.any(T_arr > hi) or not np.all(np.isfinite(T_arr)):
        raise RangeError(f"temperature {T} K outside curve span [{lo}, {hi}] K")
    out = np.interp(T_arr, curve.temperatures, curve.values)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Material:
    name: str
    density: float
    youngs_modulus: Curve
    thermal_expansion: Curve
    poisson_ratio: float

    def __post_init__(self):
        if not self.density > 0:
            raise DomainError(f"{self.name}: density must be positive")
        if not -1.0 < self.poisson_ratio < 0.5:
            raise DomainError(f"{self.name}: poisson ratio must lie in (-1, 0.5)")
        for label, curve in (("youngs_modulus", self.youngs_modulus),
                             ("thermal_expansion", self.thermal_expansion)):
            if not curve.covers(*CURVE_SPAN):
                raise RangeError(
                    f"{self.name}: {label} curve span {curve.span} does not cover "
                    f"{CURVE_SPAN[0]}-{CURVE_SPAN[1]} K")

    def youngs(self, T):
        return interpolate_property(self.youngs_modulus, T)

    def alpha(self, T):
        return interpolate_property(self.thermal_expansion, T)


class Provenance(str, Enum):
    MEASURED = "measured"
    STONEY = "stoney"
    THERMAL_MODEL = "thermal-model"


@dataclass(frozen=True)
class FilmStressState:
    sigma_rt: float
    sigma_cryo: float
    provenance: Provenance

    def __post_init__(self):
        if not np.isfinite(self.sigma_cryo):
            raise DomainError("cryogenic stress must be finite")


@dataclass(frozen=True)
class WaferGeometry:
    thickness: float
    curvature_before: float
    curvature_after: float
    film_thickness: float

    def __post_init__(self):
        if not self.thickness > 0:
            raise DomainError("substrate thickness must be positive")
        if not self.film_thickness > 0:
            raise DomainError("film thickness must be positive (Stoney needs t_film > 0)")
        if not self.film_thickness < self.thickness / 100:
            raise DomainError("thin-film approximation needs t_film < t_sub/100")


def thermal_stress(film: Material, substrate: Material, sigma_rt: float,
                   T_low: float = 0.01, T_high: float = 300.0,
                   n_steps: int = 1024) -> FilmStressState:
    """Cool-down stress of a film clamped to a substrate.

    Adds ``integral Y_film(T) (alpha_film(T) - alpha_sub(T)) dT`` from
    ``T_low`` to ``T_high`` to the room-temperature stress, using the
    trapezoidal rule on ``n_steps`` uniform panels.
    """
    if n_steps < 2:
        raise DomainError("n_steps must be >= 2")
    if not T_low < T_high:
        raise DomainError("T_low must be below T_high")
    for mat in (film, substrate):
        for curve in (mat.youngs_modulus, mat.thermal_expansion):
            if not curve.covers(T_low, T_high):
                raise RangeError(
                    f"{mat.name}: curve span {curve.span} K does not cover "
                    f"[{T_low}, {T_high}] K")
    T = np.linspace(T_low, T_high, n_steps + 1)
    integrand = film.youngs(T) * (film.alpha(T) - substrate.alpha(T))
    h = (T_high - T_low) / n_steps
    integral = h * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1]))
    return FilmStressState(sigma_rt=sigma_rt, sigma_cryo=sigma_rt + float(integral),
                           provenance=Provenance.THERMAL_MODEL)


def stoney_stress(substrate: Material, wafer: WaferGeometry) -> FilmStressState:
    """Film stress from the wafer bow change (Stoney), tensile positive.

    The biaxial modulus uses the substrate's room-temperature Young's
    modulus since bow is measured at room temperature.
    """
    biaxial = substrate.youngs(ROOM_TEMPERATURE) / (1.0 - substrate.poisson_ratio)
    dk = wafer.curvature_after - wafer.curvature_before
    sigma = -biaxial / 6.0 * wafer.thickness**2 / wafer.film_thickness * dk
    return FilmStressState(sigma_rt=sigma, sigma_cryo=sigma, provenance=Provenance.STONEY)


_HEADER = re.compile(r"^#\s*material\s+(?P<name>\S+)\s+(?P<kv>.*)$")


def parse_material(text: str) -> Material:
    """Parse the plain-text table format.

    First line ``# material <name> rho=<v> nu=<v>``, then whitespace
    separated rows ``T_K Y_Pa alpha_perK`` with ascending temperatures.
    Further ``#`` lines are comments.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InputError("empty material table")
    m = _HEADER.match(lines[0])
    if not m:
        raise InputError("material table must start with '# material <name> rho=<v> nu=<v>'")
    attrs = dict(kv.split("=", 1) for kv in m.group("kv").split() if "=" in kv)
    try:
        rho, nu = float(attrs["rho"]), float(attrs["nu"])
    except (KeyError, ValueError):
        raise InputError("material header needs numeric rho= and nu=") from None
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        if ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 3:
            raise InputError(f"material row {lineno}: expected 'T_K Y_Pa alpha_perK'")
        rows.append([float(p) for p in parts])
    arr = np.array(rows, dtype=float)
    return Material(
        name=m.group("name"), density=rho, poisson_ratio=nu,
        youngs_modulus=Curve(tuple(arr[:, 0]), tuple(arr[:, 1])),
        thermal_expansion=Curve(tuple(arr[:, 0]), tuple(arr[:, 2])),
    )


def format_material(mat: Material) -> str:
    if mat.youngs_modulus.temperatures != mat.thermal_expansion.temperatures:
        raise InputError("table format needs Y and alpha sampled on the same temperatures")
    out = [f"# material {mat.name} rho={mat.density!r} nu={mat.poisson_ratio!r}"]
    for T, Y, a in zip(mat.youngs_modulus.temperatures, mat.youngs_modulus.values,
                       mat.thermal_expansion.values):
        out.append(f"{T!r} {Y!r} {a!r}")
    return "\n".join(out) + "\n"


def load_material(path_or_name) -> Material:
    """Load a table from a file path, or a shipped default by name (``Al``, ``Si``)."""
    p = Path(str(path_or_name))
    if p.exists():
        return parse_material(p.read_text())
    name = str(path_or_name)
    ref = resources.files("gapcap.data").joinpath(f"{name.lower()}.txt")
    if not ref.is_file():
        raise InputError(f"no material file or default named {name!r}")
    return parse_material(ref.read_text())


def default_aluminum() -> Material:
    return load_material("al")


def default_silicon() -> Material:
    return load_material("si")
