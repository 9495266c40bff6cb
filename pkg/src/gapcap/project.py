"""Project files: a YAML document with unit-suffixed quantities.

Top-level keys: ``name``, ``stress``, ``materials``, ``drums``, ``lc``,
``budget``, ``lattice``, ``seeds``. Unknown keys are rejected, every
quantity is parsed into SI units (frequencies are kept in cyclic Hz
until converted to a domain object), and defaults are recorded together
with where they come from so ``--verbose`` can echo them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .circuit import BudgetStep, LcDesign, ToleranceBudget
from .drum import DrumGeometry
from .errors import ConfigError, GapcapError
from .lattice import Boundary, LatticeSpec
from .materials import Material, load_material
from .units import TWO_PI, format_quantity, parse_quantity

PUBLISHED = "published device value"
CALIBRATED = "calibrated default"
PLACEHOLDER = "placeholder default"

# key -> (dimension, dump unit, default, origin)
DRUM_FIELDS = {
    "trench_radius": ("length", "m", None, None),
    "top_thickness": ("length", "m", 200e-9, PUBLISHED + " (200 nm Al top layer)"),
    "bottom_thickness": ("length", "m", 100e-9, PLACEHOLDER),
    "trench_depth": ("length", "m", 300e-9, PUBLISHED + " (300 nm trench)"),
    "clamp_ratio": ("number", "", 1.0, PLACEHOLDER + " (no tapering)"),
    "hole_radius": ("length", "m", 0.9e-6, PUBLISHED + " (1.8 um release holes)"),
    "hole_count": ("count", "", 0, PLACEHOLDER),
}

LC_FIELDS = {
    "gap": ("length", "m", 200e-9, PUBLISHED + " (200 nm gap)"),
    "plate_radius": ("length", "m", None, None),
    "inductance": ("inductance", "H", None, None),
    "hole_fill": ("number", "", 0.0, PLACEHOLDER),
    "stray_capacitance": ("capacitance", "F", 0.0, PLACEHOLDER),
    "participation": ("number", "", 1.0, PUBLISHED + " (galvanic connection, eta = 1)"),
}

BUDGET_FIELDS = {
    "lateral_span": ("length", "m", 2e-3, PUBLISHED + " (2 mm lattice)"),
    "freq_tolerance": ("frequency", "Hz", 50e6, PUBLISHED + " (50 MHz coupling)"),
    "total": ("strain", "nm/mm", None, None),
}

LATTICE_FIELDS = {
    "n_sites": ("count", "", None, None),
    "omega_site": ("frequency", "Hz", 6e9, PLACEHOLDER),
    "hopping": ("frequency_pair", "Hz", (100e6, 200e6), PLACEHOLDER + " (couplings >100 MHz class)"),
    "boundary": ("text", "", "open", PLACEHOLDER),
    "span": ("length", "m", 2e-3, PUBLISHED + " (2 mm lattice)"),
    "sites": ("names", "", None, None),
}

TOP_KEYS = ("name", "stress", "materials", "drums", "lc", "budget", "lattice", "seeds")


@dataclass
class BudgetSection:
    steps: dict[str, float]  # m/m
    lateral_span: float
    freq_tolerance: float    # Hz
    total: float | None = None

    def to_budget(self) -> ToleranceBudget:
        return ToleranceBudget(
            steps=tuple(BudgetStep(n, e) for n, e in self.steps.items()),
            lateral_span=self.lateral_span,
            freq_tolerance=TWO_PI * self.freq_tolerance)


@dataclass
class LatticeSection:
    n_sites: int
    omega_site: float            # Hz
    hopping: tuple[float, float]  # Hz
    boundary: str
    span: float
    sites: tuple[str, ...]


@dataclass
class ProjectConfig:
    name: str = "project"
    stress: float = 350e6
    materials: dict[str, str] = field(default_factory=dict)
    drums: dict[str, DrumGeometry] = field(default_factory=dict)
    lc: dict[str, LcDesign] = field(default_factory=dict)
    budget: BudgetSection | None = None
    lattice: LatticeSection | None = None
    seeds: dict[str, int] = field(default_factory=dict)
    origins: dict[str, str] = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)

    def material(self, name: str) -> Material:
        if name in self.materials:
            p = Path(self.materials[name])
            return load_material(p if p.is_absolute() else self.base_dir / p)
        return load_material(name)

    def tolerance_budget(self) -> ToleranceBudget:
        if self.budget is None:
            return ToleranceBudget.reference_default()
        return self.budget.to_budget()

    def lattice_spec(self) -> LatticeSpec:
        if self.lattice is None:
            raise ConfigError("project has no lattice section", field="lattice")
        lat = self.lattice
        return LatticeSpec(
            n_sites=lat.n_sites, omega_site=TWO_PI * lat.omega_site,
            hopping=(TWO_PI * lat.hopping[0], TWO_PI * lat.hopping[1]),
            boundary=Boundary(lat.boundary), span=lat.span,
            site_drums=tuple(self.drums[s] for s in lat.sites))

    def seed(self, key: str, default: int = 0) -> int:
        return int(self.seeds.get(key, default))


def _check_keys(section: dict, allowed, where: str):
    if not isinstance(section, dict):
        raise ConfigError("expected a mapping", field=where)
    unknown = [k for k in section if k not in allowed]
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(map(str, unknown))}", field=where)


def _parse_field(raw: dict, key: str, spec, where: str, origins: dict):
    dim, _, default, origin = spec
    path = f"{where}.{key}"
    if key not in raw:
        if default is None and dim != "names":
            if key in ("total", "n_sites"):
                return None
            raise ConfigError("required field missing", field=path)
        origins[path] = origin or "default"
        return default
    value = raw[key]
    try:
        if dim == "count":
            if isinstance(value, bool) or not isinstance(value, int):
                raise GapcapError(f"expected an integer, got {value!r}")
            return value
        if dim == "number":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise GapcapError(f"expected a number, got {value!r}")
            return float(value)
        if dim == "text":
            return str(value)
        if dim == "names":
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise GapcapError("expected a list of names")
            return tuple(value)
        if dim == "frequency_pair":
            if not isinstance(value, list) or len(value) != 2:
                raise GapcapError("expected [J1, J2]")
            return tuple(parse_quantity(v, "frequency") for v in value)
        if dim == "strain":
            return parse_quantity(value, "strain", bare_factor=1e-6)
        return parse_quantity(value, dim)
    except GapcapError as exc:
        raise ConfigError(str(exc), field=path) from None


def _parse_record(raw, fields, where, origins):
    _check_keys(raw, fields, where)
    return {k: _parse_field(raw, k, spec, where, origins) for k, spec in fields.items()}


def _build(cls, kwargs, where):
    try:
        return cls(**kwargs)
    except GapcapError as exc:
        raise ConfigError(str(exc), field=where) from None


def parse_project(data, base_dir: Path | None = None) -> ProjectConfig:
    """Validate a parsed YAML mapping and apply defaults."""
    if data is None:
        data = {}
    _check_keys(data, TOP_KEYS, "<root>")
    origins: dict[str, str] = {}
    cfg = ProjectConfig(base_dir=base_dir or Path.cwd(), origins=origins)
    cfg.name = str(data.get("name", "project"))
    if "stress" in data:
        try:
            cfg.stress = parse_quantity(data["stress"], "stress")
        except GapcapError as exc:
            raise ConfigError(str(exc), field="stress") from None
        if not cfg.stress > 0:
            raise ConfigError("membrane model requires tensile stress", field="stress")
    else:
        origins["stress"] = PUBLISHED + " (350 MPa cryogenic Al stress)"

    mats = data.get("materials", {}) or {}
    _check_keys(mats, mats.keys(), "materials")
    for name, path in mats.items():
        cfg.materials[str(name)] = str(path)
        try:
            cfg.material(str(name))
        except (GapcapError, OSError) as exc:
            raise ConfigError(str(exc), field=f"materials.{name}") from None
    origins.setdefault("materials.Al", CALIBRATED)
    origins.setdefault("materials.Si", CALIBRATED)

    for name, raw in (data.get("drums", {}) or {}).items():
        where = f"drums.{name}"
        cfg.drums[str(name)] = _build(DrumGeometry, _parse_record(raw, DRUM_FIELDS, where, origins), where)
    for name, raw in (data.get("lc", {}) or {}).items():
        where = f"lc.{name}"
        cfg.lc[str(name)] = _build(LcDesign, _parse_record(raw, LC_FIELDS, where, origins), where)

    if "budget" in data:
        raw = data["budget"] or {}
        _check_keys(raw, tuple(BUDGET_FIELDS) + ("steps",), "budget")
        vals = {k: _parse_field(raw, k, spec, "budget", origins) for k, spec in BUDGET_FIELDS.items()}
        steps = {}
        raw_steps = raw.get("steps", {}) or {}
        _check_keys(raw_steps, raw_steps.keys(), "budget.steps")
        for sname, sval in raw_steps.items():
            try:
                eps = parse_quantity(sval, "strain", bare_factor=1e-6)
            except GapcapError as exc:
                raise ConfigError(str(exc), field=f"budget.steps.{sname}") from None
            if eps < 0:
                raise ConfigError("non-uniformity must be non-negative", field=f"budget.steps.{sname}")
            steps[str(sname)] = eps
        cfg.budget = BudgetSection(steps=steps, **vals)
        _build(lambda: cfg.budget.to_budget(), {}, "budget")

    if "lattice" in data:
        raw = data["lattice"] or {}
        vals = _parse_record(raw, LATTICE_FIELDS, "lattice", origins)
        sites = vals["sites"] or ()
        for s in sites:
            if s not in cfg.drums:
                raise ConfigError(f"dangling reference to drum {s!r}", field="lattice.sites")
        if vals["n_sites"] is None:
            vals["n_sites"] = len(sites)
        vals["sites"] = tuple(sites)
        if vals["boundary"] not in ("open", "periodic"):
            raise ConfigError("boundary must be 'open' or 'periodic'", field="lattice.boundary")
        cfg.lattice = LatticeSection(**vals)
        _build(cfg.lattice_spec, {}, "lattice")

    seeds = data.get("seeds", {}) or {}
    _check_keys(seeds, seeds.keys(), "seeds")
    for k, v in seeds.items():
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError("seed must be an integer", field=f"seeds.{k}")
        cfg.seeds[str(k)] = v
    return cfg


def load_project(path) -> ProjectConfig:
    """Read, parse and validate a project file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"project file not found: {path}")
    text = path.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ConfigError(f"parse error: {getattr(exc, 'problem', exc)}", line=line, column=col) from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", line=1, column=1)
    return parse_project(data, base_dir=path.parent)


def _q(value, unit):
    return format_quantity(value, unit) if unit else (value if isinstance(value, int) else float(value))


def project_to_dict(cfg: ProjectConfig) -> dict:
    """Canonical, fully explicit form of a project (all defaults written out)."""
    out: dict = {"name": cfg.name, "stress": format_quantity(cfg.stress, "Pa")}
    if cfg.materials:
        out["materials"] = dict(cfg.materials)
    if cfg.drums:
        out["drums"] = {n: {k: _q(getattr(g, k), spec[1]) for k, spec in DRUM_FIELDS.items()}
                        for n, g in cfg.drums.items()}
    if cfg.lc:
        out["lc"] = {n: {k: _q(getattr(d, k), spec[1]) for k, spec in LC_FIELDS.items()}
                     for n, d in cfg.lc.items()}
    if cfg.budget is not None:
        b = cfg.budget
        sec = {"lateral_span": format_quantity(b.lateral_span, "m"),
               "freq_tolerance": format_quantity(b.freq_tolerance, "Hz")}
        if b.total is not None:
            sec["total"] = format_quantity(b.total / 1e-6, "nm/mm")
        sec["steps"] = {n: format_quantity(e / 1e-6, "nm/mm") for n, e in b.steps.items()}
        out["budget"] = sec
    if cfg.lattice is not None:
        lat = cfg.lattice
        out["lattice"] = {
            "n_sites": lat.n_sites,
            "omega_site": format_quantity(lat.omega_site, "Hz"),
            "hopping": [format_quantity(h, "Hz") for h in lat.hopping],
            "boundary": lat.boundary,
            "span": format_quantity(lat.span, "m"),
            "sites": list(lat.sites),
        }
    if cfg.seeds:
        out["seeds"] = dict(cfg.seeds)
    return out


def dump_project(cfg: ProjectConfig) -> str:
    return yaml.safe_dump(project_to_dict(cfg), sort_keys=False, default_flow_style=False,
                          allow_unicode=True)


def default_origins_report(cfg: ProjectConfig) -> str:
    """One line per defaulted field; per-record fields are grouped as ``drums.*.key``."""
    groups: dict[tuple[str, str], int] = {}
    for k, v in cfg.origins.items():
        parts = k.split(".")
        if len(parts) == 3 and parts[0] in ("drums", "lc"):
            k = f"{parts[0]}.*.{parts[2]}"
        groups[(k, v)] = groups.get((k, v), 0) + 1
    return "\n".join(f"default {k}: {v}" + (f" [{n} records]" if n > 1 else "")
                     for (k, v), n in sorted(groups.items()))


def bundled_project(name: str) -> Path:
    """Path of a shipped example project (``paper-chip``, ``ssh-array``)."""
    from importlib import resources
    ref = resources.files("gapcap.data").joinpath(f"{name}.yaml")
    if not ref.is_file():
        raise ConfigError(f"no bundled project named {name!r}")
    return Path(str(ref))
