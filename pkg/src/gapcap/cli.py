"""``gapcap`` command-line front end.

Exit codes: 0 success, 2 validation or input error, 3 fit did not
converge, 64 usage error (unknown subcommand or flag).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import circuit, drum, dynamics, lattice, materials
from .errors import ConfigError, FitError, GapcapError
from .estimate import (batch_stats, fit_damping_vs_power, fit_gaussian_mixture2, fit_omit,
                       fit_power_law, fit_ringdown, fit_stress_from_radii)
from .project import ProjectConfig, bundled_project, default_origins_report, load_project
from .traces import format_csv, read_trace
from .units import TWO_PI, UNIT_HELP, parse_quantity

EXIT_OK, EXIT_INVALID, EXIT_NOCONVERGE, EXIT_USAGE = 0, 2, 3, 64
NM_PER_MM = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


@dataclass
class RunReport:
    command: list[str]
    exit_code: int = EXIT_OK
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    version: str = __version__
    wall_time_s: float = 0.0
    stdout: str = ""

    def to_dict(self) -> dict:
        return {"command": self.command, "exit_code": self.exit_code, "inputs": self.inputs,
                "outputs": self.outputs, "version": self.version, "wall_time_s": self.wall_time_s}


class _Run:
    """Collects printed lines, input digests and written files for one command."""

    def __init__(self, report: RunReport):
        self.report = report
        self.lines: list[str] = []

    def echo(self, line=""):
        self.lines.append(str(line))

    def digest(self, path):
        p = Path(path)
        self.report.inputs[str(p)] = hashlib.sha256(p.read_bytes()).hexdigest()

    def write(self, path, text: str):
        p = Path(path)
        if p.parent and not p.parent.exists():
            p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        self.report.outputs.append(str(p))
        return p

    def write_plot(self, data_path, x, y, xlabel, ylabel, title):
        data_path = Path(data_path)
        spec = {"data": data_path.name, "x": x, "y": y, "xlabel": xlabel, "ylabel": ylabel,
                "title": title, "mark": "line"}
        self.write(data_path.with_suffix(".plot.json"), json.dumps(spec, indent=2) + "\n")


# --- flag helpers ----------------------------------------------------------

def _q(dim, bare_factor=1.0):
    def conv(text):
        try:
            return parse_quantity(text, dim, bare_factor=bare_factor)
        except GapcapError as exc:
            raise argparse.ArgumentTypeError(str(exc))
    conv.__name__ = dim
    return conv


def _add(p, flag, dim, help, default=None, **kw):
    unit = UNIT_HELP.get(dim, dim)
    if dim == "strain":
        unit = "nm/mm (bare numbers are nm/mm)"
        conv = _q(dim, NM_PER_MM)
    elif dim in ("int",):
        unit, conv = "count", int
    elif dim == "number":
        unit, conv = "dimensionless", float
    else:
        conv = _q(dim)
    dflt = f"; default {default}" if default is not None else ""
    p.add_argument(flag, type=conv, default=None if default is None else conv(str(default)),
                   help=f"{help} [{unit}{dflt}]", **kw)


def _seed(args, cfg: ProjectConfig | None, key: str) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("GAPCAP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise GapcapError(f"GAPCAP_SEED must be an integer, got {env!r}") from None
    return cfg.seed(key) if cfg else 0


def _fmt(v, digits=6):
    return f"{v:.{digits}g}"


# --- design ----------------------------------------------------------------

def cmd_design_drum(args, cfg, run: _Run):
    if args.drum:
        if not cfg or args.drum not in cfg.drums:
            raise ConfigError(f"no drum named {args.drum!r} in project", field="drums")
        geom = cfg.drums[args.drum]
    else:
        if args.radius is None:
            raise GapcapError("--radius or --drum is required")
        geom = drum.DrumGeometry(trench_radius=args.radius, top_thickness=args.top_thickness,
                                 clamp_ratio=args.clamp_ratio, hole_radius=args.hole_radius,
                                 hole_count=args.hole_count)
    stress = args.stress if args.stress is not None else (cfg.stress if cfg else 350e6)
    density = args.density
    omega = drum.fundamental_frequency(geom, stress, density)
    m_eff = drum.effective_mass(geom, density)
    q = drum.quality_factor(args.q0, args.dq)
    clamp = drum.clamp_stress(stress, geom.clamp_ratio, args.yield_stress)
    run.echo(f"trench radius      {_fmt(geom.trench_radius * 1e6)} um")
    run.echo(f"stress             {_fmt(stress / 1e6)} MPa")
    run.echo(f"Omega_m/2pi        {omega / TWO_PI / 1e6:.4f} MHz")
    run.echo(f"m_eff              {_fmt(m_eff * 1e12, 4)} ng (J0-mode mass fraction {drum.MODE_MASS_FRACTION:.4f})")
    run.echo(f"Q_m = Q0*DQ        {_fmt(q, 4)}")
    run.echo(f"Gamma_m/2pi        {_fmt(omega / q / TWO_PI, 4)} Hz")
    run.echo(f"clamp stress       {_fmt(clamp.local_stress / 1e6, 4)} MPa "
             f"({'survives' if clamp.survives else 'exceeds'} yield {_fmt(args.yield_stress / 1e9, 3)} GPa)")
    run.echo(f"litho disorder     {_fmt(100 * drum.lithography_disorder(geom.trench_radius, args.delta_d), 4)} % "
             f"(size error {_fmt(args.delta_d * 1e9, 4)} nm)")


def cmd_design_lc(args, cfg, run: _Run):
    if args.lc:
        if not cfg or args.lc not in cfg.lc:
            raise ConfigError(f"no LC design named {args.lc!r} in project", field="lc")
        design = cfg.lc[args.lc]
    else:
        if args.plate_radius is None or args.inductance is None:
            raise GapcapError("--plate-radius and --inductance (or --lc) are required")
        design = circuit.LcDesign(gap=args.gap, plate_radius=args.plate_radius,
                                  inductance=args.inductance, hole_fill=args.hole_fill,
                                  stray_capacitance=args.stray, participation=args.eta)
    C = circuit.capacitance(design)
    wc = circuit.resonance(design)
    sens = circuit.gap_sensitivity(design)
    mode = drum.MechanicalMode(omega_m=TWO_PI * args.mech_freq, gamma_m=0.0, m_eff=args.m_eff)
    g0 = circuit.coupling_g0(design, mode)
    run.echo(f"C_gap              {_fmt(circuit.gap_capacitance(design) * 1e15, 5)} fF")
    run.echo(f"C_total            {_fmt(C * 1e15, 5)} fF")
    run.echo(f"omega_c/2pi        {wc / TWO_PI / 1e9:.5f} GHz")
    run.echo(f"gap sensitivity    {_fmt(sens.absolute / TWO_PI * 1e-9 / 1e6, 5)} MHz/nm "
             f"({_fmt(sens.fractional * 1e-9, 5)} per nm)")
    run.echo(f"x_zpf              {_fmt(circuit.zero_point_motion(mode) * 1e15, 4)} fm")
    run.echo(f"g0/2pi             {_fmt(g0 / TWO_PI, 4)} Hz")


# --- budget ----------------------------------------------------------------

def cmd_budget(args, cfg, run: _Run):
    budget = cfg.tolerance_budget() if cfg else circuit.ToleranceBudget.reference_default()
    if args.step:
        steps = {s.name: s.epsilon for s in budget.steps}
        for item in args.step:
            if "=" not in item:
                raise GapcapError(f"--step expects name=value, got {item!r}")
            name, val = item.split("=", 1)
            steps[name] = parse_quantity(val, "strain", bare_factor=NM_PER_MM, field=f"--step {name}")
        budget = circuit.ToleranceBudget(tuple(circuit.BudgetStep(n, e) for n, e in steps.items()),
                                         budget.lateral_span, budget.freq_tolerance)
    if args.span is not None or args.freq_tol is not None:
        budget = circuit.ToleranceBudget(budget.steps, args.span or budget.lateral_span,
                                         TWO_PI * args.freq_tol if args.freq_tol else budget.freq_tolerance)
    total = args.total
    if total is None and cfg and cfg.budget and cfg.budget.total is not None:
        total = cfg.budget.total
    if total is None:
        total = circuit.tolerance_limit(budget, TWO_PI * args.freq, args.gap)
        run.echo(f"tolerance limit    {total / NM_PER_MM:.4f} nm/mm "
                 f"(gap {_fmt(args.gap * 1e9)} nm, tolerance {_fmt(budget.freq_tolerance / TWO_PI / 1e6)} MHz, "
                 f"span {_fmt(budget.lateral_span * 1e3)} mm, omega_c/2pi {_fmt(args.freq / 1e9)} GHz)")
    run.echo(f"{'step':<20}{'epsilon [nm/mm]':>16}")
    for s in budget.steps:
        run.echo(f"{s.name:<20}{s.epsilon / NM_PER_MM:>16.4f}")
    rss = circuit.budget_rss(budget)
    run.echo(f"{'rss of steps':<20}{rss / NM_PER_MM:>16.4f}")
    run.echo(f"{'total allowed':<20}{total / NM_PER_MM:>16.4f}")
    if args.solve:
        head = circuit.budget_rss(budget, total, args.solve)
        run.echo(f"max {args.solve} non-uniformity: {head / NM_PER_MM:.2f} nm/mm")


# --- stress ----------------------------------------------------------------

def cmd_stress_thermal(args, cfg, run: _Run):
    film = cfg.material(args.film) if cfg else materials.load_material(args.film)
    sub = cfg.material(args.substrate) if cfg else materials.load_material(args.substrate)
    for name in (args.film, args.substrate):
        if Path(name).exists():
            run.digest(name)
    state = materials.thermal_stress(film, sub, args.sigma_rt, args.t_low, args.t_high, args.steps)
    run.echo(f"sigma_RT           {_fmt(state.sigma_rt / 1e6)} MPa")
    run.echo(f"thermal increment  {_fmt((state.sigma_cryo - state.sigma_rt) / 1e6)} MPa "
             f"({film.name} on {sub.name}, {args.t_high:g} K -> {args.t_low:g} K, {args.steps} panels)")
    run.echo(f"sigma_cryo         {_fmt(state.sigma_cryo / 1e6)} MPa [{state.provenance.value}]")


def cmd_stress_stoney(args, cfg, run: _Run):
    sub = cfg.material(args.substrate) if cfg else materials.load_material(args.substrate)
    wafer = materials.WaferGeometry(args.t_sub, args.curv_before, args.curv_after, args.t_film)
    state = materials.stoney_stress(sub, wafer)
    run.echo(f"sigma_film         {_fmt(state.sigma_cryo / 1e6)} MPa [{state.provenance.value}]")


# --- simulate --------------------------------------------------------------

def omit_grid_hz(kappa_hz, mus_hz, gamma_tot_hz, coarse=2001, dense=201):
    """Coarse grid over +-3 kappa plus dense patches (+-5 linewidths) at each window."""
    parts = [np.linspace(-3 * kappa_hz, 3 * kappa_hz, coarse)]
    for mu in mus_hz:
        parts.append(np.linspace(mu - 5 * gamma_tot_hz, mu + 5 * gamma_tot_hz, dense))
    return np.unique(np.concatenate(parts))


def cmd_simulate_omit(args, cfg, run: _Run):
    n = args.modes
    mus = np.linspace(0.0, args.spread, n) if n > 1 else np.zeros(n)
    modes = [drum.MechanicalMode(TWO_PI * (args.mech_freq + mu), TWO_PI * args.gamma_m) for mu in mus]
    p = dynamics.OptomechParams(omega_c=TWO_PI * 6e9, kappa=TWO_PI * args.kappa,
                                kappa_ext=TWO_PI * args.kappa_ext, g0=TWO_PI * args.g0, n_cav=args.n_cav)
    C = dynamics.cooperativity(p, modes[0]) if modes else 0.0
    grid = omit_grid_hz(args.kappa, mus, args.gamma_m * (1 + C))
    spec = dynamics.omit_spectrum(p, modes, TWO_PI * grid)
    mag = spec.magnitude
    seed = _seed(args, cfg, "omit")
    if args.noise:
        mag = mag + args.noise * np.random.default_rng(seed).standard_normal(mag.size)
    out = run.write(args.out, format_csv({"detuning_hz": grid, "mag": mag},
                                         (f"OMIT |t|, {n} modes, C = {C!r}, seed {seed}",)))
    run.write_plot(out, "detuning_hz", "mag", "probe detuning from two-photon resonance [Hz]",
                   "|t|", "OMIT response")
    run.echo(f"wrote {out} ({grid.size} points, cooperativity {C:.4g})")


def cmd_simulate_ringdown(args, cfg, run: _Run):
    mode = drum.MechanicalMode.from_q(TWO_PI * args.mech_freq, args.q)
    gamma_tot = dynamics.effective_damping(mode.gamma_m, args.cooperativity)
    t = np.linspace(0.0, args.decays / gamma_tot, args.samples)
    seed = _seed(args, cfg, "ringdown")
    nl = None
    if args.nonlinear:
        nl = dynamics.NonlinearDecay(gamma_nl=args.nonlinear * gamma_tot, e_sat=1.0, threshold=0.5)
    tr = dynamics.ringdown_trace(mode, args.cooperativity, t, 1.0, args.floor, seed,
                                 noise_std=1.0 / args.snr if args.snr else 0.0, nonlinear=nl)
    out = run.write(args.out, format_csv({"time_s": tr.x, "power_linear": tr.y},
                                         (f"ringdown Q = {args.q!r}, f_m = {args.mech_freq!r} Hz, "
                                          f"C = {args.cooperativity!r}, seed {seed}",)))
    run.write_plot(out, "time_s", "power_linear", "time [s]", "energy [arb, linear]", "ringdown")
    run.echo(f"wrote {out} (Gamma_tot = {gamma_tot!r} 1/s, 1/e time {1 / gamma_tot:.4g} s)")


def _default_lattice(args) -> lattice.LatticeSpec:
    drums = lattice.radius_sweep(50e-6, 0.5e-6, args.n_sites)
    return lattice.LatticeSpec(n_sites=args.n_sites, omega_site=TWO_PI * args.omega,
                               hopping=(TWO_PI * args.j1, TWO_PI * args.j2),
                               boundary=args.boundary, site_drums=drums, span=args.span)


def cmd_simulate_lattice(args, cfg, run: _Run):
    spec = cfg.lattice_spec() if cfg and cfg.lattice else _default_lattice(args)
    modes = lattice.eigenmodes(lattice.build_hamiltonian(spec))
    stress = cfg.stress if cfg else args.stress
    cols = {"mode": np.arange(spec.n_sites), "freq_hz": modes.eigenfrequencies / TWO_PI,
            "ipr": modes.ipr}
    if spec.site_drums:
        cols["site_mech_freq_hz"] = lattice.radius_multiplex(spec, stress) / TWO_PI
    out = run.write(args.out, format_csv(cols, (f"{spec.n_sites}-site {spec.boundary.value} chain",)))
    run.write_plot(out, "mode", "freq_hz", "mode index", "frequency [Hz]", "lattice spectrum")
    js = Path(args.out).with_suffix(".json")
    run.write(js, json.dumps(modes.to_dict(), indent=1) + "\n")
    center = float(np.mean(spec.site_frequencies()))
    gap = abs(spec.hopping[1] - spec.hopping[0])
    mid = lattice.midgap_modes(modes, center, 0.5 * gap) if gap > 0 else []
    run.echo(f"wrote {out} and {js}; {len(mid)} mid-gap mode(s)")


def cmd_simulate_disorder(args, cfg, run: _Run):
    spec = cfg.lattice_spec() if cfg and cfg.lattice else _default_lattice(args)
    seed = _seed(args, cfg, "disorder")
    stress = cfg.stress if cfg else args.stress
    st = lattice.disorder_monte_carlo(spec, args.sigma_r, args.gradient, args.trials, seed, stress)
    d = st.to_dict()
    d["seed"] = seed
    d["analytic_mech_rel_std"] = [args.sigma_r / r for r in spec.radii]
    run.write(args.out, json.dumps(d, indent=1) + "\n")
    run.echo(f"wrote {args.out}: mean relative mechanical spread "
             f"{100 * float(np.mean(st.mech_rel_std)):.4f} % over {args.trials} trials")


# --- fit / stats -----------------------------------------------------------

FIT_KINDS = {"ringdown": "ringdown", "omit": "omit", "power": "damping-vs-power",
             "stress": "freq-vs-radius", "mixture": "q-batch", "heating": "heating"}


def cmd_fit(args, cfg, run: _Run):
    kind = FIT_KINDS[args.fit_kind]
    tr = read_trace(args.csv, kind)
    run.digest(args.csv)
    if args.fit_kind == "ringdown":
        rep = fit_ringdown(tr, args.tail, TWO_PI * args.mech_freq if args.mech_freq else None)
    elif args.fit_kind == "omit":
        rep = fit_omit(tr, args.modes)
    elif args.fit_kind == "power":
        rep = fit_damping_vs_power(tr)
    elif args.fit_kind == "stress":
        rep = fit_stress_from_radii(tr, args.density)
    elif args.fit_kind == "mixture":
        rep = fit_gaussian_mixture2(tr.y)
    else:
        rep = fit_power_law(tr)
    for name, value in rep.params.items():
        se = rep.std_errors.get(name, math.nan)
        run.echo(f"{name:<16}{value:>16.8g}  +- {se:.3g}")
    run.echo(f"residual_rms    {rep.residual_rms:.4g}; iterations {rep.iterations}; "
             f"converged {rep.converged}")
    for w in rep.warnings:
        run.echo(f"warning: {w}")
    if args.out:
        run.write(args.out, rep.to_json())
    if not rep.converged:
        run.echo(f"fit did not converge: {rep.message}")
        return EXIT_NOCONVERGE
    return EXIT_OK


def cmd_stats_batch(args, cfg, run: _Run):
    tr = read_trace(args.csv, "q-batch")
    run.digest(args.csv)
    st = batch_stats(tr.y)
    run.echo(f"n {st.n}  min {st.min:.6g}  mean {st.mean:.6g}  max {st.max:.6g}  "
             f"(KDE bandwidth {st.bandwidth:.4g})")
    if args.out:
        out = run.write(args.out, format_csv({"value": st.kde_x, "density": st.kde_density},
                                             (f"Silverman KDE of {Path(args.csv).name}",)))
        run.write_plot(out, "value", "density", "value", "density", "batch density")


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gapcap", description="Vacuum-gap capacitor optomechanics toolkit.")
    ap.add_argument("--project", help="project file (YAML) or bundled name (paper-chip, ssh-array)")
    ap.add_argument("--verbose", action="store_true", help="echo defaults and their origin")
    ap.add_argument("--report", help="write a JSON run report to this path")
    ap.add_argument("--version", action="version", version=f"gapcap {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    design = sub.add_parser("design", help="forward design calculators")
    dsub = design.add_subparsers(dest="what", parser_class=_Parser, metavar="{drum,lc}")
    dsub.required = True
    p = dsub.add_parser("drum", help="drum frequency, mass, Q and clamp checks")
    p.add_argument("--drum", help="drum name from the project file")
    _add(p, "--radius", "length", "trench radius")
    _add(p, "--stress", "stress", "tensile film stress (project value or 350MPa)")
    _add(p, "--density", "density", "film density", "2700")
    _add(p, "--top-thickness", "length", "top plate thickness", "200nm")
    _add(p, "--clamp-ratio", "number", "clamp ratio", "1")
    _add(p, "--hole-radius", "length", "release hole radius", "0")
    _add(p, "--hole-count", "int", "number of release holes", "0")
    _add(p, "--q0", "number", "material quality factor", "4e5")
    _add(p, "--dq", "number", "dilution factor", "100")
    _add(p, "--yield-stress", "stress", "yield stress", "1GPa")
    _add(p, "--delta-d", "length", "lithographic size error", "500nm")
    p.set_defaults(func=cmd_design_drum)
    p = dsub.add_parser("lc", help="capacitance, resonance, gap sensitivity, g0")
    p.add_argument("--lc", help="LC design name from the project file")
    _add(p, "--gap", "length", "vacuum gap", "200nm")
    _add(p, "--plate-radius", "length", "capacitor plate radius")
    _add(p, "--inductance", "inductance", "inductance")
    _add(p, "--hole-fill", "number", "fraction of plate area removed", "0")
    _add(p, "--stray", "capacitance", "stray capacitance", "0")
    _add(p, "--eta", "number", "participation ratio", "1")
    _add(p, "--mech-freq", "frequency", "mechanical frequency for g0", "2MHz")
    _add(p, "--m-eff", "mass", "effective mass for g0", "2ng")
    p.set_defaults(func=cmd_design_lc)

    p = sub.add_parser("budget", help="gap non-uniformity budget")
    _add(p, "--total", "strain", "total allowed non-uniformity (default: computed tolerance limit)")
    p.add_argument("--solve", help="step name whose maximum non-uniformity to solve for")
    p.add_argument("--step", action="append", help="override/add a step: name=value [nm/mm]")
    _add(p, "--gap", "length", "target gap", "200nm")
    _add(p, "--freq", "frequency", "central cavity frequency", "6GHz")
    _add(p, "--freq-tol", "frequency", "frequency tolerance (default 50MHz)")
    _add(p, "--span", "length", "lateral span (default 2mm)")
    p.set_defaults(func=cmd_budget)

    stress = sub.add_parser("stress", help="film stress models")
    ssub = stress.add_subparsers(dest="what", parser_class=_Parser, metavar="{thermal,stoney}")
    ssub.required = True
    p = ssub.add_parser("thermal", help="cool-down stress integral")
    p.add_argument("--film", default="Al", help="film material table or default name [default Al]")
    p.add_argument("--substrate", default="Si", help="substrate table or default name [default Si]")
    _add(p, "--sigma-rt", "stress", "room-temperature film stress", "0")
    _add(p, "--t-low", "temperature", "base temperature", "10mK")
    _add(p, "--t-high", "temperature", "room temperature", "300K")
    _add(p, "--steps", "int", "trapezoid panels", "1024")
    p.set_defaults(func=cmd_stress_thermal)
    p = ssub.add_parser("stoney", help="stress from wafer bow change")
    p.add_argument("--substrate", default="Si", help="substrate table or default name [default Si]")
    _add(p, "--t-sub", "length", "substrate thickness", "523um")
    _add(p, "--t-film", "length", "film thickness", "200nm")
    _add(p, "--curv-before", "curvature", "curvature before deposition", "0")
    _add(p, "--curv-after", "curvature", "curvature after deposition", required=True)
    p.set_defaults(func=cmd_stress_stoney)

    simulate = sub.add_parser("simulate", help="synthetic spectra, traces and ensembles")
    msub = simulate.add_subparsers(dest="what", parser_class=_Parser,
                                   metavar="{omit,ringdown,lattice,disorder}")
    msub.required = True
    p = msub.add_parser("omit", help="multimode OMIT spectrum -> CSV detuning_hz,mag")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="noise seed [integer]")
    _add(p, "--modes", "int", "number of mechanical modes", "1")
    _add(p, "--spread", "frequency", "detuning span of the modes", "300kHz")
    _add(p, "--mech-freq", "frequency", "reference mechanical frequency", "2MHz")
    _add(p, "--gamma-m", "frequency", "bare mechanical linewidth", "100Hz")
    _add(p, "--kappa", "frequency", "cavity linewidth", "1MHz")
    _add(p, "--kappa-ext", "frequency", "external coupling rate", "500kHz")
    _add(p, "--g0", "frequency", "single-photon coupling", "15Hz")
    _add(p, "--n-cav", "number", "intracavity photons", "1e6")
    _add(p, "--noise", "number", "additive noise std on |t|", "0")
    p.set_defaults(func=cmd_simulate_omit)
    p = msub.add_parser("ringdown", help="energy ringdown -> CSV time_s,power_linear")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="noise seed [integer]")
    _add(p, "--q", "number", "mechanical quality factor", "4e7")
    _add(p, "--mech-freq", "frequency", "mechanical frequency", "2MHz")
    _add(p, "--cooperativity", "number", "readout cooperativity", "0")
    _add(p, "--decays", "number", "trace length in 1/e decay times", "3")
    _add(p, "--samples", "int", "number of samples", "2000")
    _add(p, "--snr", "number", "initial amplitude / noise std (0 = noiseless)", "100")
    _add(p, "--floor", "number", "constant noise floor", "0")
    _add(p, "--nonlinear", "number", "initial extra decay, in units of Gamma_tot (0 = off)", "0")
    p.set_defaults(func=cmd_simulate_ringdown)
    for name, func, helptext in (("lattice", cmd_simulate_lattice, "SSH eigenmodes -> CSV + JSON"),
                                 ("disorder", cmd_simulate_disorder, "disorder Monte Carlo -> JSON")):
        p = msub.add_parser(name, help=helptext)
        p.add_argument("--out", required=True)
        _add(p, "--n-sites", "int", "sites (without project lattice)", "12")
        _add(p, "--omega", "frequency", "site frequency", "6GHz")
        _add(p, "--j1", "frequency", "intra-cell hopping", "100MHz")
        _add(p, "--j2", "frequency", "inter-cell hopping", "200MHz")
        p.add_argument("--boundary", choices=("open", "periodic"), default="open")
        _add(p, "--span", "length", "lateral span", "2mm")
        _add(p, "--stress", "stress", "film stress", "350MPa")
        if name == "disorder":
            p.add_argument("--seed", type=int, help="Monte Carlo seed [integer]")
            _add(p, "--sigma-r", "length", "radius error std", "500nm")
            _add(p, "--gradient", "strain", "max wafer gap gradient", "2")
            _add(p, "--trials", "int", "Monte Carlo trials", "10000")
        p.set_defaults(func=func)

    fit = sub.add_parser("fit", help="fit measurement CSVs")
    fsub = fit.add_subparsers(dest="fit_kind", parser_class=_Parser, metavar="{" + ",".join(FIT_KINDS) + "}")
    fsub.required = True
    for kind in FIT_KINDS:
        p = fsub.add_parser(kind, help=f"fit a {FIT_KINDS[kind]} trace CSV")
        p.add_argument("csv")
        p.add_argument("--out", help="write the FitReport JSON here")
        if kind == "ringdown":
            _add(p, "--tail", "number", "fraction of trailing samples to fit", "0.7")
            _add(p, "--mech-freq", "frequency", "mechanical frequency, adds Q to the report")
        if kind == "omit":
            _add(p, "--modes", "int", "number of transparency windows", "1")
        if kind == "stress":
            _add(p, "--density", "density", "film density", "2700")
        p.set_defaults(func=cmd_fit)

    stats = sub.add_parser("stats", help="batch statistics")
    tsub = stats.add_subparsers(dest="what", parser_class=_Parser, metavar="{batch}")
    tsub.required = True
    p = tsub.add_parser("batch", help="min/mean/max and KDE of a value column")
    p.add_argument("csv")
    p.add_argument("--out", help="write the KDE curve CSV here")
    p.set_defaults(func=cmd_stats_batch)
    return ap


def dispatch(argv: list[str] | None = None) -> RunReport:
    """Run one command and return its report (never exits)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    report = RunReport(command=["gapcap", *argv])
    run = _Run(report)
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        report.exit_code = EXIT_USAGE
        report.stdout = str(exc) + "\n"
        return report
    except SystemExit as exc:  # --help / --version
        report.exit_code = int(exc.code or 0)
        return report
    try:
        cfg = None
        if args.project:
            path = args.project
            if not Path(path).exists() and re.fullmatch(r"[\w-]+", path):
                path = str(bundled_project(path))
            cfg = load_project(path)
            run.digest(path)
            if args.verbose:
                run.echo(default_origins_report(cfg))
        code = args.func(args, cfg, run)
        report.exit_code = code or EXIT_OK
    except FitError as exc:
        run.echo(f"fit error: {exc}")
        report.exit_code = EXIT_NOCONVERGE
    except FileNotFoundError as exc:
        run.echo(f"error: file not found: {exc.filename or exc}")
        report.exit_code = EXIT_INVALID
    except (GapcapError, ValueError, OSError) as exc:
        run.echo(f"error: {exc}")
        report.exit_code = EXIT_INVALID
    report.wall_time_s = time.perf_counter() - t0
    report.stdout = "\n".join(run.lines) + ("\n" if run.lines else "")
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return report


def main(argv=None) -> int:
    report = dispatch(argv)
    stream = sys.stdout if report.exit_code in (EXIT_OK, EXIT_NOCONVERGE) else sys.stderr
    stream.write(report.stdout)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
