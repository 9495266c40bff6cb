import argparse
import hashlib
import json
import subprocess
import sys

import pytest

from gapcap.cli import build_parser, dispatch
from gapcap.project import bundled_project
from gapcap.units import UNIT_HELP


def run(*argv):
    return dispatch([str(a) for a in argv])


def _leaf_parsers(parser, prefix=()):
    subs = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    if not subs:
        yield prefix, parser
        return
    for name, child in subs[0].choices.items():
        yield from _leaf_parsers(child, prefix + (name,))


def test_design_drum_prints_frequency():
    rep = run("design", "drum", "--radius", "70um", "--stress", "350MPa")
    assert rep.exit_code == 0
    assert "1.9686 MHz" in rep.stdout


def test_design_lc():
    rep = run("design", "lc", "--plate-radius", "22.5um", "--inductance", "10nH")
    assert rep.exit_code == 0 and "GHz" in rep.stdout and "MHz/nm" in rep.stdout


def test_budget_solve():
    rep = run("budget", "--total", "2", "--solve", "cmp")
    assert rep.exit_code == 0
    assert "1.92 nm/mm" in rep.stdout


def test_budget_default_total_is_tolerance_limit():
    rep = run("budget")
    assert "1.6667 nm/mm" in rep.stdout


def test_budget_infeasible_is_validation_error():
    rep = run("budget", "--total", "0.3", "--solve", "cmp")
    assert rep.exit_code == 2 and "infeasible" in rep.stdout


def test_missing_file_exit_2(tmp_path):
    rep = run("fit", "ringdown", tmp_path / "missing.csv")
    assert rep.exit_code == 2
    assert "not found" in rep.stdout


@pytest.mark.parametrize("argv", [["bogus"], ["design", "wing"], ["design", "drum", "--nope"], []])
def test_usage_errors_exit_64(argv):
    rep = run(*argv)
    assert rep.exit_code == 64
    assert "usage:" in rep.stdout


def test_bad_unit_on_flag_is_usage_error():
    assert run("design", "drum", "--radius", "70MHz").exit_code == 64


def test_fit_quality_failure_exit_3(tmp_path):
    p = tmp_path / "grow.csv"
    p.write_text("time_s,power_linear\n" + "".join(f"{t}.0,{1 + t}.0\n" for t in range(20)))
    assert run("fit", "ringdown", p).exit_code == 3


def test_project_validation_error_exit_2(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("lc:\n  x:\n    gap: -150nm\n    plate_radius: 20um\n    inductance: 10nH\n")
    rep = run("--project", p, "budget")
    assert rep.exit_code == 2 and "lc.x" in rep.stdout


def test_help_lists_units_for_every_numeric_flag():
    units = set(UNIT_HELP.values()) | {"count", "integer", "dimensionless", "nm/mm (bare numbers are nm/mm)"}
    seen = 0
    for path, parser in _leaf_parsers(build_parser()):
        text = parser.format_help()
        assert text
        for act in parser._actions:
            if act.type is None or act.type is str or not act.option_strings:
                continue
            seen += 1
            assert act.help and any(f"[{u}" in act.help for u in units), (path, act.option_strings)
    assert seen > 40


def test_help_exits_zero():
    assert run("simulate", "omit", "--help").exit_code == 0


def _sha(p):
    return hashlib.sha256(p.read_bytes()).hexdigest()


@pytest.mark.parametrize("argv, outs", [
    (["simulate", "omit", "--modes", "3", "--noise", "1e-3", "--seed", "5"], ["o.csv", "o.plot.json"]),
    (["simulate", "ringdown", "--seed", "5"], ["o.csv", "o.plot.json"]),
    (["simulate", "lattice"], ["o.csv", "o.json", "o.plot.json"]),
    (["simulate", "disorder", "--trials", "200", "--seed", "5"], ["o.csv"]),
])
def test_simulate_is_byte_deterministic(tmp_path, argv, outs):
    digests = []
    for k in range(2):
        d = tmp_path / str(k)
        d.mkdir()
        rep = run(*argv, "--out", d / "o.csv")
        assert rep.exit_code == 0
        digests.append([_sha(d / o) for o in outs])
        assert sorted(rep.outputs) == sorted(str(d / o) for o in outs)
    assert digests[0] == digests[1]


def test_env_seed_overrides_project_seed(tmp_path, monkeypatch):
    proj = bundled_project("paper-chip")
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    run("--project", proj, "simulate", "ringdown", "--out", a)
    monkeypatch.setenv("GAPCAP_SEED", "99")
    run("--project", proj, "simulate", "ringdown", "--out", b)
    run("simulate", "ringdown", "--out", c)
    assert a.read_bytes() != b.read_bytes()
    assert b.read_bytes() == c.read_bytes()


def test_simulated_csvs_reingest_losslessly(tmp_path):
    from gapcap.traces import read_trace
    r = tmp_path / "r.csv"
    run("simulate", "ringdown", "--out", r, "--seed", "1")
    rep = run("fit", "ringdown", r, "--mech-freq", "2MHz", "--out", tmp_path / "fit.json")
    assert rep.exit_code == 0
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["params"]["Q"] == pytest.approx(4e7, rel=0.03)
    tr = read_trace(r, "ringdown")
    assert r.read_text().split("\n", 2)[2] == "".join(
        f"{x!r},{y!r}\n" for x, y in zip(tr.x.tolist(), tr.y.tolist()))

    o = tmp_path / "o.csv"
    run("simulate", "omit", "--out", o, "--modes", "2", "--spread", "100kHz")
    rep = run("fit", "omit", o, "--modes", "2", "--out", tmp_path / "omit.json")
    assert rep.exit_code == 0
    fit = json.loads((tmp_path / "omit.json").read_text())["params"]
    assert fit["mu_1"] == pytest.approx(100e3, rel=1e-6)
    assert fit["gamma_tot_0"] == pytest.approx(100 * (1 + fit["C_0"]), rel=1e-6)


def test_other_fits_and_stats(tmp_path):
    power = tmp_path / "p.csv"
    power.write_text("power_w,gamma_tot_hz\n0.0,0.05\n1e-6,0.25\n2e-6,0.45\n3e-6,0.65\n")
    rep = run("fit", "power", power)
    assert rep.exit_code == 0 and "gamma_m" in rep.stdout
    heat = tmp_path / "h.csv"
    heat.write_text("cooperativity,n_heat\n1.0,0.1\n10.0,0.4\n100.0,1.6\n")
    assert "beta" in run("fit", "heating", heat).stdout
    from gapcap.data import __file__ as data_init
    from pathlib import Path
    demo = Path(data_init).parent / "demo"
    rep = run("fit", "stress", demo / "freq_vs_radius.csv")
    assert rep.exit_code == 0
    rep = run("fit", "mixture", demo / "bimodal_batch.csv")
    assert rep.exit_code == 0 and "pooled_std" in rep.stdout
    rep = run("stats", "batch", demo / "bimodal_batch.csv", "--out", tmp_path / "kde.csv")
    assert rep.exit_code == 0 and (tmp_path / "kde.plot.json").exists()


def test_stress_subcommands():
    rep = run("stress", "thermal")
    assert rep.exit_code == 0 and "300.749 MPa" in rep.stdout
    rep = run("stress", "stoney", "--curv-after", "-0.01")
    assert rep.exit_code == 0 and "[stoney]" in rep.stdout


def test_project_driven_commands(tmp_path):
    proj = bundled_project("paper-chip")
    rep = run("--verbose", "--project", proj, "design", "drum", "--drum", "d00")
    assert rep.exit_code == 0 and "default drums.*.top_thickness" in rep.stdout
    assert "2.29" in rep.stdout  # 60 um drum at 350 MPa
    rep = run("--project", proj, "design", "lc", "--lc", "lc00")
    assert "5.00000 GHz" in rep.stdout
    ssh = bundled_project("ssh-array")
    rep = run("--project", ssh, "simulate", "lattice", "--out", tmp_path / "l.csv")
    assert "2 mid-gap" in rep.stdout


def test_run_report(tmp_path):
    rj = tmp_path / "rep.json"
    proj = bundled_project("ssh-array")
    run("--report", rj, "--project", proj, "simulate", "disorder", "--trials", "50",
        "--out", tmp_path / "d.json")
    rep = json.loads(rj.read_text())
    assert rep["exit_code"] == 0
    assert rep["inputs"][str(proj)] == _sha(proj)
    assert all((tmp_path / o.split("/")[-1]).exists() for o in rep["outputs"])
    assert set(rep) >= {"command", "inputs", "outputs", "version", "wall_time_s"}


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "gapcap.cli", "design", "drum", "--radius", "70um"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "1.9686 MHz" in out.stdout
    out = subprocess.run([sys.executable, "-m", "gapcap.cli", "bogus"], capture_output=True, text=True)
    assert out.returncode == 64 and "usage" in out.stderr



def test_project_accepts_bundled_name():
    rep = run("--project", "paper-chip", "design", "lc", "--lc", "lc00")
    assert rep.exit_code == 0 and "5.00000 GHz" in rep.stdout
    assert run("--project", "no-such-chip", "budget").exit_code == 2
