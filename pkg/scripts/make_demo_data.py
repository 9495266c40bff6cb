"""Regenerate the shipped example projects and demo datasets.

Writes into src/gapcap/data/ (projects) and src/gapcap/data/demo/
(CSV datasets plus one README per dataset). Output is deterministic.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import yaml

from gapcap import drum, dynamics
from gapcap.circuit import EPS0
from gapcap.traces import format_csv
from gapcap.units import TWO_PI

DATA = Path(__file__).resolve().parents[1] / "src" / "gapcap" / "data"
DEMO = DATA / "demo"

STRESS = 350e6
DENSITY = 2700.0


def chip_project() -> dict:
    radii = np.linspace(60e-6, 100e-6, 16)
    freqs = np.linspace(5e9, 7e9, 16)
    L, d = 10e-9, 200e-9
    drums, lcs = {}, {}
    for i, (r, f) in enumerate(zip(radii, freqs)):
        drums[f"d{i:02d}"] = {"trench_radius": f"{r * 1e6:.4g}um"}
        c = 1.0 / (L * (TWO_PI * f) ** 2)
        plate = math.sqrt(c * d / (EPS0 * math.pi))
        lcs[f"lc{i:02d}"] = {"gap": "200nm", "plate_radius": f"{plate * 1e6:.4f}um",
                             "inductance": "10nH"}
    return {
        "name": "paper-chip",
        "stress": "350MPa",
        "drums": drums,
        "lc": lcs,
        "budget": {"lateral_span": "2mm", "freq_tolerance": "50MHz",
                   "steps": {"si-etch": "0.5nm/mm", "al-evaporation": "0.1nm/mm",
                             "lto": "0.2nm/mm", "ibe": "0.1nm/mm"}},
        "seeds": {"omit": 1, "ringdown": 2, "disorder": 3},
    }


def ssh_array() -> dict:
    radii = 50.0 + 0.5 * np.arange(12)
    drums = {f"s{i:02d}": {"trench_radius": f"{r:g}um"} for i, r in enumerate(radii)}
    return {
        "name": "ssh-array",
        "stress": "350MPa",
        "drums": drums,
        "lattice": {"omega_site": "6GHz", "hopping": ["100MHz", "200MHz"],
                    "boundary": "open", "span": "2mm", "sites": list(drums)},
        "seeds": {"disorder": 7},
    }


def write(path: Path, text: str):
    path.write_text(text)
    print(f"wrote {path.relative_to(DATA.parents[2])}")


def ringdown():
    q, fm = 4e7, 2e6
    mode = drum.MechanicalMode.from_q(TWO_PI * fm, q)
    t = np.linspace(0.0, 3.0 / mode.gamma_m, 2000)
    tr = dynamics.ringdown_trace(mode, 0.0, t, 1.0, 0.0, seed=20, noise_std=0.01)
    write(DEMO / "ringdown_q4e7.csv",
          format_csv({"time_s": tr.x, "power_linear": tr.y},
                     (f"ringdown Q = {q!r}, f_m = {fm!r} Hz, SNR 100, seed 20",)))
    write(DEMO / "ringdown_q4e7.md", f"""# ringdown_q4e7.csv

Free energy decay of a 2 MHz drum with Q = 4e7 (Gamma_m = {mode.gamma_m!r} 1/s),
three 1/e times long, 2000 samples. Unit initial energy, additive Gaussian
noise of std 0.01 (SNR 100), seed 20.

Anchor: the measured Q_m = 4e7 of the best drum.

    gapcap fit ringdown src/gapcap/data/demo/ringdown_q4e7.csv --mech-freq 2MHz
""")


def freq_vs_radius():
    rng = np.random.default_rng(14)
    nominal = np.linspace(60e-6, 100e-6, 14)
    actual = nominal + rng.uniform(-1e-6, 1e-6, nominal.size)
    f = drum.membrane_frequency(actual, STRESS, DENSITY) / TWO_PI
    write(DEMO / "freq_vs_radius.csv",
          format_csv({"radius_m": nominal, "freq_hz": f},
                     ("nominal radius vs measured frequency, 350 MPa, +-1 um jitter, seed 14",)))
    write(DEMO / "freq_vs_radius.md", """# freq_vs_radius.csv

Fourteen drums with nominal trench radii 60-100 um. Frequencies are the
membrane fundamental of the actual radius, which differs from the nominal
one by a uniform error in +-1 um (seed 14). Film stress 350 MPa, Al density
2700 kg/m3.

Anchor: cryogenic Al film stress of 350 MPa (+-10%).

    gapcap fit stress src/gapcap/data/demo/freq_vs_radius.csv
""")


def bimodal_batch():
    rng = np.random.default_rng(45)
    s = 25e3
    half = math.sqrt(45e3**2 - s**2)
    n = 80
    centre = 2.0e6
    x = np.concatenate([rng.normal(centre - half, s, n // 2), rng.normal(centre + half, s, n // 2)])
    rng.shuffle(x)
    write(DEMO / "bimodal_batch.csv",
          format_csv({"value": x}, ("mechanical frequencies of one batch [Hz], seed 45",)))
    write(DEMO / "bimodal_batch.md", f"""# bimodal_batch.csv

Eighty mechanical frequencies (Hz) from two equal-weight Gaussian
populations centred at 2 MHz -+ {half:.0f} Hz, each of width 25 kHz, so the
mixture's pooled standard deviation is 45 kHz (seed 45).

Anchor: a 45 kHz spread of mechanical frequencies within one batch.

    gapcap fit mixture src/gapcap/data/demo/bimodal_batch.csv
    gapcap stats batch src/gapcap/data/demo/bimodal_batch.csv
""")


def sputtering_table():
    cols = {"temperature_c": np.array([20.0, 100.0, 200.0, 250.0, 350.0]),
            "stress_mpa": np.array([-53.0, 35.0, 41.0, 47.0, 61.0]),
            "roughness_nm": np.array([2.0, 10.0, 15.0, 17.0, 20.0])}
    write(DEMO / "sputtering_table.csv",
          format_csv(cols, ("room-temperature stress and roughness of Al sputtered at elevated temperature",)))
    write(DEMO / "sputtering_table.md", """# sputtering_table.csv

Room-temperature film stress (MPa, tensile positive) and surface roughness
Ra (nm) of aluminium films sputtered at the listed substrate temperature
(deg C). Tabulated values, not generated.

Anchor: the published high-temperature sputtering results for Al on Si.
""")


def main():
    DEMO.mkdir(parents=True, exist_ok=True)
    for name, doc in (("paper-chip", chip_project()), ("ssh-array", ssh_array())):
        write(DATA / f"{name}.yaml", yaml.safe_dump(doc, sort_keys=False))
    ringdown()
    freq_vs_radius()
    bimodal_batch()
    sputtering_table()


if __name__ == "__main__":
    main()
