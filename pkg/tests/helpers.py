"""Synthetic data shared by the estimate and acceptance tests."""

import math

import numpy as np

from gapcap.cli import omit_grid_hz
from gapcap.drum import MechanicalMode, membrane_frequency
from gapcap.dynamics import OptomechParams, omit_spectrum, ringdown_trace
from gapcap.traces import Trace

TWO_PI = 2 * math.pi
KAPPA_HZ = 1e6
KAPPA_EXT_HZ = 0.5e6


def omit_trace(n_modes, C, gamma_hz=500.0, spread_hz=300e3, noise=0.0, seed=0):
    """|t| on a coarse+dense Hz grid; returns (trace, true mu list, gamma_tot)."""
    mus = np.linspace(0.0, spread_hz, n_modes) if n_modes > 1 else np.zeros(n_modes)
    gtot = gamma_hz * (1 + C)
    grid = omit_grid_hz(KAPPA_HZ, mus, gtot)
    g0 = 15.0
    n_cav = C * KAPPA_HZ * gamma_hz / (4 * g0**2)
    # rates in Hz throughout: the OMIT response is homogeneous in its rates
    p = OptomechParams(omega_c=6e9, kappa=KAPPA_HZ, kappa_ext=KAPPA_EXT_HZ, g0=g0, n_cav=n_cav)
    modes = [MechanicalMode(2e6 + mu, gamma_hz) for mu in mus]
    mag = omit_spectrum(p, modes, grid).magnitude
    if noise:
        mag = mag + noise * np.random.default_rng(seed).standard_normal(mag.size)
    return Trace(grid, mag, "omit"), mus, gtot


def ringdown(q=4e7, f_m=2e6, snr=100.0, decays=3.0, n=2000, seed=0):
    mode = MechanicalMode.from_q(TWO_PI * f_m, q)
    t = np.linspace(0.0, decays / mode.gamma_m, n)
    return ringdown_trace(mode, 0.0, t, 1.0, 0.0, seed=seed, noise_std=1.0 / snr if snr else 0.0), mode


def radius_points(stress=350e6, density=2700.0, jitter=1e-6, seed=0, n=14):
    rng = np.random.default_rng(seed)
    R = np.linspace(60e-6, 100e-6, n)
    actual = R + (rng.uniform(-jitter, jitter, n) if jitter else 0.0)
    f = membrane_frequency(actual, stress, density) / TWO_PI
    return Trace(R, f, "freq-vs-radius", y_unit="Hz")
