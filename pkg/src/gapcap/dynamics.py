"""Driven optomechanical response.

Rates are angular unless stated otherwise. The OMIT response uses the
side-coupled (notch) input-output convention with the pump parked on the
red sideband of a reference mechanical mode, in the resolved-sideband
regime::

    t(delta) = 1 - (kappa_ext/2) / (kappa/2 - i delta
                   + sum_j G_j^2 / (Gamma_j/2 - i (delta - mu_j)))

with ``delta`` the probe detuning from the two-photon resonance,
``G_j = g0_j sqrt(n_cav)`` and ``mu_j = Omega_j - Omega_ref``. The formula
is homogeneous in the rates, so it can be evaluated in Hz as well.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import constants

from .drum import MechanicalMode
from .errors import DomainError, InputError
from .traces import Trace

K_B = constants.k


@dataclass(frozen=True)
class OptomechParams:
    omega_c: float
    kappa: float
    kappa_ext: float
    g0: float = 0.0
    n_cav: float = 0.0
    n_th: float = 0.0
    T: float = 0.01

    def __post_init__(self):
        if not 0 < self.kappa_ext <= self.kappa:
            raise DomainError("need 0 < kappa_ext <= kappa")
        if self.g0 < 0 or self.n_cav < 0 or self.n_th < 0:
            raise DomainError("g0, n_cav and n_th must be non-negative")


class SpectrumReference(str, Enum):
    CAVITY_CENTER = "cavity-center"
    PUMP_PLUS_OMEGA_M = "pump-plus-Ωm"


@dataclass(frozen=True)
class Spectrum:
    detuning: np.ndarray
    response: np.ndarray
    reference: SpectrumReference = SpectrumReference.PUMP_PLUS_OMEGA_M

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.response)


def cooperativity(p: OptomechParams, mode: MechanicalMode, g0: float | None = None) -> float:
    """C = 4 g0^2 n_cav / (kappa Gamma_m)."""
    if not (mode.gamma_m > 0 and p.kappa > 0):
        raise DomainError("cooperativity needs Gamma_m > 0 and kappa > 0")
    g = p.g0 if g0 is None else g0
    return 4.0 * g * g * p.n_cav / (p.kappa * mode.gamma_m)


def effective_damping(gamma_m: float, C: float) -> float:
    """Optically damped linewidth Gamma_m (1 + C)."""
    if not gamma_m > 0:
        raise DomainError("gamma_m must be positive")
    if C < 0:
        raise DomainError("cooperativity must be non-negative")
    return gamma_m * (1.0 + C)


def omit_response(delta, kappa, kappa_ext, mu=(), gamma=(), G=()):
    """Complex OMIT transmission over ``delta`` for arrays of mode parameters."""
    delta = np.asarray(delta, dtype=float)
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    G = np.atleast_1d(np.asarray(G, dtype=float))
    denom = kappa / 2.0 - 1j * delta
    if mu.size:
        mech = gamma[:, None] / 2.0 - 1j * (delta[None, :] - mu[:, None])
        denom = denom + np.sum((G**2)[:, None] / mech, axis=0)
    return 1.0 - (kappa_ext / 2.0) / denom


def omit_spectrum(p: OptomechParams, modes: Sequence[MechanicalMode], axis,
                  g0: Sequence[float] | None = None, ref_index: int = 0) -> Spectrum:
    """OMIT transmission over the probe-detuning grid ``axis`` (rad/s).

    ``g0`` gives per-mode single-photon couplings (defaults to ``p.g0``
    for every mode). Mode detunings are measured from
    ``modes[ref_index]``. An empty mode list gives the bare cavity dip.
    """
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size < 1 or np.any(np.diff(axis) <= 0):
        raise InputError("detuning axis must be strictly increasing")
    if not modes:
        return Spectrum(axis, omit_response(axis, p.kappa, p.kappa_ext))
    g = np.full(len(modes), p.g0) if g0 is None else np.asarray(g0, dtype=float)
    if g.size != len(modes):
        raise InputError("need one g0 per mode")
    omega_ref = modes[ref_index].omega_m
    if omega_ref <= p.kappa:
        warnings.warn("Omega_m <= kappa: outside the resolved-sideband regime "
                      "assumed by the OMIT model", stacklevel=2)
    mu = np.array([m.omega_m - omega_ref for m in modes])
    gamma = np.array([m.gamma_m for m in modes])
    G = g * math.sqrt(p.n_cav)
    return Spectrum(axis, omit_response(axis, p.kappa, p.kappa_ext, mu, gamma, G))


def window_fwhm(delta, power, baseline) -> float:
    """Full width at half height of a transparency window.

    ``power`` is |t|^2 on the grid ``delta`` and ``baseline`` the bare
    cavity |t|^2 on the same grid; the window is their difference. Widths
    come from linear interpolation of the half-height crossings around the
    maximum.
    """
    delta = np.asarray(delta, dtype=float)
    excess = np.asarray(power, dtype=float) - np.asarray(baseline, dtype=float)
    k = int(np.argmax(excess))
    half = excess[k] / 2.0
    i = k
    while i > 0 and excess[i] > half:
        i -= 1
    j = k
    while j < excess.size - 1 and excess[j] > half:
        j += 1
    if excess[i] > half or excess[j] > half:
        raise InputError("window not resolved inside the grid")
    left = np.interp(half, [excess[i], excess[i + 1]], [delta[i], delta[i + 1]])
    right = np.interp(half, [excess[j], excess[j - 1]], [delta[j], delta[j - 1]])
    return float(right - left)


@dataclass(frozen=True)
class NonlinearDecay:
    """Extra amplitude-dependent decay gamma_nl * E / e_sat while E > threshold."""

    gamma_nl: float
    e_sat: float
    threshold: float


def _nonlinear_energy(t, gamma, e0, nl: NonlinearDecay):
    # dE/dt = -gamma E - b E^2 has a closed form; below threshold it is a pure exponential
    b = nl.gamma_nl / nl.e_sat
    if e0 <= nl.threshold:
        return e0 * np.exp(-gamma * t)
    decay = np.exp(-gamma * t)
    e_nl = gamma * e0 * decay / (gamma + b * e0 * (1.0 - decay))
    # exp(-gamma t*) at which the nonlinear branch reaches the threshold
    x = nl.threshold * (gamma + b * e0) / (e0 * (gamma + b * nl.threshold))
    t_star = -math.log(x) / gamma
    e_lin = nl.threshold * np.exp(-gamma * (t - t_star))
    return np.where(t < t_star, e_nl, e_lin)


def ringdown_trace(mode: MechanicalMode, C_readout: float, t_axis, amplitude0: float = 1.0,
                   noise_floor: float = 0.0, seed: int = 0, noise_std: float = 0.0,
                   nonlinear: NonlinearDecay | None = None) -> Trace:
    """Synthetic energy ringdown.

    E(t) = amplitude0 exp(-Gamma_tot t) + noise_floor + noise, with
    Gamma_tot = Gamma_m (1 + C_readout). ``noise_std`` scales white
    Gaussian noise drawn from a generator seeded with ``seed``; sample
    ``i`` always receives the ``i``-th draw, so a trace is a prefix of any
    longer trace with the same seed.
    """
    t = np.asarray(t_axis, dtype=float)
    if t.ndim != 1 or np.any(np.diff(t) <= 0):
        raise InputError("time axis must be strictly increasing")
    gamma_tot = effective_damping(mode.gamma_m, C_readout)
    if nonlinear is None:
        energy = amplitude0 * np.exp(-gamma_tot * t)
    else:
        energy = _nonlinear_energy(t, gamma_tot, amplitude0, nonlinear)
    energy = energy + noise_floor
    if noise_std:
        rng = np.random.default_rng(seed)
        energy = energy + noise_std * rng.standard_normal(t.size)
    return Trace(t, energy, "ringdown",
                 meta={"gamma_tot": gamma_tot, "omega_m": mode.omega_m, "seed": seed})


@dataclass(frozen=True)
class PowerLaw:
    """n_heat(C) = A * C**beta."""

    A: float
    beta: float

    def __call__(self, C):
        return self.A * np.asarray(C, dtype=float) ** self.beta


def cooling_occupancy(p: OptomechParams, mode: MechanicalMode,
                      heating: PowerLaw | None = None, C: float | None = None):
    """Final phonon occupancy under red-sideband cooling.

    Optical damping Gamma_opt = C Gamma_m pulls the mode towards the
    quantum back-action limit (kappa / 4 Omega_m)^2 plus any cavity heating
    n_heat(C). ``C`` defaults to :func:`cooperativity` of ``p``; it may be
    an array for sweeps.
    """
    if C is None:
        C = cooperativity(p, mode)
    C = np.asarray(C, dtype=float)
    if np.any(C < 0):
        raise DomainError("cooperativity must be non-negative")
    gamma = mode.gamma_m
    gamma_opt = C * gamma
    n_min = (p.kappa / (4.0 * mode.omega_m)) ** 2
    n_heat = heating(C) if heating is not None else 0.0
    n_f = (p.n_th * gamma + gamma_opt * n_min + p.kappa * n_heat * (gamma_opt / p.kappa)) / (gamma + gamma_opt)
    return float(n_f) if n_f.ndim == 0 else n_f


def force_sensitivity(mode: MechanicalMode, T: float) -> float:
    """Thermal force noise sqrt(2 k_B T m_eff Gamma_m), N/sqrt(Hz).

    Gamma_m enters in cyclic units (Hz); ``mode.gamma_m`` is angular and
    is converted here. With the angular value the result is sqrt(2 pi)
    larger.
    """
    if not (T > 0 and mode.gamma_m > 0 and mode.m_eff > 0):
        raise DomainError("force sensitivity needs T, Gamma_m and m_eff positive")
    gamma_hz = mode.gamma_m / (2.0 * math.pi)
    return math.sqrt(2.0 * K_B * T * mode.m_eff * gamma_hz)
