"""Coupled LC arrays: SSH tight-binding model, eigenmodes, disorder Monte Carlo.

The microwave lattice is a beam-splitter (rotating-wave) tight-binding
chain with alternating hopping J1, J2, starting with J1 on the bond
between the first two sites. Drums are site-local oscillators; only the
microwave modes are coupled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .drum import AL_DENSITY, DrumGeometry, membrane_frequency
from .errors import DomainError, InputError


class Boundary(str, Enum):
    OPEN = "open"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class LatticeSpec:
    n_sites: int
    omega_site: float | tuple[float, ...]
    hopping: tuple[float, float]
    boundary: Boundary = Boundary.OPEN
    site_drums: tuple[DrumGeometry, ...] = ()
    span: float = 2e-3  # lateral distance between the outermost sites, m

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "site_drums", tuple(self.site_drums))
        object.__setattr__(self, "hopping", tuple(float(j) for j in self.hopping))
        if self.n_sites < 2:
            raise DomainError("lattice needs at least 2 sites")
        if len(self.hopping) != 2 or min(self.hopping) < 0:
            raise DomainError("hopping must be a non-negative pair (J1, J2)")
        if self.site_drums and len(self.site_drums) != self.n_sites:
            raise DomainError(f"{len(self.site_drums)} drums for {self.n_sites} sites")
        if np.ndim(self.omega_site) and len(self.omega_site) != self.n_sites:
            raise DomainError("per-site omega_site must have n_sites entries")
        if not self.span > 0:
            raise DomainError("span must be positive")

    def site_frequencies(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.omega_site, dtype=float), (self.n_sites,)).copy()

    @property
    def radii(self) -> np.ndarray:
        return np.array([d.trench_radius for d in self.site_drums])


@dataclass(frozen=True)
class ModeSet:
    eigenfrequencies: np.ndarray
    eigenvectors: np.ndarray  # column m is mode m
    ipr: np.ndarray

    def to_dict(self) -> dict:
        return {
            "eigenfrequencies": [float(v) for v in self.eigenfrequencies],
            "eigenvectors": [[float(a) for a in self.eigenvectors[:, m]]
                             for m in range(self.eigenvectors.shape[1])],
            "ipr": [float(v) for v in self.ipr],
        }


def build_hamiltonian(spec: LatticeSpec) -> np.ndarray:
    """Real symmetric tight-binding matrix in rad/s."""
    n = spec.n_sites
    j1, j2 = spec.hopping
    H = np.diag(spec.site_frequencies())
    for k in range(n - 1):
        J = j1 if k % 2 == 0 else j2
        H[k, k + 1] = H[k + 1, k] = J
    if spec.boundary is Boundary.PERIODIC:
        J = j1 if (n - 1) % 2 == 0 else j2
        H[n - 1, 0] += J
        H[0, n - 1] += J
    return H


def eigenmodes(H) -> ModeSet:
    """Full spectrum, orthonormal eigenvectors and inverse participation ratios."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InputError("Hamiltonian must be square")
    scale = max(np.max(np.abs(H)), np.finfo(float).tiny)
    if np.max(np.abs(H - H.T)) > 1e-12 * scale:
        raise InputError("Hamiltonian is not symmetric")
    w, v = np.linalg.eigh(0.5 * (H + H.T))
    ipr = np.sum(np.abs(v) ** 4, axis=0)
    return ModeSet(w, v, ipr)


def midgap_modes(modes: ModeSet, center: float, gap_halfwidth: float) -> np.ndarray:
    """Indices of modes lying strictly inside ``center +- gap_halfwidth``."""
    return np.flatnonzero(np.abs(modes.eigenfrequencies - center) < gap_halfwidth)


def edge_states(modes: ModeSet, indices) -> tuple[np.ndarray, np.ndarray]:
    """Sublattice-resolved basis of a set of mid-gap modes.

    In a finite chain the two edge states hybridise into an even and an
    odd combination split by an exponentially small energy, so each
    eigenvector sits half on each end. Diagonalising the chiral operator
    diag(+1, -1, +1, ...) inside the mid-gap subspace separates them
    again. Returns ``(vectors, ipr)`` with one column per state.
    """
    idx = np.atleast_1d(np.asarray(indices, dtype=int))
    V = modes.eigenvectors[:, idx]
    if idx.size == 0:
        return V, np.zeros(0)
    chiral = np.where(np.arange(V.shape[0]) % 2 == 0, 1.0, -1.0)
    _, rot = np.linalg.eigh(V.T @ (chiral[:, None] * V))
    W = V @ rot
    return W, np.sum(np.abs(W) ** 4, axis=0)


def radius_multiplex(spec: LatticeSpec, stress: float, density: float = AL_DENSITY) -> np.ndarray:
    """Per-site drum frequencies (rad/s) from the 1/R membrane law."""
    if not spec.site_drums:
        raise DomainError("lattice has no site drums")
    return membrane_frequency(spec.radii, stress, density)


def radius_sweep(start: float, step: float, n: int, **drum_kwargs) -> tuple[DrumGeometry, ...]:
    return tuple(DrumGeometry(trench_radius=start + i * step, **drum_kwargs) for i in range(n))


@dataclass
class DisorderStats:
    trials: int
    mech_mean: np.ndarray
    mech_std: np.ndarray
    micro_mean: np.ndarray
    micro_std: np.ndarray
    micro_spread: np.ndarray = field(repr=False)   # per trial: max - min site frequency
    edge_detuning: np.ndarray = field(repr=False)  # per trial: last-site minus nominal
    mech_splitting_hist: tuple[np.ndarray, np.ndarray] = field(repr=False, default=None)
    micro_spread_hist: tuple[np.ndarray, np.ndarray] = field(repr=False, default=None)

    @property
    def mech_rel_std(self) -> np.ndarray:
        return self.mech_std / self.mech_mean

    @property
    def edge_detuning_range(self) -> float:
        return float(self.edge_detuning.max() - self.edge_detuning.min())

    def to_dict(self) -> dict:
        def lst(a):
            return [float(v) for v in np.ravel(a)]
        return {
            "trials": self.trials,
            "mech_mean_rad_s": lst(self.mech_mean),
            "mech_std_rad_s": lst(self.mech_std),
            "mech_rel_std": lst(self.mech_rel_std),
            "micro_mean_rad_s": lst(self.micro_mean),
            "micro_std_rad_s": lst(self.micro_std),
            "micro_spread_max_rad_s": float(self.micro_spread.max()),
            "edge_detuning_range_rad_s": self.edge_detuning_range,
            "mech_splitting_hist": {"counts": lst(self.mech_splitting_hist[0]),
                                    "edges_rad_s": lst(self.mech_splitting_hist[1])},
            "micro_spread_hist": {"counts": lst(self.micro_spread_hist[0]),
                                  "edges_rad_s": lst(self.micro_spread_hist[1])},
        }


def disorder_monte_carlo(spec: LatticeSpec, sigma_R: float, sigma_gap_gradient: float,
                         trials: int, seed: int = 0, stress: float = 350e6,
                         density: float = AL_DENSITY, bins: int = 30) -> DisorderStats:
    """Fabrication-disorder ensemble for a lattice.

    Each trial draws zero-mean Gaussian radius errors (std ``sigma_R``)
    per site and one linear wafer gap gradient, uniform in
    ``+-sigma_gap_gradient`` (m/m), applied along the chip from the first
    site (position 0) to the last (position ``spec.span``). Site gaps come
    from each drum's trench depth minus bottom thickness; the LC frequency
    scales as sqrt(gap). Trial ``k`` uses a generator keyed by
    ``(seed, k)``, so statistics do not depend on execution order.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not spec.site_drums:
        raise DomainError("disorder model needs site drums")
    radii = spec.radii
    gaps = np.array([d.gap for d in spec.site_drums])
    omega_site = spec.site_frequencies()
    x = np.linspace(0.0, spec.span, spec.n_sites)

    dR = np.empty((trials, spec.n_sites))
    grad = np.empty(trials)
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        dR[k] = rng.standard_normal(spec.n_sites)
        grad[k] = rng.uniform(-1.0, 1.0)
    mech = membrane_frequency(radii[None, :] + sigma_R * dR, stress, density)
    d = gaps[None, :] + sigma_gap_gradient * grad[:, None] * x[None, :]
    if np.any(d <= 0):
        raise DomainError("gap gradient closes a gap")
    micro = omega_site[None, :] * np.sqrt(d / gaps[None, :])

    order = np.argsort(radii, kind="stable")
    splitting = np.abs(np.diff(mech[:, order], axis=1)).ravel()
    spread = micro.max(axis=1) - micro.min(axis=1)
    return DisorderStats(
        trials=trials,
        mech_mean=mech.mean(axis=0),
        mech_std=mech.std(axis=0, ddof=1) if trials > 1 else np.zeros(spec.n_sites),
        micro_mean=micro.mean(axis=0),
        micro_std=micro.std(axis=0, ddof=1) if trials > 1 else np.zeros(spec.n_sites),
        micro_spread=spread,
        edge_detuning=micro[:, -1] - omega_site[-1],
        mech_splitting_hist=np.histogram(splitting, bins=bins),
        micro_spread_hist=np.histogram(spread, bins=bins),
    )
