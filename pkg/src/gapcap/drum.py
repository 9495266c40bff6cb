"""Drumhead resonator: membrane frequency, dilution Q, clamp stress, disorder.

The top plate is treated as an ideal, fully clamped circular membrane
under tensile stress. Release-hole perforation changes the plate mass but
is ignored in the frequency model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError

DEFAULT_YIELD_STRESS = 1e9  # Pa, from clamp-breakage observations
AL_DENSITY = 2700.0


def bessel_j0(x):
    """J0 from its power series: ~1e-15 absolute for |x| < 4, ~1e-13 by |x| = 8."""
    x = np.asarray(x, dtype=float)
    q = -(x / 2.0) ** 2
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 60):
        term = term * q / (k * k)
        total = total + term
        if np.all(np.abs(term) < 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return float(total) if total.ndim == 0 else total


def _first_zero_j0() -> float:
    lo, hi = 2.0, 3.0
    f_lo = bessel_j0(lo)
    while hi - lo > 4 * np.finfo(float).eps * hi:
        mid = 0.5 * (lo + hi)
        f_mid = bessel_j0(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


ALPHA_01 = _first_zero_j0()


def _mode_mass_fraction() -> float:
    # m_eff / (rho t pi R^2) for the J0 mode normalised to unit centre amplitude
    val, _ = integrate.quad(lambda r: bessel_j0(ALPHA_01 * r) ** 2 * r, 0.0, 1.0,
                            epsabs=1e-14, epsrel=1e-13)
    return 2.0 * val


MODE_MASS_FRACTION = _mode_mass_fraction()


@dataclass(frozen=True)
class DrumGeometry:
    trench_radius: float
    top_thickness: float = 200e-9
    bottom_thickness: float = 100e-9
    trench_depth: float = 300e-9
    clamp_ratio: float = 1.0
    hole_radius: float = 0.0
    hole_count: int = 0

    def __post_init__(self):
        if not self.trench_radius > 0:
            raise DomainError("trench_radius must be positive")
        if not self.top_thickness > 0:
            raise DomainError("top_thickness must be positive")
        if not self.trench_depth > self.bottom_thickness:
            raise DomainError("trench_depth must exceed bottom_thickness")
        if self.clamp_ratio < 1:
            raise DomainError("clamp_ratio must be >= 1")
        if self.hole_radius < 0 or self.hole_count < 0:
            raise DomainError("hole_radius and hole_count must be non-negative")
        if self.hole_count * self.hole_radius**2 >= self.trench_radius**2:
            raise DomainError("perforation removes the whole plate")

    @property
    def gap(self) -> float:
        """Vacuum gap set by trench depth minus bottom-plate thickness."""
        return self.trench_depth - self.bottom_thickness

    @property
    def open_area_fraction(self) -> float:
        return self.hole_count * self.hole_radius**2 / self.trench_radius**2


@dataclass(frozen=True)
class MechanicalMode:
    """A mechanical mode. All rates are angular (rad/s)."""

    omega_m: float
    gamma_m: float
    m_eff: float = 2e-12

    def __post_init__(self):
        if not self.omega_m > 0:
            raise DomainError("omega_m must be positive")
        if self.gamma_m < 0:
            raise DomainError("gamma_m must be non-negative")

    @property
    def q_m(self) -> float:
        return math.inf if self.gamma_m == 0 else self.omega_m / self.gamma_m

    @classmethod
    def from_q(cls, omega_m: float, q_m: float, m_eff: float = 2e-12) -> "MechanicalMode":
        return cls(omega_m=omega_m, gamma_m=omega_m / q_m, m_eff=m_eff)


def membrane_frequency(radius, stress: float, density: float = AL_DENSITY):
    """Fundamental angular frequency of a clamped membrane; vectorised over radius."""
    if not stress > 0:
        raise DomainError("membrane model requires tensile stress")
    if not density > 0:
        raise DomainError("density must be positive")
    return ALPHA_01 / np.asarray(radius, dtype=float) * math.sqrt(stress / density)


def fundamental_frequency(geom: DrumGeometry, stress: float, density: float = AL_DENSITY) -> float:
    """Omega_m = alpha01 / R * sqrt(stress / density), in rad/s."""
    return float(membrane_frequency(geom.trench_radius, stress, density))


def quality_factor(Q0: float, DQ: float) -> float:
    """Dissipation-diluted quality factor Q0 * DQ."""
    if not (Q0 > 0 and DQ > 0):
        raise DomainError("Q0 and DQ must be positive")
    return Q0 * DQ


@dataclass(frozen=True)
class ClampCheck:
    local_stress: float
    survives: bool


def clamp_stress(film_stress: float, CR: float,
                 yield_stress: float = DEFAULT_YIELD_STRESS) -> ClampCheck:
    """Clamp tapering multiplies the film stress by the clamp ratio."""
    if CR < 1:
        raise DomainError("clamp ratio must be >= 1")
    local = film_stress * CR
    return ClampCheck(local_stress=local, survives=bool(local < yield_stress))


def lithography_disorder(R: float, delta_d: float) -> float:
    """Fractional mechanical-frequency disorder from a lateral size error ``delta_d``."""
    if not R > 0:
        raise DomainError("R must be positive")
    if delta_d < 0:
        raise DomainError("delta_d must be non-negative")
    return delta_d / R


def effective_mass(geom: DrumGeometry, density: float = AL_DENSITY,
                   c_mode: float = MODE_MASS_FRACTION) -> float:
    """Modal mass of the fundamental mode.

    ``c_mode`` defaults to the J0-mode mass fraction (about 0.2695),
    i.e. mass referred to the centre-point displacement. Pass 1.0 to get
    the bare plate mass.
    """
    area = math.pi * geom.trench_radius**2 - geom.hole_count * math.pi * geom.hole_radius**2
    return c_mode * density * geom.top_thickness * area
