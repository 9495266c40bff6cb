"""Vacuum-gap LC circuit: capacitance, resonance, coupling, gap tolerance budget.

Non-uniformity values (epsilon) are dimensionless gap change per lateral
distance internally; the text interfaces use nm/mm (1 nm/mm = 1e-6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants

from .drum import MechanicalMode
from .errors import BudgetError, DomainError

EPS0 = constants.epsilon_0
HBAR = constants.hbar
NM_PER_MM = 1e-6

# Per-step non-uniformity of the reference process flow, nm/mm.
REFERENCE_STEPS = (
    ("si-etch", 0.5),
    ("al-evaporation", 0.1),
    ("lto", 0.2),
    ("ibe", 0.1),
)


@dataclass(frozen=True)
class LcDesign:
    gap: float
    plate_radius: float
    inductance: float
    hole_fill: float = 0.0
    stray_capacitance: float = 0.0
    participation: float = 1.0

    def __post_init__(self):
        if not self.gap > 0:
            raise DomainError("gap must be positive")
        if not self.plate_radius > 0:
            raise DomainError("plate_radius must be positive")
        if not self.inductance > 0:
            raise DomainError("inductance must be positive")
        if not 0.0 <= self.hole_fill < 1.0:
            raise DomainError("hole_fill must lie in [0, 1)")
        if self.stray_capacitance < 0:
            raise DomainError("stray_capacitance must be non-negative")
        if not 0.0 < self.participation <= 1.0:
            raise DomainError("participation must lie in (0, 1]")


@dataclass(frozen=True)
class BudgetStep:
    name: str
    epsilon: float  # m/m

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise DomainError(f"step {self.name}: epsilon must be non-negative")


@dataclass(frozen=True)
class ToleranceBudget:
    steps: tuple[BudgetStep, ...] = ()
    lateral_span: float = 2e-3
    freq_tolerance: float = 2 * math.pi * 50e6

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.lateral_span > 0:
            raise DomainError("lateral_span must be positive")
        if not self.freq_tolerance > 0:
            raise DomainError("freq_tolerance must be positive")

    @classmethod
    def reference_default(cls) -> "ToleranceBudget":
        return cls(steps=tuple(BudgetStep(n, e * NM_PER_MM) for n, e in REFERENCE_STEPS))


def gap_capacitance(design: LcDesign) -> float:
    """Parallel-plate capacitance of the gap, fringing neglected (error O(d/R))."""
    if design.gap <= 0:
        raise DomainError("gap must be positive")
    area = math.pi * design.plate_radius**2 * (1.0 - design.hole_fill)
    return EPS0 * area / design.gap


def capacitance(design: LcDesign) -> float:
    """Total capacitance: gap capacitor plus stray."""
    return gap_capacitance(design) + design.stray_capacitance


def resonance(design: LcDesign) -> float:
    """Angular LC resonance 1/sqrt(L C_total)."""
    return 1.0 / math.sqrt(design.inductance * capacitance(design))


@dataclass(frozen=True)
class GapSensitivity:
    fractional: float  # (d omega / omega) per metre of gap change
    absolute: float    # rad/s per metre


def gap_sensitivity(design: LcDesign, omega_c: float | None = None) -> GapSensitivity:
    """Cavity shift per unit gap change: eta / (2d), times omega_c for the absolute value.

    ``omega_c`` defaults to the design's own resonance.
    """
    if omega_c is None:
        omega_c = resonance(design)
    frac = design.participation / (2.0 * design.gap)
    return GapSensitivity(fractional=frac, absolute=omega_c * frac)


def tolerance_limit(budget: ToleranceBudget, omega_c: float, d: float) -> float:
    """Largest total non-uniformity 2 d dw / (l w) keeping circuits within dw."""
    if not (omega_c > 0 and d > 0):
        raise DomainError("omega_c and d must be positive")
    return 2.0 * d * budget.freq_tolerance / (budget.lateral_span * omega_c)


def budget_rss(budget: ToleranceBudget, epsilon_total: float | None = None,
               solve_for: str | None = None) -> float:
    """Root-sum-square process budget.

    With ``solve_for`` unset, returns sqrt(sum eps_i^2). Otherwise returns
    the largest non-uniformity the named step may have while the total
    stays at ``epsilon_total``; the named step need not be in ``budget``.
    """
    if not solve_for:
        return math.sqrt(sum(s.epsilon**2 for s in budget.steps))
    if epsilon_total is None:
        raise DomainError("epsilon_total is required when solving for a step")
    others = sum(s.epsilon**2 for s in budget.steps if s.name != solve_for)
    radicand = epsilon_total**2 - others
    if radicand < 0:
        shortfall = math.sqrt(others) - epsilon_total
        raise BudgetError(
            f"infeasible budget: other steps already total {math.sqrt(others) / NM_PER_MM:.4g} nm/mm, "
            f"exceeding the {epsilon_total / NM_PER_MM:.4g} nm/mm limit by "
            f"{shortfall / NM_PER_MM:.4g} nm/mm", shortfall=shortfall)
    return math.sqrt(radicand)


def zero_point_motion(mode: MechanicalMode) -> float:
    if not mode.m_eff > 0:
        raise DomainError("m_eff must be positive")
    return math.sqrt(HBAR / (2.0 * mode.m_eff * mode.omega_m))


def coupling_g0(design: LcDesign, mode: MechanicalMode, omega_c: float | None = None) -> float:
    """Single-photon coupling eta * omega_c / (2 d) * x_zpf, rad/s."""
    if omega_c is None:
        omega_c = resonance(design)
    return design.participation * omega_c / (2.0 * design.gap) * zero_point_motion(mode)


def mutual_inductance_coupling(omega_c: float, mutual: float, inductance: float) -> float:
    """Hopping rate J ~ omega_c M / (2 L) of two inductively coupled identical LCs."""
    return omega_c * mutual / (2.0 * inductance)
