"""Parameter estimation: least-squares engine and the measurement fitters."""

from .fitters import (detect_windows, fit_damping_vs_power, fit_omit, fit_power_law,
                      fit_ringdown, fit_stress_from_radii)
from .lsq import FitReport, Model, least_squares, numeric_jacobian
from .mixture import BatchStats, batch_stats, fit_gaussian_mixture2

__all__ = [
    "BatchStats", "FitReport", "Model", "batch_stats", "detect_windows",
    "fit_damping_vs_power", "fit_gaussian_mixture2", "fit_omit", "fit_power_law",
    "fit_ringdown", "fit_stress_from_radii", "least_squares", "numeric_jacobian",
]
