"""Fitters for ringdowns, damping sweeps, OMIT spectra, stress and heating data."""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, signal

from ..drum import ALPHA_01, AL_DENSITY
from ..dynamics import omit_response, window_fwhm
from ..errors import (DomainError, FitError, FitQualityError, InputError,
                      RankDeficiencyError, ResolutionError)
from ..traces import Trace
from .lsq import FitReport, least_squares
from .models import exp_floor_model, linear_model, membrane_model, omit_model

TWO_PI = 2.0 * math.pi


def _require_kind(trace: Trace, kind: str):
    if trace.kind != kind:
        raise InputError(f"expected a {kind} trace, got {trace.kind}")


def fit_ringdown(trace: Trace, tail_fraction: float = 0.7,
                 omega_m: float | None = None) -> FitReport:
    """Fit E(t) = A exp(-Gamma_tot t) + floor on the trailing part of a ringdown.

    The leading ``1 - tail_fraction`` of samples is dropped so that an
    initial nonlinear decay does not bias the rate. For a purely
    exponential trace ``tail_fraction=1`` uses every sample and roughly
    quarters the scatter of Q. ``omega_m`` (rad/s) adds the quality
    factor ``Q = omega_m / Gamma_tot`` to the report.
    Amplitude is referred back to t = 0.
    """
    _require_kind(trace, "ringdown")
    if not 0 < tail_fraction <= 1:
        raise InputError("tail_fraction must lie in (0, 1]")
    n = len(trace)
    start = n - max(int(math.ceil(tail_fraction * n)), 3)
    if start < 0:
        raise InputError("ringdown needs at least 3 samples")
    t, y = trace.x[start:], trace.y[start:]
    t0 = t[0]
    tau = t - t0

    # two-point log slope between the first and last 10% of the tail
    k = max(len(t) // 10, 1)
    y1, y2 = np.mean(y[:k]), np.mean(y[-k:])
    t1, t2 = np.mean(tau[:k]), np.mean(tau[-k:])
    if y1 <= 0 or y2 <= 0 or y2 >= y1:
        raise FitQualityError("ringdown tail is not decaying")
    gamma0 = math.log(y1 / y2) / (t2 - t1)
    amp0 = y1 * math.exp(gamma0 * t1)
    rep = least_squares(exp_floor_model(), (tau, y),
                        {"amplitude": amp0, "gamma": gamma0, "floor": 0.0})
    gamma = rep.params["gamma"]
    if not gamma > 0:
        raise FitQualityError(f"fitted decay rate {gamma:.3g} is not positive")

    cov = rep.covariance
    amp_t0 = rep.params["amplitude"]
    amp = amp_t0 * math.exp(gamma * t0)
    # d amp / d(amp_t0, gamma)
    grad = np.array([math.exp(gamma * t0), amp * t0])
    amp_se = math.sqrt(max(grad @ cov[:2, :2] @ grad, 0.0)) if np.all(np.isfinite(cov)) else math.nan
    params = {"gamma_tot": gamma, "amplitude0": amp, "floor": rep.params["floor"]}
    se = {"gamma_tot": rep.std_errors["gamma"], "amplitude0": amp_se,
          "floor": rep.std_errors["floor"]}
    if omega_m is not None:
        params["omega_m"] = omega_m
        se["omega_m"] = 0.0
        params["Q"] = omega_m / gamma
        se["Q"] = params["Q"] * se["gamma_tot"] / gamma
    rep.params, rep.std_errors = params, se
    return rep


def fit_damping_vs_power(points: Trace, sigma=None) -> FitReport:
    """Straight-line fit Gamma_tot = Gamma_m + slope * P.

    The intercept is the intrinsic damping. ``sigma`` (per-point
    uncertainty of Gamma_tot) turns on weighting. A negative intercept is
    reported with a warning.
    """
    _require_kind(points, "damping-vs-power")
    if len(points) < 3:
        raise InputError("need at least 3 power points")
    if np.unique(points.x).size < 2:
        raise RankDeficiencyError("all powers identical: slope and intercept not separable")
    x, y = points.x, points.y
    slope0 = (y[np.argmax(x)] - y[np.argmin(x)]) / (x.max() - x.min())
    rep = least_squares(linear_model(), (x, y), {"slope": slope0, "intercept": float(np.min(y))},
                        sigma=sigma)
    rep.params = {"gamma_m": rep.params["intercept"], "slope": rep.params["slope"]}
    rep.std_errors = {"gamma_m": rep.std_errors["intercept"], "slope": rep.std_errors["slope"]}
    if rep.params["gamma_m"] < 0:
        rep.warnings.append("negative fitted intrinsic damping (unphysical)")
    return rep


def fit_stress_from_radii(points: Trace, density: float = AL_DENSITY) -> FitReport:
    """One-parameter fit of the membrane frequency law to (radius, frequency) data.

    Frequencies are taken as cyclic when the trace's y unit is ``Hz``,
    angular otherwise. Reports ``stress`` and ``stress_rel_se``.
    """
    _require_kind(points, "freq-vs-radius")
    if len(points) < 2:
        raise InputError("need at least 2 points")
    R = points.x
    if np.any(R <= 0):
        raise DomainError("radii must be positive")
    omega = points.y * (TWO_PI if points.y_unit == "Hz" else 1.0)
    sigma_i = density * (omega * R / ALPHA_01) ** 2
    rep = least_squares(membrane_model(density), (R, omega), {"stress": float(np.mean(sigma_i))})
    s = rep.params["stress"]
    if not s > 0:
        raise DomainError(f"fitted stress {s:.3g} Pa is not positive")
    rep.params["stress_rel_se"] = rep.std_errors["stress"] / s
    rep.std_errors["stress_rel_se"] = math.nan
    if points.y_unit == "Hz":
        rep.residual_rms /= TWO_PI
    return rep


def fit_power_law(points: Trace) -> FitReport:
    """n = A * C**beta via linear regression in log-log space."""
    _require_kind(points, "heating")
    if np.any(points.x <= 0) or np.any(points.y <= 0):
        raise InputError("power-law fit needs strictly positive C and n_heat")
    if len(points) < 2:
        raise InputError("need at least 2 points")
    lx, ly = np.log(points.x), np.log(points.y)
    rep = least_squares(linear_model(), (lx, ly), {"slope": 0.0, "intercept": float(np.mean(ly))})
    A = math.exp(rep.params["intercept"])
    rep.params = {"A": A, "beta": rep.params["slope"]}
    rep.std_errors = {"A": A * rep.std_errors["intercept"], "beta": rep.std_errors["slope"]}
    return rep


# --- OMIT -----------------------------------------------------------------

def _noise_level(y):
    d2 = np.diff(y, 2)
    if d2.size == 0:
        return 0.0
    return float(1.4826 * np.median(np.abs(d2 - np.median(d2))) / math.sqrt(6.0))


def detect_windows(delta, mag, n_max=None, min_prominence=None):
    """Transparency-window peaks of |t|, ordered by prominence then frequency."""
    if min_prominence is None:
        min_prominence = max(10.0 * _noise_level(mag), 1e-9)
    peaks, props = signal.find_peaks(mag, prominence=min_prominence)
    prom = props["prominences"]
    order = sorted(range(peaks.size), key=lambda i: (-prom[i], delta[peaks[i]]))
    peaks = peaks[order]
    if n_max is not None:
        peaks = peaks[:n_max]
    return peaks


def _bare_init(delta, mag, mask):
    d, m = delta[mask], mag[mask]
    power = m**2
    dip = 1.0 - power
    k = int(np.argmax(dip))
    depth = dip[k]
    if not 0 < depth <= 1:
        raise FitError("no cavity dip found")
    half = depth / 2.0
    above = np.flatnonzero(dip >= half)
    if above.size == 0 or above[0] == 0 or above[-1] == d.size - 1:
        width = 0.5 * (d[-1] - d[0])  # dip wider than grid; crude
    else:
        width = d[above[-1]] - d[above[0]]
    kappa = max(width, 1e-12)
    ratio = 1.0 - math.sqrt(max(1.0 - depth, 0.0))  # kappa_ext / kappa
    return kappa, min(max(ratio, 1e-3), 1.0) * kappa


def fit_omit(spectrum: Trace, n_modes: int, init: dict | None = None) -> FitReport:
    """Fit |t(delta)| of the multimode OMIT model.

    Free parameters are kappa, kappa_ext and, per mode, the detuning
    ``mu_j`` from the two-photon reference, the bare linewidth
    ``gamma_j`` and the coupling ``G_j``. Derived per-mode cooperativity
    ``C_j`` and total linewidth ``gamma_tot_j`` are added. All rates are in
    the axis units. ``init`` may supply any parameter by name; the rest
    are estimated from the data (bare-dip width for kappa; window position,
    height and width for each mode).
    """
    _require_kind(spectrum, "omit")
    if n_modes < 0:
        raise InputError("n_modes must be >= 0")
    delta, mag = spectrum.x, spectrum.y
    init = dict(init or {})
    model = omit_model(n_modes)

    peaks = detect_windows(delta, mag, n_max=n_modes) if n_modes else np.array([], dtype=int)
    if peaks.size < n_modes and not all(f"mu_{j}" in init for j in range(n_modes)):
        raise FitError(f"found {peaks.size} transparency windows, expected {n_modes}")
    peaks = np.sort(peaks)

    mask = np.ones(delta.size, dtype=bool)
    for pk in peaks:
        # exclude the window region: walk out until |t| stops falling on each side
        lo = pk
        while lo > 0 and mag[lo - 1] < mag[lo]:
            lo -= 1
        hi = pk
        while hi < delta.size - 1 and mag[hi + 1] < mag[hi]:
            hi += 1
        w = max(hi - lo, 2)
        mask[max(lo - w, 0):min(hi + w + 1, delta.size)] = False
    if mask.sum() < 5:
        mask[:] = True
    kappa0, kext0 = _bare_init(delta, mag, mask)
    if "kappa" not in init or "kappa_ext" not in init:
        bare = least_squares(omit_model(0), (delta[mask], mag[mask]),
                             {"kappa": init.get("kappa", kappa0),
                              "kappa_ext": init.get("kappa_ext", kext0)})
        kappa0, kext0 = bare.params["kappa"], bare.params["kappa_ext"]
    theta = {"kappa": init.get("kappa", kappa0), "kappa_ext": init.get("kappa_ext", kext0)}

    baseline = np.abs(omit_response(delta, theta["kappa"], theta["kappa_ext"])) ** 2
    for j in range(n_modes):
        if all(f"{p}_{j}" in init for p in ("mu", "gamma", "G")):
            for p in ("mu", "gamma", "G"):
                theta[f"{p}_{j}"] = init[f"{p}_{j}"]
            continue
        pk = peaks[j]
        mu = delta[pk]
        # local window: between neighbouring peaks
        left = 0 if j == 0 else (peaks[j - 1] + pk) // 2
        right = delta.size if j == n_modes - 1 else (pk + peaks[j + 1]) // 2 + 1
        sl = slice(left, right)
        width = window_fwhm(delta[sl], mag[sl] ** 2, baseline[sl])
        step = np.diff(delta[max(pk - 1, 0):pk + 2]).mean()
        if width < 3 * step:
            raise ResolutionError(
                f"window at {mu:.6g} is {width / step:.2f} grid steps wide (< 3); refine the grid")
        kap, kext = theta["kappa"], theta["kappa_ext"]
        target = mag[pk]

        def height(X):
            return abs(1.0 - (kext / 2.0) / (kap / 2.0 + X - 1j * mu)) - target

        X = 0.0
        if height(0.0) < 0:
            hi = kap
            while height(hi) < 0 and hi < 1e12 * kap:
                hi *= 10
            X = optimize.brentq(height, 0.0, hi) if height(hi) > 0 else kap
        C = 2.0 * X / kap
        gamma = width / (1.0 + C)
        theta[f"mu_{j}"] = init.get(f"mu_{j}", mu)
        theta[f"gamma_{j}"] = init.get(f"gamma_{j}", gamma)
        theta[f"G_{j}"] = init.get(f"G_{j}", math.sqrt(max(X * gamma / 2.0, 1e-30)))

    rep = least_squares(model, (delta, mag), theta)
    kappa = rep.params["kappa"]
    cov = rep.covariance
    names = list(model.names)
    for j in range(n_modes):
        g, G = rep.params[f"gamma_{j}"], rep.params[f"G_{j}"]
        rep.params[f"gamma_{j}"] = g = abs(g)
        rep.params[f"G_{j}"] = G = abs(G)
        C = 4.0 * G**2 / (kappa * g)
        rep.params[f"C_{j}"] = C
        rep.params[f"gamma_tot_{j}"] = g * (1.0 + C)
        # delta method on C(kappa, gamma, G)
        idx = [names.index("kappa"), names.index(f"gamma_{j}"), names.index(f"G_{j}")]
        sub = cov[np.ix_(idx, idx)]
        # gamma_tot = gamma + 4 G^2 / kappa
        for key, grad in ((f"C_{j}", np.array([-C / kappa, -C / g, 2.0 * C / G])),
                          (f"gamma_tot_{j}", np.array([-g * C / kappa, 1.0, 2.0 * g * C / G]))):
            var = float(grad @ sub @ grad) if np.all(np.isfinite(sub)) else math.nan
            rep.std_errors[key] = math.sqrt(var) if var >= 0 else math.nan
    return rep
