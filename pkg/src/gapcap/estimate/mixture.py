"""Two-component Gaussian mixture (EM) and batch summary statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import DegeneracyError, FitError, InputError
from .lsq import FitReport

LL_TOL = 1e-10
MAX_ITER = 500


def _component_logpdf(x, mu, s):
    return -0.5 * ((x - mu) / s) ** 2 - math.log(s) - 0.5 * math.log(2 * math.pi)


def fit_gaussian_mixture2(samples, init: dict | None = None, max_iter: int = MAX_ITER,
                          tol: float = LL_TOL) -> FitReport:
    """Expectation-maximisation for w N(mu1, s1) + (1 - w) N(mu2, s2).

    Means start at the 25th/75th percentiles and both widths at half the
    sample standard deviation unless ``init`` overrides them. Stops when
    the log-likelihood gains less than ``tol``. The log-likelihood history
    is kept on the report and checked to be non-decreasing; a component
    narrower than 1e-6 of the data span raises :class:`DegeneracyError`.
    ``pooled_std`` is the standard deviation of the fitted mixture.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 10:
        raise InputError("mixture fit needs at least 10 samples")
    span = float(x.max() - x.min())
    if span == 0:
        raise DegeneracyError("all samples identical")
    init = dict(init or {})
    q25, q75 = np.percentile(x, [25, 75])
    sd = float(x.std())
    w = init.get("w", 0.5)
    mu1, mu2 = init.get("mu1", q25), init.get("mu2", q75)
    s1, s2 = init.get("sigma1", sd / 2), init.get("sigma2", sd / 2)
    if mu1 == mu2:
        raise InputError("initial means must be distinct")

    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        l1 = math.log(w) + _component_logpdf(x, mu1, s1)
        l2 = math.log1p(-w) + _component_logpdf(x, mu2, s2)
        ll_pts = np.logaddexp(l1, l2)
        ll = float(ll_pts.sum())
        if history and ll < history[-1] - 1e-9 * abs(history[-1]):
            raise FitError(f"log-likelihood decreased at iteration {it}")
        history.append(ll)
        if len(history) > 1 and history[-1] - history[-2] < tol:
            converged = True
            break
        r1 = np.exp(l1 - ll_pts)
        r2 = 1.0 - r1
        n1, n2 = r1.sum(), r2.sum()
        if n1 < 1e-12 or n2 < 1e-12:
            raise DegeneracyError("a mixture component lost all weight")
        w = n1 / x.size
        mu1, mu2 = float(r1 @ x / n1), float(r2 @ x / n2)
        s1 = math.sqrt(float(r1 @ (x - mu1) ** 2 / n1))
        s2 = math.sqrt(float(r2 @ (x - mu2) ** 2 / n2))
        if min(s1, s2) < 1e-6 * span:
            raise DegeneracyError("mixture component collapsed onto a point")

    if mu1 > mu2:
        w, mu1, mu2, s1, s2 = 1.0 - w, mu2, mu1, s2, s1
    mean = w * mu1 + (1 - w) * mu2
    pooled = math.sqrt(w * (s1**2 + mu1**2) + (1 - w) * (s2**2 + mu2**2) - mean**2)
    n = x.size
    n1, n2 = max(w * n, 1e-300), max((1 - w) * n, 1e-300)
    params = {"w": w, "mu1": mu1, "sigma1": s1, "mu2": mu2, "sigma2": s2,
              "mean": mean, "pooled_std": pooled}
    std_errors = {"w": math.sqrt(w * (1 - w) / n),
                  "mu1": s1 / math.sqrt(n1), "sigma1": s1 / math.sqrt(2 * n1),
                  "mu2": s2 / math.sqrt(n2), "sigma2": s2 / math.sqrt(2 * n2),
                  "mean": float(x.std(ddof=1)) / math.sqrt(n),
                  "pooled_std": pooled / math.sqrt(2 * (n - 1))}
    # residual of the empirical CDF against the mixture CDF
    xs = np.sort(x)
    cdf = w * stats.norm.cdf(xs, mu1, s1) + (1 - w) * stats.norm.cdf(xs, mu2, s2)
    ecdf = (np.arange(1, n + 1) - 0.5) / n
    return FitReport(params=params, std_errors=std_errors,
                     residual_rms=float(np.sqrt(np.mean((cdf - ecdf) ** 2))),
                     iterations=it, converged=converged,
                     covariance=np.diag([std_errors[k] ** 2 for k in ("w", "mu1", "sigma1", "mu2", "sigma2")]),
                     message="log-likelihood gain below tolerance" if converged else "iteration limit reached",
                     history=history)


@dataclass
class BatchStats:
    n: int
    min: float
    mean: float
    max: float
    kde_x: np.ndarray
    kde_density: np.ndarray
    bandwidth: float

    def to_dict(self) -> dict:
        return {"n": self.n, "min": self.min, "mean": self.mean, "max": self.max,
                "bandwidth": self.bandwidth}


def batch_stats(samples, grid_points: int = 512) -> BatchStats:
    """Exact min/mean/max and a Gaussian KDE with Silverman's bandwidth.

    The density grid extends five bandwidths past the extreme samples so
    the curve integrates to one on it. Fewer than two distinct samples
    give an empty density curve.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InputError("batch is empty")
    if np.unique(x).size < 2:
        return BatchStats(x.size, float(x.min()), float(x.mean()), float(x.max()),
                          np.array([]), np.array([]), 0.0)
    kde = stats.gaussian_kde(x, bw_method="silverman")
    h = float(np.sqrt(kde.covariance[0, 0]))
    grid = np.linspace(x.min() - 5 * h, x.max() + 5 * h, grid_points)
    return BatchStats(x.size, float(x.min()), float(x.mean()), float(x.max()),
                      grid, kde(grid), h)
