"""Forward models used by the fitters, each with an analytic Jacobian."""

from __future__ import annotations

import numpy as np

from ..drum import ALPHA_01
from .lsq import Model


def _linear_f(x, th):
    return th[0] * x + th[1]


def _linear_jac(x, th):
    return np.column_stack([x, np.ones_like(x)])


def linear_model() -> Model:
    """y = slope * x + intercept."""
    return Model(("slope", "intercept"), _linear_f, _linear_jac)


def _exp_f(x, th):
    A, gamma, floor = th
    return A * np.exp(-gamma * x) + floor


def _exp_jac(x, th):
    A, gamma, _ = th
    e = np.exp(-gamma * x)
    return np.column_stack([e, -A * x * e, np.ones_like(x)])


def exp_floor_model() -> Model:
    """y = amplitude * exp(-gamma * x) + floor."""
    return Model(("amplitude", "gamma", "floor"), _exp_f, _exp_jac)


def membrane_model(density: float) -> Model:
    """Omega(R) = alpha01 / R * sqrt(stress / density); one parameter, the stress."""
    def f(R, th):
        return ALPHA_01 / R * np.sqrt(th[0] / density)

    def jac(R, th):
        return (ALPHA_01 / R * 0.5 / np.sqrt(th[0] * density))[:, None]

    return Model(("stress",), f, jac)


def omit_names(n_modes: int) -> tuple[str, ...]:
    names = ["kappa", "kappa_ext"]
    for j in range(n_modes):
        names += [f"mu_{j}", f"gamma_{j}", f"G_{j}"]
    return tuple(names)


def _omit_parts(delta, th):
    kappa, kappa_ext = th[0], th[1]
    modes = np.asarray(th[2:]).reshape(-1, 3)
    mu, gamma, G = modes[:, 0], modes[:, 1], modes[:, 2]
    S = gamma[:, None] / 2.0 - 1j * (delta[None, :] - mu[:, None])
    D = kappa / 2.0 - 1j * delta + np.sum((G**2)[:, None] / S, axis=0)
    t = 1.0 - (kappa_ext / 2.0) / D
    return kappa_ext, G, S, D, t


def _omit_f(delta, th):
    return np.abs(_omit_parts(delta, th)[-1])


def _omit_jac(delta, th):
    kappa_ext, G, S, D, t = _omit_parts(delta, th)
    mag = np.abs(t)
    dt_dD = (kappa_ext / 2.0) / D**2

    def d_mag(dt):
        return np.real(np.conj(t) * dt) / mag

    cols = [d_mag(dt_dD * 0.5), d_mag(-0.5 / D)]
    for j in range(G.size):
        inv_s2 = G[j] ** 2 / S[j] ** 2
        cols.append(d_mag(dt_dD * (-1j * inv_s2)))        # d/d mu_j
        cols.append(d_mag(dt_dD * (-0.5 * inv_s2)))       # d/d gamma_j
        cols.append(d_mag(dt_dD * (2.0 * G[j] / S[j])))   # d/d G_j
    return np.column_stack(cols)


def omit_model(n_modes: int) -> Model:
    """|t(delta)| of the multimode OMIT response; rates in the axis' units."""
    return Model(omit_names(n_modes), _omit_f, _omit_jac)
