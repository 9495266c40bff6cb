import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize, stats

from gapcap.errors import (DegeneracyError, FitQualityError, InputError, RankDeficiencyError,
                           ResolutionError)
from gapcap.estimate import (batch_stats, detect_windows, fit_damping_vs_power,
                             fit_gaussian_mixture2, fit_omit, fit_power_law, fit_ringdown,
                             fit_stress_from_radii, least_squares, numeric_jacobian)
from gapcap.estimate.lsq import Model
from gapcap.estimate.models import exp_floor_model, linear_model, membrane_model, omit_model
from gapcap.traces import Trace

from helpers import TWO_PI, omit_trace, radius_points, ringdown


def random_points(model_name, rng):
    if model_name == "linear":
        return linear_model(), np.linspace(-3, 3, 25), rng.normal(size=2) * 3
    if model_name == "exp":
        return exp_floor_model(), np.linspace(0, 5, 40), np.array(
            [rng.uniform(0.1, 5), rng.uniform(0.05, 2), rng.normal()])
    if model_name == "membrane":
        return membrane_model(2700.0), np.linspace(50e-6, 100e-6, 14), np.array([rng.uniform(1e7, 1e9)])
    n = {"omit1": 1, "omit3": 3}[model_name]
    theta = [rng.uniform(0.5e6, 2e6), 0.0]
    theta[1] = rng.uniform(0.2, 0.9) * theta[0]
    for j in range(n):
        theta += [rng.uniform(-2e5, 2e5), rng.uniform(50, 2000), rng.uniform(1e3, 3e4)]
    theta = np.array(theta)
    mus = theta[2::3]
    grid = np.unique(np.concatenate([np.linspace(-3e6, 3e6, 301)]
                                    + [np.linspace(m - 2e4, m + 2e4, 41) for m in mus]))
    return omit_model(n), grid, theta


@pytest.mark.parametrize("name", ["linear", "exp", "membrane", "omit1", "omit3"])
def test_analytic_jacobians_match_central_differences(name):
    rng = np.random.default_rng(2024)
    for _ in range(20):
        model, x, theta = random_points(name, rng)
        Ja = model.jacobian(x, theta)
        Jn = numeric_jacobian(model.f, x, theta, rel_step=1e-5, order=4)
        scale = np.max(np.abs(Ja), axis=0)
        assert np.all(np.abs(Ja - Jn) <= 1e-6 * scale[None, :] + 1e-300), name


def test_five_point_stencil_exact_on_quartic():
    f = lambda x, th: th[0] ** 4 + x * th[1] ** 3
    th = np.array([1.3, -0.7])
    x = np.array([0.0, 2.0])
    exact = np.column_stack([4 * th[0] ** 3 * np.ones(2), 3 * x * th[1] ** 2])
    np.testing.assert_allclose(numeric_jacobian(f, x, th, 1e-2, order=4), exact, rtol=1e-12)
    assert not np.allclose(numeric_jacobian(f, x, th, 1e-2), exact, rtol=1e-6)
    with pytest.raises(InputError):
        numeric_jacobian(f, x, th, order=3)


def test_linear_fit_exact_in_one_iteration():
    x = np.linspace(0, 10, 11)
    rep = least_squares(linear_model(), (x, 3 * x - 2), [0.0, 0.0])
    assert rep.converged and rep.iterations == 1
    assert rep.params["slope"] == pytest.approx(3.0, rel=1e-13)
    assert rep.params["intercept"] == pytest.approx(-2.0, rel=1e-13)


@given(st.floats(-100, 100), st.floats(-100, 100), st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_linear_fit_matches_normal_equations(a, b, seed):
    rng = np.random.default_rng(seed)
    x = np.linspace(-1, 2, 30)
    y = a * x + b + rng.normal(size=x.size)
    rep = least_squares(linear_model(), (x, y), [0.0, 0.0])
    ref = stats.linregress(x, y)
    assert rep.params["slope"] == pytest.approx(ref.slope, rel=1e-9, abs=1e-9)
    assert rep.params["intercept"] == pytest.approx(ref.intercept, rel=1e-9, abs=1e-9)
    assert rep.std_errors["slope"] == pytest.approx(ref.stderr, rel=1e-6)


def test_nonlinear_fit_agrees_with_scipy_curve_fit():
    rng = np.random.default_rng(5)
    x = np.linspace(0, 5, 60)
    y = 2.0 * np.exp(-0.7 * x) + 0.3 + 0.01 * rng.normal(size=x.size)
    rep = least_squares(exp_floor_model(), (x, y), [1.0, 1.0, 0.0])
    popt, pcov = optimize.curve_fit(lambda x, a, g, f: a * np.exp(-g * x) + f, x, y, p0=[1, 1, 0])
    for k, name in enumerate(("amplitude", "gamma", "floor")):
        assert rep.params[name] == pytest.approx(popt[k], rel=1e-6)
        assert rep.std_errors[name] == pytest.approx(math.sqrt(pcov[k, k]), rel=1e-4)


def test_rank_deficient_problem_not_converged():
    model = Model(("a", "b"), lambda x, th: (th[0] + th[1]) * x)
    x = np.linspace(0, 1, 10)
    rep = least_squares(model, (x, 2 * x + 0.01 * np.sin(7 * x)), [1.0, 0.0])
    assert not rep.converged


def test_input_validation():
    with pytest.raises(InputError):
        least_squares(linear_model(), ([1.0], [1.0]), [0.0, 0.0])
    with pytest.raises(InputError):
        least_squares(linear_model(), ([1.0, 2.0], [1.0, 2.0]), [np.nan, 0.0])


def test_report_json_has_five_keys():
    x = np.linspace(0, 1, 5)
    rep = least_squares(linear_model(), (x, x), [0.0, 0.0])
    d = json.loads(rep.to_json())
    assert set(d) == {"params", "std_errors", "residual_rms", "iterations", "converged"}


def test_ringdown_noiseless_exact():
    tr, mode = ringdown(snr=0)
    rep = fit_ringdown(tr, omega_m=mode.omega_m)
    assert rep.params["gamma_tot"] == pytest.approx(mode.gamma_m, rel=1e-9)
    assert rep.params["Q"] == pytest.approx(4e7, rel=1e-9)
    assert rep.params["amplitude0"] == pytest.approx(1.0, rel=1e-9)


def test_ringdown_noisy_within_three_percent():
    tr, mode = ringdown(seed=1)
    rep = fit_ringdown(tr, omega_m=mode.omega_m)
    assert rep.converged
    assert rep.params["Q"] == pytest.approx(4e7, rel=0.03)


def test_ringdown_skips_initial_nonlinear_segment():
    from gapcap.dynamics import NonlinearDecay, ringdown_trace
    from gapcap.drum import MechanicalMode
    mode = MechanicalMode(TWO_PI * 2e6, 0.5)
    t = np.linspace(0, 12, 1200)
    tr = ringdown_trace(mode, 0.0, t, nonlinear=NonlinearDecay(2.0, 1.0, 0.3))
    assert fit_ringdown(tr, tail_fraction=0.5).params["gamma_tot"] == pytest.approx(0.5, rel=0.02)
    # fitting through the fast initial segment biases the rate upward
    assert fit_ringdown(tr, tail_fraction=1.0).params["gamma_tot"] > 0.5 * 1.02


def test_ringdown_rejects_growth():
    t = np.linspace(0, 1, 50)
    with pytest.raises(FitQualityError):
        fit_ringdown(Trace(t, np.exp(t), "ringdown"))


def test_damping_vs_power():
    P = np.linspace(0, 1e-6, 8)
    tr = Trace(P, 0.3 + 2e6 * P, "damping-vs-power")
    rep = fit_damping_vs_power(tr)
    assert rep.params["gamma_m"] == pytest.approx(0.3, rel=1e-10)
    assert rep.params["slope"] == pytest.approx(2e6, rel=1e-10)
    neg = fit_damping_vs_power(Trace(P, -0.3 + 2e6 * P, "damping-vs-power"))
    assert neg.warnings
    with pytest.raises(RankDeficiencyError):
        fit_damping_vs_power(Trace(np.ones(4), np.arange(4.0), "damping-vs-power"))


def test_stress_noiseless_and_jittered():
    rep = fit_stress_from_radii(radius_points(jitter=0.0))
    assert rep.params["stress"] == pytest.approx(350e6, rel=1e-4)
    jit = fit_stress_from_radii(radius_points(seed=4))
    assert jit.params["stress"] == pytest.approx(350e6, rel=0.10)
    assert jit.params["stress_rel_se"] < 0.10


def test_power_law():
    C = np.logspace(0, 3, 10)
    rep = fit_power_law(Trace(C, 0.2 * C**0.6, "heating"))
    assert rep.params["A"] == pytest.approx(0.2, rel=1e-10)
    assert rep.params["beta"] == pytest.approx(0.6, rel=1e-10)
    with pytest.raises(InputError):
        fit_power_law(Trace(C, -C, "heating"))


@pytest.mark.parametrize("C", [0.1, 1.0, 10.0])
def test_single_mode_omit_fit(C):
    tr, mus, gtot = omit_trace(1, C)
    rep = fit_omit(tr, 1)
    assert rep.converged
    assert rep.params["gamma_tot_0"] == pytest.approx(gtot, rel=1e-6)
    assert rep.params["C_0"] == pytest.approx(C, rel=1e-6)
    assert rep.params["kappa"] == pytest.approx(1e6, rel=1e-8)
    assert math.isfinite(rep.std_errors["gamma_tot_0"])


def test_omit_std_errors_cover_noisy_truth():
    tr, mus, gtot = omit_trace(2, 3.0, spread_hz=50e3, noise=2e-3, seed=8)
    rep = fit_omit(tr, 2)
    for j in range(2):
        assert abs(rep.params[f"gamma_tot_{j}"] - gtot) < 5 * rep.std_errors[f"gamma_tot_{j}"]
        assert abs(rep.params[f"mu_{j}"] - mus[j]) < 5 * rep.std_errors[f"mu_{j}"]


def test_window_detection_order():
    tr, mus, gtot = omit_trace(3, 1.0, spread_hz=100e3)
    peaks = detect_windows(tr.x, tr.y)
    assert peaks.size == 3
    # raw maxima are pulled by the neighbouring windows; the fit removes that
    np.testing.assert_allclose(np.sort(tr.x[peaks]), mus, atol=0.1 * gtot)


def test_unresolved_window_raises():
    tr, _, gtot = omit_trace(1, 1.0)
    coarse = np.linspace(-3e6, 3e6, 601)
    keep = np.isin(tr.x, coarse) | (np.abs(tr.x) < 0.8 * gtot)
    sparse = Trace(tr.x[keep][::1], tr.y[keep], "omit")
    x = np.linspace(-3e6, 3e6, 6001)  # 1 kHz steps, window ~1 kHz wide
    y = np.interp(x, sparse.x, sparse.y)
    y[np.argmin(np.abs(x))] = tr.y[np.argmin(np.abs(tr.x))]
    with pytest.raises(ResolutionError):
        fit_omit(Trace(x, y, "omit"), 1)


def _mixture_data(seed, n=200, w=0.4, mu=(0.0, 5.0), s=(1.0, 1.5)):
    rng = np.random.default_rng(seed)
    k = rng.random(n) < w
    return np.where(k, rng.normal(mu[0], s[0], n), rng.normal(mu[1], s[1], n))


@pytest.mark.parametrize("seed", range(6))
def test_em_log_likelihood_monotone(seed):
    rep = fit_gaussian_mixture2(_mixture_data(seed))
    h = np.array(rep.history)
    assert np.all(np.diff(h) >= -1e-12 * np.abs(h[1:]))


def test_em_recovers_components():
    rep = fit_gaussian_mixture2(_mixture_data(1, n=5000))
    assert rep.params["w"] == pytest.approx(0.4, abs=0.03)
    assert rep.params["mu1"] == pytest.approx(0.0, abs=0.1)
    assert rep.params["mu2"] == pytest.approx(5.0, abs=0.1)
    x = _mixture_data(1, n=5000)
    assert rep.params["pooled_std"] == pytest.approx(x.std(), rel=0.02)


def test_em_degenerate_and_small_inputs():
    with pytest.raises(InputError):
        fit_gaussian_mixture2(np.arange(5.0))
    with pytest.raises(DegeneracyError):
        fit_gaussian_mixture2(np.ones(20))
    x = np.concatenate([np.zeros(10), np.linspace(5, 6, 10)])
    with pytest.raises(DegeneracyError):
        fit_gaussian_mixture2(x)


def test_batch_stats_exact_extrema_and_normalised_kde():
    x = _mixture_data(3, n=60)
    st_ = batch_stats(x)
    assert (st_.min, st_.max, st_.mean) == (x.min(), x.max(), pytest.approx(x.mean()))
    assert np.trapezoid(st_.kde_density, st_.kde_x) == pytest.approx(1.0, rel=1e-3)
    silverman = (len(x) * 3 / 4) ** (-1 / 5) * x.std(ddof=1)
    assert st_.bandwidth == pytest.approx(silverman, rel=1e-10)
    assert batch_stats([1.0, 1.0]).kde_x.size == 0
