import math

import pytest
from hypothesis import given, strategies as st

from gapcap.circuit import (EPS0, HBAR, BudgetStep, LcDesign, ToleranceBudget, budget_rss,
                            capacitance, coupling_g0, gap_capacitance, gap_sensitivity,
                            mutual_inductance_coupling, resonance, tolerance_limit,
                            zero_point_motion)
from gapcap.drum import MechanicalMode
from gapcap.errors import BudgetError, DomainError

TWO_PI = 2 * math.pi


def test_capacitance_hand_value():
    d = LcDesign(gap=200e-9, plate_radius=20e-6, inductance=10e-9, hole_fill=0.1,
                 stray_capacitance=5e-15)
    parallel = 8.8541878128e-12 * math.pi * (20e-6) ** 2 * 0.9 / 200e-9
    assert gap_capacitance(d) == pytest.approx(parallel, rel=1e-9)
    assert capacitance(d) == pytest.approx(parallel + 5e-15, rel=1e-9)
    assert resonance(d) == pytest.approx(1 / math.sqrt(10e-9 * (parallel + 5e-15)), rel=1e-9)


def test_gap_sensitivity_fifteen_mhz_per_nm():
    d = LcDesign(gap=200e-9, plate_radius=20e-6, inductance=10e-9)
    s = gap_sensitivity(d, omega_c=TWO_PI * 6e9)
    assert s.absolute / TWO_PI * 1e-9 == pytest.approx(15e6, rel=1e-14)
    assert s.fractional == pytest.approx(1 / 400e-9)


@given(st.floats(min_value=50e-9, max_value=1e-6), st.floats(min_value=0.05, max_value=1.0))
def test_sensitivity_matches_numerical_derivative(gap, eta):
    # for eta = 1 and no stray, omega ~ sqrt(d) so d omega / d d = omega / (2d)
    d = LcDesign(gap=gap, plate_radius=20e-6, inductance=10e-9, participation=eta)
    s = gap_sensitivity(d)
    if eta == 1.0:
        h = gap * 1e-6
        num = (resonance(LcDesign(gap + h, 20e-6, 10e-9)) - resonance(LcDesign(gap - h, 20e-6, 10e-9))) / (2 * h)
        assert s.absolute == pytest.approx(num, rel=1e-6)
    assert s.absolute == pytest.approx(eta * resonance(d) / (2 * gap), rel=1e-12)


def test_tolerance_limit_formula():
    b = ToleranceBudget.reference_default()
    eps = tolerance_limit(b, TWO_PI * 6e9, 200e-9)
    assert eps == pytest.approx(2 * 200e-9 * 50e6 / (2e-3 * 6e9), rel=1e-14)
    assert eps / 1e-6 == pytest.approx(5 / 3, rel=1e-12)


def test_rss_solve_for_cmp():
    b = ToleranceBudget.reference_default()
    head = budget_rss(b, 2e-6, "cmp")
    oracle = math.sqrt(2.0**2 - (0.5**2 + 0.1**2 + 0.2**2 + 0.1**2)) * 1e-6
    assert head == pytest.approx(oracle, rel=1e-14)
    assert round(head / 1e-6, 2) == 1.92


def test_rss_plain_sum():
    b = ToleranceBudget((BudgetStep("a", 3e-6), BudgetStep("b", 4e-6)))
    assert budget_rss(b) == pytest.approx(5e-6)


def test_infeasible_budget_reports_shortfall():
    b = ToleranceBudget((BudgetStep("a", 3e-6), BudgetStep("b", 4e-6)))
    with pytest.raises(BudgetError) as exc:
        budget_rss(b, 4e-6, "cmp")
    assert exc.value.shortfall == pytest.approx(1e-6)


@given(st.lists(st.floats(min_value=0, max_value=1e-5), min_size=1, max_size=6))
def test_rss_solution_closes_the_budget(eps):
    steps = tuple(BudgetStep(f"s{i}", e) for i, e in enumerate(eps))
    b = ToleranceBudget(steps)
    total = budget_rss(b) * 1.5 + 1e-9
    x = budget_rss(b, total, "new")
    closed = ToleranceBudget(steps + (BudgetStep("new", x),))
    assert budget_rss(closed) == pytest.approx(total, rel=1e-9)
    assert budget_rss(b) >= max(eps) - 1e-20


def test_coupling_is_order_ten_hz():
    d = LcDesign(gap=200e-9, plate_radius=22.5e-6, inductance=10e-9)
    mode = MechanicalMode(TWO_PI * 2e6, 0.0, m_eff=2e-12)
    xzpf = math.sqrt(HBAR / (2 * 2e-12 * TWO_PI * 2e6))
    assert zero_point_motion(mode) == pytest.approx(xzpf, rel=1e-14)
    assert zero_point_motion(mode) == pytest.approx(1.45e-15, rel=0.01)
    g0 = coupling_g0(d, mode, omega_c=TWO_PI * 6e9) / TWO_PI
    assert g0 == pytest.approx(6e9 / 400e-9 * xzpf, rel=1e-12)
    assert 10 <= g0 < 100


def test_mutual_inductance_coupling():
    assert mutual_inductance_coupling(TWO_PI * 6e9, 0.1e-9, 10e-9) / TWO_PI == pytest.approx(30e6)


@pytest.mark.parametrize("kw", [dict(gap=-150e-9), dict(hole_fill=1.0), dict(participation=0.0)])
def test_design_validation(kw):
    base = dict(gap=200e-9, plate_radius=20e-6, inductance=10e-9)
    base.update(kw)
    with pytest.raises(DomainError):
        LcDesign(**base)


def test_eps0_is_codata():
    assert EPS0 == pytest.approx(8.8541878128e-12, rel=1e-9)
