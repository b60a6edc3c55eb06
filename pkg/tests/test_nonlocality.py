import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqha.fields import Grid1D, PhysicalParams, RealField
from sqha.nonlocality import (INFINITE, PseudoGaussianSpec, TailModel, Typology, case_d_asymptotics,
                              classify_typology, lambda_q, log_amplitude_of, pseudo_gaussian,
                              pseudo_gaussian_log_density)
from sqha.qpotential import QuantumPotentialResult, compute_vqu, compute_vqu_from_log

P = PhysicalParams()
LAM, DQ, LC = 0.2, 0.02, 0.05

# mpmath quadrature of the closed-form force (case d, g = 1, lower limit 0.001)
ORACLE_LQ = {20: 0.22503530172284188, 40: 0.22503530898777633}


def case_d(g):
    return PseudoGaussianSpec("d", LAM, DQ, g)


def tail_vqu(spec, q_max, dx=0.001):
    grid = Grid1D(-1, q_max, int(round((q_max + 1) / dx)) + 1)
    return compute_vqu_from_log(log_amplitude_of(spec, grid), P)


@pytest.fixture(scope="module")
def wide_grid():
    return Grid1D(-1, 100, 101001)


def test_tail_model_phi():
    assert TailModel(1.5, (1, 10), 0.0).phi == 0.0
    assert TailModel(2.0, (1, 10), 0.0).phi == -1.0


def test_spec_validation():
    with pytest.raises(ValueError):
        PseudoGaussianSpec("e")
    with pytest.raises(ValueError):
        PseudoGaussianSpec("d", 1, 0.05)
    with pytest.raises(ValueError):
        PseudoGaussianSpec("c", 1, 0.05, g=2.0)
    with pytest.raises(ValueError):
        PseudoGaussianSpec("d", 1, 0.05, g=2.5)
    with pytest.raises(ValueError):
        PseudoGaussianSpec("b", 1, 0.0)
    assert PseudoGaussianSpec("d", 1, 0.05, g=2.0).g == 2.0
    with pytest.warns(UserWarning):
        PseudoGaussianSpec("a", 0.1, 0.05)


def test_case_a_plateau():
    with pytest.warns(UserWarning):
        spec = PseudoGaussianSpec("a", 0.3, 0.1)
    g = Grid1D(-60, 60, 12001)
    ln = pseudo_gaussian_log_density(spec, g).values
    np.testing.assert_allclose(ln[[0, -1]], -9.0 * 3600 / (3600 + 0.09), rtol=1e-12)
    assert abs(ln[0] + 9.0) < 1e-3   # plateau exp(-Lambda^2/dq^2) relative to the peak


def test_case_d_core_is_gaussian():
    spec = case_d(1.0)
    g = Grid1D(-0.002, 0.002, 401)
    n = np.exp(pseudo_gaussian_log_density(spec, g).values)
    gauss = np.exp(-g.points**2 / DQ**2)
    np.testing.assert_allclose(n, gauss, rtol=1e-6)


def test_case_d_tail_slope():
    spec = case_d(1.0)
    q = np.linspace(100, 1000, 200)
    slope = np.polyfit(q, spec.log_density(q), 1)[0]
    assert slope == pytest.approx(-LAM**2 / DQ**2, rel=0.02)


def test_pseudo_gaussian_normalized():
    g = Grid1D(-1, 1, 4001)
    n = pseudo_gaussian(case_d(1.4), g).values
    assert np.trapezoid(n, dx=g.dx) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("spec,expected", [
    (PseudoGaussianSpec("gaussian", delta_q=DQ), Typology.BALLISTIC),
    (PseudoGaussianSpec("b", LAM, DQ), Typology.WEAK),
    (case_d(1.0), Typology.WEAK),
    (case_d(1.8), Typology.MIDDLE),
])
def test_typology_recovers_generator(spec, expected, wide_grid):
    typ, model = classify_typology(log_amplitude_of(spec, wide_grid), log_amplitude=True)
    assert typ is expected
    assert model.fit_residual <= 0.05


def test_typology_direct_amplitudes():
    g = Grid1D(-10, 10, 2001)
    q = g.points
    assert classify_typology(RealField(g, np.exp(-np.abs(q) ** 3)))[0] is Typology.STRONG
    typ, model = classify_typology(RealField(g, np.exp(-q * q / 2)))
    assert typ is Typology.BALLISTIC and model.poly_degree == pytest.approx(2, abs=1e-6)
    assert classify_typology(RealField(g, np.exp(-np.abs(q))))[0] is Typology.WEAK


def test_typology_non_monotone_tail():
    g = Grid1D(-10, 10, 2001)
    q = g.points
    amp = np.exp(-q * q / 2) + 1e-3 * np.exp(-(q - 7) ** 2)
    assert classify_typology(RealField(g, amp))[0] is Typology.UNCLASSIFIED


@given(k=st.floats(0.6, 3.5))
@settings(max_examples=25, deadline=None)
def test_typology_fit_recovers_power(k):
    g = Grid1D(-1, 20, 2101)
    u = -np.abs(g.points) ** k
    typ, model = classify_typology(RealField(g, u), log_amplitude=True, center=0.0)
    assert model.poly_degree == pytest.approx(k, abs=1e-6)
    assert model.phi == pytest.approx(3 - 2 * k, abs=2e-6)


def test_lambda_q_gaussian_infinite():
    g = Grid1D(-10, 10, 4001)
    res = compute_vqu(RealField(g, np.exp(-g.points**2 / 2)), P)
    out = lambda_q(res, 0.4, 5.0)
    assert out.value == INFINITE and not out.finite
    assert out.tail_exponent >= -1 + 0.02


def test_lambda_q_case_d_oracle():
    for q_max, ref in ORACLE_LQ.items():
        out = lambda_q(tail_vqu(case_d(1.0), q_max), LC, q_max)
        assert out.finite and not out.floored
        assert out.value == pytest.approx(ref, rel=1e-4)


def test_lambda_q_stable_under_doubling():
    a = lambda_q(tail_vqu(case_d(1.0), 20), LC, 20).value
    b = lambda_q(tail_vqu(case_d(1.0), 40), LC, 40).value
    assert abs(b / a - 1) < 0.01


def test_lambda_q_middle_infinite():
    assert lambda_q(tail_vqu(case_d(1.6), 20), LC, 20).value == INFINITE


def test_lambda_q_rescaling_invariant():
    res = tail_vqu(case_d(1.0), 20)
    spec = case_d(1.0)
    grid = res.grid
    shifted = compute_vqu_from_log(RealField(grid, log_amplitude_of(spec, grid).values + math.log(7.3)), P)
    assert lambda_q(shifted, LC, 20).value == pytest.approx(lambda_q(res, LC, 20).value, rel=1e-12)


def test_lambda_q_floor():
    # force concentrated in a narrow bump at lambda_c: raw value ~0.035 < lambda_c
    g = Grid1D(-1, 20, 21001)
    bump = -np.exp(-((g.points - 1.0) / 0.01) ** 2)
    zero = RealField(g, np.zeros(g.n_points))
    res = QuantumPotentialResult(zero, RealField(g, bump), np.ones(g.n_points, bool))
    out = lambda_q(res, 1.0, 20)
    assert out.floored and out.value == 1.0
    assert 2 * out.integral / out.denominator == pytest.approx(0.02 * math.sqrt(math.pi), rel=1e-3)


def test_lambda_q_errors():
    res = tail_vqu(case_d(1.0), 5)
    with pytest.raises(ValueError):
        lambda_q(res, LC, 0.4)          # q_max < 10 lambda_c
    with pytest.raises(ValueError):
        lambda_q(res, 0.0, 5)
    with pytest.raises(ValueError):
        lambda_q(res, LC, 8)            # beyond the grid
    g = Grid1D(-1, 5, 601)
    flat = compute_vqu(RealField(g, np.ones(601)), P)
    with pytest.raises(ValueError):
        lambda_q(flat, LC, 5)


def test_weak_tail_force_monotone_decreasing():
    spec = case_d(1.0)
    # coarse spacing keeps stencil round-off (|ln A| ~ 1e4 here) far below the field
    g = Grid1D(5, 500, 991)
    f = np.abs(compute_vqu_from_log(log_amplitude_of(spec, g), P).force.values[5:-5])
    assert np.all(np.diff(f) < 0)


@pytest.mark.parametrize("g_exp", [1.4, 1.8, 2.0])
def test_case_d_exponents(g_exp):
    r = case_d_asymptotics(case_d(g_exp), P)
    assert abs(r.vqu_exponent - r.expected_vqu_exponent) <= 0.05
    assert abs(r.force_exponent - r.expected_force_exponent) <= 0.05


def test_case_d_g1_force_decays_as_inverse_cube():
    # the leading q^-1 force coefficient is proportional to (g - 1) and vanishes at g = 1
    r = case_d_asymptotics(case_d(1.0), P)
    assert abs(r.vqu_exponent) <= 0.05
    assert r.force_exponent == pytest.approx(-3.0, abs=0.05)


def test_case_d_force_vanishes_below_three_halves():
    spec = case_d(1.4)
    g = Grid1D(20, 200, 18001)
    f = np.abs(compute_vqu_from_log(log_amplitude_of(spec, g), P).force.values[5:-5])
    assert f[-1] < 0.7 * f[0]


def test_case_d_asymptotics_errors():
    with pytest.raises(ValueError):
        case_d_asymptotics(PseudoGaussianSpec("b", LAM, DQ), P)
    with pytest.raises(ValueError):
        case_d_asymptotics(case_d(1.0), P, window=(0.1, 1000), n_points=101)
