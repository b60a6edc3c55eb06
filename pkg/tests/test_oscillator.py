import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqha.fields import Grid1D, integrate
from sqha.oscillator import (HOSpec, energy_expectation, hermite, hermite_function, hermite_nodes,
                             ho_eigenstate, verify_vqu_identity)


def grid_for(level, dx=0.01, omega=1.0):
    spec = HOSpec(omega=omega, level=level)
    return Grid1D.symmetric(6 * spec.turning_point + 0.5, dx)


def test_hermite_examples():
    assert hermite(0, 3.7) == 1.0
    assert hermite(2, 1.0) == 2.0
    assert hermite(3, 0.0) == 0.0
    with pytest.raises(ValueError):
        hermite(-1, 0.0)


@given(n=st.integers(0, 12), x=st.floats(-4, 4))
@settings(max_examples=60, deadline=None)
def test_hermite_matches_numpy(n, x):
    ref = np.polynomial.hermite.hermval(x, [0] * n + [1])
    assert hermite(n, x) == pytest.approx(ref, rel=1e-11, abs=1e-9)


def test_hermite_function_no_overflow():
    x = np.linspace(-30, 30, 7)
    v = hermite_function(12, x)
    assert np.all(np.isfinite(v))


def test_spec_validation():
    with pytest.raises(ValueError):
        HOSpec(omega=0)
    with pytest.raises(ValueError):
        HOSpec(level=13)


def test_ground_state_closed_form():
    g = grid_for(0)
    a = ho_eigenstate(HOSpec(), g)
    np.testing.assert_allclose(a.values, np.exp(-g.points**2 / 2) / math.pi**0.25, rtol=1e-12, atol=1e-300)


def test_grid_too_narrow():
    with pytest.raises(ValueError):
        ho_eigenstate(HOSpec(level=3), Grid1D(-5, 5, 101))


@pytest.mark.parametrize("level", [1, 4])
def test_node_count(level):
    g = grid_for(level)
    a = ho_eigenstate(HOSpec(level=level), g).values
    s = np.sign(a[np.abs(a) > 1e-8 * np.abs(a).max()])
    assert np.count_nonzero(np.diff(s)) == level
    if level == 1:
        assert a[g.n_points // 2] == pytest.approx(0.0, abs=1e-15)


def test_orthonormal_up_to_eight():
    spec = HOSpec(level=8)
    g = Grid1D.symmetric(6 * spec.turning_point + 0.5, 0.01)
    states = [ho_eigenstate(spec.with_level(n), g).values for n in range(9)]
    gram = np.array([[integrate(a * b, g) for b in states] for a in states])
    np.testing.assert_allclose(gram, np.eye(9), atol=1e-8)


def test_identity_ground_state_fine_grid():
    g = Grid1D.symmetric(6.5, 1e-3)
    assert verify_vqu_identity(HOSpec(), g) <= 1e-6


def test_identity_level3_and_refinement():
    spec = HOSpec(level=3)
    coarse = grid_for(3, 0.01)
    d1 = verify_vqu_identity(spec, coarse)
    d2 = verify_vqu_identity(spec, coarse.refined())
    assert d1 <= 1e-5
    assert d1 / d2 >= 3.5


def test_nodes_match_hermite_roots():
    z = hermite_nodes(HOSpec(level=4, omega=4.0))
    np.testing.assert_allclose(hermite(4, z * 2.0), 0, atol=1e-9)


@pytest.mark.parametrize("level, expect", [(0, 0.5), (4, 4.5)])
def test_energy_expectation(level, expect):
    assert energy_expectation(HOSpec(level=level), grid_for(level, 0.005)) == pytest.approx(expect, rel=1e-8)


def test_energy_scales_with_omega():
    for n in (0, 2):
        e1 = energy_expectation(HOSpec(level=n), grid_for(n, 0.005))
        e2 = energy_expectation(HOSpec(level=n, omega=2.0), grid_for(n, 0.0025, omega=2.0))
        assert e2 / e1 == pytest.approx(2.0, rel=1e-8)
