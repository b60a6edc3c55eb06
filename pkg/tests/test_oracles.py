"""Re-derive the frozen reference values from independent symbolic / multiprecision oracles."""
import pytest

sp = pytest.importorskip("sympy")
mp = pytest.importorskip("mpmath")

from test_nonlocality import ORACLE_LQ  # noqa: E402
from test_noise import LAMBDA_C_PROTON_300K  # noqa: E402
from test_regimes import PI2_32, TC_PROTON_30NM  # noqa: E402

# CODATA 2018, as exact rationals
HBAR = sp.Rational("1.054571817e-34")
KB = sp.Rational("1.380649e-23")
M_P = sp.Rational("1.67262192369e-27")


def test_lambda_c_proton():
    lam = (sp.pi / 2) ** sp.Rational(3, 2) * HBAR / sp.sqrt(2 * M_P * KB * 300)
    assert float(sp.N(lam, 30)) == pytest.approx(LAMBDA_C_PROTON_300K, rel=1e-15)


def test_critical_temperature_proton():
    t_c = HBAR**2 / (2 * M_P * KB * sp.Rational("3e-8") ** 2)
    assert float(sp.N(t_c, 30)) == pytest.approx(TC_PROTON_30NM, rel=1e-15)


def test_product_constant():
    assert float(sp.N((sp.pi / 2) ** sp.Rational(3, 2), 30)) == pytest.approx(PI2_32, rel=1e-15)


def _case_d_force(g):
    x = sp.symbols("x", positive=True)
    lam, dq = sp.Rational(1, 5), sp.Rational(1, 50)
    f = 1 + x**g
    u = -sp.Rational(1, 2) * x**2 * lam**2 * f / (dq**2 * (lam**2 * f + x**2))
    v = -sp.Rational(1, 2) * (sp.diff(u, x, 2) + sp.diff(u, x) ** 2)
    return x, sp.simplify(-sp.diff(v, x))


def test_case_d_g1_force_is_inverse_cube():
    x, force = _case_d_force(1)
    assert sp.limit(force * x, x, sp.oo) == 0
    assert sp.limit(force * x**3, x, sp.oo) == -392


def test_lambda_q_quadrature():
    x, force = _case_d_force(1)
    fn = sp.lambdify(x, force, "mpmath")
    mp.mp.dps = 30
    den = abs(fn(mp.mpf("0.05"))) / mp.mpf("0.05")
    for q_max, frozen in ORACLE_LQ.items():
        num = mp.quad(lambda t: abs(fn(t) / t), [mp.mpf("0.001"), 0.02, 0.1, 0.5, 2, q_max])
        assert float(2 * num / den) == pytest.approx(frozen, rel=1e-14)
