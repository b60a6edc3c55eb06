"""Range of the quantum-potential interaction, tail typologies, pseudo-Gaussian family."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .fields import Grid1D, PhysicalParams, RealField, integrate
from .qpotential import QuantumPotentialResult, compute_vqu_from_log

INFINITE = math.inf
DIVERGENCE_EXPONENT = -1 + 0.02   # integrand exponent at or above this => divergent
FIT_RESIDUAL_MAX = 0.05
BALLISTIC_TOL = 0.05
MIN_RATIO = 100.0


class Typology(str, enum.Enum):
    STRONG = "strong"
    BALLISTIC = "ballistic"
    MIDDLE = "middle"
    WEAK = "weak"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class TailModel:
    """Decay degree k of -ln A ~ q^k on a fit window."""

    poly_degree: float
    fit_window: tuple[float, float]
    fit_residual: float

    @property
    def phi(self) -> float:
        return 3 - 2 * self.poly_degree


CASES = ("a", "b", "c", "d", "gaussian")


@dataclass(frozen=True)
class PseudoGaussianSpec:
    """n = exp(-x^2 / (dq^2 (1 + x^2/(Lambda^2 f(x))))), x = q - center.

    f: a -> 1, b -> 1+|x|, c -> 1+ln(1+|x|^g), d -> 1+|x|^g; "gaussian" is exp(-x^2/dq^2).
    Case d also admits g = 2, the Gaussian-like closing limit.
    """

    case: str
    Lambda: float = 1.0
    delta_q: float = 0.1
    g: float | None = None
    center: float = 0.0

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"case must be one of {CASES}")
        if not self.delta_q > 0:
            raise ValueError("delta_q must be positive")
        if self.case != "gaussian":
            if not self.Lambda > 0:
                raise ValueError("Lambda must be positive")
            ratio = self.Lambda**2 / self.delta_q**2
            if ratio < MIN_RATIO * (1 - 1e-9):
                warnings.warn(f"Lambda^2 f(0)/delta_q^2 = {ratio:.3g} < {MIN_RATIO:g}; "
                              "the core is not Gaussian-like", stacklevel=3)
        if self.case in ("c", "d"):
            if self.g is None:
                raise ValueError(f"case {self.case} needs g")
            upper_ok = self.g < 2 or (self.case == "d" and self.g == 2)
            if not (self.g > 0 and upper_ok):
                raise ValueError(f"g must lie in (0, 2) (case d also allows 2), got {self.g}")

    def f(self, x: np.ndarray) -> np.ndarray:
        ax = np.abs(x)
        if self.case == "a":
            return np.ones_like(ax)
        if self.case == "b":
            return 1 + ax
        if self.case == "c":
            return 1 + np.log1p(ax**self.g)
        return 1 + ax**self.g

    def log_density(self, q: np.ndarray) -> np.ndarray:
        """ln n with n(center) = 1."""
        x = np.asarray(q, dtype=float) - self.center
        if self.case == "gaussian":
            return -x * x / self.delta_q**2
        lf = self.Lambda**2 * self.f(x)
        return -(x * x) * lf / (self.delta_q**2 * (lf + x * x))


def pseudo_gaussian_log_density(spec: PseudoGaussianSpec, grid: Grid1D) -> RealField:
    """ln n on the grid (unnormalized, peak value 0); safe where n underflows."""
    return RealField(grid, spec.log_density(grid.points))


def pseudo_gaussian(spec: PseudoGaussianSpec, grid: Grid1D) -> RealField:
    """Normalized density n."""
    n = np.exp(spec.log_density(grid.points))
    return RealField(grid, n / integrate(n, grid))


def log_amplitude_of(spec: PseudoGaussianSpec, grid: Grid1D) -> RealField:
    return RealField(grid, 0.5 * spec.log_density(grid.points))


# ---------------------------------------------------------------- typology

def _fit_loglog(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Slope and RMS residual of ln y against ln x."""
    lx, ly = np.log(x), np.log(y)
    coef, res, *_ = np.polyfit(lx, ly, 1, full=True)
    rms = math.sqrt(res[0] / len(lx)) if len(res) else 0.0
    return float(coef[0]), rms


def classify_typology(amplitude: RealField, log_amplitude: bool = False,
                      center: float | None = None,
                      window: tuple[float, float] | None = None) -> tuple[Typology, TailModel]:
    """Fit k in -ln(A/A_max) ~ q^k on the right tail and map it to a typology.

    The default window is the outer decade [q_end/10, q_end] of the
    representable tail (distances from the center).
    """
    grid = amplitude.grid
    if log_amplitude:
        u = np.array(amplitude.values, dtype=float)
    else:
        a = np.asarray(amplitude.values, dtype=float)
        with np.errstate(divide="ignore"):
            u = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), -np.inf)
    c = grid.points[int(np.argmax(u))] if center is None else center
    x = grid.points - c
    depth = u.max() - u
    usable = (x > 0) & np.isfinite(depth) & (depth > 0)
    if not usable.any():
        raise ValueError("no usable tail to the right of the center")
    if window is None:
        q_end = x[usable].max()
        window = (q_end / 10, q_end)
    lo, hi = window
    sel = usable & (x >= lo) & (x <= hi)
    if sel.sum() < 8:
        raise ValueError("fewer than 8 tail points in the fit window")
    if not np.all(np.diff(depth[sel]) > 0):
        return Typology.UNCLASSIFIED, TailModel(math.nan, (lo, hi), math.inf)
    k, rms = _fit_loglog(x[sel], depth[sel])
    model = TailModel(k, (float(lo), float(hi)), rms)
    if rms > FIT_RESIDUAL_MAX:
        return Typology.UNCLASSIFIED, model
    if abs(k - 2) <= BALLISTIC_TOL:
        return Typology.BALLISTIC, model
    if k > 2:
        return Typology.STRONG, model
    if k >= 1.5:
        return Typology.MIDDLE, model
    return Typology.WEAK, model


# ---------------------------------------------------------------- lambda_q

@dataclass(frozen=True)
class LambdaQResult:
    value: float                # INFINITE when the integral diverges
    integral: float
    denominator: float          # |dV_qu/dq| / lambda_c at q = lambda_c
    tail_exponent: float        # of |q^-1 dV_qu/dq| over the outer decade
    quadrature_error: float     # Richardson estimate, relative
    cutoff_sensitivity: float   # relative change when the lower limit moves dx -> 2dx
    floored: bool               # raw value was below lambda_c

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    @property
    def converged(self) -> bool:
        return self.cutoff_sensitivity < 1e-3 and self.quadrature_error < 1e-3

    def __float__(self):
        return self.value


def lambda_q(vqu: QuantumPotentialResult, lambda_c: float, q_max: float,
             center: float = 0.0) -> LambdaQResult:
    """2 int_dx^qmax |F/q| dq / (|F(lambda_c)|/lambda_c), F the quantum force.

    Distances are measured from ``center`` to the right. The integrand is
    only known on the grid, so the quadrature is the trapezoid rule on the
    samples with a Richardson (h vs 2h) error estimate.
    """
    if not lambda_c > 0:
        raise ValueError("lambda_c must be positive")
    if q_max < 10 * lambda_c:
        raise ValueError(f"q_max = {q_max} < 10 lambda_c = {10 * lambda_c}: tail too short")
    grid = vqu.grid
    dx = grid.dx
    if center + q_max > grid.x_max + 1e-9 * dx or center < grid.x_min:
        raise ValueError("[center, center + q_max] not inside the grid")
    x = grid.points - center
    sel = (x >= dx * (1 - 1e-9)) & (x <= q_max * (1 + 1e-12) + 1e-9 * dx)
    if sel.sum() < 8:
        raise ValueError("too few samples in the integration range")
    if not np.all(vqu.force.valid[sel]):
        raise ValueError("force is masked inside the integration range; use the log-amplitude path")
    xs = x[sel]
    g = np.abs(vqu.force.values[sel] / xs)
    f_lc = kernels.cubic_interp(np.ascontiguousarray(vqu.force.values), grid.x_min, dx,
                                np.array([center + lambda_c]))[0]
    if abs(f_lc) < 1e-300:
        raise ValueError("force at lambda_c is below 1e-300; flat potential")
    denom = float(abs(f_lc) / lambda_c)

    tail = (xs >= q_max / 10) & (g > 0)
    expo = _fit_loglog(xs[tail], g[tail])[0] if tail.sum() >= 4 else math.nan

    h = xs[1] - xs[0]
    total = float(np.trapezoid(g, dx=h))
    m = len(g) if len(g) % 2 == 1 else len(g) - 1
    coarse = float(np.trapezoid(g[:m:2], dx=2 * h))
    fine_part = float(np.trapezoid(g[:m], dx=h))
    qerr = abs(fine_part - coarse) / 3 / fine_part if fine_part > 0 else math.inf
    shifted = total - 0.5 * h * (g[0] + g[1])
    sens = float(abs(total - shifted) / total) if total > 0 else math.inf

    if math.isfinite(expo) and expo >= DIVERGENCE_EXPONENT:
        return LambdaQResult(INFINITE, total, denom, expo, qerr, sens, False)
    raw = 2 * total / denom
    floored = bool(raw < lambda_c)
    return LambdaQResult(float(max(raw, lambda_c)), total, denom, expo, qerr, sens, floored)


# ---------------------------------------------------------------- case d tails

@dataclass(frozen=True)
class CaseDAsymptotics:
    g: float
    window: tuple[float, float]
    vqu_exponent: float
    force_exponent: float
    vqu_residual: float
    force_residual: float

    @property
    def expected_vqu_exponent(self) -> float:
        return 2 * (self.g - 1)

    @property
    def expected_force_exponent(self) -> float:
        return 2 * self.g - 3


def case_d_asymptotics(spec: PseudoGaussianSpec, params: PhysicalParams,
                       window: tuple[float, float] | None = None,
                       n_points: int = 20001) -> CaseDAsymptotics:
    """Power-law exponents of |V_qu| and |force| on a far-tail window (distances from center).

    Default window [100 Lambda, 1000 Lambda]. Works from ln A so the tail
    never underflows.
    """
    if spec.case != "d":
        raise ValueError("case_d_asymptotics needs case d")
    lo, hi = window if window is not None else (100 * spec.Lambda, 1000 * spec.Lambda)
    if not 0 < lo < hi:
        raise ValueError("window must satisfy 0 < lo < hi")
    pad = 0.02 * (hi - lo)
    grid = Grid1D(spec.center + lo - pad, spec.center + hi + pad, n_points)
    if grid.dx > lo / 10:
        raise ValueError("tail window under-resolved: raise n_points")
    res = compute_vqu_from_log(log_amplitude_of(spec, grid), params)
    x = grid.points - spec.center
    sel = (x >= lo) & (x <= hi)
    v = np.abs(res.vqu.values[sel])
    f = np.abs(res.force.values[sel])
    if np.any(v == 0) or np.any(f == 0):
        raise ValueError("tail field vanishes inside the window")
    kv, rv = _fit_loglog(x[sel], v)
    kf, rf = _fit_loglog(x[sel], f)
    return CaseDAsymptotics(float(spec.g), (lo, hi), kv, kf, rv, rf)
