"""Harmonic-oscillator reference states used as oracles elsewhere."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Grid1D, PhysicalParams, RealField, integrate, polar_from_wave, ComplexField
from .qpotential import compute_vqu

MAX_LEVEL = 12
SPAN_TURNING_POINTS = 6.0


@dataclass(frozen=True)
class HOSpec:
    mass: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0
    level: int = 0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not (self.mass > 0 and self.hbar > 0):
            raise ValueError("mass and hbar must be positive")
        if int(self.level) != self.level or not 0 <= self.level <= MAX_LEVEL:
            raise ValueError(f"level must be an integer in [0, {MAX_LEVEL}]")

    @property
    def length(self) -> float:
        """Oscillator length sqrt(hbar/(m omega))."""
        return math.sqrt(self.hbar / (self.mass * self.omega))

    @property
    def energy(self) -> float:
        return (self.level + 0.5) * self.hbar * self.omega

    @property
    def turning_point(self) -> float:
        return math.sqrt((2 * self.level + 1) * self.hbar / (self.mass * self.omega))

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    def params(self, **kw) -> PhysicalParams:
        return PhysicalParams(mass=self.mass, hbar=self.hbar, potential="harmonic", omega=self.omega, **kw)

    def with_level(self, level: int) -> "HOSpec":
        return HOSpec(self.mass, self.omega, self.hbar, level)


def hermite(n: int, x):
    """Physicists' Hermite polynomial by the three-term recurrence."""
    if n < 0:
        raise ValueError("n must be >= 0")
    x = np.asarray(x, dtype=float)
    h_prev, h = np.zeros_like(x), np.ones_like(x)
    for k in range(n):
        h_prev, h = h, 2 * x * h - 2 * k * h_prev
    return h if h.ndim else float(h)


def hermite_function(n: int, x) -> np.ndarray:
    """Normalized H_n(x) exp(-x^2/2); recurrence carried on the scaled values so nothing overflows."""
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = np.exp(-0.5 * x * x) / math.pi**0.25
    for k in range(n):
        prev, cur = cur, math.sqrt(2.0 / (k + 1)) * x * cur - math.sqrt(k / (k + 1)) * prev
    return cur


def hermite_nodes(spec: HOSpec) -> np.ndarray:
    """Physical positions of the amplitude nodes."""
    if spec.level == 0:
        return np.zeros(0)
    roots, _ = np.polynomial.hermite.hermgauss(spec.level)
    return roots * spec.length


def _check_span(spec: HOSpec, grid: Grid1D) -> None:
    need = SPAN_TURNING_POINTS * spec.turning_point
    if grid.x_min > -need or grid.x_max < need:
        raise ValueError(f"grid [{grid.x_min}, {grid.x_max}] narrower than +-{need:.4g} "
                         f"(6 turning points of level {spec.level})")


def ho_eigenstate(spec: HOSpec, grid: Grid1D) -> RealField:
    """Amplitude of level n, normalized numerically on the grid."""
    _check_span(spec, grid)
    a = hermite_function(spec.level, grid.points / spec.length)
    a /= math.sqrt(integrate(a * a, grid))
    return RealField(grid, a)


def ho_wave(spec: HOSpec, grid: Grid1D) -> ComplexField:
    return ComplexField(grid, ho_eigenstate(spec, grid).values.astype(complex))


def identity_deviation(spec: HOSpec, grid: Grid1D, params: PhysicalParams | None = None,
                       node_window: float | None = None) -> np.ndarray:
    """Pointwise |V_qu - (E_n - m w^2 q^2/2)|, nan where excluded."""
    params = params or spec.params()
    res = compute_vqu(ho_eigenstate(spec, grid), params)
    q = grid.points
    target = spec.energy - 0.5 * spec.mass * spec.omega**2 * q * q
    dev = np.abs(res.vqu.values - target)
    keep = res.mask.copy()
    window = 3 * grid.dx if node_window is None else node_window
    for z in hermite_nodes(spec):
        keep &= np.abs(q - z) > window
    return np.where(keep, dev, np.nan)


def verify_vqu_identity(spec: HOSpec, grid: Grid1D, params: PhysicalParams | None = None,
                        node_window: float | None = None) -> float:
    """Max deviation of V_qu from E_n - m w^2 q^2/2 away from nodes (default window 3 dx)."""
    return float(np.nanmax(identity_deviation(spec, grid, params, node_window)))


def energy_expectation(spec: HOSpec, grid: Grid1D, params: PhysicalParams | None = None) -> float:
    """Integral of n [m w^2 q^2/2 + V_qu + p^2/2m] for the eigenstate."""
    params = params or spec.params()
    amp = ho_eigenstate(spec, grid)
    res = compute_vqu(amp, params)
    _, p = polar_from_wave(ComplexField(grid, amp.values.astype(complex)), params.hbar)
    n = amp.values**2
    integrand = n * (params.potential_on(grid) + res.vqu.values + p.values**2 / (2 * params.mass))
    return integrate(integrand, grid, res.mask)
