"""Classicality diagnostics: force vs fluctuation, regime labels, T_c, uncertainty products."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import constants as sc

from .dynamics import EvolutionResult
from .fields import PhysicalParams, RealField
from .noise import lambda_c as lambda_c_of
from .qpotential import compute_vqu

SPEED_OF_LIGHT = sc.c
MIN_ENSEMBLE = 30
RECOMMENDED_ENSEMBLE = 100
SMALL_FRACTION = 0.1    # lambda_q <= L/10 counts as "much smaller than L"


class Regime(str, enum.Enum):
    QUANTUM = "quantum"
    STOCHASTIC_QUANTUM = "stochastic-quantum"
    CLASSICAL_STOCHASTIC = "classical-stochastic"


def critical_temperature(params: PhysicalParams, system_length: float) -> float:
    """hbar^2 / (2 m k L^2)."""
    if not system_length > 0:
        raise ValueError("system_length must be positive")
    return params.hbar**2 / (2 * params.mass * params.boltzmann * system_length**2)


@dataclass(frozen=True)
class UncertaintyProducts:
    delta_E: float
    delta_p: float
    E_t_product: float
    L_p_product: float


def uncertainty_products(params: PhysicalParams, c: float = SPEED_OF_LIGHT,
                         lambda_c: float | None = None) -> UncertaintyProducts:
    """Thermal spreads and their products with lambda_c (and tau = lambda_c/c)."""
    if not params.temperature > 0:
        raise ValueError("uncertainty products need T > 0")
    m, kT = params.mass, params.boltzmann * params.temperature
    if kT > 0.01 * m * c * c:
        warnings.warn("kT > 0.01 m c^2: the non-relativistic expansion is not valid", stacklevel=2)
    lam = lambda_c_of(params) if lambda_c is None else lambda_c
    dE = math.sqrt(2 * m * c * c * kT)
    dp = math.sqrt(2 * m * kT)
    return UncertaintyProducts(dE, dp, dE * lam / c, lam * dp)


@dataclass(frozen=True)
class FluctuationDiagnostics:
    force_norm: float
    fluctuation_norm: float
    ratio: float
    window: tuple[float, float]


def mass_window(density: np.ndarray, q: np.ndarray, fraction: float = 0.99) -> tuple[float, float]:
    """Central interval holding `fraction` of the density."""
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(q))])
    cdf /= cdf[-1]
    tail = 0.5 * (1 - fraction)
    return float(np.interp(tail, cdf, q)), float(np.interp(1 - tail, cdf, q))


def _forces(run: EvolutionResult, params: PhysicalParams):
    out = []
    for st in run.states:
        res = compute_vqu(RealField(st.grid, np.abs(st.values)), params)
        out.append((res.force.values, res.force.valid))
    return out


def force_vs_fluctuation(reference: EvolutionResult, ensemble: Sequence[EvolutionResult],
                         params: PhysicalParams, window=None) -> FluctuationDiagnostics:
    """Time-averaged L2 norms of the quantum force of n0 and of the fluctuation grad dV_qu.

    ``window`` is (lo, hi); default is the central 99% of the initial reference density.
    """
    if len(ensemble) < MIN_ENSEMBLE:
        raise ValueError(f"ensemble of {len(ensemble)} runs is too small (need >= {MIN_ENSEMBLE})")
    if len(ensemble) < RECOMMENDED_ENSEMBLE:
        warnings.warn(f"ensemble of {len(ensemble)} runs; {RECOMMENDED_ENSEMBLE} recommended", stacklevel=2)
    grid = reference.grid
    q = grid.points
    if window is None:
        window = mass_window(np.abs(reference.states[0].values) ** 2, q)
    lo, hi = window
    inside = (q >= lo) & (q <= hi)
    ref = _forces(reference, params)

    def l2(v, ok):
        sel = inside & ok
        return math.sqrt(float(np.sum(v[sel] ** 2)) * grid.dx)

    force_norm = float(np.mean([l2(f, ok) for f, ok in ref]))
    fluct = []
    for run in ensemble:
        if len(run.states) != len(ref) or run.grid != grid:
            raise ValueError("ensemble run does not match the reference")
        for (f, ok), (f0, ok0) in zip(_forces(run, params), ref):
            fluct.append(l2(f - f0, ok & ok0))
    fluct_norm = float(np.mean(fluct))
    if fluct_norm == 0:
        ratio = 0.0
    elif force_norm == 0:
        ratio = math.inf
    else:
        ratio = fluct_norm / force_norm
    return FluctuationDiagnostics(force_norm, fluct_norm, ratio, (float(lo), float(hi)))


@dataclass(frozen=True)
class RegimeReport:
    lambda_c: float
    lambda_q: float
    system_length: float
    T_c: float
    temperature: float
    force_norm: float
    fluctuation_norm: float
    ratio: float
    E_t_product: float
    L_p_product: float
    regime: Regime

    COLUMNS = ("lambda_c", "lambda_q", "system_length", "T_c", "temperature", "force_norm",
               "fluctuation_norm", "ratio", "E_t_product", "L_p_product", "regime")

    def row(self) -> list[str]:
        out = []
        for name in self.COLUMNS:
            v = getattr(self, name)
            out.append(v.value if isinstance(v, Regime) else f"{v:.17g}")
        return out

    def text(self, hbar: float) -> str:
        lines = [
            f"regime                 {self.regime.value}",
            f"temperature            {self.temperature:.6g}",
            f"critical temperature   {self.T_c:.6g}",
            f"system length L        {self.system_length:.6g}",
            f"lambda_c               {self.lambda_c:.6g}  (lambda_c/L = {self.lambda_c / self.system_length:.3g})",
            f"lambda_q               {self.lambda_q:.6g}  (floored to lambda_c when smaller)",
            f"quantum force norm     {self.force_norm:.6g}",
            f"fluctuation norm       {self.fluctuation_norm:.6g}  (ratio {self.ratio:.3g})",
            f"dE * lambda_c/c        {self.E_t_product:.6g}  = {self.E_t_product / hbar:.6g} hbar",
            f"lambda_c * dp          {self.L_p_product:.6g}  = {self.L_p_product / hbar:.6g} hbar",
            "note: with lambda_c = (pi/2)^{3/2} hbar/sqrt(2mkT) both products equal "
            f"(pi/2)^(3/2) hbar = {(math.pi / 2) ** 1.5:.6g} hbar, not hbar/2",
        ]
        return "\n".join(lines) + "\n"


def classify_regime(lambda_c: float, lambda_q: float, system_length: float, ratio: float) -> Regime:
    if lambda_c >= system_length:
        return Regime.QUANTUM
    lq = max(lambda_q, lambda_c)
    if math.isfinite(lq) and lq <= SMALL_FRACTION * system_length and ratio > 1:
        return Regime.CLASSICAL_STOCHASTIC
    return Regime.STOCHASTIC_QUANTUM


def regime_report(params: PhysicalParams, system_length: float, lambda_q_input,
                  diagnostics: FluctuationDiagnostics | None = None,
                  lambda_c: float | None = None, c: float = SPEED_OF_LIGHT) -> RegimeReport:
    """Collect lengths, temperatures and products and assign a regime label.

    Without ensemble diagnostics there is no evidence of fluctuation
    dominance, so the classical-stochastic label is never given.
    """
    if not system_length > 0:
        raise ValueError("system_length must be positive")
    lam_c = lambda_c_of(params) if lambda_c is None else float(lambda_c)
    lam_q = float(lambda_q_input)
    if math.isfinite(lam_c) and lam_q < lam_c:
        lam_q = lam_c
    t_c = critical_temperature(params, system_length)
    if params.temperature > 0 and math.isfinite(lam_c):
        prod = uncertainty_products(params, c, lam_c)
        et, lp = prod.E_t_product, prod.L_p_product
    else:
        et = lp = math.nan
    if diagnostics is None:
        fn = fl = ratio = math.nan
    else:
        fn, fl, ratio = diagnostics.force_norm, diagnostics.fluctuation_norm, diagnostics.ratio
    regime = classify_regime(lam_c, lam_q, system_length, ratio if diagnostics else 0.0)
    return RegimeReport(lam_c, lam_q, system_length, t_c, params.temperature, fn, fl, ratio, et, lp, regime)
