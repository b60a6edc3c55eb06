"""Quantum potential V_qu = -(hbar^2/2m) A''/A, the quantum force and energy."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import (NODE_EPS, Grid1D, PhysicalParams, RealField, _check_grid,
                     gradient, integrate, second_derivative)

# Fourth-order stencils keep the eigenstate identity above roundoff on
# desk-sized grids; second order is available for comparison.
DEFAULT_ORDER = 4


@dataclass(frozen=True, eq=False)
class QuantumPotentialResult:
    vqu: RealField
    force: RealField
    mask: np.ndarray

    @property
    def grid(self) -> Grid1D:
        return self.vqu.grid


def _longest_run(mask: np.ndarray) -> int:
    best = run = 0
    for ok in mask:
        run = run + 1 if ok else 0
        best = max(best, run)
    return best


def _erode(mask: np.ndarray, width: int) -> np.ndarray:
    out = mask.copy()
    for s in range(1, width + 1):
        out[s:] &= mask[:-s]
        out[:-s] &= mask[s:]
    return out


def _finish(grid: Grid1D, vqu: np.ndarray, mask: np.ndarray, order: int) -> QuantumPotentialResult:
    vqu = np.where(mask, vqu, 0.0)
    force = -gradient(vqu, grid.dx, order)
    fmask = _erode(mask, 2 if order == 4 else 1)
    force = np.where(fmask, force, 0.0)
    return QuantumPotentialResult(RealField(grid, vqu, mask), RealField(grid, force, fmask), mask)


def compute_vqu(amplitude: RealField, params: PhysicalParams,
                order: int = DEFAULT_ORDER) -> QuantumPotentialResult:
    """Quantum potential and force from the wave-function modulus A.

    Points where A^2 < 1e-12 max(A^2) are masked rather than regularized.
    A signed real eigenfunction is accepted as well: A''/A does not see the
    sign, and keeping it avoids the kink |A| has at a node.
    """
    a = np.asarray(amplitude.values, dtype=float)
    top = np.abs(a).max()
    if not top > 0:
        raise ValueError("amplitude is identically zero")
    a = a / top
    mask = a * a >= NODE_EPS
    if amplitude.mask is not None:
        mask &= amplitude.mask
    if _longest_run(mask) < 5:
        raise ValueError("fewer than 5 contiguous unmasked points; stencil infeasible")
    d2 = second_derivative(a, amplitude.grid.dx, order)
    coef = params.hbar**2 / (2 * params.mass)
    safe = np.where(mask, a, 1.0)
    return _finish(amplitude.grid, -coef * d2 / safe, mask, order)


def compute_vqu_from_log(log_amplitude: RealField, params: PhysicalParams,
                         order: int = DEFAULT_ORDER) -> QuantumPotentialResult:
    """Same quantity from u = ln A, via A''/A = u'' + u'^2.

    Needed for far tails where A itself underflows.
    """
    u = np.asarray(log_amplitude.values, dtype=float)
    dx = log_amplitude.grid.dx
    mask = log_amplitude.valid.copy()
    if _longest_run(mask) < 5:
        raise ValueError("fewer than 5 contiguous unmasked points; stencil infeasible")
    du = gradient(u, dx, order)
    d2u = second_derivative(u, dx, order)
    coef = params.hbar**2 / (2 * params.mass)
    return _finish(log_amplitude.grid, -coef * (d2u + du * du), mask, order)


def quantum_energy(density: RealField, result: QuantumPotentialResult) -> float:
    """Trapezoid integral of n V_qu over unmasked points."""
    _check_grid(density, result.vqu)
    return integrate(density.values * result.vqu.values, density.grid, result.mask)


def quantum_force_linear_check(delta_q2: float, params: PhysicalParams, center: float = 0.0,
                               n_points: int = 4001, half_width_sigmas: float = 8.0) -> float:
    """Slope of the quantum force of a Gaussian amplitude exp(-(q-c)^2/(2 delta_q2)).

    Fitted by least squares over the central half of the grid; the closed
    form is (hbar^2/2m) * 2 / delta_q2^2.
    """
    if not delta_q2 > 0:
        raise ValueError("delta_q2 must be positive")
    half = half_width_sigmas * math.sqrt(delta_q2)
    grid = Grid1D(center - half, center + half, n_points)
    x = grid.points - center
    res = compute_vqu(RealField(grid, np.exp(-x * x / (2 * delta_q2))), params)
    sel = (np.abs(x) <= half / 2) & res.force.valid
    slope, _ = np.polyfit(x[sel], res.force.values[sel], 1)
    return float(slope)
