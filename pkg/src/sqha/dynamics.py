"""Deterministic and noisy evolution of psi, Bohmian trajectories and action accounting."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import kernels
from .errors import NumericalAbort
from .fields import (NODE_EPS, ComplexField, Grid1D, PhysicalParams, RealField,
                     gradient, integrate, polar_from_wave, second_derivative)
from .noise import NoiseSpec, sample_noise
from .qpotential import compute_vqu

SCHEMES = ("deterministic", "stochastic")
NORM_TOL_IN = 1e-6        # how far psi0 may be from unit norm
NORM_ABORT = 1e-4         # deterministic drift that aborts a run
CLAMP_ABORT = 1e-3        # fraction of points clamped in one step that aborts a run

# fourth-order Laplacian weights for offsets 0, 1, 2
_LAPLACE4 = (-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0)


class StepSizeWarning(UserWarning):
    """dt exceeds the explicit-scheme bound dx^2 m / hbar (CN stays stable, accuracy may not)."""


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    n_steps: int
    scheme: str = "deterministic"
    record_every: int = 1
    noise: NoiseSpec | None = None

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.scheme == "stochastic" and self.noise is None:
            raise ValueError("stochastic scheme needs a noise spec")

    def check_step(self, grid: Grid1D, params: PhysicalParams) -> bool:
        bound = grid.dx**2 * params.mass / params.hbar
        if self.dt > bound:
            warnings.warn(f"dt = {self.dt:.3g} exceeds dx^2 m/hbar = {bound:.3g}",
                          StepSizeWarning, stacklevel=3)
            return False
        return True


@dataclass(eq=False)
class EvolutionResult:
    grid: Grid1D
    times: np.ndarray
    states: list
    norms: np.ndarray
    clamp_events: int = 0
    noise: list | None = None  # injected eta per step (index k is the step ending at (k+1) dt)

    def densities(self) -> np.ndarray:
        return np.array([np.abs(s.values) ** 2 for s in self.states])

    def __len__(self):
        return len(self.states)


class CrankNicolson:
    """Implicit midpoint step for i hbar psi_t = H psi with Dirichlet edges."""

    def __init__(self, grid: Grid1D, params: PhysicalParams, dt: float):
        n = grid.n_points - 2
        w = len(_LAPLACE4) - 1
        kin = -params.hbar**2 / (2 * params.mass * grid.dx**2)
        ab = np.zeros((2 * w + 1, n), dtype=complex)
        ab[w] = kin * _LAPLACE4[0] + params.potential_on(grid)[1:-1]
        for s in range(1, w + 1):
            ab[w - s, s:] = kin * _LAPLACE4[s]
            ab[w + s, :-s] = kin * _LAPLACE4[s]
        a = 0.5j * dt / params.hbar
        lhs = a * ab
        lhs[w] += 1.0
        rhs = -a * ab
        rhs[w] += 1.0
        self.w = w
        self._rhs = np.ascontiguousarray(rhs)
        self._lu = kernels.band_factor(np.ascontiguousarray(lhs), w)

    def step(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        b = kernels.band_matvec(self._rhs, self.w, np.ascontiguousarray(psi[1:-1]))
        out[1:-1] = kernels.band_solve(self._lu, self.w, b)
        return out


def _norm(psi: np.ndarray, grid: Grid1D) -> float:
    return integrate(psi.real**2 + psi.imag**2, grid)


def _start(psi0: ComplexField) -> np.ndarray:
    norm = _norm(psi0.values, psi0.grid)
    if abs(norm - 1) > NORM_TOL_IN:
        raise ValueError(f"psi0 must be normalized (norm = {norm:.12g})")
    psi = np.array(psi0.values, dtype=complex)
    psi[0] = psi[-1] = 0.0
    return psi


def apply_noise(psi: np.ndarray, eta: np.ndarray, dt: float) -> tuple[np.ndarray, int]:
    """n -> n + dt*eta on the unmasked support, phase kept; returns (psi, clamped count)."""
    n = psi.real**2 + psi.imag**2
    support = n >= NODE_EPS * n.max()
    n_new = n + dt * eta
    ok = support & (n_new > 0)
    clamped = support & ~ok
    factor = np.ones_like(n)
    factor[ok] = np.sqrt(n_new[ok] / n[ok])
    factor[clamped] = 0.0
    return psi * factor, int(clamped.sum())


def _evolve(psi0: ComplexField, params: PhysicalParams, config: EvolutionConfig,
            noise: NoiseSpec | None, keep_noise: bool) -> EvolutionResult:
    grid = psi0.grid
    config.check_step(grid, params)
    psi = _start(psi0)
    cn = CrankNicolson(grid, params, config.dt)
    rng = noise.rng() if noise is not None else None
    times, states, norms = [0.0], [ComplexField(grid, psi)], [_norm(psi, grid)]
    etas = [] if keep_noise and noise is not None else None
    clamps = 0
    limit = CLAMP_ABORT * grid.n_points
    for k in range(1, config.n_steps + 1):
        psi = cn.step(psi)
        if noise is not None:
            eta = sample_noise(grid, noise, config.dt, rng).values
            psi, c = apply_noise(psi, eta, config.dt)
            clamps += c
            if c > limit:
                raise NumericalAbort(f"step {k}: {c} of {grid.n_points} points driven below zero density "
                                     f"(limit {CLAMP_ABORT:.1%}); lower T or dt")
            if etas is not None:
                etas.append(eta)
        norm = _norm(psi, grid)
        if not math.isfinite(norm):
            raise NumericalAbort(f"step {k}: norm is not finite")
        if noise is None and abs(norm - norms[0]) > NORM_ABORT:
            raise NumericalAbort(f"step {k}: norm drifted by {norm - norms[0]:.3g}")
        if k % config.record_every == 0:
            times.append(k * config.dt)
            states.append(ComplexField(grid, psi))
            norms.append(norm)
    return EvolutionResult(grid, np.array(times), states, np.array(norms), clamps, etas)


def evolve_deterministic(psi0: ComplexField, params: PhysicalParams,
                         config: EvolutionConfig) -> EvolutionResult:
    """Crank-Nicolson evolution with a 5-point Laplacian; norm conserved to roundoff."""
    return _evolve(psi0, params, config, None, False)


def evolve_stochastic(psi0: ComplexField, params: PhysicalParams, config: EvolutionConfig,
                      keep_noise: bool = False) -> EvolutionResult:
    """One CN substep, then the density increment dt*eta, per step.

    Points pushed to negative density are zeroed and counted.
    """
    if config.noise is None:
        raise ValueError("config has no noise spec")
    return _evolve(psi0, params, config, config.noise, keep_noise)


def run_ensemble(psi0: ComplexField, params: PhysicalParams, config: EvolutionConfig,
                 n_runs: int, max_workers: int = 1) -> list[EvolutionResult]:
    """Stochastic runs with seeds noise.seed + i, collected in seed order."""
    if config.noise is None:
        raise ValueError("config has no noise spec")
    cfgs = [replace(config, noise=replace(config.noise, seed=config.noise.seed + i)) for i in range(n_runs)]
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        return list(pool.map(lambda c: evolve_stochastic(psi0, params, c), cfgs))


def evolve_polar(amplitude: RealField, action: RealField, params: PhysicalParams,
                 dt: float, n_steps: int, record_every: int = 1) -> EvolutionResult:
    """RK4 on the polar pair for node-free states, carried as (ln A, S).

    d(lnA)/dt = -(S' lnA' + S''/2)/m
    dS/dt     = -S'^2/2m - V + (hbar^2/2m)(lnA'' + lnA'^2)
    """
    if amplitude.grid != action.grid:
        raise ValueError("fields live on different grids")
    if np.any(amplitude.values <= 0):
        raise ValueError("polar integrator needs a strictly positive amplitude")
    grid = amplitude.grid
    dx, m, hb = grid.dx, params.mass, params.hbar
    v = params.potential_on(grid)

    def rhs(u, s):
        du, ds = gradient(u, dx, 4), gradient(s, dx, 4)
        d2u, d2s = second_derivative(u, dx, 4), second_derivative(s, dx, 4)
        a = -(ds * du + 0.5 * d2s) / m
        b = -ds * ds / (2 * m) - v + hb * hb / (2 * m) * (d2u + du * du)
        # the two outermost points on each side are held fixed (one-sided stencils are unstable)
        a[:2] = a[-2:] = b[:2] = b[-2:] = 0.0
        return a, b

    u, s = np.log(amplitude.values), np.array(action.values, dtype=float)

    def wave():
        return np.exp(u + 1j * s / hb)

    times, states, norms = [0.0], [ComplexField(grid, wave())], [_norm(wave(), grid)]
    for k in range(1, n_steps + 1):
        a1, b1 = rhs(u, s)
        a2, b2 = rhs(u + 0.5 * dt * a1, s + 0.5 * dt * b1)
        a3, b3 = rhs(u + 0.5 * dt * a2, s + 0.5 * dt * b2)
        a4, b4 = rhs(u + dt * a3, s + dt * b3)
        u = u + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        s = s + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(s))):
            raise NumericalAbort(f"polar integrator blew up at step {k}")
        if k % record_every == 0:
            psi = wave()
            times.append(k * dt)
            states.append(ComplexField(grid, psi))
            norms.append(_norm(psi, grid))
    return EvolutionResult(grid, np.array(times), states, np.array(norms))


def hydrodynamic_energy(psi: ComplexField, params: PhysicalParams) -> float:
    """Integral of n (V + V_qu + p^2/2m) over unmasked points."""
    amp, p = polar_from_wave(psi, params.hbar)
    res = compute_vqu(amp, params)
    n = amp.values**2
    integrand = n * (params.potential_on(psi.grid) + res.vqu.values + p.values**2 / (2 * params.mass))
    return integrate(integrand, psi.grid, res.mask & p.valid)


# ---------------------------------------------------------------- trajectories

@dataclass(eq=False)
class TrajectoryBundle:
    times: np.ndarray
    start_points: np.ndarray
    trajectories: np.ndarray   # (n_times, K); nan after a trajectory leaves the grid
    action: np.ndarray         # (n_times, K)
    exited: np.ndarray         # (K,) bool
    s0: np.ndarray | None = None
    delta_s: np.ndarray | None = None

    @property
    def action_split(self):
        if self.s0 is None:
            return None
        return self.s0, self.delta_s


def _snapshot_fields(states: Sequence[ComplexField], params: PhysicalParams):
    """Momentum and total potential V + V_qu per snapshot, zero where masked."""
    grid = states[0].grid
    v = params.potential_on(grid)
    P = np.empty((len(states), grid.n_points))
    W = np.empty_like(P)
    for k, st in enumerate(states):
        if st.grid != grid:
            raise ValueError("states live on different grids")
        amp, p = polar_from_wave(st, params.hbar)
        res = compute_vqu(amp, params)
        P[k] = p.values
        W[k] = v + res.vqu.values
    return P, W


def _midpoints(F: np.ndarray) -> np.ndarray:
    """Fields at half steps from cubic Lagrange interpolation in time."""
    K = len(F)
    if K < 4:
        return 0.5 * (F[:-1] + F[1:])
    mid = np.empty((K - 1,) + F.shape[1:])
    mid[1:-1] = (-F[:-3] + 9 * F[1:-2] + 9 * F[2:-1] - F[3:]) / 16
    mid[0] = (5 * F[0] + 15 * F[1] - 5 * F[2] + F[3]) / 16
    mid[-1] = (F[-4] - 5 * F[-3] + 15 * F[-2] + 5 * F[-1]) / 16
    return mid


def _integrate_paths(times, P, W, grid: Grid1D, params: PhysicalParams, q0: np.ndarray):
    m = params.mass
    x0, dx = grid.x_min, grid.dx
    lo, hi = grid.x_min + 2 * dx, grid.x_max - 2 * dx
    Pm, Wm = _midpoints(P), _midpoints(W)
    K = len(q0)
    Q = np.full((len(times), K), np.nan)
    S = np.full((len(times), K), np.nan)
    Q[0], S[0] = q0, 0.0
    alive = (q0 >= lo) & (q0 <= hi)
    exited = ~alive.copy()
    q, s = q0.astype(float).copy(), np.zeros(K)

    def f(p_field, w_field, x):
        p = kernels.cubic_interp(p_field, x0, dx, x)
        w = kernels.cubic_interp(w_field, x0, dx, x)
        return p / m, p * p / (2 * m) - w

    for k in range(len(times) - 1):
        if not alive.any():
            break
        h = times[k + 1] - times[k]
        x = np.ascontiguousarray(q[alive])
        v1, l1 = f(P[k], W[k], x)
        v2, l2 = f(Pm[k], Wm[k], x + 0.5 * h * v1)
        v3, l3 = f(Pm[k], Wm[k], x + 0.5 * h * v2)
        v4, l4 = f(P[k + 1], W[k + 1], x + h * v3)
        q[alive] = x + h / 6 * (v1 + 2 * v2 + 2 * v3 + v4)
        s[alive] += h / 6 * (l1 + 2 * l2 + 2 * l3 + l4)
        out = alive & ((q < lo) | (q > hi) | ~np.isfinite(q))
        exited |= out
        alive &= ~out
        Q[k + 1, alive] = q[alive]
        S[k + 1, alive] = s[alive]
    return Q, S, exited


def bohmian_trajectories(evolution: EvolutionResult, params: PhysicalParams, start_points,
                         reference: EvolutionResult | None = None) -> TrajectoryBundle:
    """RK4 paths of dq/dt = p/m with action dS/dt = p^2/2m - V - V_qu.

    Snapshots must be equally spaced in time. With a deterministic reference
    run the action is split into S0 (reference) and delta S.
    """
    times = np.asarray(evolution.times, dtype=float)
    if len(times) < 2:
        raise ValueError("need at least two snapshots")
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("snapshots must be equally spaced in time")
    q0 = np.atleast_1d(np.asarray(start_points, dtype=float))
    grid = evolution.grid
    P, W = _snapshot_fields(evolution.states, params)
    Q, S, exited = _integrate_paths(times, P, W, grid, params, q0)
    bundle = TrajectoryBundle(times, q0, Q, S, exited)
    if exited.any():
        warnings.warn(f"{int(exited.sum())} trajectories left the grid and were truncated", stacklevel=2)
    if reference is not None:
        if len(reference.times) != len(times) or not np.allclose(reference.times, times):
            raise ValueError("reference run has different snapshot times")
        P0, W0 = _snapshot_fields(reference.states, params)
        _, S0, _ = _integrate_paths(times, P0, W0, grid, params, q0)
        bundle.s0 = S0
        bundle.delta_s = S - S0
    return bundle


# ---------------------------------------------------------------- diagnostics

@dataclass(eq=False)
class ResidualSeries:
    times: np.ndarray
    fields: list
    max_abs: np.ndarray


def continuity_residual(evolution: EvolutionResult, params: PhysicalParams) -> ResidualSeries:
    """dn/dt + d/dq (n p/m) with central differences (one-sided in time at the ends)."""
    times = np.asarray(evolution.times, dtype=float)
    if len(times) < 3:
        raise ValueError("need at least 3 snapshots")
    grid = evolution.grid
    dt = times[1] - times[0]
    n = evolution.densities()
    dndt = np.empty_like(n)
    dndt[1:-1] = (n[2:] - n[:-2]) / (2 * dt)
    dndt[0] = (-3 * n[0] + 4 * n[1] - n[2]) / (2 * dt)
    dndt[-1] = (3 * n[-1] - 4 * n[-2] + n[-3]) / (2 * dt)
    coef = params.hbar / params.mass
    fields, peaks = [], []
    for k, st in enumerate(evolution.states):
        psi = st.values
        flux = coef * np.imag(np.conj(psi) * gradient(psi, grid.dx))  # n p / m
        r = dndt[k] + gradient(flux, grid.dx)
        fields.append(RealField(grid, r))
        peaks.append(np.max(np.abs(r)))
    return ResidualSeries(times, fields, np.array(peaks))


def ensemble_density_distance(runs: Sequence[EvolutionResult], reference: EvolutionResult) -> np.ndarray:
    """Ensemble mean over runs of the L2 distance ||n(t) - n0(t)|| per snapshot."""
    n0 = reference.densities()
    grid = reference.grid
    acc = np.zeros(len(n0))
    for run in runs:
        d = run.densities() - n0
        acc += np.sqrt(np.trapezoid(d * d, dx=grid.dx, axis=1))
    return acc / len(runs)


def rms_delta_s(bundles: Sequence[TrajectoryBundle]) -> np.ndarray:
    """RMS of delta S over trajectories (and bundles) per snapshot, ignoring exited paths."""
    stack = np.concatenate([b.delta_s for b in bundles], axis=1)
    return np.sqrt(np.nanmean(stack * stack, axis=1))
