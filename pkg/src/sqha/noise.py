"""Spatially Gaussian-correlated, temporally white noise and its correlation length."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .fields import Grid1D, PhysicalParams, RealField

KERNEL_CUTOFF = 6.0  # truncate the smoothing kernel at this many lambda_c


def lambda_c(params: PhysicalParams) -> float:
    """(pi/2)^{3/2} hbar / sqrt(2 m k T); math.inf at T = 0."""
    if params.temperature == 0:
        return math.inf
    return (math.pi / 2) ** 1.5 * params.hbar / math.sqrt(
        2 * params.mass * params.boltzmann * params.temperature)


@dataclass(frozen=True)
class NoiseSpec:
    temperature: float
    lambda_c: float
    mu: float = 1.0
    seed: int = 0
    conserve_mass: bool = True
    boltzmann: float = 1.0

    def __post_init__(self):
        if not (self.temperature >= 0 and math.isfinite(self.temperature)):
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if not self.lambda_c > 0:
            raise ValueError(f"lambda_c must be positive, got {self.lambda_c}")
        if self.temperature > 0 and not math.isfinite(self.lambda_c):
            raise ValueError("lambda_c must be finite at positive temperature")
        if not (self.mu >= 0 and math.isfinite(self.mu)):
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @classmethod
    def from_params(cls, params: PhysicalParams, mu: float = 1.0, seed: int = 0,
                    conserve_mass: bool = True) -> "NoiseSpec":
        return cls(params.temperature, lambda_c(params), mu, seed, conserve_mass, params.boltzmann)

    def variance(self, dt: float) -> float:
        """Target one-point variance mu k T / (2 lambda_c^2 dt)."""
        if self.temperature == 0:
            return 0.0
        return self.mu * self.boltzmann * self.temperature / (2 * self.lambda_c**2 * dt)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(int(self.seed))


def smoothing_kernel(dx: float, lam: float) -> np.ndarray:
    """exp(-2 x^2/lam^2) on [-6 lam, 6 lam]; its autocorrelation is exp(-x^2/lam^2)."""
    half = int(math.ceil(KERNEL_CUTOFF * lam / dx))
    x = dx * np.arange(-half, half + 1)
    return np.exp(-2 * x * x / lam**2)


def sample_noise(grid: Grid1D, spec: NoiseSpec, dt: float, rng: np.random.Generator) -> RealField:
    """One realization of eta(q) for a time step dt."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if spec.temperature == 0:
        return RealField(grid, np.zeros(grid.n_points))
    if grid.dx >= spec.lambda_c / 2:
        raise ValueError(f"dx = {grid.dx} does not resolve lambda_c = {spec.lambda_c} (need dx < lambda_c/2)")
    ker = smoothing_kernel(grid.dx, spec.lambda_c)
    white = rng.standard_normal(grid.n_points + len(ker) - 1)
    eta = kernels.convolve_valid(white, ker)
    eta *= math.sqrt(spec.variance(dt) / float(np.dot(ker, ker)))
    if spec.conserve_mass:
        eta -= eta.mean()
    return RealField(grid, eta)


def empirical_covariance(samples: np.ndarray, lags: np.ndarray) -> np.ndarray:
    """Mean of eta(q) eta(q + lag*dx) over samples and positions, for integer lags."""
    samples = np.asarray(samples, dtype=float)
    out = np.empty(len(lags))
    for i, lag in enumerate(np.asarray(lags, dtype=int)):
        if lag == 0:
            out[i] = np.mean(samples * samples)
        else:
            out[i] = np.mean(samples[:, :-lag] * samples[:, lag:])
    return out
