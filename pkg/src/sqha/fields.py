"""Grids, field containers and wave <-> polar conversions."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np

NODE_EPS = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [x_min, x_max] with n_points samples."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ValueError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        if int(self.n_points) != self.n_points or self.n_points < 8:
            raise ValueError(f"n_points must be an integer >= 8, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, dx: float) -> "Grid1D":
        n = int(round((x_max - x_min) / dx)) + 1
        return cls(x_min, x_min + (n - 1) * dx, n)

    @classmethod
    def symmetric(cls, half_width: float, dx: float) -> "Grid1D":
        n_half = int(round(half_width / dx))
        return cls(-n_half * dx, n_half * dx, 2 * n_half + 1)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def points(self) -> np.ndarray:
        q = self.x_min + self.dx * np.arange(self.n_points)
        q[-1] = self.x_max
        q.setflags(write=False)
        return q

    def refined(self) -> "Grid1D":
        """Same span, half the spacing."""
        return Grid1D(self.x_min, self.x_max, 2 * self.n_points - 1)


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RealField:
    """Real samples on a grid; mask (True = valid) is optional."""

    grid: Grid1D
    values: np.ndarray
    mask: np.ndarray | None = field(default=None)

    def __post_init__(self):
        vals = _frozen(self.values, float)
        if vals.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)
        if self.mask is not None:
            m = _frozen(self.mask, bool)
            if m.shape != vals.shape:
                raise ValueError("mask shape does not match values")
            object.__setattr__(self, "mask", m)

    @property
    def valid(self) -> np.ndarray:
        return np.ones(self.grid.n_points, bool) if self.mask is None else self.mask


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples on a grid, e.g. a wave function."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values, complex)
        if vals.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def density(self) -> RealField:
        v = self.values
        return RealField(self.grid, v.real**2 + v.imag**2)


@dataclass(frozen=True)
class PhysicalParams:
    """Mass, constants, temperature and the external potential.

    ``potential`` is "free", "harmonic" (uses ``omega`` and ``center``) or a
    tabulated RealField.
    """

    mass: float = 1.0
    hbar: float = 1.0
    boltzmann: float = 1.0
    temperature: float = 0.0
    potential: Union[str, RealField] = "free"
    omega: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        for name in ("mass", "hbar", "boltzmann"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive and finite, got {val}")
        if not (self.temperature >= 0 and math.isfinite(self.temperature)):
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if isinstance(self.potential, str):
            if self.potential not in ("free", "harmonic"):
                raise ValueError(f"unknown potential {self.potential!r}")
            if self.potential == "harmonic" and not self.omega > 0:
                raise ValueError("harmonic potential needs omega > 0")
        elif not isinstance(self.potential, RealField):
            raise TypeError("potential must be a name or a RealField")

    def potential_on(self, grid: Grid1D) -> np.ndarray:
        if isinstance(self.potential, RealField):
            if self.potential.grid != grid:
                raise ValueError("tabulated potential lives on a different grid")
            return np.array(self.potential.values)
        if self.potential == "free":
            return np.zeros(grid.n_points)
        q = grid.points - self.center
        return 0.5 * self.mass * self.omega**2 * q * q

    def potential_at(self, grid: Grid1D, q: np.ndarray) -> np.ndarray:
        """Potential at arbitrary positions (closed form when available)."""
        q = np.asarray(q, dtype=float)
        if isinstance(self.potential, RealField):
            from .kernels import cubic_interp
            return cubic_interp(np.ascontiguousarray(self.potential.values), grid.x_min, grid.dx, q)
        if self.potential == "free":
            return np.zeros_like(q)
        d = q - self.center
        return 0.5 * self.mass * self.omega**2 * d * d


def _check_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def node_mask(density: np.ndarray, eps: float = NODE_EPS) -> np.ndarray:
    """True where density >= eps * max(density)."""
    density = np.asarray(density)
    top = density.max()
    if not top > 0:
        raise ValueError("density is identically zero")
    return density >= eps * top


def gradient(f: np.ndarray, dx: float, order: int = 2) -> np.ndarray:
    """Central first derivative; one-sided second order at the edges."""
    f = np.asarray(f)
    g = np.empty_like(f)
    g[1:-1] = (f[2:] - f[:-2]) / (2 * dx)
    g[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * dx)
    g[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * dx)
    if order == 4:
        g[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * dx)
    elif order != 2:
        raise ValueError("order must be 2 or 4")
    return g


def second_derivative(f: np.ndarray, dx: float, order: int = 2) -> np.ndarray:
    """Central second derivative; one-sided second order at the edges."""
    f = np.asarray(f)
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / dx**2
    d[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / dx**2
    d[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / dx**2
    if order == 4:
        d[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * dx**2)
    elif order != 2:
        raise ValueError("order must be 2 or 4")
    return d


def integrate(values: np.ndarray, grid: Grid1D, mask: np.ndarray | None = None) -> float:
    """Trapezoid integral; masked points contribute zero."""
    v = np.asarray(values, dtype=float)
    if mask is not None:
        v = np.where(mask, v, 0.0)
    return float(np.trapezoid(v, dx=grid.dx))


def wave_from_polar(amplitude: RealField, action: RealField, hbar: float) -> ComplexField:
    _check_grid(amplitude, action)
    if np.any(amplitude.values < 0):
        raise ValueError("amplitude must be non-negative")
    return ComplexField(amplitude.grid, amplitude.values * np.exp(1j * action.values / hbar))


def polar_from_wave(psi: ComplexField, hbar: float) -> tuple[RealField, RealField]:
    """Amplitude |psi| and momentum p = hbar Im(psi* dpsi)/|psi|^2 (masked near nodes)."""
    v = psi.values
    dens = v.real**2 + v.imag**2
    mask = node_mask(dens)
    current = hbar * np.imag(np.conj(v) * gradient(v, psi.grid.dx, order=4))
    p = np.zeros_like(dens)
    p[mask] = current[mask] / dens[mask]
    return RealField(psi.grid, np.abs(v)), RealField(psi.grid, p, mask)


def normalize(density: RealField) -> RealField:
    if np.any(density.values < 0):
        raise ValueError("density must be non-negative")
    total = integrate(density.values, density.grid)
    if not total > 0:
        raise ValueError("density has zero mass")
    return RealField(density.grid, density.values / total, density.mask)


def normalize_wave(psi: ComplexField) -> ComplexField:
    total = integrate(np.abs(psi.values) ** 2, psi.grid)
    if not total > 0:
        raise ValueError("wave function has zero norm")
    return ComplexField(psi.grid, psi.values / math.sqrt(total))


def boundary_fraction(density: np.ndarray) -> float:
    """Largest edge density relative to the maximum."""
    density = np.asarray(density)
    return float(max(density[0], density[-1]) / density.max())


def _grid_from_q(q: np.ndarray) -> Grid1D:
    grid = Grid1D(float(q[0]), float(q[-1]), len(q))
    if not np.allclose(q, grid.points, rtol=0, atol=1e-9 * grid.dx):
        raise ValueError("CSV coordinates are not uniformly spaced")
    return grid


def write_field_csv(path, fld: Union[RealField, ComplexField]) -> None:
    """Write q,value (real; masked points as nan) or q,re,im (complex)."""
    q = fld.grid.points
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if isinstance(fld, ComplexField):
            w.writerow(["q", "re", "im"])
            for qi, z in zip(q, fld.values):
                w.writerow([f"{qi:.17g}", f"{z.real:.17g}", f"{z.imag:.17g}"])
        else:
            w.writerow(["q", "value"])
            valid = fld.valid
            for qi, v, ok in zip(q, fld.values, valid):
                w.writerow([f"{qi:.17g}", f"{v:.17g}" if ok else "nan"])


def read_field_csv(path) -> Union[RealField, ComplexField]:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    if header == ["q", "re", "im"]:
        return ComplexField(_grid_from_q(data[:, 0]), data[:, 1] + 1j * data[:, 2])
    if header == ["q", "value"]:
        vals = data[:, 1]
        mask = np.isfinite(vals)
        return RealField(_grid_from_q(data[:, 0]), np.where(mask, vals, 0.0),
                         None if mask.all() else mask)
    raise ValueError(f"{path}: unrecognized header {header}")
