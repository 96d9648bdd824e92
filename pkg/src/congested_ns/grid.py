"""Uniform 1D grids, finite-difference calculus, quadrature, and discrete norms."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    x_left: float
    x_right: float
    n: int

    def __post_init__(self):
        if not self.x_left < self.x_right:
            raise ValueError("x_left must be < x_right")
        if self.n < 3:
            raise ValueError("need at least 3 nodes")

    @property
    def h(self) -> float:
        return (self.x_right - self.x_left) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_left, self.x_right, self.n)


@dataclass(frozen=True)
class GridFunction:
    """Sampled field on a uniform grid; values are frozen after construction."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("GridFunction values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __call__(self, x):
        """Linear interpolation; exact at nodes."""
        return np.interp(x, self.grid.x, self.values)


def _d1_array(vals: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(vals)
    out[1:-1] = (vals[2:] - vals[:-2]) / (2.0 * h)
    out[0] = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h)
    out[-1] = (3.0 * vals[-1] - 4.0 * vals[-2] + vals[-3]) / (2.0 * h)
    return out


def _d2_array(vals: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(vals)
    out[1:-1] = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / h**2
    # one-sided 4-point stencils, second order
    out[0] = (2.0 * vals[0] - 5.0 * vals[1] + 4.0 * vals[2] - vals[3]) / h**2
    out[-1] = (2.0 * vals[-1] - 5.0 * vals[-2] + 4.0 * vals[-3] - vals[-4]) / h**2
    return out


def diff1(f: GridFunction) -> GridFunction:
    """Second-order first derivative (central interior, one-sided boundaries)."""
    return GridFunction(f.grid, _d1_array(f.values, f.grid.h))


def diff2(f: GridFunction) -> GridFunction:
    """Second-order second derivative (3-point interior, 4-point boundaries)."""
    if f.grid.n < 4:
        raise ValueError("diff2 needs at least 4 nodes")
    return GridFunction(f.grid, _d2_array(f.values, f.grid.h))


def integrate(f: GridFunction) -> float:
    """Trapezoid rule over the full grid."""
    return float(np.trapezoid(f.values, dx=f.grid.h))


def cumulative(f: GridFunction) -> GridFunction:
    """Running trapezoid antiderivative, zero at x_left."""
    vals = f.values
    out = np.concatenate(
        [[0.0], np.cumsum(0.5 * f.grid.h * (vals[1:] + vals[:-1]))]
    )
    return GridFunction(f.grid, out)


@dataclass(frozen=True)
class Norms:
    l2: float
    h_semi: float
    h_full: float
    sup: float
    l1: float


def norms(f: GridFunction, k: int = 0) -> Norms:
    """Discrete L2, H^k seminorm/norm (trapezoid-weighted), sup and L1 norms."""
    if not 0 <= k <= 3:
        raise ValueError("k must be in 0..3")
    h = f.grid.h
    vals = f.values

    def l2_of(a):
        return float(np.sqrt(np.trapezoid(a**2, dx=h)))

    l2 = l2_of(vals)
    deriv = vals
    sq_sum = l2**2
    h_semi = l2
    for _ in range(k):
        deriv = _d1_array(deriv, h)
        h_semi = l2_of(deriv)
        sq_sum += h_semi**2
    h_full = float(np.sqrt(sq_sum)) if k > 0 else l2
    if k == 0:
        h_semi = l2
    return Norms(
        l2=l2,
        h_semi=h_semi,
        h_full=h_full,
        sup=float(np.max(np.abs(vals))),
        l1=float(np.trapezoid(np.abs(vals), dx=h)),
    )
