"""Discrete differential and conormal operators on grid fields.

x-derivatives: 4th-order central periodic differences by default, spectral
behind the grid's x_scheme flag.  y-derivatives: 2nd-order three-point
stencils on the (possibly graded) y grid, one-sided at the two boundary
rows.  The conormal operator Z2 = phi(y) d/dy with phi(y) = y/(1+y)
vanishes identically on the wall row because phi(0) = 0.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .grid import Field, GridSpec


def phi(y: np.ndarray) -> np.ndarray:
    """Wall-degenerate conormal weight y/(1+y)."""
    return y / (1.0 + y)


# ---------------------------------------------------------------------------
# x direction (axis 0, periodic)
# ---------------------------------------------------------------------------

def _dx_fd4(v: np.ndarray, dx: float) -> np.ndarray:
    vp1, vm1 = np.roll(v, -1, axis=0), np.roll(v, 1, axis=0)
    vp2, vm2 = np.roll(v, -2, axis=0), np.roll(v, 2, axis=0)
    return (8.0 * (vp1 - vm1) - (vp2 - vm2)) / (12.0 * dx)


def _d2x_fd4(v: np.ndarray, dx: float) -> np.ndarray:
    vp1, vm1 = np.roll(v, -1, axis=0), np.roll(v, 1, axis=0)
    vp2, vm2 = np.roll(v, -2, axis=0), np.roll(v, 2, axis=0)
    return (-vp2 + 16.0 * vp1 - 30.0 * v + 16.0 * vm1 - vm2) / (12.0 * dx * dx)


@lru_cache(maxsize=32)
def _wavenumbers(nx: int) -> np.ndarray:
    return np.fft.rfftfreq(nx, d=1.0 / nx) * 1.0  # integer wavenumbers on [0, 2pi)


def _dx_spectral(v: np.ndarray, nx: int) -> np.ndarray:
    k = _wavenumbers(nx)
    vh = np.fft.rfft(v, axis=0)
    return np.fft.irfft(1j * k[:, None] * vh, n=nx, axis=0)


def _d2x_spectral(v: np.ndarray, nx: int) -> np.ndarray:
    k = _wavenumbers(nx)
    vh = np.fft.rfft(v, axis=0)
    return np.fft.irfft(-(k ** 2)[:, None] * vh, n=nx, axis=0)


def dx(f: Field) -> Field:
    g = f.grid
    if g.x_scheme == "spectral":
        return Field(_dx_spectral(f.values, g.nx), g)
    return Field(_dx_fd4(f.values, g.dx), g)


def d2x(f: Field) -> Field:
    g = f.grid
    if g.x_scheme == "spectral":
        return Field(_d2x_spectral(f.values, g.nx), g)
    return Field(_d2x_fd4(f.values, g.dx), g)


# ---------------------------------------------------------------------------
# y direction (axis 1, wall at j=0, top at j=ny-1)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _dy_coeffs(grid: GridSpec):
    """Three-point first-derivative coefficients (interior central,
    one-sided 2nd order at both ends).  Returns (lo, di, up) arrays of
    length ny addressing values at j-1, j, j+1 for interior rows; rows 0
    and ny-1 are handled separately with forward/backward stencils."""
    y = grid.y
    h1 = y[1:-1] - y[:-2]
    h2 = y[2:] - y[1:-1]
    lo = -h2 / (h1 * (h1 + h2))
    di = (h2 - h1) / (h1 * h2)
    up = h1 / (h2 * (h1 + h2))
    # one-sided: f'(y0) from (y0, y1, y2); f'(yN) from (yN-2, yN-1, yN)
    a, b = y[1] - y[0], y[2] - y[0]
    c0 = np.array([-(a + b) / (a * b), b / (a * (b - a)), -a / (b * (b - a))])
    a, b = y[-1] - y[-2], y[-1] - y[-3]
    cN = np.array([a / (b * (b - a)), -b / (a * (b - a)), (a + b) / (a * b)])
    return lo, di, up, c0, cN


@lru_cache(maxsize=64)
def _d2y_coeffs(grid: GridSpec):
    """Three-point second-derivative coefficients on the graded grid, plus
    four-point one-sided 2nd-order closures for the boundary rows."""
    y = grid.y
    h1 = y[1:-1] - y[:-2]
    h2 = y[2:] - y[1:-1]
    lo = 2.0 / (h1 * (h1 + h2))
    di = -2.0 / (h1 * h2)
    up = 2.0 / (h2 * (h1 + h2))
    c0 = _onesided_d2(y[:4] - y[0])
    cN = _onesided_d2(y[-4:] - y[-1])
    return lo, di, up, c0, cN


def _onesided_d2(t: np.ndarray) -> np.ndarray:
    """Second-derivative weights at t=0 from 4 nodes via Vandermonde."""
    A = np.vander(t, 4, increasing=True).T
    rhs = np.zeros(4)
    rhs[2] = 2.0
    return np.linalg.solve(A, rhs)


def dy(f: Field) -> Field:
    lo, di, up, c0, cN = _dy_coeffs(f.grid)
    v = f.values
    out = np.empty_like(v)
    out[:, 1:-1] = lo * v[:, :-2] + di * v[:, 1:-1] + up * v[:, 2:]
    out[:, 0] = v[:, :3] @ c0
    out[:, -1] = v[:, -3:] @ cN
    return Field(out, f.grid)


def d2y(f: Field) -> Field:
    lo, di, up, c0, cN = _d2y_coeffs(f.grid)
    v = f.values
    out = np.empty_like(v)
    out[:, 1:-1] = lo * v[:, :-2] + di * v[:, 1:-1] + up * v[:, 2:]
    out[:, 0] = v[:, :4] @ c0
    out[:, -1] = v[:, -4:] @ cN
    return Field(out, f.grid)


def z1(f: Field) -> Field:
    """Tangential conormal derivative Z1 = d/dx."""
    return dx(f)


def z2(f: Field) -> Field:
    """Wall-degenerate conormal derivative Z2 = phi(y) d/dy.

    The wall row is exactly zero (phi(0) = 0), so no one-sided stencil is
    needed there."""
    out = phi(f.grid.y)[None, :] * dy(f).values
    out[:, 0] = 0.0
    return Field(out, f.grid)


def integrate_y(f: Field) -> Field:
    """Antiderivative in y vanishing at the wall: (Iy f)(x, y) = int_0^y f.

    Cumulative trapezoid on the graded grid."""
    y = f.grid.y
    v = f.values
    seg = 0.5 * (v[:, 1:] + v[:, :-1]) * (y[1:] - y[:-1])
    out = np.zeros_like(v)
    np.cumsum(seg, axis=1, out=out[:, 1:])
    return Field(out, f.grid)
