"""Compatibility source terms for the regularized system.

The regularization adds artificial x/y diffusion; to keep the initial time
derivatives of the regularized solution equal to those of the original
system, polynomial-in-time sources are built from the initial data:

    (r1, r2, ru, rh)(t) = sum_{i<m} t^i/i! * d_t^i(dx rho, dy rho, dx u1, dx h1)(0),

where the time derivatives at t = 0 are bootstrapped through the
unregularized equations (eps = 0), never by time differencing.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .grid import Field, GridSpec, zero_field
from .norms import shift_physical
from .operators import dx, dy
from .pde import DENSITY_FLOOR, DensityFloorError, TimeTower
from .state import initial_state


@dataclass(frozen=True)
class SourceBundle:
    """Taylor coefficients of the four sources.

    levels[i] = (d_t^i dx rho, d_t^i dy rho, d_t^i dx u1, d_t^i dx h1) at
    t = 0; m = number of levels."""

    levels: tuple
    m: int

    def __post_init__(self):
        if self.m != len(self.levels):
            raise ValueError("m must equal the number of levels")

    def fields(self, grid: GridSpec, t: float, deriv: int = 0):
        """The deriv-th time derivative of (r1, r2, ru, rh) at time t."""
        out = []
        for comp in range(4):
            acc = np.zeros((grid.nx, grid.ny))
            for i in range(deriv, self.m):
                acc += t ** (i - deriv) / factorial(i - deriv) * self.levels[i][
                    comp
                ].values
            out.append(Field(acc, grid))
        return tuple(out)


def zero_bundle(grid: GridSpec, m: int = 1) -> SourceBundle:
    z = zero_field(grid)
    return SourceBundle(levels=tuple((z, z, z, z) for _ in range(m)), m=m)


def bootstrap_time_derivatives(
    rho0: Field,
    u10: Field,
    h10: Field,
    m: int,
    mu: float = 1.0,
    kappa: float = 1.0,
) -> SourceBundle:
    """Bootstrap d_t^i of the coefficient quadruple for i = 0..m-1.

    The physical initial triple is shifted, a time-derivative tower of the
    unregularized system (eps = 0, no sources) is built, and the spatial
    derivatives are taken per level.  Level 0 reduces to direct spatial
    derivatives of the data."""
    if m < 1:
        raise ValueError(f"bootstrap depth m must be >= 1, got {m}")
    rmin = float(rho0.values.min())
    if rmin < DENSITY_FLOOR:
        raise DensityFloorError(
            f"initial density floor {rmin:.4g} below guard {DENSITY_FLOOR}"
        )
    grid = rho0.grid
    r, us, hs = shift_physical(rho0, u10, h10)
    state = initial_state(grid, r, us, hs, mu=mu, kappa=kappa, eps=0.0)
    tower = TimeTower(state, max_depth=m)
    levels = []
    for i in range(m):
        fr = tower.field("rho", i)
        fu = tower.field("u", i)
        fh = tower.field("h", i)
        levels.append((dx(fr), dy(fr), dx(fu), dx(fh)))
    return SourceBundle(levels=tuple(levels), m=m)


def assemble_sources(bundle: SourceBundle, grid: GridSpec, t: float):
    """Evaluate (r1, r2, ru, rh) at time t (truncated Taylor sums)."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    return bundle.fields(grid, t, deriv=0)
