"""Solution state for the shifted boundary-layer system and conormal indices.

The shifted unknowns are rho_shift = rho - 1, u_shift = u1 - 1 + e^{-y},
h_shift = h1 - 1; they decay at the top of the layer.  The derived fields
v (vertical velocity), g (vertical magnetic field) and the stream function
psi are recovered from the divergence-free constraints and d_y psi = h.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import Field, GridSpec, zero_field
from .operators import dx, dy, integrate_y


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Conormal derivative label: d_t^t_count Z1^x_count Z2^z2_count."""

    t_count: int = 0
    x_count: int = 0
    z2_count: int = 0

    def __post_init__(self):
        if min(self.t_count, self.x_count, self.z2_count) < 0:
            raise ValueError("multi-index counts must be nonnegative")

    @property
    def order(self) -> int:
        return self.t_count + self.x_count + self.z2_count

    @property
    def tangential_order(self) -> int:
        return self.t_count + self.x_count

    def is_tangential(self) -> bool:
        return self.z2_count == 0


@dataclass(frozen=True)
class State:
    """Shifted unknowns plus derived fields and physical parameters."""

    rho_shift: Field
    u_shift: Field
    h_shift: Field
    v: Field
    g: Field
    psi: Field
    mu: float = 1.0
    kappa: float = 1.0
    eps: float = 0.01
    time: float = 0.0
    delta0: float = 0.25

    @property
    def grid(self) -> GridSpec:
        return self.rho_shift.grid

    @property
    def rho_total(self) -> np.ndarray:
        """Physical density rho = rho_shift + 1."""
        return self.rho_shift.values + 1.0

    def background(self) -> np.ndarray:
        """The e^{-y} background profile on the grid."""
        return np.exp(-self.grid.y)


def initial_state(
    grid: GridSpec,
    rho_shift: Field | None = None,
    u_shift: Field | None = None,
    h_shift: Field | None = None,
    **params,
) -> State:
    """Build a State from primary fields, filling derived quantities."""
    z = zero_field(grid)
    st = State(
        rho_shift=rho_shift or z,
        u_shift=u_shift or z,
        h_shift=h_shift or z,
        v=z,
        g=z,
        psi=z,
        **params,
    )
    return derive_secondary(st)


def derive_secondary(state: State) -> State:
    """Fill v = -int_0^y dx(u), g = -int_0^y dx(h), psi = int_0^y h.

    All three vanish identically on the wall row by construction."""
    v = -integrate_y(dx(state.u_shift))
    g = -integrate_y(dx(state.h_shift))
    psi = integrate_y(state.h_shift)
    return replace(state, v=v, g=g, psi=psi)


def divergence_defects(state: State) -> tuple[float, float, float]:
    """Sup norms of (dx u + dy v, dx h + dy g, dy psi - h).

    These vanish to quadrature accuracy when derive_secondary has run."""
    d1 = (dx(state.u_shift) + dy(state.v)).max_abs()
    d2 = (dx(state.h_shift) + dy(state.g)).max_abs()
    d3 = (dy(state.psi) - state.h_shift).max_abs()
    return d1, d2, d3
