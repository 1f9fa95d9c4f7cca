"""Semi-implicit time integration of the shifted regularized system.

Scheme: all second-derivative terms are implicit (tridiagonal solves —
periodic in x, banded in y per x-line); advection, coupling, sources and
forcing are explicit.  imex-cn is second order: a Strang-symmetrized
Crank-Nicolson x-diffusion split around a two-stage midpoint predictor/
corrector in y.  imex-be is the first-order single-stage variant.

Boundary closure: Neumann rows (d_y rho = d_y h = 0 at the wall) use a
second-order mirror ghost inside the implicit solve; Dirichlet rows (u at
the wall, all fields at the top) are clamped to their initial traces,
which reduces to the homogeneous conditions for compatible data while
keeping the uniform outer state an exact discrete steady state.

The -mu e^{-y} background forcing is discretized as -mu * D_y^2(e^{-y})
(well-balanced), so the equilibrium is steady to round-off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .grid import Field, GridSpec
from .norms import weighted_linf
from .operators import _d2y_coeffs, d2y, dx, dy
from .pde import DENSITY_FLOOR, ZERO_FORCING, ZERO_SOURCES, DensityFloorError
from .sources import zero_bundle
from .state import State, derive_secondary

_SCHEMES = ("imex-be", "imex-cn")


class SolverError(RuntimeError):
    """Integration aborted (monitor breach or divergence)."""


@dataclass(frozen=True)
class SolverConfig:
    """Physical parameters and time-stepping controls."""

    mu: float = 1.0
    kappa: float = 1.0
    eps: float = 0.01
    dt: float = 1e-3
    t_end: float = 0.1
    scheme: str = "imex-cn"
    cfl_safety: float = 0.9
    delta0: float = 0.25
    l: float = 2.0

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if min(self.mu, self.kappa, self.eps) < 0:
            raise ValueError("mu, kappa, eps must be nonnegative")
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")


@dataclass(frozen=True)
class MonitorStatus:
    """Runtime a priori conditions the local theory requires."""

    h_floor: float
    rho_sup: float
    shear_sup: float
    rho_band_ok: bool
    breached: bool
    delta: float
    source_flag: bool = False


def monitor(state: State, delta0: float, l: float, source_flag: bool = False) -> MonitorStatus:
    """Evaluate the runtime conditions with delta = delta0 / 2:

    h + 1 >= delta, ||rho_shift||_{L^inf_0} <= (2l-1) delta^2 / 2, and
    ||d_y(u - e^{-y})||_{L^inf_1} <= 1/delta; also the density band
    1/2 <= rho <= 3/2."""
    delta = delta0 / 2.0
    grid = state.grid
    E = np.exp(-grid.y)[None, :]
    h_floor = float((state.h_shift.values + 1.0).min())
    rho_sup = weighted_linf(state.rho_shift, 0.0)
    shear = Field(dy(state.u_shift).values + E, grid)
    shear_sup = weighted_linf(shear, 1.0)
    rho_tot = state.rho_total
    band_ok = bool(rho_tot.min() >= 0.5 and rho_tot.max() <= 1.5)
    breached = (
        h_floor < delta
        or rho_sup > (2.0 * l - 1.0) * delta**2 / 2.0
        or shear_sup > 1.0 / delta
    )
    return MonitorStatus(
        h_floor=h_floor,
        rho_sup=rho_sup,
        shear_sup=shear_sup,
        rho_band_ok=band_ok,
        breached=bool(breached),
        delta=delta,
        source_flag=source_flag,
    )


@dataclass
class Trajectory:
    """Output of run(): stored states with monitor history."""

    states: list
    monitors: list
    config: SolverConfig
    bundle: object
    forcing: object = None
    breached: bool = False

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])


# ---------------------------------------------------------------------------
# Tridiagonal machinery
# ---------------------------------------------------------------------------


def thomas_batched(lo, di, up, rhs):
    """Solve independent tridiagonal systems along the last axis.

    lo[..., 0] and up[..., -1] are ignored.  Standard forward elimination
    and back substitution, vectorized over the leading axes."""
    n = rhs.shape[-1]
    cp = np.empty_like(rhs)
    dp = np.empty_like(rhs)
    cp[..., 0] = up[..., 0] / di[..., 0]
    dp[..., 0] = rhs[..., 0] / di[..., 0]
    for j in range(1, n):
        denom = di[..., j] - lo[..., j] * cp[..., j - 1]
        cp[..., j] = up[..., j] / denom
        dp[..., j] = (rhs[..., j] - lo[..., j] * dp[..., j - 1]) / denom
    out = np.empty_like(rhs)
    out[..., -1] = dp[..., -1]
    for j in range(n - 2, -1, -1):
        out[..., j] = dp[..., j] - cp[..., j] * out[..., j + 1]
    return out


def periodic_thomas_batched(lo, di, up, rhs):
    """Solve periodic tridiagonal systems along the last axis via the
    Sherman-Morrison correction of the open-chain Thomas solve."""
    n = rhs.shape[-1]
    gamma = -di[..., 0]
    dmod = di.copy()
    dmod[..., 0] = di[..., 0] - gamma
    dmod[..., -1] = di[..., -1] - lo[..., 0] * up[..., -1] / gamma
    u = np.zeros_like(rhs)
    u[..., 0] = gamma
    u[..., -1] = up[..., -1]
    y = thomas_batched(lo, dmod, up, rhs)
    q = thomas_batched(lo, dmod, up, u)
    num = y[..., 0] + lo[..., 0] * y[..., -1] / gamma
    den = 1.0 + q[..., 0] + lo[..., 0] * q[..., -1] / gamma
    return y - (num / den)[..., None] * q


# ---------------------------------------------------------------------------
# Directional implicit solves
# ---------------------------------------------------------------------------


def _solve_x_cn(w: np.ndarray, coeff: np.ndarray, step: float, dx_: float) -> np.ndarray:
    """Crank-Nicolson step of d_t w = coeff(x, y) d_x^2 w, periodic in x.

    Second-order three-point stencil; coeff may vary over the grid."""
    a = 0.5 * step / dx_**2
    wp = np.roll(w, -1, axis=0)
    wm = np.roll(w, 1, axis=0)
    rhs = w + a * coeff * (wp - 2.0 * w + wm)
    # systems run along x: transpose to (ny, nx)
    c = (a * coeff).T
    lo = -c
    up = -c
    di = 1.0 + 2.0 * c
    sol = periodic_thomas_batched(lo, di, up, rhs.T)
    return sol.T


def _y_matrix(grid: GridSpec, coeff: np.ndarray, a: float, wall_bc: str):
    """Rows of (I - a * coeff * D_y^2) per x-line.

    wall_bc 'neumann': mirror-ghost second-order closure at j=0;
    'dirichlet': identity row at j=0.  The top row is always identity."""
    ny = grid.ny
    lo2, di2, up2, _, _ = _d2y_coeffs(grid)
    lo = np.zeros((grid.nx, ny))
    di = np.ones((grid.nx, ny))
    up = np.zeros((grid.nx, ny))
    ac = a * coeff
    lo[:, 1:-1] = -ac[:, 1:-1] * lo2
    di[:, 1:-1] = 1.0 - ac[:, 1:-1] * di2
    up[:, 1:-1] = -ac[:, 1:-1] * up2
    if wall_bc == "neumann":
        h1 = grid.y[1] - grid.y[0]
        di[:, 0] = 1.0 + ac[:, 0] * 2.0 / h1**2
        up[:, 0] = -ac[:, 0] * 2.0 / h1**2
    elif wall_bc != "dirichlet":
        raise ValueError(f"unknown wall_bc {wall_bc!r}")
    return lo, di, up


def _apply_dyy(grid: GridSpec, w: np.ndarray, wall_bc: str) -> np.ndarray:
    """Discrete D_y^2 w consistent with _y_matrix (boundary rows zeroed;
    Neumann wall uses the mirror-ghost closure)."""
    lo2, di2, up2, _, _ = _d2y_coeffs(grid)
    out = np.zeros_like(w)
    out[:, 1:-1] = lo2 * w[:, :-2] + di2 * w[:, 1:-1] + up2 * w[:, 2:]
    if wall_bc == "neumann":
        h1 = grid.y[1] - grid.y[0]
        out[:, 0] = 2.0 * (w[:, 1] - w[:, 0]) / h1**2
    else:
        out[:, 0] = 0.0
    out[:, -1] = 0.0
    return out


def _solve_y_implicit(
    grid: GridSpec,
    coeff: np.ndarray,
    a: float,
    rhs: np.ndarray,
    wall_bc: str,
    wall_trace: np.ndarray,
    top_trace: np.ndarray,
) -> np.ndarray:
    """Solve (I - a coeff D_y^2) w = rhs with the stated boundary rows."""
    lo, di, up = _y_matrix(grid, coeff, a, wall_bc)
    b = rhs.copy()
    if wall_bc == "dirichlet":
        b[:, 0] = wall_trace
    b[:, -1] = top_trace
    return thomas_batched(lo, di, up, b)


# ---------------------------------------------------------------------------
# Explicit right-hand sides (everything except implicit diffusion)
# ---------------------------------------------------------------------------


def _explicit_terms(state: State, cfg: SolverConfig, bundle, forcing, t: float):
    """Explicit tendencies N for (rho, u, h): advection, coupling, sources,
    forcing, and the well-balanced background term; the u tendency is
    already divided by the density."""
    grid = state.grid
    E = np.exp(-grid.y)[None, :]
    W = d2y(Field(np.broadcast_to(E, (grid.nx, grid.ny)), grid)).values
    r = state.rho_shift.values
    u = state.u_shift.values
    h = state.h_shift.values
    v = state.v.values
    g = state.g.values
    rho = r + 1.0
    if rho.min() < DENSITY_FLOOR:
        raise DensityFloorError(f"density floor breached: min(rho) = {rho.min():.4g}")
    U = u + 1.0 - E
    rx, ux, hx = dx(state.rho_shift).values, dx(state.u_shift).values, dx(state.h_shift).values
    ry, uy, hy = dy(state.rho_shift).values, dy(state.u_shift).values, dy(state.h_shift).values
    r1, r2, ru, rh = (s.values for s in bundle.fields(grid, t, deriv=0))
    Fr, Fu, Fh = (s.values for s in forcing.fields(grid, t, deriv=0))
    eps = cfg.eps

    n_rho = -U * rx - v * ry - eps * (dx(Field(r1, grid)).values + dy(Field(r2, grid)).values) + Fr
    transport_scale = float(np.max(np.abs(U * rx)) + np.max(np.abs(v * ry)))
    source_scale = eps * float(
        np.max(np.abs(dx(Field(r1, grid)).values + dy(Field(r2, grid)).values))
    )
    src_flag = bool(source_scale > 0.01 * transport_scale) if transport_scale > 0 else bool(
        source_scale > 0
    )

    n_u = (
        (h + 1.0) * hx
        + g * hy
        - eps * dx(Field(ru, grid)).values
        - cfg.mu * W
        - rho * (U * ux + v * uy + v * E)
        + Fu
    ) / rho

    n_h = (
        -U * hx
        - v * hy
        + (h + 1.0) * ux
        + g * (uy + E)
        - eps * dx(Field(rh, grid)).values
        + Fh
    )
    return n_rho, n_u, n_h, src_flag


def _cfl_substeps(state: State, cfg: SolverConfig) -> int:
    """Deterministic number of substeps so each satisfies the advective CFL."""
    grid = state.grid
    E = np.exp(-grid.y)[None, :]
    u_max = float(np.max(np.abs(state.u_shift.values + 1.0 - E)))
    v_max = float(np.max(np.abs(state.v.values)))
    dy_min = float(np.min(np.diff(grid.y)))
    limits = []
    if u_max > 0:
        limits.append(grid.dx / u_max)
    if v_max > 0:
        limits.append(dy_min / v_max)
    if not limits:
        return 1
    dt_cfl = cfg.cfl_safety * min(limits)
    return max(1, int(math.ceil(cfg.dt / dt_cfl)))


def _traces(field_vals: np.ndarray):
    return field_vals[:, 0].copy(), field_vals[:, -1].copy()


def step(
    state: State,
    cfg: SolverConfig,
    bundle=None,
    forcing=None,
    traces: dict | None = None,
) -> tuple[State, MonitorStatus]:
    """Advance one nominal dt (internally subdivided to satisfy the CFL
    rule), returning the new state and its monitor status.

    traces holds the Dirichlet clamp values per field; when omitted they
    are taken from the incoming state."""
    if bundle is None:
        bundle = zero_bundle(state.grid)
    if forcing is None:
        forcing = ZERO_FORCING
    if traces is None:
        traces = make_traces(state)
    mon = monitor(state, cfg.delta0, cfg.l)
    if mon.breached:
        raise SolverError(f"monitor breached before step: {mon}")
    n_sub = _cfl_substeps(state, cfg)
    k = cfg.dt / n_sub
    cur = state
    src_flag = False
    for _ in range(n_sub):
        cur, flag = _substep(cur, cfg, bundle, forcing, k, traces)
        src_flag = src_flag or flag
    vals = np.concatenate(
        [cur.rho_shift.values, cur.u_shift.values, cur.h_shift.values]
    )
    if not np.all(np.isfinite(vals)):
        raise SolverError("solver diverged (non-finite fields)")
    mon = monitor(cur, cfg.delta0, cfg.l, source_flag=src_flag)
    if mon.breached:
        raise SolverError(f"monitor breached at t = {cur.time:.6g}: {mon}")
    return cur, mon


def make_traces(state: State) -> dict:
    """Dirichlet clamp values captured from a state (normally the initial one)."""
    return {
        "rho_top": state.rho_shift.values[:, -1].copy(),
        "u_wall": state.u_shift.values[:, 0].copy(),
        "u_top": state.u_shift.values[:, -1].copy(),
        "h_top": state.h_shift.values[:, -1].copy(),
    }


def _substep(state, cfg, bundle, forcing, k, traces):
    grid = state.grid
    eps, mu, kappa = cfg.eps, cfg.mu, cfg.kappa
    t = state.time

    r = state.rho_shift.values
    u = state.u_shift.values
    h = state.h_shift.values

    def x_half(rv, uv, hv, step_):
        if eps == 0.0:
            return rv, uv, hv
        ones = np.ones_like(rv)
        rho_tot = rv + 1.0
        rv = _solve_x_cn(rv, eps * ones, step_, grid.dx)
        uv = _solve_x_cn(uv, eps / rho_tot, step_, grid.dx)
        hv = _solve_x_cn(hv, eps * ones, step_, grid.dx)
        return rv, uv, hv

    if cfg.scheme == "imex-cn":
        r, u, h = x_half(r, u, h, k / 2.0)
        st0 = derive_secondary(
            replace(
                state,
                rho_shift=Field(r, grid),
                u_shift=Field(u, grid),
                h_shift=Field(h, grid),
            )
        )
        rho_n = r + 1.0
        n_r, n_u, n_h, flag1 = _explicit_terms(st0, cfg, bundle, forcing, t)
        ones = np.ones_like(r)

        def y_solve(base, coeff, nexp, wall_bc, wall, top, a):
            rhs = base + k * nexp + a * coeff * _apply_dyy(grid, base, wall_bc)
            return _solve_y_implicit(grid, coeff, a, rhs, wall_bc, wall, top)

        a = k / 2.0
        zeros_w = np.zeros(grid.nx)
        r_star = y_solve(r, eps * ones, n_r, "neumann", zeros_w, traces["rho_top"], a)
        u_star = y_solve(
            u, mu / rho_n, n_u, "dirichlet", traces["u_wall"], traces["u_top"], a
        )
        h_star = y_solve(h, kappa * ones, n_h, "neumann", zeros_w, traces["h_top"], a)

        r_mid = 0.5 * (r + r_star)
        u_mid = 0.5 * (u + u_star)
        h_mid = 0.5 * (h + h_star)
        st_mid = derive_secondary(
            replace(
                state,
                rho_shift=Field(r_mid, grid),
                u_shift=Field(u_mid, grid),
                h_shift=Field(h_mid, grid),
                time=t + k / 2.0,
            )
        )
        n_r, n_u, n_h, flag2 = _explicit_terms(st_mid, cfg, bundle, forcing, t + k / 2.0)
        rho_mid = r_mid + 1.0
        r_new = y_solve(r, eps * ones, n_r, "neumann", zeros_w, traces["rho_top"], a)
        u_new = y_solve(
            u, mu / rho_mid, n_u, "dirichlet", traces["u_wall"], traces["u_top"], a
        )
        h_new = y_solve(h, kappa * ones, n_h, "neumann", zeros_w, traces["h_top"], a)
        r_new, u_new, h_new = x_half(r_new, u_new, h_new, k / 2.0)
        flag = flag1 or flag2
    else:  # imex-be
        r, u, h = x_half(r, u, h, k)
        st0 = derive_secondary(
            replace(
                state,
                rho_shift=Field(r, grid),
                u_shift=Field(u, grid),
                h_shift=Field(h, grid),
            )
        )
        rho_n = r + 1.0
        n_r, n_u, n_h, flag = _explicit_terms(st0, cfg, bundle, forcing, t)
        ones = np.ones_like(r)
        zeros_w = np.zeros(grid.nx)
        r_new = _solve_y_implicit(
            grid, eps * ones, k, r + k * n_r, "neumann", zeros_w, traces["rho_top"]
        )
        u_new = _solve_y_implicit(
            grid,
            mu / rho_n,
            k,
            u + k * n_u,
            "dirichlet",
            traces["u_wall"],
            traces["u_top"],
        )
        h_new = _solve_y_implicit(
            grid, kappa * ones, k, h + k * n_h, "neumann", zeros_w, traces["h_top"]
        )

    new = derive_secondary(
        replace(
            state,
            rho_shift=Field(r_new, grid),
            u_shift=Field(u_new, grid),
            h_shift=Field(h_new, grid),
            time=t + k,
        )
    )
    return new, flag


def run(
    initial: State,
    cfg: SolverConfig,
    bundle=None,
    forcing=None,
    output_stride: int = 1,
) -> Trajectory:
    """Integrate to t_end (or monitor breach), storing every output_stride-th
    state.  The initial state is always stored; on breach the trajectory is
    returned with breached = True and ends at the last healthy state."""
    if bundle is None:
        bundle = zero_bundle(initial.grid)
    if forcing is None:
        forcing = ZERO_FORCING
    traces = make_traces(initial)
    n_steps = max(1, int(round(cfg.t_end / cfg.dt)))
    states = [initial]
    monitors = [monitor(initial, cfg.delta0, cfg.l)]
    traj = Trajectory(
        states=states, monitors=monitors, config=cfg, bundle=bundle, forcing=forcing
    )
    if monitors[0].breached:
        traj.breached = True
        return traj
    cur = initial
    for n in range(1, n_steps + 1):
        try:
            cur, mon = step(cur, cfg, bundle, forcing, traces)
        except SolverError:
            traj.breached = True
            return traj
        if n % output_stride == 0 or n == n_steps:
            states.append(cur)
            monitors.append(mon)
    return traj


def pde_residual(state: State, manufactured):
    """Residual of the manufactured solution in the discrete spatial
    operator: (discrete tendency with exact forcing) - (exact tendency).

    manufactured must provide state_at(grid, t, ...) and exact time
    derivatives (see manufactured.ManufacturedSolution); state should be
    the manufactured state sampled at its time."""
    from .pde import pde_rhs

    manufactured.check_boundary_compatibility(state.grid)
    dr, du, dh = pde_rhs(state, forcing=manufactured)
    er, eu, eh = manufactured.exact_time_derivatives(state.grid, state.time)
    return dr - er, du - eu, dh - eh
