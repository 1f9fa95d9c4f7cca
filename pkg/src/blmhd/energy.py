"""Per-slice and per-trajectory energy functionals.

One report per time slice collects every quantity the a priori machinery
tracks: the tangential-capped energy E_{m,l}; the L-infinity aggregate Q
(instantaneous and as a running sup); the composite functionals X_{m,l}
and Y_{m,l} (both include an additive 1); the dissipation functionals
D_x and D_y; and the accumulating functionals Theta_{m,l} and Xi_{m,l},
whose time integrals are trapezoidal sums over the trajectory's uniform
output stride.  All time derivatives come from equation substitution
(pde.TimeTower), never from differencing stored time levels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cancellation import T_DEPTH_CAP, good_unknowns
from .grid import Field
from .norms import (
    NormSpec,
    conormal_linf,
    conormal_norm,
    index_set,
    weighted_l2,
    weighted_linf,
)
from .norms import _apply_spatial
from .operators import d2y, dx, dy, phi
from .pde import TimeTower, map_family, tower_family
from .solver import MonitorStatus, monitor
from .state import MultiIndex, State

CSV_COLUMNS = (
    "time",
    "e_ml",
    "q_inst",
    "q_sup",
    "x_ml",
    "y_ml",
    "theta_ml",
    "xi_ml",
    "dx_ml",
    "dy_ml",
    "h_floor",
    "rho_sup",
    "shear_sup",
    "breached",
)


@dataclass(frozen=True)
class EnergyReport:
    """All tracked functionals at one time slice.

    q_inst is the instantaneous L-infinity aggregate; q_sup its running
    sup over the trajectory so far (equal for a single slice).  theta_ml
    and xi_ml carry the accumulated time integrals when produced by
    trajectory_report and are purely instantaneous (integral slots zero,
    so theta_ml = y_ml and xi_ml = x_ml) from instantaneous_functionals.
    """

    time: float
    e_ml: float
    q_inst: float
    q_sup: float
    x_ml: float
    y_ml: float
    theta_ml: float
    xi_ml: float
    dx_ml: float
    dy_ml: float
    monitor: MonitorStatus

    def __post_init__(self):
        for name in ("e_ml", "q_inst", "q_sup", "dx_ml", "dy_ml"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("x_ml", "y_ml", "theta_ml", "xi_ml"):
            if getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be >= 1 (additive constant)")

    def row(self) -> list:
        """Values in CSV_COLUMNS order."""
        return [
            self.time,
            self.e_ml,
            self.q_inst,
            self.q_sup,
            self.x_ml,
            self.y_ml,
            self.theta_ml,
            self.xi_ml,
            self.dx_ml,
            self.dy_ml,
            self.monitor.h_floor,
            self.monitor.rho_sup,
            self.monitor.shear_sup,
            self.monitor.breached,
        ]


def _top_tangential_indices(m: int) -> list[MultiIndex]:
    """Tangential indices of order exactly m within the time-depth cap."""
    return [
        MultiIndex(a, m - a, 0) for a in range(min(m, T_DEPTH_CAP) + 1)
    ]


def _v_over_phi_family(state: State, fv):
    """Family for v / phi(y); the wall row uses the limit (1+y) d_y v."""
    grid = state.grid
    ph = phi(grid.y)

    def fam(k: int) -> Field:
        v = fv(k)
        out = np.empty_like(v.values)
        out[:, 1:] = v.values[:, 1:] / ph[None, 1:]
        out[:, 0] = dy(v).values[:, 0] * (1.0 + grid.y[0])
        return Field(out, grid)

    return fam


def _slice_functionals(
    state: State,
    m: int,
    l: float,
    delta0: float,
    sources=None,
    forcing=None,
) -> dict:
    """Every instantaneous piece at one slice, plus the Theta/Xi integrands."""
    if m < 1:
        raise ValueError(f"energy functionals require m >= 1, got {m}")
    grid = state.grid
    eps, mu, kappa = state.eps, state.mu, state.kappa
    tower = TimeTower(state, sources=sources, forcing=forcing)
    fr = tower_family(tower, "rho")
    fu = tower_family(tower, "u")
    fh = tower_family(tower, "h")
    fv = tower_family(tower, "v")
    fg = tower_family(tower, "g")
    dyr = map_family(dy, fr)
    dyu = map_family(dy, fu)
    dyh = map_family(dy, fh)
    E = np.exp(-grid.y)[None, :]
    E_field = Field(np.broadcast_to(E, (grid.nx, grid.ny)).copy(), grid)

    # plain deviation u - e^{-y} (zero at the rest state) and its normal
    # derivative; all weighted-L2 functionals use the deviation so that the
    # rest state gives exactly E = 0 and X = Y = 1, while the L-infinity
    # aggregate Q keeps the raw fields (finite background contribution)
    def fu_dev(k: int) -> Field:
        out = fu(k)
        return out - E_field if k == 0 else out

    def fshear(k: int) -> Field:
        out = dyu(k)
        return out + E_field if k == 0 else out

    e_ml = conormal_norm((fr, fu_dev, fh), NormSpec(m, l, "tangential-capped")) ** 2
    triple_full = conormal_norm((fr, fu_dev, fh), NormSpec(m, l, "full")) ** 2
    dy_tail = conormal_norm((dyr, fshear, dyh), NormSpec(m - 1, l, "full")) ** 2
    linf_tail = conormal_linf(dyr, NormSpec(1, 1.0, "full")) ** 2
    y_ml = 1.0 + triple_full + dy_tail + linf_tail

    # good-unknown contributions over the top tangential indices
    gm_sq = 0.0
    dx_good = 0.0
    dy_good = 0.0
    delta = delta0 / 2.0
    for idx in _top_tangential_indices(m):
        gu = good_unknowns(state, idx, delta, tower=tower)
        for w, coef in ((gu.rho_m, eps), (gu.u_m, mu), (gu.h_m, kappa)):
            gm_sq += weighted_l2(w, l) ** 2
            dx_good += eps * weighted_l2(dx(w), l) ** 2
            dy_good += coef * weighted_l2(dy(w), l) ** 2
    x_ml = 1.0 + e_ml + gm_sq + dy_tail + linf_tail

    # L-infinity aggregate
    q1 = (
        weighted_linf(dx(fr(0)), 0.0) ** 2
        + weighted_linf(fr(1), 0.0) ** 2
    )
    q2 = conormal_linf((fu, fh), NormSpec(1, 0.0, "tangential-only")) ** 2
    q3 = conormal_linf((fv, fg), NormSpec(1, 1.0, "tangential-only")) ** 2
    q4 = (
        conormal_linf(
            (dyr, fshear, dyh, _v_over_phi_family(state, fv)),
            NormSpec(1, 1.0, "full"),
        )
        ** 2
    )
    q_inst = q1 + q2 + q3 + q4

    # dissipation functionals (tangential-capped index set) and the
    # full-set integrands feeding Theta and Xi
    coefs = ((fr, eps), (fu_dev, mu), (fh, kappa))
    dx_cap = dy_cap = 0.0
    for idx in index_set(m, "tangential-capped"):
        for fam, coef in coefs:
            zf = _apply_spatial(fam(idx.t_count), idx)
            dx_cap += eps * weighted_l2(dx(zf), l) ** 2
            dy_cap += coef * weighted_l2(dy(zf), l) ** 2
    ix1 = iy1 = 0.0
    for idx in index_set(m, "full"):
        for fam, coef in coefs:
            zf = _apply_spatial(fam(idx.t_count), idx)
            ix1 += eps * weighted_l2(dx(zf), l) ** 2
            iy1 += coef * weighted_l2(dy(zf), l) ** 2
    ix2 = iy2 = 0.0
    for idx in index_set(m - 1, "full"):
        for fam, coef in coefs:
            zf = _apply_spatial(fam(idx.t_count), idx)
            ix2 += eps * weighted_l2(dy(dx(zf)), l) ** 2
            iy2 += coef * weighted_l2(d2y(zf), l) ** 2

    dx_ml = dx_cap + dx_good
    dy_ml = dy_cap + dy_good
    return {
        "e_ml": e_ml,
        "y_ml": y_ml,
        "x_ml": x_ml,
        "q_inst": q_inst,
        "dx_ml": dx_ml,
        "dy_ml": dy_ml,
        "theta_integrand": ix1 + iy1 + ix2 + iy2,
        "xi_integrand": iy2 + ix2 + dx_ml + dy_ml,
    }


def instantaneous_functionals(
    state: State,
    m: int,
    l: float,
    delta0: float,
    sources=None,
    forcing=None,
) -> EnergyReport:
    """EnergyReport for one slice; the time-integral slots are zero, so
    theta_ml equals y_ml and xi_ml equals x_ml."""
    p = _slice_functionals(state, m, l, delta0, sources=sources, forcing=forcing)
    return EnergyReport(
        time=state.time,
        e_ml=p["e_ml"],
        q_inst=p["q_inst"],
        q_sup=p["q_inst"],
        x_ml=p["x_ml"],
        y_ml=p["y_ml"],
        theta_ml=p["y_ml"],
        xi_ml=p["x_ml"],
        dx_ml=p["dx_ml"],
        dy_ml=p["dy_ml"],
        monitor=monitor(state, delta0, l),
    )


def trajectory_report(
    trajectory,
    m: int,
    l: float,
    delta0: float | None = None,
) -> list[EnergyReport]:
    """Per-slice reports with running suprema and trapezoidal integrals.

    theta_ml(t_k) = sup_{j<=k} Y + accumulated dissipation integrals;
    xi_ml(t_k) = sup_{j<=k} X + its integrals; q_sup is the running sup
    of q_inst.  Requires a uniform output stride."""
    cfg = trajectory.config
    if delta0 is None:
        delta0 = cfg.delta0
    times = np.asarray(trajectory.times, dtype=float)
    if times.size >= 3:
        strides = np.diff(times)
        if np.max(np.abs(strides - strides[0])) > 1e-9 * max(1.0, strides[0]):
            raise ValueError("trajectory_report requires a uniform output stride")
    reports = []
    sup_y = sup_x = sup_q = 0.0
    int_theta = int_xi = 0.0
    prev = None
    use_stored = len(trajectory.monitors) == len(trajectory.states)
    for k, st in enumerate(trajectory.states):
        p = _slice_functionals(
            st, m, l, delta0, sources=trajectory.bundle, forcing=trajectory.forcing
        )
        sup_y = max(sup_y, p["y_ml"])
        sup_x = max(sup_x, p["x_ml"])
        sup_q = max(sup_q, p["q_inst"])
        if prev is not None:
            dt = times[k] - times[k - 1]
            int_theta += 0.5 * dt * (prev["theta_integrand"] + p["theta_integrand"])
            int_xi += 0.5 * dt * (prev["xi_integrand"] + p["xi_integrand"])
        mon = (
            trajectory.monitors[k]
            if use_stored
            else monitor(st, delta0, l)
        )
        reports.append(
            EnergyReport(
                time=float(times[k]),
                e_ml=p["e_ml"],
                q_inst=p["q_inst"],
                q_sup=sup_q,
                x_ml=p["x_ml"],
                y_ml=p["y_ml"],
                theta_ml=sup_y + int_theta,
                xi_ml=sup_x + int_xi,
                dx_ml=p["dx_ml"],
                dy_ml=p["dy_ml"],
                monitor=mon,
            )
        )
        prev = p
    return reports
