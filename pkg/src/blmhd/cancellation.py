"""Good unknowns and their evolution-equation residuals.

For a tangential multi-index a1 = (t_count, x_count) of top order, the
raw derivatives Z^a1(rho, u, h) lose one x-derivative through v and g.
The weighted combinations

    eta_rho = d_y rho / (h+1),  eta_u = d_y(u - e^{-y}) / (h+1),
    eta_h = d_y h / (h+1),
    w_m = Z^a1 w - eta_w Z^a1 psi     for w in {rho, u, h}

cancel the loss.  This module builds them, evaluates the left-minus-right
residual of their evolution equations discretely (with the commutator sums
assembled term by term), and checks the explicit-constant norm-equivalence
inequalities that relate raw and good-unknown norms.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .grid import Field
from .norms import weighted_l2, weighted_linf
from .operators import d2x, d2y, dx, dy, integrate_y, z2
from .pde import ZERO_FORCING, TimeTower
from .sources import zero_bundle
from .state import MultiIndex, State

T_DEPTH_CAP = 2


class HFloorError(ValueError):
    """h + 1 dropped below the quotient floor."""


@dataclass(frozen=True)
class GoodUnknowns:
    """The eta weights and the three good unknowns for one tangential index."""

    alpha1: MultiIndex
    eta_rho: Field
    eta_u: Field
    eta_h: Field
    rho_m: Field
    u_m: Field
    h_m: Field
    z_rho: Field
    z_u: Field
    z_h: Field
    z_psi: Field


def _check_alpha1(alpha1: MultiIndex) -> None:
    if alpha1.z2_count != 0:
        raise ValueError("alpha1 must be tangential (z2_count = 0)")
    if alpha1.t_count > T_DEPTH_CAP:
        raise ValueError(
            f"time-derivative depth {alpha1.t_count} exceeds cap {T_DEPTH_CAP}"
        )


def _check_h_floor(state: State, delta_floor: float) -> np.ndarray:
    hp1 = state.h_shift.values + 1.0
    m = float(hp1.min())
    if m < delta_floor:
        raise HFloorError(f"h-floor violation: min(h+1) = {m:.4g} < {delta_floor}")
    return hp1


def _zt(tower: TimeTower, name: str, t_count: int, x_count: int) -> np.ndarray:
    out = tower.field(name, t_count)
    for _ in range(x_count):
        out = dx(out)
    return out.values


def eta_fields(state: State) -> tuple[Field, Field, Field]:
    """The three quotient weights (no floor check)."""
    grid = state.grid
    E = np.exp(-grid.y)[None, :]
    hp1 = state.h_shift.values + 1.0
    eta_r = dy(state.rho_shift).values / hp1
    eta_u = (dy(state.u_shift).values + E) / hp1
    eta_h = dy(state.h_shift).values / hp1
    return Field(eta_r, grid), Field(eta_u, grid), Field(eta_h, grid)


def good_unknowns(
    state: State,
    alpha1: MultiIndex,
    delta_floor: float,
    sources=None,
    forcing=None,
    tower: TimeTower | None = None,
) -> GoodUnknowns:
    """Build the good unknowns; time parts of Z^a1 via PDE substitution."""
    _check_alpha1(alpha1)
    _check_h_floor(state, delta_floor)
    grid = state.grid
    if tower is None:
        tower = TimeTower(state, sources=sources, forcing=forcing)
    eta_r, eta_u, eta_h = eta_fields(state)
    a, b = alpha1.t_count, alpha1.x_count
    z_rho = _zt(tower, "rho", a, b)
    z_u = _zt(tower, "u", a, b)
    z_h = _zt(tower, "h", a, b)
    z_psi = _zt(tower, "psi", a, b)
    return GoodUnknowns(
        alpha1=alpha1,
        eta_rho=eta_r,
        eta_u=eta_u,
        eta_h=eta_h,
        rho_m=Field(z_rho - eta_r.values * z_psi, grid),
        u_m=Field(z_u - eta_u.values * z_psi, grid),
        h_m=Field(z_h - eta_h.values * z_psi, grid),
        z_rho=Field(z_rho, grid),
        z_u=Field(z_u, grid),
        z_h=Field(z_h, grid),
        z_psi=Field(z_psi, grid),
    )


# ---------------------------------------------------------------------------
# Tangential functions and Leibniz products for the commutator sums
# ---------------------------------------------------------------------------


def _tf_field(tower: TimeTower, name: str, const0: float = 0.0, sub_exp0: bool = False):
    """Tangential function (t_count, x_count) -> array for a state field,
    optionally plus a constant / minus e^{-y} contributing only at (0, 0)."""
    E = np.exp(-tower.state.grid.y)[None, :]

    def f(a: int, b: int) -> np.ndarray:
        out = _zt(tower, name, a, b)
        if a == 0 and b == 0:
            if const0:
                out = out + const0
            if sub_exp0:
                out = out - E
        return out

    return f


def _tf_product(A, B):
    """Leibniz rule for the tangential derivatives of a product."""

    def f(a: int, b: int) -> np.ndarray:
        acc = 0.0
        for i in range(a + 1):
            for j in range(b + 1):
                acc = acc + comb(a, i) * comb(b, j) * A(i, j) * B(a - i, b - j)
        return acc

    return f


def _index_splits(alpha1: MultiIndex, exclude_full: bool):
    """(beta1, gamma1, binomial) with beta1 != 0 and optionally beta1 != alpha1."""
    a, b = alpha1.t_count, alpha1.x_count
    out = []
    for i in range(a + 1):
        for j in range(b + 1):
            if i == 0 and j == 0:
                continue
            if exclude_full and i == a and j == b:
                continue
            out.append(((i, j), (a - i, b - j), comb(a, i) * comb(b, j)))
    return out


class _Residual:
    """Shared machinery for one state slice of a residual evaluation."""

    def __init__(self, state, alpha1, delta_floor, bundle, forcing):
        _check_alpha1(alpha1)
        self.state = state
        self.grid = state.grid
        self.alpha1 = alpha1
        self.bundle = bundle
        self.forcing = forcing
        self.hp1 = _check_h_floor(state, delta_floor)
        self.tower = TimeTower(
            state, sources=bundle, forcing=forcing, max_depth=alpha1.t_count + 1
        )
        g = self.grid
        self.E = np.exp(-g.y)[None, :]
        self.r = state.rho_shift.values
        self.u = state.u_shift.values
        self.h = state.h_shift.values
        self.v = state.v.values
        self.g_f = state.g.values
        self.rho = self.r + 1.0
        self.U = self.u + 1.0 - self.E
        self.gu = good_unknowns(state, alpha1, delta_floor, tower=self.tower)
        # d_t of the state fields (level 1 of the tower)
        self.dt = self.tower.level(1)

    def F(self, vals) -> Field:
        return Field(vals, self.grid)

    def zt(self, name, a, b):
        return _zt(self.tower, name, a, b)

    # -- eta weights and their derivatives ----------------------------------

    def eta(self, which: str) -> np.ndarray:
        return {"rho": self.gu.eta_rho, "u": self.gu.eta_u, "h": self.gu.eta_h}[
            which
        ].values

    def eta_dt(self, which: str) -> np.ndarray:
        """d_t eta_w by the quotient rule through the tower."""
        name = {"rho": "rho", "u": "u", "h": "h"}[which]
        num = dy(self.F(self.dt[name])).values
        h_t = self.dt["h"]
        return num / self.hp1 - self.eta(which) * h_t / self.hp1

    # -- transport-type operators applied to a numeric array ----------------

    def advect(self, w: np.ndarray) -> np.ndarray:
        f = self.F(w)
        return self.U * dx(f).values + self.v * dy(f).values

    # -- commutator sums -----------------------------------------------------

    def commutator_a_dx(self, A, w_name: str, exclude_full: bool = False):
        """[Z^a1, a d_x] w = sum C Z^b1 a  Z^g1 d_x w  over beta1 != 0."""
        acc = 0.0
        for (i, j), (p, q), c in self._splits(exclude_full):
            acc = acc + c * A(i, j) * dx(self.F(self.zt(w_name, p, q))).values
        return acc

    def commutator_a_dt(self, A, w_name: str):
        """[Z^a1, a d_t] w = sum C Z^b1 a  Z^g1 d_t w  over beta1 != 0."""
        acc = 0.0
        for (i, j), (p, q), c in self._splits(False):
            acc = acc + c * A(i, j) * self.zt(w_name, p + 1, q)
        return acc

    def sum_b_dyg(self, B, w_name: str, exclude_full: bool = True):
        """sum C Z^b1 b  Z^g1 d_y w  over beta1 != 0 (and != alpha1)."""
        acc = 0.0
        for (i, j), (p, q), c in self._splits(exclude_full):
            acc = acc + c * B(i, j) * dy(self.F(self.zt(w_name, p, q))).values
        return acc

    def _splits(self, exclude_full: bool):
        return _index_splits(self.alpha1, exclude_full)

    # -- shared f_psi --------------------------------------------------------

    def f_psi(self) -> np.ndarray:
        tf_U = _tf_field(self.tower, "u", const0=1.0, sub_exp0=True)
        return -self.commutator_a_dx(tf_U, "psi") - self.sum_b_dyg(
            _tf_field(self.tower, "v"), "psi"
        )

    # -- sources and forcing at the slice ------------------------------------

    def source_fields(self, deriv: int):
        return [s.values for s in self.bundle.fields(self.grid, self.state.time, deriv)]

    def forcing_fields(self, deriv: int):
        return [s.values for s in self.forcing.fields(self.grid, self.state.time, deriv)]

    def zt_of(self, arrays_by_deriv, extra_dx: int = 0) -> np.ndarray:
        """Z^a1 (optionally with extra d_x) of a time-polynomial field given
        by its time-derivative accessor arrays_by_deriv(i) -> array."""
        a, b = self.alpha1.t_count, self.alpha1.x_count
        out = self.F(arrays_by_deriv(a))
        for _ in range(b + extra_dx):
            out = dx(out)
        return out.values


def _dt_good_unknown(res: _Residual, which: str) -> np.ndarray:
    """d_t w_m = Z^{a1+e_t} w - (d_t eta_w) Z^a1 psi - eta_w Z^{a1+e_t} psi."""
    a, b = res.alpha1.t_count, res.alpha1.x_count
    name = which
    return (
        res.zt(name, a + 1, b)
        - res.eta_dt(which) * res.gu.z_psi.values
        - res.eta(which) * res.zt("psi", a + 1, b)
    )


def cancellation_residual(
    trajectory,
    alpha1: MultiIndex,
    which: str,
    delta_floor: float | None = None,
) -> list[Field]:
    """LHS - RHS of the evolution equation of the chosen good unknown,
    evaluated discretely on every stored state of the trajectory."""
    if which not in ("rho_m", "u_m", "h_m"):
        raise ValueError(f"which must be rho_m, u_m or h_m, got {which!r}")
    cfg = trajectory.config
    if delta_floor is None:
        delta_floor = cfg.delta0 / 2.0
    forcing = trajectory.forcing if trajectory.forcing is not None else ZERO_FORCING
    bundle = trajectory.bundle
    if bundle is None:
        bundle = zero_bundle(trajectory.states[0].grid)
    out = []
    for st in trajectory.states:
        res = _Residual(st, alpha1, delta_floor, bundle, forcing)
        if which == "h_m":
            out.append(_residual_hm(res, cfg))
        elif which == "rho_m":
            out.append(_residual_rhom(res, cfg))
        else:
            out.append(_residual_um(res, cfg))
    return out


def _f_h(res: _Residual) -> np.ndarray:
    tw = res.tower
    tf_U = _tf_field(tw, "u", const0=1.0, sub_exp0=True)
    tf_hp1 = _tf_field(tw, "h", const0=1.0)
    return (
        -res.commutator_a_dx(tf_U, "h")
        + res.commutator_a_dx(tf_hp1, "u")
        - res.sum_b_dyg(_tf_field(tw, "v"), "h")
        + res.sum_b_dyg(_tf_field(tw, "g"), "u")
    )


def _f_rho(res: _Residual) -> np.ndarray:
    tw = res.tower
    tf_U = _tf_field(tw, "u", const0=1.0, sub_exp0=True)
    return -res.commutator_a_dx(tf_U, "rho") - res.sum_b_dyg(
        _tf_field(tw, "v"), "rho"
    )


def _f_u(res: _Residual) -> np.ndarray:
    tw = res.tower
    tf_rho = _tf_field(tw, "rho", const0=1.0)
    tf_U = _tf_field(tw, "u", const0=1.0, sub_exp0=True)
    tf_hp1 = _tf_field(tw, "h", const0=1.0)
    tf_rhoU = _tf_product(tf_rho, tf_U)
    tf_rhov = _tf_product(tf_rho, _tf_field(tw, "v"))
    shear = dy(res.F(res.u)).values + res.E  # d_y(u - e^{-y})
    acc = (
        -res.commutator_a_dt(tf_rho, "u")
        - res.commutator_a_dx(tf_rhoU, "u")
        + res.commutator_a_dx(tf_hp1, "h")
    )
    for (i, j), (p, q), c in res._splits(False):
        acc = acc - c * tf_rho(i, j) * res.zt("v", p, q) * shear
    acc = acc - res.sum_b_dyg(tf_rhov, "u") + res.sum_b_dyg(
        _tf_field(tw, "g"), "h"
    )
    return acc


def _residual_hm(res: _Residual, cfg) -> Field:
    eps, kappa = cfg.eps, cfg.kappa
    gu = res.gu
    h_m = gu.h_m.values
    z_psi = gu.z_psi.values
    eta_h = res.eta("h")
    eta_h_f = res.F(eta_h)
    lhs = (
        _dt_good_unknown(res, "h")
        + res.advect(h_m)
        - eps * d2x(gu.h_m).values
        - kappa * d2y(gu.h_m).values
        - (res.h + 1.0) * dx(gu.z_u).values
        - res.g_f * dy(gu.z_u).values
        - _zt(res.tower, "g", res.alpha1.t_count, res.alpha1.x_count)
        * (dy(res.F(res.u)).values + res.E)
    )
    rh_by_deriv = lambda i: res.source_fields(i)[3]
    z_dx_rh = res.zt_of(rh_by_deriv, extra_dx=1)
    inv_dy_z_dx_rh = integrate_y(res.F(z_dx_rh)).values
    fh_by_deriv = lambda i: res.forcing_fields(i)[2]
    z_Fh = res.zt_of(fh_by_deriv)
    inv_dy_z_Fh = integrate_y(res.F(z_Fh)).values
    eta_ops = (
        res.eta_dt("h")
        + res.advect(eta_h)
        - eps * d2x(eta_h_f).values
        - kappa * d2y(eta_h_f).values
    )
    rhs = (
        -eps * z_dx_rh
        + eps * eta_h * inv_dy_z_dx_rh
        + _f_h(res)
        - eta_h * res.f_psi()
        + 2.0 * eps * dx(eta_h_f).values * dx(gu.z_psi).values
        + 2.0 * kappa * dy(eta_h_f).values * dy(gu.z_psi).values
        - z_psi * eta_ops
        + z_Fh
        - eta_h * inv_dy_z_Fh
    )
    return res.F(lhs - rhs)


def _residual_rhom(res: _Residual, cfg) -> Field:
    eps, kappa = cfg.eps, cfg.kappa
    gu = res.gu
    rho_m = gu.rho_m.values
    z_psi = gu.z_psi.values
    eta_r = res.eta("rho")
    eta_r_f = res.F(eta_r)
    lhs = (
        _dt_good_unknown(res, "rho")
        + res.advect(rho_m)
        - eps * d2x(gu.rho_m).values
        - eps * d2y(gu.rho_m).values
    )
    src = res.source_fields
    div_by_deriv = lambda i: (
        dx(res.F(src(i)[0])).values + dy(res.F(src(i)[1])).values
    )
    z_div = res.zt_of(div_by_deriv)
    rh_by_deriv = lambda i: src(i)[3]
    inv_dy_z_dx_rh = integrate_y(res.F(res.zt_of(rh_by_deriv, extra_dx=1))).values
    fr_by_deriv = lambda i: res.forcing_fields(i)[0]
    fh_by_deriv = lambda i: res.forcing_fields(i)[2]
    z_Fr = res.zt_of(fr_by_deriv)
    inv_dy_z_Fh = integrate_y(res.F(res.zt_of(fh_by_deriv))).values
    eta_ops = res.eta_dt("rho") + res.advect(eta_r) - eps * d2x(eta_r_f).values
    rhs = (
        _f_rho(res)
        - eta_r * res.f_psi()
        + 2.0 * eps * dx(eta_r_f).values * dx(gu.z_psi).values
        - kappa * eta_r * d2y(gu.z_psi).values
        + eps * d2y(res.F(eta_r * z_psi)).values
        - z_psi * eta_ops
        - eps * z_div
        + eps * eta_r * inv_dy_z_dx_rh
        + z_Fr
        - eta_r * inv_dy_z_Fh
    )
    return res.F(lhs - rhs)


def _residual_um(res: _Residual, cfg) -> Field:
    eps, mu, kappa = cfg.eps, cfg.mu, cfg.kappa
    gu = res.gu
    u_m = gu.u_m.values
    z_psi = gu.z_psi.values
    eta_u = res.eta("u")
    eta_u_f = res.F(eta_u)
    rho = res.rho
    a, b = res.alpha1.t_count, res.alpha1.x_count
    lhs = (
        rho * _dt_good_unknown(res, "u")
        + rho * res.advect(u_m)
        - eps * d2x(gu.u_m).values
        - mu * d2y(gu.u_m).values
        - (res.h + 1.0) * dx(gu.z_h).values
        - res.g_f * dy(gu.z_h).values
        - res.zt("g", a, b) * dy(res.F(res.h)).values
    )
    ru_by_deriv = lambda i: res.source_fields(i)[2]
    rh_by_deriv = lambda i: res.source_fields(i)[3]
    z_dx_ru = res.zt_of(ru_by_deriv, extra_dx=1)
    inv_dy_z_dx_rh = integrate_y(res.F(res.zt_of(rh_by_deriv, extra_dx=1))).values
    fu_by_deriv = lambda i: res.forcing_fields(i)[1]
    fh_by_deriv = lambda i: res.forcing_fields(i)[2]
    z_Fu = res.zt_of(fu_by_deriv)
    inv_dy_z_Fh = integrate_y(res.F(res.zt_of(fh_by_deriv))).values
    eta_transport = rho * res.eta_dt("u") + rho * res.advect(eta_u)
    rhs = (
        _f_u(res)
        - rho * eta_u * res.f_psi()
        - z_psi * eta_transport
        - eps * (rho - 1.0) * eta_u * d2x(gu.z_psi).values
        - kappa * rho * eta_u * d2y(gu.z_psi).values
        + 2.0 * eps * dx(eta_u_f).values * dx(gu.z_psi).values
        + eps * d2x(eta_u_f).values * z_psi
        + mu * d2y(res.F(eta_u * z_psi)).values
        - eps * z_dx_ru
        + eps * rho * eta_u * inv_dy_z_dx_rh
        + z_Fu
        - rho * eta_u * inv_dy_z_Fh
    )
    return res.F(lhs - rhs)


# ---------------------------------------------------------------------------
# Norm equivalence (explicit constants)
# ---------------------------------------------------------------------------


def norm_equivalence_check(
    state: State,
    alpha1: MultiIndex,
    l: float,
    delta: float,
    sources=None,
    forcing=None,
    tol: float = 1e-2,
) -> dict:
    """The four explicit-constant inequalities relating raw tangential
    derivatives to good unknowns, plus the combined triple bound.

    Returns {name: {lhs, rhs, ratio, passed}} for b11..b14 and b22."""
    if l < 1:
        raise ValueError(f"norm equivalence requires l >= 1, got {l}")
    hp1 = _check_h_floor(state, delta)
    grid = state.grid
    gu = good_unknowns(state, alpha1, delta, sources=sources, forcing=forcing)
    c_hardy = 2.0 / (delta * (2.0 * l - 1.0))
    h_m_norm = weighted_l2(gu.h_m, l)
    results = {}

    def record(name, lhs, rhs):
        ratio = 0.0 if lhs == 0.0 else (np.inf if rhs == 0.0 else lhs / rhs)
        results[name] = {
            "lhs": float(lhs),
            "rhs": float(rhs),
            "ratio": float(ratio),
            "passed": bool(ratio <= 1.0 + tol),
        }

    # b11: || Z^a1 psi / (h+1) ||_{l-1}  <=  (2/delta(2l-1)) ||h_m||_l
    lhs = weighted_l2(Field(gu.z_psi.values / hp1, grid), l - 1.0)
    record("b11", lhs, c_hardy * h_m_norm)

    # b12: ||Z^a1 h||_l <= ||h_m||_l + (2/delta(2l-1)) ||dy h||_{inf,1} ||h_m||_l
    dyh = dy(state.h_shift)
    record(
        "b12",
        weighted_l2(gu.z_h, l),
        h_m_norm + c_hardy * weighted_linf(dyh, 1.0) * h_m_norm,
    )

    # b13: ||dx Z^a1 psi/(h+1)||_{l-1}
    #      <= (2/delta(2l-1)) ||dx h_m||_l + (4/delta^2(2l-1)) ||dx h||_{inf,0} ||h_m||_l
    lhs = weighted_l2(Field(dx(gu.z_psi).values / hp1, grid), l - 1.0)
    rhs = c_hardy * weighted_l2(dx(gu.h_m), l) + (
        4.0 / (delta**2 * (2.0 * l - 1.0))
    ) * weighted_linf(dx(state.h_shift), 0.0) * h_m_norm
    record("b13", lhs, rhs)

    # b14: ||dy Z^a1 h||_l <= ||dy h_m||_l
    #      + ((2l+1)/delta(2l-1)) (||dy h||_{inf,0} + ||Z2 dy h||_{inf,1}) ||h_m||_l
    rhs = weighted_l2(dy(gu.h_m), l) + (
        (2.0 * l + 1.0) / (delta * (2.0 * l - 1.0))
    ) * (weighted_linf(dyh, 0.0) + weighted_linf(z2(dyh), 1.0)) * h_m_norm
    record("b14", weighted_l2(dy(gu.z_h), l), rhs)

    # b22 (triple, Minkowski form): ||Z^a1 (rho,u,h)||_l
    #      <= ||(rho_m,u_m,h_m)||_l + (2/delta(2l-1)) G ||h_m||_l,
    #      G^2 = ||dy rho||^2_{inf,1} + ||dy(u-e^{-y})||^2_{inf,1} + ||dy h||^2_{inf,1}
    E = np.exp(-grid.y)[None, :]
    shear = Field(dy(state.u_shift).values + E, grid)
    G = np.sqrt(
        weighted_linf(dy(state.rho_shift), 1.0) ** 2
        + weighted_linf(shear, 1.0) ** 2
        + weighted_linf(dyh, 1.0) ** 2
    )
    lhs = np.sqrt(
        weighted_l2(gu.z_rho, l) ** 2
        + weighted_l2(gu.z_u, l) ** 2
        + weighted_l2(gu.z_h, l) ** 2
    )
    good = np.sqrt(
        weighted_l2(gu.rho_m, l) ** 2
        + weighted_l2(gu.u_m, l) ** 2
        + weighted_l2(gu.h_m, l) ** 2
    )
    record("b22", lhs, good + c_hardy * G * h_m_norm)
    return results
