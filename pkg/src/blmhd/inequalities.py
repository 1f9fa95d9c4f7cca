"""Executable checks of the calculus inequalities used by the estimates:
the sharp-constant Hardy inequality, a Sobolev embedding, a Moser product
inequality, and a diffusion-parameter-uniform weighted bound for the heat
equation on the half line solved by exact kernel convolution.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import Field
from .norms import NormSpec, conormal_norm, weighted_l2, weighted_linf
from .operators import dx, dy
from .state import MultiIndex

WALL_TOL = 1e-13
DECAY_TOL = 1e-4
SOBOLEV_CSTAR = 2.0
MOSER_CSTAR = 2.0
HEAT_CSTAR = 10.0
HEAT_SPREAD_MAX = 4.0


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of one inequality evaluation.

    ratio = lhs / (constant * rhs) with the convention 0/0 -> 0; the check
    passes iff ratio <= 1 + tol."""

    name: str
    lhs: float
    rhs: float
    constant: float
    ratio: float
    passed: bool
    tol: float
    metadata: dict = dc_field(default_factory=dict)


def _make_report(name, lhs, rhs, constant, tol, metadata) -> InequalityReport:
    denom = constant * rhs
    ratio = 0.0 if lhs == 0.0 else (np.inf if denom == 0.0 else lhs / denom)
    return InequalityReport(
        name=name,
        lhs=float(lhs),
        rhs=float(rhs),
        constant=float(constant),
        ratio=float(ratio),
        passed=bool(ratio <= 1.0 + tol),
        tol=float(tol),
        metadata=metadata,
    )


def hardy_check(f: Field, lam: float, tol: float = 1e-2) -> InequalityReport:
    """Sharp-form Hardy inequality on the half line in y:

        ||f||_{L^2_lam} <= (2/(2 lam + 1)) ||d_y f||_{L^2_{lam+1}}

    requires f = 0 on the wall row, decay at the top, and lam > -1/2."""
    if lam <= -0.5:
        raise ValueError(f"hardy_check requires lam > -1/2, got {lam}")
    wall = float(np.max(np.abs(f.values[:, 0])))
    if wall > WALL_TOL:
        raise ValueError(f"hardy_check requires f = 0 at y = 0 (wall max {wall:.3g})")
    top = float(np.max(np.abs(f.values[:, -1])))
    if top > DECAY_TOL:
        raise ValueError(f"hardy_check requires decay in y (top-row max {top:.3g})")
    lhs = weighted_l2(f, lam)
    rhs = weighted_l2(dy(f), lam + 1.0)
    c = 2.0 / (2.0 * lam + 1.0)
    return _make_report(
        "hardy", lhs, rhs, c, tol, {"lambda": lam, "ny": f.grid.ny}
    )


def sobolev_check(f: Field, cstar: float = SOBOLEV_CSTAR, tol: float = 0.0) -> InequalityReport:
    """Embedding ||f||_{L^inf_0} <= C (||f|| + ||dx f|| + ||dy f|| + ||dxy f||)_{L^2_0}.

    The constant cstar is a corpus-wide fixture; the raw (constant-free)
    ratio is recorded in the metadata."""
    lhs = weighted_linf(f, 0.0)
    fx = dx(f)
    rhs = (
        weighted_l2(f, 0.0)
        + weighted_l2(fx, 0.0)
        + weighted_l2(dy(f), 0.0)
        + weighted_l2(dy(fx), 0.0)
    )
    raw = 0.0 if lhs == 0.0 else lhs / rhs
    return _make_report("sobolev", lhs, rhs, cstar, tol, {"raw_ratio": raw})


def _apply_spatial(f: Field, idx: MultiIndex) -> Field:
    from .norms import _apply_spatial as apply

    return apply(f, idx)


def moser_check(
    f_series: list[Field],
    g_series: list[Field],
    times: np.ndarray,
    beta: MultiIndex,
    gamma: MultiIndex,
    m: int,
    l: float,
    l1: float,
    cstar: float = MOSER_CSTAR,
    tol: float = 0.0,
) -> InequalityReport:
    """Product inequality for time-indexed fields:

        int_0^t ||Z^beta f Z^gamma g||^2_{L^2_l}
          <= C_m ( sup|<y>^{l1} f|^2 int ||g||^2_{H^m_{l2}} + symmetric ),

    with |beta + gamma| = m and l2 = l - l1.  Only spatial multi-indices
    are accepted (the inputs are snapshots without a time model)."""
    if beta.order + gamma.order != m:
        raise ValueError(
            f"index mismatch: |beta| + |gamma| = {beta.order + gamma.order} != m = {m}"
        )
    if beta.t_count or gamma.t_count:
        raise ValueError("moser_check accepts spatial multi-indices only")
    if len(f_series) != len(g_series) or len(f_series) != len(times):
        raise ValueError("f_series, g_series, times must have equal length")
    l2 = l - l1
    times = np.asarray(times, dtype=float)
    prod_sq = np.array(
        [
            weighted_l2(_apply_spatial(f, beta) * _apply_spatial(g, gamma), l) ** 2
            for f, g in zip(f_series, g_series)
        ]
    )
    spec = NormSpec(m, l2, "full")
    f_hm_sq = np.array([conormal_norm(f, spec) ** 2 for f in f_series])
    g_hm_sq = np.array([conormal_norm(g, spec) ** 2 for g in g_series])
    f_sup = max(weighted_linf(f, l1) for f in f_series)
    g_sup = max(weighted_linf(g, l1) for g in g_series)
    lhs = float(np.trapezoid(prod_sq, times))
    rhs = f_sup**2 * float(np.trapezoid(g_hm_sq, times)) + g_sup**2 * float(
        np.trapezoid(f_hm_sq, times)
    )
    raw = 0.0 if lhs == 0.0 else (np.inf if rhs == 0.0 else lhs / rhs)
    return _make_report(
        "moser",
        lhs,
        rhs,
        cstar,
        tol,
        {"beta": beta, "gamma": gamma, "m": m, "l": l, "l1": l1, "raw_ratio": raw},
    )


# ---------------------------------------------------------------------------
# Heat equation on the half line: exact kernel + Duhamel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeatProblem:
    """d_t F - eps d_x^2 F = G on x > 0, F(t, 0) = 0, F(0, x) = f0.

    x: increasing 1D coordinates with x[0] = 0; f0 sampled on x with
    f0[0] = 0; forcing: callable (t, x-array) -> array, or None."""

    eps: float
    x: np.ndarray
    f0: np.ndarray
    forcing: object = None
    t_end: float = 1.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        f0 = np.asarray(self.f0, dtype=float)
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.t_end <= 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if x[0] != 0.0 or np.any(np.diff(x) <= 0):
            raise ValueError("x must be increasing with x[0] = 0")
        if f0.shape != x.shape:
            raise ValueError("f0 must be sampled on x")
        if abs(f0[0]) > WALL_TOL:
            raise ValueError("f0 must vanish at x = 0 (Dirichlet compatibility)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "f0", f0)


def _odd_extension(x: np.ndarray, f: np.ndarray):
    xe = np.concatenate([-x[:0:-1], x])
    fe = np.concatenate([-f[:0:-1], f])
    return xe, fe


def _trap_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    d = np.diff(x)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def _kernel_convolve(eps: float, t: float, x_out: np.ndarray, xe, fe) -> np.ndarray:
    """Convolution of the extended data with the Gaussian heat kernel at
    time t, integrated exactly against the piecewise-linear interpolant of
    (xe, fe).  Closed-form segment integrals keep the result accurate even
    when the kernel is much narrower than the node spacing."""
    if t == 0.0:
        return np.interp(x_out, xe, fe)
    from scipy import special

    sigma = np.sqrt(2.0 * eps * t)
    # segments farther than ~8 sigma from an output point contribute
    # nothing (both endpoint CDFs saturate), so restrict to a node band
    m = xe.size
    half = int(np.ceil(8.0 * sigma / float(np.min(np.diff(xe))))) + 2
    if 2 * half + 1 >= m:
        cols = np.broadcast_to(np.arange(m), (x_out.size, m))
    else:
        centers = np.searchsorted(xe, x_out)
        cols = np.clip(
            centers[:, None] + np.arange(-half, half + 1)[None, :], 0, m - 1
        )
    xs = xe[cols]
    fs = fe[cols]
    z = (xs - x_out[:, None]) / sigma
    cdf = special.ndtr(z)
    with np.errstate(under="ignore"):
        pdf = np.exp(-0.5 * z**2) / np.sqrt(2.0 * np.pi)
    seg = np.diff(xs, axis=1)
    # clipped duplicate columns give zero-width segments with zero dCDF,
    # so their (arbitrary) slope never contributes
    slope = np.divide(
        np.diff(fs, axis=1), seg, out=np.zeros_like(seg), where=seg != 0.0
    )
    # on [xe_j, xe_{j+1}]: f(xi) = fe_j + slope_j (xi - xe_j), and
    # int K(x - xi) f(xi) dxi = (fe_j + slope_j (x - xe_j)) dCDF
    #                           + slope_j sigma (pdf_j - pdf_{j+1})
    const = fs[:, :-1] + slope * (x_out[:, None] - xs[:, :-1])
    dcdf = cdf[:, 1:] - cdf[:, :-1]
    return np.sum(const * dcdf + slope * sigma * (pdf[:, :-1] - pdf[:, 1:]), axis=1)


def heat_solve(p: HeatProblem, n_times: int = 8, n_quad: int = 64):
    """Solve the half-line heat problem by odd extension, exact Gaussian
    kernel convolution, and Duhamel quadrature for the forcing.

    Returns (times, F) with F.shape == (n_times + 1, len(p.x)); F[k] is the
    solution at times[k], and F[:, 0] = 0 to quadrature accuracy."""
    x = p.x
    xe, fe = _odd_extension(x, p.f0)
    times = np.linspace(0.0, p.t_end, n_times + 1)
    out = np.empty((n_times + 1, x.size))
    for k, t in enumerate(times):
        F = _kernel_convolve(p.eps, t, x, xe, fe)
        if p.forcing is not None and t > 0.0:
            s_nodes = np.linspace(0.0, t, n_quad + 1)
            ws = _trap_weights(s_nodes)
            acc = np.zeros_like(x)
            for s, w in zip(s_nodes, ws):
                gs = np.asarray(p.forcing(s, x), dtype=float)
                if s == t:
                    # kernel limit: convolution tends to the data itself
                    acc += w * gs
                else:
                    _, ge = _odd_extension(x, gs)
                    acc += w * _kernel_convolve(p.eps, t - s, x, xe, ge)
            F = F + acc
        out[k] = F
    out[:, 0] = 0.0
    return times, out


def _x_dx(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """x * d_x f by second-order differences on the 1D grid."""
    return x * np.gradient(f, x, edge_order=2)


def heat_data_functional(p: HeatProblem, times: np.ndarray) -> float:
    """||F0||_inf + ||x dx F0||_inf + int_0^t (||G||_inf + ||x dx G||_inf)."""
    x = p.x
    denom = float(np.max(np.abs(p.f0)) + np.max(np.abs(_x_dx(x, p.f0))))
    if p.forcing is not None:
        vals = []
        for s in times:
            gs = np.asarray(p.forcing(s, x), dtype=float)
            vals.append(np.max(np.abs(gs)) + np.max(np.abs(_x_dx(x, gs))))
        denom += float(np.trapezoid(np.array(vals), times))
    return denom


def heat_bound_check(
    x: np.ndarray,
    f0: np.ndarray,
    forcing,
    eps_grid=(1e-1, 1e-2, 1e-3, 1e-4),
    t_end: float = 1.0,
    cstar: float = HEAT_CSTAR,
    spread_max: float = HEAT_SPREAD_MAX,
    tol: float = 0.0,
) -> InequalityReport:
    """Diffusion-uniform weighted gradient bound:

        ||x dx F(t)||_inf <= C (||F0||_inf + ||x dx F0||_inf)
                             + C int_0^t (||G||_inf + ||x dx G||_inf),

    with C independent of eps.  Asserts max/min of the per-eps ratio over
    the grid <= spread_max and every ratio <= cstar."""
    ratios = {}
    worst = 0.0
    for eps in eps_grid:
        p = HeatProblem(eps=eps, x=x, f0=f0, forcing=forcing, t_end=t_end)
        times, F = heat_solve(p)
        num = max(float(np.max(np.abs(_x_dx(p.x, Fk)))) for Fk in F)
        denom = heat_data_functional(p, times)
        r = 0.0 if num == 0.0 else num / denom
        ratios[eps] = r
        worst = max(worst, r)
    nonzero = [r for r in ratios.values() if r > 0]
    spread = max(nonzero) / min(nonzero) if nonzero else 1.0
    rep = _make_report(
        "heat_bound",
        worst,
        1.0,
        cstar,
        tol,
        {"ratios": ratios, "spread": spread, "spread_max": spread_max},
    )
    passed = rep.passed and spread <= spread_max
    return InequalityReport(
        name=rep.name,
        lhs=rep.lhs,
        rhs=rep.rhs,
        constant=rep.constant,
        ratio=rep.ratio,
        passed=passed,
        tol=rep.tol,
        metadata=rep.metadata,
    )
