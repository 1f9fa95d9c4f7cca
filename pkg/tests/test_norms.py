"""Weighted and conormal norms: closed-form oracles and norm properties."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from blmhd.grid import Field, GridSpec, field_from_function
from blmhd.norms import (
    NormSpec,
    b_norms,
    conormal_linf,
    conormal_norm,
    index_set,
    shift_physical,
    weighted_l2,
    weighted_linf,
)
from blmhd.operators import phi
from blmhd.state import MultiIndex


def _grid(nx=8, ny=512):
    return GridSpec(nx=nx, ny=ny, y_max=15.0, stretch=2.0)


def _exp_field(grid):
    return field_from_function(grid, lambda x, y: np.exp(-y))


def test_weighted_l2_closed_forms():
    grid = _grid()
    f = _exp_field(grid)
    # l = 0: sqrt(2 pi * 1/2) = sqrt(pi)
    assert weighted_l2(f, 0.0) == pytest.approx(np.sqrt(np.pi), rel=1e-4)
    # l = 1: integral (1+y)^2 e^{-2y} = 5/4
    assert weighted_l2(f, 1.0) == pytest.approx(
        np.sqrt(2.0 * np.pi * 1.25), rel=1e-4
    )


def test_weighted_linf_oracles():
    grid = _grid()
    f = _exp_field(grid)
    # max (1+y) e^{-y} = 1 attained at the wall node itself
    assert weighted_linf(f, 1.0) == pytest.approx(1.0, rel=1e-12)
    g = field_from_function(grid, lambda x, y: y * np.exp(-y))
    # max y e^{-y} = e^{-1} at y = 1
    assert weighted_linf(g, 0.0) == pytest.approx(np.exp(-1.0), rel=1e-4)
    # y-cap restriction
    assert weighted_linf(g, 0.0, y_cap=0.1) < weighted_linf(g, 0.0)


def test_index_set_modes():
    full = index_set(2, "full")
    capped = index_set(2, "tangential-capped")
    tang = index_set(2, "tangential-only")
    assert len(full) == 10  # all |alpha| <= 2 in 3 slots
    assert all(i.tangential_order <= 1 for i in capped)
    assert all(i.is_tangential() for i in tang)
    assert set(tang) <= set(full)
    assert MultiIndex(0, 2, 0) in full and MultiIndex(0, 2, 0) not in capped


def test_conormal_norm_zero_and_static_oracle():
    grid = _grid()
    zero = field_from_function(grid, lambda x, y: 0.0 * y)
    assert conormal_norm(zero, NormSpec(2, 1.0, "full")) == 0.0
    f = _exp_field(grid)
    # static e^{-y}, m=1, l=0, full: sqrt(pi + ||Z2 e^{-y}||^2)
    i_phi, _ = integrate.quad(lambda y: phi(np.array([y]))[0] ** 2 * np.exp(-2 * y), 0, 50)
    expected = np.sqrt(np.pi + 2.0 * np.pi * i_phi)
    got = conormal_norm(f, NormSpec(1, 0.0, "full"))
    assert got == pytest.approx(expected, rel=1e-3)


def test_conormal_norm_tangential_only_collapses_for_static_1d():
    grid = _grid()
    f = _exp_field(grid)
    got = conormal_norm(f, NormSpec(2, 0.0, "tangential-only"))
    assert got == pytest.approx(weighted_l2(f, 0.0), rel=1e-12)


def test_conormal_linf_matches_weighted_linf_at_order_zero():
    grid = _grid(ny=128)
    f = field_from_function(grid, lambda x, y: np.exp(-(y**2)) * np.cos(x))
    assert conormal_linf(f, NormSpec(0, 1.0, "full")) == pytest.approx(
        weighted_linf(f, 1.0)
    )


def test_norm_spec_validation():
    with pytest.raises(ValueError):
        NormSpec(-1, 0.0)
    with pytest.raises(ValueError):
        NormSpec(1, 0.0, "weird")


def _random_smooth_field(grid, coeffs):
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    out = np.zeros_like(X)
    for k, (a, b) in enumerate(coeffs, start=1):
        out += a * np.cos(k * X) * np.exp(-(Y**2)) + b * np.sin(k * X) * Y * np.exp(-Y)
    return Field(out, grid)


coeff_strategy = st.lists(
    st.tuples(
        st.floats(-1.0, 1.0, allow_nan=False),
        st.floats(-1.0, 1.0, allow_nan=False),
    ),
    min_size=1,
    max_size=2,
)


@settings(max_examples=15, deadline=None)
@given(coeffs=coeff_strategy, c=st.floats(-4.0, 4.0, allow_nan=False))
def test_conormal_norm_homogeneity(coeffs, c):
    grid = GridSpec(nx=8, ny=32, y_max=10.0, stretch=1.0)
    f = _random_smooth_field(grid, coeffs)
    spec = NormSpec(2, 1.0, "full")
    n1 = conormal_norm(f, spec)
    n2 = conormal_norm(Field(c * f.values, grid), spec)
    assert n2 == pytest.approx(abs(c) * n1, rel=1e-10, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(coeffs=coeff_strategy)
def test_conormal_norm_monotonicity(coeffs):
    grid = GridSpec(nx=8, ny=32, y_max=10.0, stretch=1.0)
    f = _random_smooth_field(grid, coeffs)
    full = conormal_norm(f, NormSpec(2, 1.0, "full"))
    capped = conormal_norm(f, NormSpec(2, 1.0, "tangential-capped"))
    tang = conormal_norm(f, NormSpec(2, 1.0, "tangential-only"))
    # tangential-capped and tangential-only are each subsets of full, but
    # neither contains the other (capped admits Z2 terms, tang admits Z1^m)
    assert full >= capped - 1e-12 and full >= tang - 1e-12
    # order monotonicity and weight monotonicity
    assert conormal_norm(f, NormSpec(3, 1.0, "full")) >= full - 1e-12
    assert weighted_l2(f, 2.0) >= weighted_l2(f, 1.0) - 1e-12


# ---------------------------------------------------------------------------
# Composite data norms of the physical triple
# ---------------------------------------------------------------------------


def _ones(grid):
    return Field(np.ones((grid.nx, grid.ny)), grid)


def test_b_norms_outer_state_is_zero():
    grid = _grid(ny=64)
    one = _ones(grid)
    b_bar, b_hat, _ = b_norms(one, one, one, m=1, l=2.0)
    assert b_bar < 1e-20 and b_hat < 1e-18


def test_b_norms_lower_bound_by_order_zero_term():
    grid = _grid(ny=128)
    one = _ones(grid)
    h1 = field_from_function(grid, lambda x, y: 1.0 + np.exp(-(y**2)))
    b_bar, _, _ = b_norms(one, one, h1, m=1, l=2.0)
    hs = field_from_function(grid, lambda x, y: np.exp(-(y**2)))
    assert np.sqrt(b_bar) >= weighted_l2(hs, 2.0) - 1e-10


def test_b_norms_exponential_density_oracle():
    # rho = 1 + a e^{-y}, u1 = h1 = 1, m = 1, l = 0: all time derivatives
    # vanish, so b_bar splits into quadrature-computable pieces.
    a = 0.04
    grid = _grid()
    rho = field_from_function(grid, lambda x, y: 1.0 + a * np.exp(-y))
    one = _ones(grid)
    b_bar, b_hat, details = b_norms(rho, one, one, m=1, l=0.0)
    i_phi, _ = integrate.quad(
        lambda y: phi(np.array([y]))[0] ** 2 * np.exp(-2 * y), 0, 50
    )
    expected = (
        2.0 * np.pi * a**2 * (0.5 + i_phi)  # H^1_0 of the shifted triple
        + 2.0 * np.pi * a**2 * 0.5  # H^0_0 of the normal derivatives
        + a**2 * (1.0 + np.exp(-2.0))  # weighted L-infinity of d_y rho
    )
    assert b_bar == pytest.approx(expected, rel=2e-3)
    assert details["bar_linf_sq"] == pytest.approx(
        a**2 * (1.0 + np.exp(-2.0)), rel=1e-3
    )
    assert b_hat > 0.0  # the d_y rho group feeds the hat norm
    assert details["hat_linf_y5_sq"] <= details["hat_groups"][0]["linf_second"] + 1e-15


def test_b_norms_requires_m_at_least_one():
    grid = _grid(ny=64)
    one = _ones(grid)
    with pytest.raises(ValueError):
        b_norms(one, one, one, m=0, l=0.0)


def test_shift_physical_round_trip():
    grid = _grid(ny=64)
    rho = field_from_function(grid, lambda x, y: 1.0 + 0.1 * np.exp(-(y**2)))
    u1 = field_from_function(grid, lambda x, y: 1.0 - np.exp(-y))
    h1 = _ones(grid)
    r, us, hs = shift_physical(rho, u1, h1)
    assert np.allclose(r.values, rho.values - 1.0)
    assert us.max_abs() < 1e-14  # u1 = 1 - e^{-y} shifts to zero
    assert hs.max_abs() == 0.0
