import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bump
from radbilap.grid import (
    DimensionContext,
    HVGram,
    RadialField,
    bilaplacian,
    build_grid,
    integrate,
    laplacian,
    load_field,
    norm_HV,
    radial_derivative,
    save_field,
    sum_norm,
    weighted_lq_norm,
)


def gauss_bilap(r, N):
    return np.exp(-r**2) * (16 * r**4 - 16 * (N + 2) * r**2 + 4 * N * (N + 2))


def test_sigma_values():
    assert DimensionContext(5).sigma_N == pytest.approx(8 * math.pi**2 / 3, rel=1e-15)
    assert DimensionContext(6).sigma_N == pytest.approx(math.pi**3, rel=1e-15)
    assert DimensionContext(5).two_star_star == 10
    with pytest.raises(ValueError):
        DimensionContext(4)


@pytest.mark.parametrize("mode", ["uniform", "logarithmic"])
def test_gaussian_integral(mode):
    # int_{R^5} exp(-|x|^2) dx = pi^(5/2)
    g = build_grid(5, r_min=1e-3, r_max=12.0, M=2048, mode=mode)
    assert integrate(g, np.exp(-g.r**2)) == pytest.approx(math.pi**2.5, rel=1e-7)


@pytest.mark.parametrize("mode", ["uniform", "logarithmic"])
def test_ball_volume_second_order(mode):
    vol = 8 * math.pi**2 / 15
    errs = [abs(integrate(build_grid(5, r_min=1e-4, r_max=1.0, M=M, mode=mode), 1.0) - vol) for M in (256, 512, 1024)]
    assert errs[-1] < 2e-4 * vol
    assert min(np.log2(np.array(errs[:-1]) / errs[1:])) >= 1.9


@pytest.mark.parametrize("mode", ["uniform", "logarithmic"])
@pytest.mark.parametrize("N", [5, 7])
def test_laplacian_of_r2_exact(mode, N):
    g = build_grid(N, r_min=1e-3, r_max=4.0, M=300, mode=mode)
    lap = laplacian(g, g.r**2)
    np.testing.assert_allclose(lap[:-1], 2 * N, rtol=1e-11)


def test_bilaplacian_of_r2_vanishes_inside():
    g = build_grid(5, M=400)
    b = bilaplacian(g, g.r**2)
    scale = np.abs(laplacian(g, g.r**2)).max() / g.quad_weights.min()
    assert np.abs(b[:-2]).max() <= 1e-12 * scale


def test_r4_weighted_error_order():
    errs = []
    for M in (256, 512, 1024):
        g = build_grid(5, r_min=1.0 / M, r_max=1.0, M=M, mode="uniform")
        e = (bilaplacian(g, g.r**4) - 280.0)[:-2]
        errs.append(math.sqrt(np.sum(g.quad_weights[:-2] * e**2)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 1.9


@pytest.mark.parametrize("mode", ["uniform", "logarithmic"])
def test_gaussian_interior_order(mode):
    errs = []
    for M in (256, 512, 1024):
        rmin = 8.0 / M if mode == "uniform" else 1e-3
        g = build_grid(5, r_min=rmin, r_max=8.0, M=M, mode=mode)
        m = (g.r > 0.5) & (g.r < 3)
        errs.append(np.abs(bilaplacian(g, np.exp(-g.r**2)) - gauss_bilap(g.r, 5))[m].max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 1.9


@settings(max_examples=25, deadline=None)
@given(c1=st.floats(0.05, 5), c2=st.floats(0.05, 5), w=st.floats(0.2, 1.0))
def test_laplacian_is_symmetric_in_quadrature_pairing(c1, c2, w):
    g = build_grid(5, M=256)
    u, v = bump(g, c1, w), bump(g, c2, w)
    a = integrate(g, laplacian(g, u) * v)
    b = integrate(g, u * laplacian(g, v))
    assert a == pytest.approx(b, rel=1e-10, abs=1e-12 * (abs(a) + 1))


def test_radial_derivative():
    g = build_grid(5, r_min=0.1, r_max=2.0, M=1000)
    np.testing.assert_allclose(radial_derivative(g, g.r**3), 3 * g.r**2, rtol=1e-4)


def test_norm_hv_parts(grid5):
    u = np.exp(-grid5.r**2)
    u[-1] = 0
    n = norm_HV(grid5, 1.0, u)
    assert n.norm**2 == pytest.approx(n.laplacian_sq + n.potential_sq, rel=1e-14)
    assert n.potential_sq == pytest.approx(integrate(grid5, u**2))
    with pytest.raises(ValueError):
        norm_HV(grid5, -np.ones(grid5.M), u)
    with pytest.raises(ValueError):
        norm_HV(grid5, np.full(grid5.M, np.inf), u)


def test_weighted_lq_norm(grid5):
    u = np.exp(-grid5.r**2)
    assert weighted_lq_norm(grid5, 1.0, u, 2) == pytest.approx(math.sqrt(integrate(grid5, u**2)))


@settings(max_examples=20, deadline=None)
@given(q=st.floats(1.1, 6), c=st.floats(0.1, 10), amp=st.floats(0.01, 100))
def test_sum_norm_with_equal_exponents(q, c, amp):
    # ball splits give ||u||_q 2^(-1/q) <= sum_norm <= ||u||_q
    g = build_grid(5, M=256)
    u = amp * bump(g, c)
    full = weighted_lq_norm(g, 1.0, u, q)
    s = sum_norm(g, 1.0, u, q, q)
    assert 2 ** (-1 / q) * full * (1 - 1e-12) <= s <= full * (1 + 1e-12)


def test_sum_norm_below_single_norms(grid5):
    u = 3 * bump(grid5, 2.0)
    s = sum_norm(grid5, 1.0, u, 2, 4)
    assert s <= min(weighted_lq_norm(grid5, 1.0, u, 2), weighted_lq_norm(grid5, 1.0, u, 4)) + 1e-12
    with pytest.raises(ValueError):
        sum_norm(grid5, 1.0, u, 4, 2)


def test_gram_matches_norm(grid5):
    V = grid5.r**-2.0
    G = HVGram(grid5, V)
    u = bump(grid5, 1.5)
    assert G.inner(u, u) == pytest.approx(norm_HV(grid5, V, u).norm ** 2, rel=1e-13)


def test_riesz_representative(small_grid):
    # on finer grids the flux-form Laplacian of x loses digits near r_min
    g = small_grid
    G = HVGram(g, np.ones(g.M))
    f = np.exp(-g.r)
    x = G.riesz(f)
    assert x[-1] == 0
    for c in (0.3, 1.0, 4.0):
        h = bump(g, c)
        assert G.inner(x, h) == pytest.approx(integrate(g, f * h), rel=1e-8)


def test_dual_norm_is_attained_sup(grid5):
    G = HVGram(grid5, np.ones(grid5.M))
    f = np.exp(-grid5.r)
    dn = G.dual_norm(f)
    x = G.riesz(f)
    assert integrate(grid5, f * x) / G.norm(x) == pytest.approx(dn, rel=1e-9)
    rng = np.random.default_rng(3)
    for _ in range(10):
        h = bump(grid5, rng.uniform(0.1, 10), rng.uniform(0.2, 1))
        assert abs(integrate(grid5, f * h)) / G.norm(h) <= dn * (1 + 1e-9)


def test_hessian_bands_shape(small_grid):
    G = HVGram(small_grid, np.ones(small_grid.M))
    ab = G.hessian_bands(np.zeros(small_grid.M))
    assert ab.shape == (5, small_grid.M - 1)
    np.testing.assert_array_equal(ab[2], G.bands[2])


def test_field_roundtrip(tmp_path, small_grid):
    u = bump(small_grid, 0.7)
    p = tmp_path / "u.txt"
    save_field(p, small_grid, u, {"lap": laplacian(small_grid, u)})
    r, v = load_field(p)
    np.testing.assert_array_equal(r, small_grid.r)
    np.testing.assert_array_equal(v, u)


def test_grid_is_immutable(small_grid):
    with pytest.raises(ValueError):
        small_grid.nodes[0] = 1.0
    with pytest.raises(ValueError):
        RadialField(small_grid, np.zeros(3))
    f = RadialField(small_grid, bump(small_grid))
    np.testing.assert_array_equal(f.laplacian, laplacian(small_grid, f))


def test_build_grid_errors():
    with pytest.raises(ValueError):
        build_grid(5, M=8)
    with pytest.raises(ValueError):
        build_grid(5, r_min=0)
    with pytest.raises(ValueError):
        build_grid(5, r_min=2, r_max=1)
    with pytest.raises(ValueError):
        build_grid(5, mode="chebyshev")
    assert build_grid(5, M=64, mode="log").spacing_mode == "logarithmic"
