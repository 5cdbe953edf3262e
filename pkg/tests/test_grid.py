import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhcalc.grid import (Grid, GridFunction, ball_half_widths, bmo_norm, build_grid,
                         geodesic_distance, norm)


def bmo_bruteforce(f):
    """Mean oscillation over closed balls d(x_i, y) <= k/(2n), from distances directly."""
    g = f.grid
    x, w, v = g.points, g.weights, f.values
    best = 0.0
    for k in range(1, g.n + 1):
        r = k / (2 * g.n)
        for i in range(g.n):
            d = geodesic_distance(g, x[i], x)
            m = d <= r + 1e-12
            if m.sum() < 2:
                continue
            ww = w[m]
            mean = np.sum(ww * v[m]) / ww.sum()
            best = max(best, np.sum(ww * np.abs(v[m] - mean)) / ww.sum())
    return best


@pytest.mark.parametrize("kind", ["torus", "interval"])
def test_unit_volume(kind):
    g = build_grid(kind, 37)
    assert g.volume == pytest.approx(1.0, abs=1e-15)
    assert g.points.min() >= 0 and g.points.max() <= 1


def test_rejects_bad_input():
    with pytest.raises(ValueError, match="torus requires uniform"):
        build_grid("torus", 16, "trapezoid")
    with pytest.raises(ValueError):
        build_grid("sphere", 16)
    with pytest.raises(ValueError):
        build_grid("torus", 3)


def test_interval_trapezoid_weights():
    g = build_grid("interval", 5)
    np.testing.assert_allclose(g.weights, [0.125, 0.25, 0.25, 0.25, 0.125])
    assert build_grid("interval", 5, "uniform").weights[0] == 0.2


def test_grid_arrays_are_frozen():
    g = build_grid("torus", 8)
    with pytest.raises(ValueError):
        g.points[0] = 1.0


def test_norms_of_constant():
    g = build_grid("torus", 64)
    one = GridFunction.from_callable(g, lambda x: np.ones_like(x))
    for p in (1, 1.5, 2, 7, np.inf):
        assert norm(one, p) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(ValueError):
        norm(one, 0.5)


def test_norm_of_cosine():
    g = build_grid("torus", 128)
    f = GridFunction.from_callable(g, lambda x: np.cos(2 * np.pi * x))
    assert norm(f, 2) == pytest.approx(np.sqrt(0.5), rel=1e-14)
    assert norm(f, 1) == pytest.approx(2 / np.pi, rel=1e-3)


def test_large_p_does_not_overflow():
    g = build_grid("torus", 16)
    f = GridFunction(g, np.full(16, 1e200))
    assert norm(f, 50) == pytest.approx(1e200)


def test_geodesic_wraps_on_torus():
    t, i = build_grid("torus", 8), build_grid("interval", 8)
    assert geodesic_distance(t, 0.05, 0.95) == pytest.approx(0.1)
    assert geodesic_distance(i, 0.05, 0.95) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        geodesic_distance(t, -0.1, 0.2)


def test_gridfunction_mismatch():
    a = GridFunction(build_grid("torus", 8), np.ones(8))
    b = GridFunction(build_grid("torus", 16), np.ones(16))
    with pytest.raises(ValueError):
        a + b


def test_bmo_constant_and_half_indicator():
    for n in (16, 64, 257):
        g = build_grid("torus", n)
        assert bmo_norm(GridFunction(g, np.full(n, 3.0 + 1j))) == 0.0
        ind = GridFunction.from_callable(g, lambda x: (x < 0.5).astype(float))
        assert abs(bmo_norm(ind) - 0.5) <= 1.0 / n


@pytest.mark.parametrize("kind,n", [("torus", 12), ("torus", 13), ("interval", 11)])
def test_bmo_matches_bruteforce(kind, n):
    g = build_grid(kind, n)
    f = GridFunction(g, np.random.default_rng(n).standard_normal(n))
    assert bmo_norm(f) == pytest.approx(bmo_bruteforce(f), rel=1e-12)


def test_ball_family_reaches_whole_manifold():
    g = build_grid("torus", 10)
    assert ball_half_widths(g).max() == 5


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 40), st.floats(-5, 5), st.floats(0.1, 10))
def test_bmo_affine_invariance(n, shift, scale):
    g = build_grid("torus", n)
    vals = np.sin(2 * np.pi * g.points) + (g.points > 0.3)
    f = GridFunction(g, vals)
    h = GridFunction(g, scale * vals + shift)
    assert bmo_norm(h) == pytest.approx(scale * bmo_norm(f), rel=1e-10, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 64), st.floats(1, 8), st.floats(1, 8))
def test_norm_monotone_in_p(n, p, dp):
    # unit volume: L^p norms increase with p
    g = build_grid("interval", n)
    f = GridFunction(g, np.cos(7 * g.points) + 0.3j * g.points)
    assert norm(f, p) <= norm(f, p + dp) * (1 + 1e-12)
    assert norm(f, p + dp) <= norm(f, np.inf) * (1 + 1e-12)


def test_bmo_of_identity_on_interval():
    # mean oscillation of x over [a, a+l] is l/4, largest on the whole interval
    g = build_grid("interval", 401)
    f = GridFunction.from_callable(g, lambda x: x)
    assert bmo_norm(f) == pytest.approx(0.25, abs=2e-3)


def test_spec_distances():
    t, i = build_grid("torus", 8), build_grid("interval", 8)
    assert geodesic_distance(t, 0.1, 0.9) == pytest.approx(0.2)
    assert geodesic_distance(i, 0.1, 0.9) == pytest.approx(0.8)
    assert geodesic_distance(t, 0.3, 0.3) == 0


def test_exponential_norm_on_interval():
    # int_0^1 4^x dx = 3 / (2 ln 2)
    g = build_grid("interval", 4001)
    f = GridFunction.from_callable(g, lambda x: 2.0**x)
    assert norm(f, 2) == pytest.approx(np.sqrt(3 / (2 * np.log(2))), rel=1e-7)
