import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhcalc.eigensystem import (BiorthSystem, DefectiveSystemError, biorthonormality_defect,
                                build_analytic, build_numeric, conjugate_exponent,
                                counting_function, derivative_h_matrix, export_system_csv,
                                load_system_csv, model_system, spectral_profile)
from nhcalc.grid import Grid, build_grid


def nearest_match(reference, computed):
    return np.array([np.min(np.abs(computed - z)) for z in reference])


def test_torus_small_case():
    sys = model_system("torus_laplacian", 2)
    lam = sorted(set(np.round(sys.eigenvalues.real, 10)))
    np.testing.assert_allclose(lam, [0, 4 * np.pi**2, 16 * np.pi**2])
    x = sys.grid.points
    np.testing.assert_allclose(sys.u(1).values, np.exp(2j * np.pi * x), atol=1e-14)
    np.testing.assert_array_equal(sys.U, sys.V)


def test_derivative_h_ground_mode():
    sys = model_system("derivative_h", 4, h=2.0)
    x = sys.grid.points
    assert sys.eigenvalues[sys.position(0)] == pytest.approx(-1j * np.log(2))
    np.testing.assert_allclose(sys.u(0).values, 2.0**x, atol=1e-14)
    np.testing.assert_allclose(sys.v(0).values, 2.0**-x, atol=1e-14)
    # boundary condition u(1) = h u(0)
    for xi in sys.indices:
        u = sys.u(xi).values
        assert u[-1] == pytest.approx(2 * u[0])


def test_dirichlet_ground_mode_satisfies_equation():
    sys = model_system("dirichlet_laplacian", 3, n=2001)
    u = sys.u(1).values.real
    x = sys.grid.points
    np.testing.assert_allclose(u, np.sqrt(2) * np.sin(np.pi * x), atol=1e-14)
    hx = x[1] - x[0]
    lap = -(u[2:] - 2 * u[1:-1] + u[:-2]) / hx**2
    np.testing.assert_allclose(lap, np.pi**2 * u[1:-1], atol=1e-4)


@pytest.mark.parametrize("model", ["torus_laplacian", "dirichlet_laplacian", "derivative_h"])
def test_defect_small(model):
    assert biorthonormality_defect(model_system(model, 32, n=1024)) <= 1e-10


def test_defect_detects_scaled_function():
    sys = model_system("derivative_h", 8)
    U = sys.U.copy()
    U[3] *= 2
    broken = BiorthSystem(sys.grid, sys.indices, sys.eigenvalues, U, sys.V)
    assert biorthonormality_defect(broken) >= 1 - 1e-12


def test_resolution_and_grid_checks():
    with pytest.raises(ValueError, match="insufficient grid resolution"):
        build_analytic("torus_laplacian", 16, build_grid("torus", 32))
    with pytest.raises(ValueError):
        build_analytic("torus_laplacian", 2, build_grid("interval", 64))
    with pytest.raises(ValueError):
        build_analytic("derivative_h", 2, build_grid("interval", 64), h=1.0)
    with pytest.raises(ValueError):
        build_analytic("heat", 2, build_grid("torus", 64))


def test_ordering_by_modulus():
    sys = model_system("torus_laplacian", 6)
    a = sys.abs_eigenvalues
    assert np.all(np.diff(a) >= -1e-9)
    assert list(sys.indices[:3]) == [0, -1, 1]


def test_numeric_diagonal_three_points():
    grid = Grid("custom", np.arange(3) / 3, np.ones(3))
    sys = build_numeric(np.diag([1.0, 2.0, 3.0]), grid)
    np.testing.assert_allclose(sys.eigenvalues, [1, 2, 3])
    np.testing.assert_allclose(np.abs(sys.U), np.eye(3), atol=1e-14)
    np.testing.assert_allclose(sys.U, sys.V, atol=1e-14)


def test_numeric_matches_analytic_derivative_h():
    grid = build_grid("torus", 256)
    num = build_numeric(derivative_h_matrix(grid, 2.0), grid)
    ana = build_analytic("derivative_h", 16, grid, 2.0)
    # the Nyquist mode collapses onto xi = 0, so match each analytic value to its nearest
    assert nearest_match(ana.eigenvalues, num.eigenvalues).max() <= 1e-6
    assert num.metadata["pairing_residual"] <= 1e-8
    # each analytic eigenfunction lies in the numeric eigenspace of its eigenvalue
    W = grid.weights
    for k in range(ana.size):
        space = num.U[np.abs(num.eigenvalues - ana.eigenvalues[k]) <= 1e-6]
        Q, _ = np.linalg.qr((space * np.sqrt(W)).T)
        u = ana.U[k] * np.sqrt(W)
        resid = u - Q @ (Q.conj().T @ u)
        assert np.linalg.norm(resid) <= 1e-9 * np.linalg.norm(u)


def test_numeric_dirichlet_with_boundary_rows():
    n = 101
    grid = build_grid("interval", n)
    hx = 1.0 / (n - 1)
    A = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / hx**2
    sys = build_numeric(A, grid, boundary_rows=[0, n - 1], n_modes=5)
    exact = (2 / hx * np.sin(np.arange(1, 6) * np.pi * hx / 2)) ** 2
    np.testing.assert_allclose(sys.eigenvalues.real, exact, rtol=1e-9)
    assert np.all(sys.U[:, [0, -1]] == 0)
    assert biorthonormality_defect(sys) <= 1e-8


def test_numeric_rejects_jordan_block():
    grid = build_grid("torus", 4)
    J = np.diag([1.0, 1.0, 2.0, 3.0]) + np.diag([1.0, 0, 0], 1)
    with pytest.raises(DefectiveSystemError, match="defective"):
        build_numeric(J, grid)


def test_numeric_handles_degenerate_normal_block():
    grid = build_grid("torus", 4)
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((4, 4)))
    A = Q @ np.diag([1.0, 1.0, 2.0, 5.0]) @ Q.T
    sys = build_numeric(A, grid)
    assert biorthonormality_defect(sys) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 9), st.integers(0, 10_000))
def test_numeric_random_diagonalisable(n, seed):
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 3 * np.eye(n)
    d = np.arange(1, n + 1) + 0.5j * rng.standard_normal(n)
    A = S @ np.diag(d) @ np.linalg.inv(S)
    sys = build_numeric(A, build_grid("torus", n), tol=1e-6)
    np.testing.assert_allclose(np.sort_complex(sys.eigenvalues), np.sort_complex(d), atol=1e-8)
    assert biorthonormality_defect(sys) <= 1e-6
    # eigen-equations
    for k in range(n):
        r = A @ sys.U[k] - sys.eigenvalues[k] * sys.U[k]
        assert np.abs(r).max() <= 1e-7 * max(1, np.abs(d).max())


def test_counting_function_torus():
    sys = model_system("torus_laplacian", 20)
    for lam in (0, 1, 40, 200, 1e4):
        expected = min(2 * int(np.floor(np.sqrt(lam) / (2 * np.pi))) + 1, 41)
        assert counting_function(sys, lam) == expected


def test_spectral_profile_models():
    prof = spectral_profile(model_system("torus_laplacian", 512))
    assert prof.Q_fit == pytest.approx(0.5, abs=0.05)
    prof = spectral_profile(model_system("derivative_h", 128))
    assert prof.Q_fit == pytest.approx(1.0, abs=0.05)
    assert prof.sup_ratio_vu == pytest.approx(0.5, abs=1e-10)
    assert prof.sup_ratio_uv == pytest.approx(2.0, abs=1e-10)
    d = prof.to_dict()
    assert set(d) == {"q_fit", "gamma_table", "sup_ratio_vu", "sup_ratio_uv", "counting_samples"}


def test_spectral_profile_too_small():
    with pytest.raises(ValueError):
        spectral_profile(model_system("dirichlet_laplacian", 4))


def test_conjugate_exponent():
    assert conjugate_exponent(1) == np.inf
    assert conjugate_exponent(np.inf) == 1
    assert conjugate_exponent(1.5) == pytest.approx(3.0)
    assert conjugate_exponent(2) == 2


def test_csv_round_trip(tmp_path):
    sys = model_system("derivative_h", 5)
    path = export_system_csv(sys, tmp_path / "system.csv")
    back = load_system_csv(path, sys.grid)
    np.testing.assert_array_equal(back.indices, sys.indices)
    np.testing.assert_array_equal(back.eigenvalues, sys.eigenvalues)
    np.testing.assert_array_equal(back.U, sys.U)
    np.testing.assert_array_equal(back.V, sys.V)
    with pytest.raises(ValueError):
        load_system_csv(path, build_grid("interval", 30))
