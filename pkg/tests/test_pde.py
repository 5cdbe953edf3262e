import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from nhcalc.eigensystem import model_system
from nhcalc.grid import GridFunction, norm
from nhcalc.pde import (CauchyProblem, DivergenceError, existence_time, heat_existence_time,
                        nonlinearity, sc_membership, solve_heat, solve_stationary, solve_wave,
                        wave_existence_time, wave_global_certificate, wave_sufficiency)
from nhcalc.symbols import SymbolSpec, sample


@pytest.fixture(scope="module")
def sys4():
    return model_system("torus_laplacian", 4)


def const(sys, c):
    return GridFunction(sys.grid, np.full(sys.grid.n, c, dtype=complex))


def test_heat_closed_form(sys4):
    prob = CauchyProblem(sys4, 2, const(sys4, 1.0), "identity", T=0.5)
    traj = solve_heat(prob, 1e-3)
    assert traj.complete
    exact = 1 / (1 - traj.times)
    err = np.abs(traj.states[:, 0].real - exact) / exact
    assert err.max() <= 2e-6  # O(dt^2)


def test_heat_blowup_flag(sys4):
    prob = CauchyProblem(sys4, 2, const(sys4, 1.0), "identity", T=1.2)
    traj = solve_heat(prob, 1e-3)
    assert traj.blowup and not traj.complete
    assert 0.9 < traj.t_last < 1.0


def test_heat_zero_B_is_static(sys4):
    u0 = GridFunction.from_callable(sys4.grid, lambda x: np.cos(2 * np.pi * x))
    traj = solve_heat(CauchyProblem(sys4, 3, u0, None, T=0.1), 0.01)
    assert np.all(traj.states == u0.values)


def test_heat_second_order(sys4):
    B = sample(SymbolSpec("multiplier", "1/(1+w)"), sys4)
    u0 = GridFunction.from_callable(sys4.grid, lambda x: 1 + 0.5 * np.cos(2 * np.pi * x))
    finals = [solve_heat(CauchyProblem(sys4, 2, u0, B, T=0.2), dt).states[-1] for dt in (0.02, 0.01, 0.005)]
    e1 = np.abs(finals[0] - finals[1]).max()
    e2 = np.abs(finals[1] - finals[2]).max()
    assert math.log2(e1 / e2) >= 1.8


def test_time_grid_validation(sys4):
    prob = CauchyProblem(sys4, 2, const(sys4, 1.0), "identity", T=1.0)
    with pytest.raises(ValueError):
        solve_heat(prob, 0.3)
    with pytest.raises(ValueError):
        solve_heat(prob, 0)
    with pytest.raises(ValueError):
        CauchyProblem(sys4, 1.0)


def test_wave_linear_exact(sys4):
    u0 = GridFunction.from_callable(sys4.grid, lambda x: np.sin(2 * np.pi * x))
    u1 = const(sys4, 0.5)
    traj = solve_wave(CauchyProblem(sys4, 2, u0, 0, u1=u1, T=1.0), 0.01)
    exact = u0.values[None, :] + traj.times[:, None] * u1.values[None, :]
    assert np.abs(traj.states - exact).max() <= 1e-10


def test_wave_matches_ode(sys4):
    b = lambda t: 1 + t  # noqa: E731
    prob = CauchyProblem(sys4, 2, const(sys4, 1.0), "identity", u1=const(sys4, 0.2), b=b, T=0.8)
    traj = solve_wave(prob, 1e-3)
    ref = solve_ivp(lambda t, y: [y[1], b(t) * abs(y[0]) ** 2], (0, 0.8), [1.0, 0.2],
                    t_eval=traj.times, rtol=1e-12, atol=1e-12)
    assert np.abs(traj.states[:, 0].real - ref.y[0]).max() <= 1e-5 * np.abs(ref.y[0]).max()


def test_wave_rejects_nonpositive_b(sys4):
    prob = CauchyProblem(sys4, 2, const(sys4, 1.0), "identity", b=lambda t: t - 0.5, T=1.0)
    with pytest.raises(ValueError):
        solve_wave(prob, 0.1)


def test_nonlinearity_is_abs_power(sys4):
    u = np.linspace(-1, 1, sys4.grid.n) + 0.5j
    np.testing.assert_allclose(nonlinearity(sys4, 2.0, u, 3), np.abs(2 * u) ** 3)


def test_heat_existence_formula():
    et = heat_existence_time(2, 2, 1.0)
    assert et.T_star == pytest.approx(math.sqrt(3) / 4)
    assert abs(et.certificate) <= 1e-12
    # p = 3: exponent p - 1 on the norm
    et3 = heat_existence_time(2, 3, 2.0)
    assert et3.T_star == pytest.approx(math.sqrt(3) / (8 * 4))
    assert et3.alternatives["linear_norm_variant"] == pytest.approx(math.sqrt(3) / (8 * 2))
    with pytest.raises(ValueError):
        heat_existence_time(1.0, 2, 1.0)


def test_wave_existence_root():
    et = wave_existence_time(2, 2, 1.0, 0.0, 1.0)
    assert et.certificate <= 0 and abs(et.certificate) <= 1e-10
    assert wave_sufficiency(et.T_star * 1.001, 2, 2, 1.0, 0.0, 1.0) > 0
    # with u1 = 0 and constant b the root has the closed form ((c-1)/(c^p a^(p-1)))^(1/3)
    assert et.T_star == pytest.approx(0.25 ** (1 / 3), rel=1e-12)
    assert et.alternatives["min_formula"] == pytest.approx(et.T_star, rel=1e-12)


def test_wave_existence_with_velocity():
    et = wave_existence_time(1.5, 3, 0.5, 0.7, lambda T: math.sqrt(T))
    assert et.T_star > 0 and abs(et.certificate) <= 1e-10


def test_existence_dispatch():
    assert existence_time("heat", 2, 2, {"u0": 1.0}).T_star == pytest.approx(math.sqrt(3) / 4)
    with pytest.raises(ValueError):
        existence_time("schrodinger", 2, 2, {"u0": 1.0})


def test_wave_global_certificate():
    small = wave_global_certificate(3.0, 2.0, 2.0, 4.0, 1e-3, 0.01, 1.0)
    assert small["certified"] and small["gamma0"] == pytest.approx(0.75)
    big = wave_global_certificate(3.0, 2.0, 2.0, 4.0, 1e3, 0.01, 1.0)
    assert not big["certified"]
    with pytest.raises(ValueError):
        wave_global_certificate(1.0, 2, 2, 1, 1, 1, 1)


def test_sc_membership(sys4):
    u0 = const(sys4, 1.0)
    T = 0.9 * heat_existence_time(2, 2, 1.0).T_star
    traj = solve_heat(CauchyProblem(sys4, 2, u0, "identity", T=round(T, 3)), 1e-3)
    ok, margin = sc_membership(traj, 2, {"u0": 1.0})
    assert ok and margin > 0
    assert not sc_membership(traj, 1.01, {"u0": 1.0})[0]


def test_stationary_linear_exact(sys4):
    A = sample(SymbolSpec("multiplier", "1+w^2"), sys4)
    f = GridFunction.from_callable(sys4.grid, lambda x: np.cos(2 * np.pi * x))
    res = solve_stationary(CauchyProblem(sys4, 2, None, 0, f=f, A=A))
    np.testing.assert_allclose(res.u.values, f.values / (1 + 16 * np.pi**4), atol=1e-14)
    assert res.residual <= 1e-12


def test_stationary_small_data(sys4):
    f = const(sys4, 0.1)
    res = solve_stationary(CauchyProblem(sys4, 2, None, 0.1, f=f, A="identity"))
    # u = 0.01 u^2 + 0.1 has the small root (1 - sqrt(1 - 0.004)) / 0.02
    assert res.u.values[0].real == pytest.approx((1 - math.sqrt(1 - 0.004)) / 0.02, rel=1e-12)
    assert res.residual <= 1e-12 and res.apriori["ratio"] > 0


def test_stationary_diverges(sys4):
    with pytest.raises(DivergenceError):
        solve_stationary(CauchyProblem(sys4, 2, None, 1.0, f=const(sys4, 1.0)))


def test_trajectory_export(sys4, tmp_path):
    traj = solve_heat(CauchyProblem(sys4, 2, const(sys4, 1.0), "identity", T=0.1), 0.01)
    files = traj.export_csv(tmp_path / "traj.csv", snapshot_every=5)
    assert len(files) == 4
    assert files[0].read_text().splitlines()[0] == "t,l2_norm,linf_norm"
    assert norm(traj.state(), 2) == pytest.approx(traj.l2_norms[-1])
