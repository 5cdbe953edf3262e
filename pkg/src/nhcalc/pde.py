"""Nonlinear stationary, heat and wave problems in integral-equation form.

Heat:  ``u(t) = u0 + int_0^t |Bu|^p``.
Wave:  ``u(t) = u0 + t u1 + int_0^t (t - s) b(s) |Bu(s)|^p ds``.

Both are marched on a uniform time grid with the composite trapezoid rule
in ``s``; each step is closed by Picard iteration on the unknown state.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .eigensystem import BiorthSystem
from .fourier import CoefficientVector, forward, inverse, sobolev_norm
from .grid import GridFunction, norm
from .operators import EnsembleConfig, apply, estimate_norm
from .symbols import SampledSymbol

BLOWUP_FACTOR = 1e6


class DivergenceError(RuntimeError):
    """Fixed-point iteration diverged or failed to converge."""


@dataclass
class CauchyProblem:
    """Data of a stationary, heat or wave problem.

    ``B`` and ``A`` accept ``None`` (zero operator), ``'identity'``, a
    scalar (multiple of the identity) or a ``SampledSymbol``.  ``b`` is a
    positive scalar or a vectorised callable of ``t``.
    """

    system: BiorthSystem
    p: float
    u0: GridFunction | None = None
    B: object = None
    u1: GridFunction | None = None
    b: object = 1.0
    T: float = 1.0
    f: GridFunction | None = None
    A: object = "identity"

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")

    def b_values(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        vals = self.b(t) if callable(self.b) else np.full_like(t, float(self.b))
        return np.broadcast_to(np.asarray(vals, dtype=float), t.shape)


def _zero_operator(B) -> bool:
    return B is None or (np.isscalar(B) and not isinstance(B, str) and B == 0)


def apply_operator(sys: BiorthSystem, B, u: np.ndarray) -> np.ndarray:
    """Apply ``B`` (see ``CauchyProblem``) to grid values."""
    if _zero_operator(B):
        return np.zeros_like(u)
    if isinstance(B, str):
        if B != "identity":
            raise ValueError(f"unknown operator {B!r}")
        return u
    if isinstance(B, SampledSymbol):
        return apply(sys, B, GridFunction(sys.grid, u)).values
    if np.isscalar(B):
        return complex(B) * u
    raise TypeError(f"unsupported operator {type(B).__name__}")


def nonlinearity(sys: BiorthSystem, B, u: np.ndarray, p: float) -> np.ndarray:
    """``|Bu|^p`` pointwise, real and nonnegative."""
    with np.errstate(over="ignore", invalid="ignore"):
        return np.abs(apply_operator(sys, B, u)) ** p


def _l2(sys: BiorthSystem, u: np.ndarray) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.sqrt(np.sum(sys.grid.weights * np.abs(u) ** 2)))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray = field(repr=False)
    l2_norms: np.ndarray = field(repr=False)
    linf_norms: np.ndarray = field(repr=False)
    picard_iterations: list = field(default_factory=list, repr=False)
    residuals: list = field(default_factory=list, repr=False)
    picard_history: list = field(default_factory=list, repr=False)
    blowup: bool = False
    t_last: float = 0.0
    horizon: float = 0.0
    grid: object = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return not self.blowup and math.isclose(self.t_last, self.horizon, rel_tol=1e-12, abs_tol=1e-14)

    def state(self, k: int = -1) -> GridFunction:
        return GridFunction(self.grid, self.states[k])

    @property
    def max_l2(self) -> float:
        return float(np.max(self.l2_norms))

    def export_csv(self, path, snapshot_every: int | None = None) -> list[Path]:
        """Norm history as CSV; optional full-state snapshots every k steps."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "l2_norm", "linf_norm"])
            for t, a, b in zip(self.times, self.l2_norms, self.linf_norms):
                wr.writerow([repr(float(t)), repr(float(a)), repr(float(b))])
        out = [path]
        if snapshot_every:
            for k in range(0, len(self.times), snapshot_every):
                snap = path.with_name(f"{path.stem}_state_{k:06d}.csv")
                with snap.open("w", newline="") as fh:
                    wr = csv.writer(fh)
                    wr.writerow(["x", "re", "im"])
                    for x, z in zip(self.grid.points, self.states[k]):
                        wr.writerow([repr(float(x)), repr(float(z.real)), repr(float(z.imag))])
                out.append(snap)
        return out


def _time_grid(T: float, dt: float) -> np.ndarray:
    if not dt > 0:
        raise ValueError("dt must be positive")
    K = T / dt
    steps = int(round(K))
    if steps < 1 or abs(K - steps) > 1e-9 * max(1.0, K):
        raise ValueError("T/dt must be a positive integer")
    return np.linspace(0.0, T, steps + 1)


def _certify_B(problem: CauchyProblem) -> dict:
    # empirical L^2 -> L^{2p} bound; recorded, never used to refuse a solve
    if not isinstance(problem.B, SampledSymbol):
        return {}
    est = estimate_norm(problem.system, problem.B, 2, 2 * problem.p, EnsembleConfig(16, 0))
    return {"B_L2_L2p_lower_bound": est.lower_bound}


def _march(problem: CauchyProblem, times: np.ndarray, kernel: str,
           picard_tol: float, max_picard: int) -> Trajectory:
    sys = problem.system
    n = sys.grid.n
    u0 = problem.u0.values if problem.u0 is not None else np.zeros(n, dtype=complex)
    u1 = problem.u1.values if problem.u1 is not None else np.zeros(n, dtype=complex)
    p, B = problem.p, problem.B
    dt = times[1] - times[0]
    bvals = problem.b_values(times) if kernel == "wave" else None
    if kernel == "wave" and np.any(~(bvals > 0)):
        raise ValueError("b(t) must be positive on [0, T]")
    K = len(times) - 1
    states = np.zeros((K + 1, n), dtype=complex)
    states[0] = u0
    norm0 = _l2(sys, u0)
    limit = BLOWUP_FACTOR * max(norm0, 1e-300)
    zero_B = _zero_operator(B)
    g0 = nonlinearity(sys, B, u0, p) if not zero_B else np.zeros(n)
    if kernel == "wave":
        g0 = bvals[0] * g0
    # trapezoid sums over accepted nodes j < k: S0 = sum c_j g_j, S1 = sum c_j t_j g_j
    S0 = 0.5 * g0
    S1 = 0.5 * times[0] * g0
    iters, residuals, history = [0], [0.0], [[]]
    blow = False
    last = 0
    for k in range(1, K + 1):
        t = times[k]
        base = u0 + (t * u1 if kernel == "wave" else 0.0)
        if zero_B:
            states[k] = base
            iters.append(0)
            residuals.append(0.0)
            history.append([])
            last = k
            continue
        if kernel == "wave":
            # the kernel (t - s) vanishes at s = t, so the step is explicit
            new = base + dt * (t * S0 - S1)
            g_new = bvals[k] * nonlinearity(sys, B, new, p)
            diffs, m, ok = [], 1, True
        else:
            guess = 2 * states[k - 1] - states[k - 2] if k >= 2 else states[k - 1]
            cur = guess
            diffs, ok = [], False
            for m in range(1, max_picard + 1):
                g_cur = nonlinearity(sys, B, cur, p)
                new = base + dt * (S0 + 0.5 * g_cur)
                d = _l2(sys, new - cur)
                diffs.append(d)
                cur = new
                if not np.all(np.isfinite(new)):
                    break
                if d <= picard_tol * max(1.0, _l2(sys, new)):
                    ok = True
                    break
            g_new = nonlinearity(sys, B, new, p)
        if not ok or not np.all(np.isfinite(new)) or _l2(sys, new) > limit:
            blow = True
            break
        states[k] = new
        iters.append(m)
        residuals.append(diffs[-1] if diffs else 0.0)
        history.append(diffs[-3:])
        # g_k becomes an interior node (weight 1) for the next step
        S0 = S0 + g_new
        S1 = S1 + t * g_new
        last = k
    states = states[: last + 1]
    l2 = np.sqrt(np.sum(sys.grid.weights * np.abs(states) ** 2, axis=1))
    linf = np.abs(states).max(axis=1)
    return Trajectory(times[: last + 1], states, l2, linf, iters, residuals, history,
                      blow, float(times[last]), float(times[-1]), sys.grid)


def solve_heat(problem: CauchyProblem, dt: float, picard_tol: float = 1e-12,
               max_picard: int = 50) -> Trajectory:
    """March the heat integral equation to ``problem.T``.

    A step whose Picard iteration does not converge, or whose L^2 norm
    exceeds ``1e6 ||u0||``, ends the run with ``blowup = True``.
    """
    traj = _march(problem, _time_grid(problem.T, dt), "heat", picard_tol, max_picard)
    traj.diagnostics.update(_certify_B(problem))
    return traj


def solve_wave(problem: CauchyProblem, dt: float, picard_tol: float = 1e-12,
               max_picard: int = 50) -> Trajectory:
    """March the wave integral equation to ``problem.T``."""
    traj = _march(problem, _time_grid(problem.T, dt), "wave", picard_tol, max_picard)
    traj.diagnostics.update(_certify_B(problem))
    return traj


# --- stationary problem ----------------------------------------------------

@dataclass
class StationaryResult:
    u: GridFunction
    residual: float
    apriori: dict
    iterations: int


def _inverse_A(sys: BiorthSystem, A, g: np.ndarray) -> np.ndarray:
    if isinstance(A, str) and A == "identity":
        return g
    if np.isscalar(A) and not isinstance(A, str):
        return g / complex(A)
    if isinstance(A, SampledSymbol) and A.x_independent:
        a = forward(sys, GridFunction(sys.grid, g)).values / A.sigma
        return inverse(sys, CoefficientVector(sys, a)).values
    raise ValueError("A must be the identity, a nonzero scalar or an x-independent multiplier")


def _project(sys: BiorthSystem, g: np.ndarray) -> np.ndarray:
    return inverse(sys, forward(sys, GridFunction(sys.grid, g))).values


def solve_stationary(problem: CauchyProblem, max_iter: int = 200,
                     tol: float = 1e-12) -> StationaryResult:
    """Fixed point of ``u = A^{-1}(|Bu|^p + f)``.

    When ``A`` is a multiplier the iteration lives in the span of the
    truncated eigenfunctions and the residual is measured after projecting
    onto that span.  The a priori report evaluates
    ``||u||_2`` against ``||u||_{2p}^{2p} + ||f||_2 + ||u||_{H^{-1}_L}``.
    """
    sys = problem.system
    A, B, p = problem.A, problem.B, problem.p
    if isinstance(A, SampledSymbol):
        if not A.x_independent:
            raise ValueError("A must be an x-independent multiplier")
        if np.min(np.abs(A.sigma)) <= 1e-14 * max(1.0, np.max(np.abs(A.sigma))):
            raise ValueError("A is not invertible on the truncated index set")
    elif np.isscalar(A) and not isinstance(A, str) and A == 0:
        raise ValueError("A is not invertible")
    f = problem.f.values if problem.f is not None else np.zeros(sys.grid.n, dtype=complex)
    galerkin = isinstance(A, SampledSymbol)

    def step(u):
        return _inverse_A(sys, A, nonlinearity(sys, B, u, p) + f)

    u = step(np.zeros_like(f))
    growth, prev = 0, _l2(sys, u)
    it = 1
    for it in range(1, max_iter + 1):
        new = step(u)
        d = _l2(sys, new - u)
        u = new
        nu = _l2(sys, u)
        if not np.isfinite(nu):
            raise DivergenceError("fixed-point iterate is not finite")
        growth = growth + 1 if nu > prev else 0
        if growth >= 10:
            raise DivergenceError("iterate norm grew over 10 consecutive iterations")
        prev = nu
        if d <= tol * max(1.0, nu):
            break
    else:
        raise DivergenceError(f"no convergence within {max_iter} iterations")
    Au = apply_operator(sys, A, u)
    r = Au - nonlinearity(sys, B, u, p) - f
    residual = _l2(sys, _project(sys, r) if galerkin else r)
    ug = GridFunction(sys.grid, u)
    terms = {
        "u_l2": norm(ug, 2),
        "u_l2p_pow": norm(ug, 2 * p) ** (2 * p),
        "f_l2": _l2(sys, f),
        "u_h_minus1": sobolev_norm(sys, ug, -1.0),
    }
    rhs = terms["u_l2p_pow"] + terms["f_l2"] + terms["u_h_minus1"]
    terms["ratio"] = terms["u_l2"] / rhs if rhs > 0 else (0.0 if terms["u_l2"] == 0 else math.inf)
    return StationaryResult(ug, residual, terms, it)


# --- existence times and invariant sets ------------------------------------

@dataclass
class ExistenceTime:
    T_star: float
    certificate: float
    alternatives: dict = field(default_factory=dict)


def heat_existence_time(c: float, p: float, u0_norm: float) -> ExistenceTime:
    """Largest ``T`` keeping the heat fixed-point map inside ``S_c``.

    ``||u0||^2 + T^2 c^{2p} ||u0||^{2p} <= c^2 ||u0||^2`` gives
    ``T* = sqrt(c^2 - 1) / (c^p ||u0||^{p-1})``.  The variant with
    ``||u0||`` to the first power is recorded under ``alternatives``.
    """
    if not c > 1 or not p > 1:
        raise ValueError("need c > 1 and p > 1")
    if u0_norm == 0:
        return ExistenceTime(math.inf, 0.0, {"linear_norm_variant": math.inf})
    T = math.sqrt(c * c - 1) / (c**p * u0_norm ** (p - 1))
    a = u0_norm**2
    cert = a + T * T * c ** (2 * p) * u0_norm ** (2 * p) - c * c * a
    alt = math.sqrt(c * c - 1) / (c**p * u0_norm)
    return ExistenceTime(T, cert, {"linear_norm_variant": alt})


def wave_sufficiency(T: float, c: float, p: float, u0_norm: float, u1_norm: float,
                     b_l2: float) -> float:
    """``a + T^3 ||b||^2 c^p a^p - c a`` with ``a = ||u0||^2 + T ||u1||^2``; ``<= 0`` is sufficient."""
    a = u0_norm**2 + T * u1_norm**2
    return a + T**3 * b_l2**2 * c**p * a**p - c * a


def wave_existence_time(c: float, p: float, u0_norm: float, u1_norm: float,
                        b_l2, T_max: float = 1e6) -> ExistenceTime:
    """First root of the wave sufficiency inequality, plus the closed-form min bound.

    ``b_l2`` is ``||b||_{L^2(0,T)}``, either a number or a callable of ``T``.
    Returns ``T* = 0`` (with the certificate at a tiny ``T``) when no positive
    time satisfies the inequality.
    """
    if not c > 1 or not p > 1:
        raise ValueError("need c > 1 and p > 1")
    bfun = b_l2 if callable(b_l2) else (lambda T: float(b_l2))

    def F(T):
        return wave_sufficiency(T, c, p, u0_norm, u1_norm, bfun(T))

    a0 = u0_norm**2
    if a0 == 0 and u1_norm == 0:
        return ExistenceTime(math.inf, 0.0, {"min_formula": math.inf})
    lo = 1e-12
    if F(lo) > 0:
        return ExistenceTime(0.0, F(lo), {"min_formula": 0.0})
    hi = lo
    while F(hi) <= 0:
        lo, hi = hi, hi * 2.0
        if hi > T_max:
            return ExistenceTime(math.inf, F(T_max), {"min_formula": math.inf})
    T = brentq(F, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    # step back to the admissible side of the root
    while F(T) > 0:
        T = np.nextafter(T, 0.0)
    bT = bfun(T)
    terms = []
    for nrm, expo in ((u0_norm, 1.0 / 3.0), (u1_norm, 1.0 / (p + 2.0))):
        if nrm == 0 or bT == 0:
            terms.append(math.inf)
        else:
            terms.append(((c - 1) / (bT**2 * c**p * nrm ** (2 * p - 2))) ** expo)
    return ExistenceTime(float(T), F(T), {"min_formula": min(terms)})


def existence_time(kind: str, c: float, p: float, norms: dict, b_l2_on_0T=1.0) -> ExistenceTime:
    """Dispatch to the heat or wave existence time; ``norms`` holds ``u0`` (and ``u1``)."""
    if kind == "heat":
        return heat_existence_time(c, p, float(norms["u0"]))
    if kind == "wave":
        return wave_existence_time(c, p, float(norms["u0"]), float(norms.get("u1", 0.0)), b_l2_on_0T)
    raise ValueError(f"unknown problem kind {kind!r}")


def wave_global_certificate(gamma: float, c: float, p: float, T: float, u0_norm: float,
                            b_l2: float, b_const: float) -> dict:
    """Small-data solvability on ``[0, T]`` for decaying ``b`` with ``u1 = 0``.

    Checks ``||b||_{L^2(0,T)} <= b_const T^-gamma`` at the given ``T``, sets
    ``gamma0`` to the midpoint of ``(0, (2 gamma - 3)/p)`` and tests
    ``||u0||^2 + b_const^2 T^{3-2gamma+gamma0 p} c^p ||u0||^{2p} <= c T^gamma0 ||u0||^2``.
    """
    if not gamma > 1.5:
        raise ValueError("gamma must exceed 3/2")
    if not c >= 1 or not T > 0:
        raise ValueError("need c >= 1 and T > 0")
    gamma0 = 0.5 * (2 * gamma - 3) / p
    gt = 3 - 2 * gamma + gamma0 * p
    a = u0_norm**2
    lhs = a + b_const**2 * T**gt * c**p * u0_norm ** (2 * p)
    rhs = c * T**gamma0 * a
    room = c * T**gamma0 - 1.0
    u0_max = (room / (b_const**2 * c**p * T**gt)) ** (1.0 / (2 * p - 2)) if room > 0 else 0.0
    return {
        "gamma0": gamma0,
        "gamma_tilde": gt,
        "b_bound_holds": bool(b_l2 <= b_const * T ** (-gamma)),
        "lhs": lhs,
        "rhs": rhs,
        "certified": bool(b_l2 <= b_const * T ** (-gamma) and lhs <= rhs),
        "u0_norm_max": u0_max,
    }


def sc_membership(traj: Trajectory, c: float, norms: dict, kind: str = "heat") -> tuple[bool, float]:
    """Whether ``max_t ||u(t)||_2`` stays inside the invariant ball ``S_c``.

    Heat: radius ``c ||u0||``.  Wave: radius ``sqrt(c (||u0||^2 + T ||u1||^2))``
    with ``T`` the horizon reached.
    """
    u0 = float(norms["u0"])
    if kind == "heat":
        bound = c * u0
    elif kind == "wave":
        bound = math.sqrt(c * (u0**2 + traj.t_last * float(norms.get("u1", 0.0)) ** 2))
    else:
        raise ValueError(f"unknown problem kind {kind!r}")
    margin = bound - traj.max_l2
    return bool(margin >= -1e-12 * max(1.0, bound)), float(margin)
