"""Symbols, their sampled tables, dyadic cutoffs and the hypothesis constants.

A symbol is either a multiplier ``sigma(xi)``, a pseudo-multiplier
``tau(x, w)`` evaluated at ``w = |lam_xi|``, or a full table ``m(x, xi)``.
Expressions use the identifiers ``x``, ``w`` and ``xi`` and are parsed into
sympy, so x- and w-derivatives are exact whenever an expression is given.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .eigensystem import BiorthSystem

FORMS = ("multiplier", "pseudo_multiplier", "full_table")

X, W, XI = sp.symbols("x w xi", real=True)
_VARS = {"x": X, "w": W, "xi": XI}
_CONSTS = {"pi": sp.pi, "E": sp.E, "I": sp.I}
_FUNCS = {
    "exp": sp.exp,
    "log": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
    "abs": sp.Abs,
    "sqrt": sp.sqrt,
    "pow": lambda a, b: a**b,
}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


def parse_expression(text: str, parameters: dict | None = None) -> sp.Expr:
    """Parse the symbol grammar into a sympy expression.

    Infix ``+ - * / ^`` (``**`` also accepted), numbers, the variables
    ``x``, ``w``, ``xi``, constants ``pi``, ``E``, ``I``, the functions
    ``exp log sin cos abs sqrt pow``, and any names in ``parameters``.
    """
    params = {k: sp.sympify(v) for k, v in (parameters or {}).items()}
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse symbol expression {text!r}: {exc.msg}") from None

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return sp.nsimplify(node.value) if isinstance(node.value, int) else sp.Float(node.value)
        if isinstance(node, ast.Name):
            if node.id in _VARS:
                return _VARS[node.id]
            if node.id in params:
                return params[node.id]
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise ValueError(f"unknown identifier {node.id!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](build(node.left), build(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = build(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            if node.func.id not in _FUNCS:
                raise ValueError(f"unknown function {node.func.id!r}")
            return _FUNCS[node.func.id](*[build(a) for a in node.args])
        raise ValueError(f"unsupported syntax in symbol expression: {ast.dump(node)[:60]}")

    return build(tree)


def _lambdify(expr: sp.Expr):
    f = sp.lambdify((X, W, XI), expr, modules="numpy")

    def call(x, w, xi):
        with np.errstate(all="ignore"):
            out = f(x, w, xi)
        return np.broadcast_to(np.asarray(out, dtype=complex),
                               np.broadcast_shapes(np.shape(x), np.shape(w), np.shape(xi)))

    return call


@dataclass
class SymbolSpec:
    """A symbol given by expression, callable or table.

    Parameters
    ----------
    form : {'multiplier', 'pseudo_multiplier', 'full_table'}
    expression : str or callable, optional
        Text expression over ``x``, ``w`` (= ``|lam_xi|``) and ``xi``, or a
        vectorised callable ``f(x, w, xi)``.
    table : optional
        ``multiplier``: a ``{xi: value}`` dict (missing indices take
        ``default``) or one value per system index.  ``full_table``: an
        ``(n, K)`` array.
    default : complex
    parameters : dict
        Named constants substituted into a text expression.
    """

    form: str
    expression: object = None
    table: object = None
    default: complex = 0.0
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown symbol form {self.form!r}")
        if (self.expression is None) == (self.table is None):
            raise ValueError("give exactly one of expression or table")
        if self.form == "pseudo_multiplier" and self.table is not None:
            raise ValueError("a pseudo-multiplier needs an expression in (x, w)")
        self._expr = None
        if isinstance(self.expression, str):
            self._expr = parse_expression(self.expression, self.parameters)
            if self.form == "multiplier" and X in self._expr.free_symbols:
                raise ValueError("a multiplier expression cannot depend on x")
            if self.form == "pseudo_multiplier" and XI in self._expr.free_symbols:
                raise ValueError("a pseudo-multiplier depends on (x, w) only")

    @property
    def sympy_expr(self):
        return self._expr

    @property
    def x_independent(self) -> bool:
        if self.form == "multiplier":
            return True
        if self._expr is not None:
            return X not in self._expr.free_symbols
        return False

    def evaluate(self, x, w, xi=None):
        """Evaluate an expression form on broadcastable arrays."""
        if self.expression is None:
            raise ValueError("table symbols have no continuous form")
        xi = np.zeros_like(np.asarray(w, dtype=float)) if xi is None else xi
        if self._expr is not None:
            return _lambdify(self._expr)(x, w, xi)
        with np.errstate(all="ignore"):
            out = self.expression(x, w, xi)
        return np.broadcast_to(np.asarray(out, dtype=complex),
                               np.broadcast_shapes(np.shape(x), np.shape(w), np.shape(xi)))

    def tau(self, x, w):
        """Continuous profile ``tau(x, w)``; needs an expression free of ``xi``."""
        if self._expr is not None and XI in self._expr.free_symbols:
            raise ValueError("symbol depends on xi and has no tau(x, w) profile")
        return self.evaluate(x, w)

    def scaled(self, c) -> "SymbolSpec":
        """The symbol ``c * m``."""
        if self._expr is not None:
            return SymbolSpec(self.form, str(sp.sympify(c) * self._expr).replace("**", "^"),
                              default=self.default)
        if self.table is not None:
            if isinstance(self.table, dict):
                tab = {k: c * v for k, v in self.table.items()}
            else:
                tab = c * np.asarray(self.table)
            return SymbolSpec(self.form, table=tab, default=c * self.default)
        f = self.expression
        return SymbolSpec(self.form, lambda x, w, xi: c * f(x, w, xi))

    def describe(self) -> dict:
        d = {"form": self.form}
        if isinstance(self.expression, str):
            d["expression"] = self.expression
        elif self.expression is not None:
            d["expression"] = getattr(self.expression, "__name__", "callable")
        else:
            d["expression"] = "table"
        if self.parameters:
            d["parameters"] = {k: float(v) for k, v in self.parameters.items()}
        return d


@dataclass(eq=False)
class SampledSymbol:
    """Symbol table ``m(x_i, xi)`` on a system, with x-derivative tables."""

    system: BiorthSystem
    table: np.ndarray = field(repr=False)
    derivatives: list = field(default_factory=list, repr=False)
    x_independent: bool = False
    spec: SymbolSpec | None = None
    analytic_derivatives: bool = False

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=complex)
        shape = (self.system.grid.n, self.system.size)
        if self.table.shape != shape:
            raise ValueError(f"symbol table must have shape {shape}")
        if not self.derivatives:
            self.derivatives = [self.table]
        if not np.all(np.isfinite(self.table)):
            raise ValueError("symbol table contains NaN or inf")

    @property
    def beta_max(self) -> int:
        return len(self.derivatives) - 1

    @property
    def sigma(self) -> np.ndarray:
        """The multiplier ``sigma(xi)`` of an x-independent symbol."""
        if not self.x_independent:
            raise ValueError("symbol depends on x")
        return self.table[0]

    def derivative(self, beta: int) -> np.ndarray:
        if beta > self.beta_max:
            raise ValueError(f"derivative table of order {beta} missing (have {self.beta_max})")
        return self.derivatives[beta]

    def consistency_defect(self) -> float:
        """Max relative gap between stored and finite-difference derivative tables."""
        worst = 0.0
        for beta in range(1, self.beta_max + 1):
            fd = fd_derivative(self.derivatives[beta - 1], self.system.grid.spacing,
                               self.system.grid.kind == "torus")
            ref = self.derivatives[beta]
            worst = max(worst, float(np.abs(fd - ref).max() / max(1.0, np.abs(ref).max())))
        return worst


def fd_derivative(table: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    """Fourth-order finite-difference derivative along axis 0.

    Centred stencils in the interior, periodic wrap on the torus and
    one-sided fourth-order stencils at interval ends.
    """
    f = np.asarray(table)
    if periodic:
        return (-np.roll(f, -2, 0) + 8 * np.roll(f, -1, 0)
                - 8 * np.roll(f, 1, 0) + np.roll(f, 2, 0)) / (12 * h)
    n = f.shape[0]
    if n < 5:
        raise ValueError("need at least 5 points for fourth-order stencils")
    d = np.empty_like(f)
    d[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def _multiplier_values(spec: SymbolSpec, sys: BiorthSystem) -> np.ndarray:
    if spec.table is not None:
        if isinstance(spec.table, dict):
            vals = np.full(sys.size, spec.default, dtype=complex)
            for xi, v in spec.table.items():
                if int(xi) in sys._pos:
                    vals[sys.position(xi)] = v
            return vals
        vals = np.asarray(spec.table, dtype=complex)
        if vals.shape != (sys.size,):
            raise ValueError("multiplier table needs one value per index")
        return vals
    return np.asarray(spec.evaluate(0.0, sys.abs_eigenvalues, sys.indices.astype(float)))


def sample(spec: SymbolSpec, sys: BiorthSystem, beta_max: int = 0) -> SampledSymbol:
    """Sample a symbol on ``grid x I_N`` with x-derivatives up to ``beta_max``."""
    n, K = sys.grid.n, sys.size
    x = sys.grid.points[:, None]
    w = sys.abs_eigenvalues[None, :]
    xi = sys.indices.astype(float)[None, :]
    if spec.form == "multiplier":
        row = _multiplier_values(spec, sys)
        table = np.broadcast_to(row, (n, K)).copy()
        derivs = [table] + [np.zeros((n, K), dtype=complex) for _ in range(beta_max)]
        out = SampledSymbol(sys, table, derivs, True, spec, True)
    elif spec.form == "full_table" and spec.table is not None:
        table = np.asarray(spec.table, dtype=complex)
        if table.shape != (n, K):
            raise ValueError(f"full table must have shape {(n, K)}")
        derivs = [table]
        for _ in range(beta_max):
            derivs.append(fd_derivative(derivs[-1], sys.grid.spacing, sys.grid.kind == "torus"))
        xind = bool(np.all(table == table[0]))
        out = SampledSymbol(sys, table, derivs, xind, spec, False)
    else:
        expr = spec.sympy_expr
        table = np.array(spec.evaluate(x, w, xi))
        derivs = [table]
        if expr is not None:
            for beta in range(1, beta_max + 1):
                d = sp.diff(expr, X, beta)
                derivs.append(np.array(_lambdify(d)(x, w, xi)))
        else:
            for _ in range(beta_max):
                derivs.append(fd_derivative(derivs[-1], sys.grid.spacing, sys.grid.kind == "torus"))
        out = SampledSymbol(sys, table, derivs, spec.x_independent, spec, expr is not None)
    for d in out.derivatives:
        if not np.all(np.isfinite(d)):
            raise ValueError("symbol evaluation produced NaN or inf")
    return out


def multiplier_from_values(sys: BiorthSystem, sigma, beta_max: int = 0) -> SampledSymbol:
    """Wrap one value per index as a sampled multiplier."""
    return sample(SymbolSpec("multiplier", table=np.asarray(sigma, dtype=complex)), sys, beta_max)


# --- dyadic decomposition --------------------------------------------------

def psi0(lam) -> np.ndarray:
    """Smooth cutoff: 1 on ``|lam| <= 1``, 0 on ``|lam| >= 2``."""
    a = np.abs(np.asarray(lam, dtype=float))
    out = np.zeros_like(a)
    out[a <= 1] = 1.0
    mid = (a > 1) & (a < 2)
    t = a[mid] - 1.0
    out[mid] = np.exp(1.0 - 1.0 / (1.0 - t * t))
    return out


@dataclass(frozen=True)
class DyadicFamily:
    """``psi_0`` and ``psi_j(lam) = psi_0(2^-j lam) - psi_0(2^(1-j) lam)``."""

    j_max: int

    def __post_init__(self):
        if self.j_max < 1:
            raise ValueError("j_max must be >= 1")

    def psi(self, j: int, lam) -> np.ndarray:
        if j < 0:
            raise ValueError("negative dyadic index")
        lam = np.asarray(lam, dtype=float)
        if j == 0:
            return psi0(lam)
        return psi0(lam / 2.0**j) - psi0(lam / 2.0 ** (j - 1))

    def partial_sum(self, J: int, lam) -> np.ndarray:
        return sum(self.psi(j, lam) for j in range(J + 1))

    def support(self, j: int) -> tuple[float, float]:
        return (0.0, 2.0) if j == 0 else (2.0 ** (j - 1), 2.0 ** (j + 1))


def dyadic_family(j_max: int) -> DyadicFamily:
    return DyadicFamily(j_max)


# --- Hormander-Mihlin norm -------------------------------------------------

@dataclass
class HMResolution:
    """Discretisation of the Hormander-Mihlin supremum.

    ``R`` and ``samples`` define midpoint quadrature on ``[-R, R]`` for the
    Euclidean Fourier transform; ``r = 2^j`` for ``j_min <= j <= j_max``.
    """

    R: float = 64.0
    samples: int = 2**14
    j_min: int = -10
    j_max: int = 14
    x_samples: int = 16
    growth_threshold: float = 0.05

    def refined(self) -> "HMResolution":
        return HMResolution(self.R, 2 * self.samples, self.j_min, self.j_max,
                            self.x_samples, self.growth_threshold)


@dataclass
class HMNorm:
    value: float
    divergent: bool
    profile: list
    argmax: tuple

    def __float__(self):
        return self.value


def _x_samples(spec: SymbolSpec, count: int) -> np.ndarray:
    if spec.x_independent:
        return np.array([0.0])
    return (np.arange(count) + 0.5) / count


def _ends_growing(vals: np.ndarray, thr: float, k: int = 3) -> bool:
    """True if the sequence keeps increasing over its last ``k`` steps by more than ``thr``."""
    if len(vals) <= k:
        return False
    tail = vals[-(k + 1):]
    return bool(np.all(np.diff(tail) > 0) and tail[-1] > (1 + thr) * tail[0])


def hm_norm(spec: SymbolSpec, s: float, Q_m: float,
            resolution: HMResolution | None = None) -> HMNorm:
    """Uniform local Sobolev norm ``sup_{r,x} r^(s-Q_m/2) ||<.>^s F[tau(x,.) psi(./r)]||_2``.

    The window is ``psi = psi_1`` (support ``[1, 4]``) applied on ``w > 0``.
    Substituting ``w = r eta`` gives
    ``||<.>^s F[...]||_2^2 = r int <zeta/r>^(2s) |G^(zeta)|^2 dzeta`` with
    ``G(eta) = tau(x, r eta) psi(eta)``; ``G^`` uses the ``exp(-2 pi i z eta)``
    convention and is computed by FFT.  The result is flagged divergent
    when it still grows at either end of the r-grid.
    """
    if s <= 0.5:
        raise ValueError("s must exceed 1/2")
    res = resolution or HMResolution()
    M, R = int(res.samples), float(res.R)
    d_eta = 2 * R / M
    eta = -R + (np.arange(M) + 0.5) * d_eta
    window = DyadicFamily(2).psi(1, eta)
    # tau is a profile on w >= 0, so only the positive half of the window is used
    supp = (window > 0) & (eta > 0)
    zeta = np.fft.fftfreq(M, d=d_eta)
    js = np.arange(res.j_min, res.j_max + 1)
    rs = 2.0 ** js
    best = np.zeros(len(rs))
    arg_x = np.zeros(len(rs))
    for xv in _x_samples(spec, res.x_samples):
        G = np.zeros((len(rs), M), dtype=complex)
        G[:, supp] = spec.tau(xv, rs[:, None] * eta[supp][None, :]) * window[supp]
        Ghat = np.fft.fft(G, axis=1) * d_eta
        weight = (1.0 + (zeta[None, :] / rs[:, None]) ** 2) ** s
        integral = np.sum(weight * np.abs(Ghat) ** 2, axis=1) / (2 * R)
        vals = rs ** (s - Q_m / 2.0) * np.sqrt(rs * integral)
        better = vals > best
        best = np.where(better, vals, best)
        arg_x = np.where(better, xv, arg_x)
    if not np.all(np.isfinite(best)):
        return HMNorm(math.inf, True, list(zip(rs.tolist(), best.tolist())), (math.nan, math.nan))
    k = int(np.argmax(best))
    thr = res.growth_threshold
    divergent = _ends_growing(best, thr) or _ends_growing(best[::-1], thr)
    return HMNorm(float(best[k]), divergent, list(zip(rs.tolist(), best.tolist())),
                  (float(rs[k]), float(arg_x[k])))


# --- Marcinkiewicz seminorms -----------------------------------------------

@dataclass
class MarcinkiewiczSeminorms:
    constants: list
    divergent: list
    omega_max: float

    @property
    def any_divergent(self) -> bool:
        return any(self.divergent)


def _omega_derivative(spec: SymbolSpec, alpha: int, x, w):
    expr = spec.sympy_expr
    if expr is not None:
        return _lambdify(sp.diff(expr, W, alpha))(x, w, 0.0)
    if alpha == 0:
        return spec.tau(x, w)
    h = 1e-2 * (1.0 + np.abs(w))

    def lower(ww):
        return _omega_derivative(spec, alpha - 1, x, ww)

    return (-lower(w + 2 * h) + 8 * lower(w + h) - 8 * lower(w - h) + lower(w - 2 * h)) / (12 * h)


def marcinkiewicz_seminorms(spec: SymbolSpec, rho: int, omega_max: float = 1e6,
                            points: int = 600, x_samples: int = 16,
                            tol: float = 1e-3) -> MarcinkiewiczSeminorms:
    """``C_alpha = max (1 + w)^alpha |d_w^alpha tau(x, w)|`` for ``alpha = 0..rho``.

    Sampled on ``w = 0`` plus a geometric grid up to ``omega_max``.  A
    constant is flagged divergent when its running maximum still grows by
    more than ``tol`` over the top two decades of the grid.
    """
    if rho < 0:
        raise ValueError("rho must be >= 0")
    if omega_max <= 100:
        raise ValueError("omega_max must exceed 100 to expose two decades")
    w = np.concatenate([[0.0], np.geomspace(1e-3, omega_max, points)])
    top = w > omega_max / 100.0
    xs = _x_samples(spec, x_samples)[:, None]
    consts, flags = [], []
    for alpha in range(rho + 1):
        vals = np.abs(np.asarray(_omega_derivative(spec, alpha, xs, w[None, :])))
        vals = (1.0 + w[None, :]) ** alpha * np.broadcast_to(vals, (len(xs), len(w)))
        if not np.all(np.isfinite(vals)):
            consts.append(math.inf)
            flags.append(True)
            continue
        col = vals.max(axis=0)
        c_all = float(col.max())
        c_low = float(col[~top].max())
        consts.append(c_all)
        flags.append(bool(c_all > (1 + tol) * c_low + 1e-300))
    return MarcinkiewiczSeminorms(consts, flags, float(omega_max))


# --- level-set constants ---------------------------------------------------

def _superlevel_sums(values: np.ndarray, weights: np.ndarray):
    """For each distinct positive value ``t``: (t, fsum w[v >= t], fsum w[v > t])."""
    order = np.argsort(-values, kind="stable")
    v = values[order]
    wts = weights[order].tolist()
    out = []
    i, n = 0, len(v)
    while i < n and v[i] > 0:
        j = i
        while j < n and v[j] == v[i]:
            j += 1
        out.append((float(v[i]), math.fsum(wts[:j]), math.fsum(wts[:i])))
        i = j
    return out


def paley_weight_constant(sys: BiorthSystem, phi, variant: str = "L") -> float:
    """``M_phi = sup_t t * sum_{phi(xi) >= t} ||u_xi||_inf^2`` (``v`` for L*).

    The supremum is attained at one of the values of ``phi``.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (sys.size,):
        raise ValueError("phi needs one value per index")
    if np.any(~(phi > 0)):
        raise ValueError("phi must be positive")
    sup = sys.u_sup if variant == "L" else sys.v_sup
    return max(t * ge for t, ge, _ in _superlevel_sums(phi, sup**2))


def weak_quantity(sys: BiorthSystem, symbol: SampledSymbol, b: float, beta_max: int = 0) -> float:
    """Weak-l^b size of a symbol's level sets, weighted by eigenfunction sup-norms.

    ``max_{beta <= beta_max, x} sup_{s>0} s (sum_{|d^beta m(x,xi)| > s} max(||u||^2, ||v||^2))^(1/b)``.
    Candidates are the values of ``|d^beta m|``; both the strict and the
    non-strict level set are evaluated and the larger value kept.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    if symbol.system is not sys:
        raise ValueError("symbol sampled on a different system")
    wts = np.maximum(sys.u_sup**2, sys.v_sup**2)
    inv_b = 1.0 / b
    best = 0.0
    for beta in range(beta_max + 1):
        tab = np.abs(symbol.derivative(beta))
        rows = tab[:1] if symbol.x_independent else np.unique(tab, axis=0)
        for row in rows:
            for t, ge, gt in _superlevel_sums(row, wts):
                best = max(best, t * ge**inv_b, t * gt**inv_b)
    return best
