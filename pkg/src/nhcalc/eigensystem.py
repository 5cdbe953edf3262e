"""Biorthogonal eigensystems of model operators and their spectral profile."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import Grid, GridFunction, build_grid

MODELS = ("torus_laplacian", "dirichlet_laplacian", "derivative_h")


class DefectiveSystemError(ValueError):
    """Raised when a matrix cannot be diagonalised into a biorthogonal system."""


@dataclass(eq=False)
class BiorthSystem:
    """Sampled biorthogonal eigensystem ``L u = lam u``, ``L* v = conj(lam) v``.

    ``U`` and ``V`` hold one row per index; ``indices`` holds the index labels
    (the ``xi`` of the analytic models, or ordinals for numeric systems).
    """

    grid: Grid
    indices: np.ndarray
    eigenvalues: np.ndarray
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.indices = np.asarray(self.indices)
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=complex)
        self.U = np.asarray(self.U, dtype=complex)
        self.V = np.asarray(self.V, dtype=complex)
        k = len(self.indices)
        if self.U.shape != (k, self.grid.n) or self.V.shape != (k, self.grid.n):
            raise ValueError("U and V need one sampled function per index")
        if self.eigenvalues.shape != (k,):
            raise ValueError("one eigenvalue per index required")
        self._pos = {int(xi): i for i, xi in enumerate(self.indices)}
        self._cache = {}

    def __len__(self):
        return len(self.indices)

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def name(self) -> str:
        return self.metadata.get("model", "custom")

    def position(self, xi: int) -> int:
        return self._pos[int(xi)]

    def u(self, xi: int) -> GridFunction:
        return GridFunction(self.grid, self.U[self.position(xi)])

    def v(self, xi: int) -> GridFunction:
        return GridFunction(self.grid, self.V[self.position(xi)])

    @property
    def u_sup(self) -> np.ndarray:
        """``||u_xi||_inf`` per index (cached)."""
        if "u_sup" not in self._cache:
            self._cache["u_sup"] = np.abs(self.U).max(axis=1)
        return self._cache["u_sup"]

    @property
    def v_sup(self) -> np.ndarray:
        if "v_sup" not in self._cache:
            self._cache["v_sup"] = np.abs(self.V).max(axis=1)
        return self._cache["v_sup"]

    @property
    def abs_eigenvalues(self) -> np.ndarray:
        return np.abs(self.eigenvalues)

    def bracket(self) -> np.ndarray:
        """Japanese bracket ``<xi> = (1 + |lam_xi|^2)^(1/2)``."""
        return np.sqrt(1.0 + self.abs_eigenvalues**2)

    def descriptor(self) -> dict:
        d = {"model": self.name, "size": self.size, "grid": self.grid.describe()}
        for key in ("N", "h"):
            if key in self.metadata:
                d[key] = self.metadata[key]
        return d

    def truncate(self, mask) -> "BiorthSystem":
        mask = np.asarray(mask)
        meta = dict(self.metadata)
        return BiorthSystem(self.grid, self.indices[mask], self.eigenvalues[mask],
                            self.U[mask], self.V[mask], meta)


def _order(indices, eigenvalues):
    # deterministic order: by |lam|, then by index label
    return np.lexsort((indices, np.round(np.abs(eigenvalues), 12)))


def build_analytic(model: str, N: int, grid: Grid, h: float | None = None) -> BiorthSystem:
    """Closed-form biorthogonal system of a built-in model operator.

    ``torus_laplacian`` and ``derivative_h`` use ``xi = -N..N``;
    ``dirichlet_laplacian`` uses ``k = 1..N``.  ``derivative_h`` is
    ``-i d/dx`` with ``u(1) = h u(0)``: ``u = h^x e^{2 pi i xi x}``,
    ``v = h^{-x} e^{2 pi i xi x}``, ``lam = 2 pi xi - i ln h``.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    if N < 1:
        raise ValueError("N must be >= 1")
    if grid.n < 4 * N + 4:
        raise ValueError(f"insufficient grid resolution: n={grid.n} < 4N+4={4 * N + 4}")
    x = grid.points
    meta = {"model": model, "N": N}
    if model == "torus_laplacian":
        if grid.kind != "torus":
            raise ValueError("torus_laplacian needs a torus grid")
        xi = np.arange(-N, N + 1)
        U = np.exp(2j * np.pi * np.outer(xi, x))
        V = U.copy()
        lam = (4 * np.pi**2 * xi**2).astype(complex)
        meta["self_adjoint"] = True
    elif model == "dirichlet_laplacian":
        if grid.kind != "interval":
            raise ValueError("dirichlet_laplacian needs an interval grid")
        xi = np.arange(1, N + 1)
        U = np.sqrt(2.0) * np.sin(np.pi * np.outer(xi, x)) + 0j
        V = U.copy()
        lam = (np.pi**2 * xi**2).astype(complex)
        meta["self_adjoint"] = True
    else:
        if h is None or h <= 0:
            raise ValueError("derivative_h needs h > 0")
        if h == 1:
            raise ValueError("derivative_h needs h != 1 (h = 1 is the periodic case)")
        xi = np.arange(-N, N + 1)
        phase = np.exp(2j * np.pi * np.outer(xi, x))
        U = phase * h**x
        V = phase * h ** (-x)
        lam = 2 * np.pi * xi - 1j * np.log(h)
        meta["h"] = float(h)
        meta["self_adjoint"] = False
    meta["tol"] = 1e-10
    order = _order(xi, lam)
    return BiorthSystem(grid, xi[order], lam[order], U[order], V[order], meta)


def model_system(model: str, N: int, n: int | None = None, h: float = 2.0) -> BiorthSystem:
    """Convenience: build the natural grid of a model and its analytic system."""
    n = n if n is not None else 4 * N + 4
    kind = "torus" if model == "torus_laplacian" else "interval"
    grid = build_grid(kind, n)
    return build_analytic(model, N, grid, h if model == "derivative_h" else None)


def biorthonormality_defect(sys: BiorthSystem) -> float:
    """``max |(u_xi, v_eta) - delta|`` by grid quadrature."""
    w = sys.grid.weights
    gram = (sys.U * w) @ sys.V.conj().T
    return float(np.abs(gram - np.eye(sys.size)).max())


# --- numeric systems -------------------------------------------------------

def spectral_derivative_matrix(n: int) -> np.ndarray:
    """Fourier differentiation matrix ``d/dx`` on ``n`` periodic points of [0, 1)."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    F = np.fft.fft(np.eye(n), axis=0)
    return np.fft.ifft(2j * np.pi * k[:, None] * F, axis=0)


def derivative_h_matrix(grid: Grid, h: float) -> np.ndarray:
    """Discretisation of ``-i d/dx`` with ``u(1) = h u(0)`` on a torus grid.

    Writes ``u = h^x w`` with ``w`` periodic, so
    ``L = diag(h^x) (-i D - i ln h) diag(h^{-x})``.
    """
    if grid.kind != "torus":
        raise ValueError("spectral discretisation needs a torus grid")
    D = spectral_derivative_matrix(grid.n)
    s = h ** grid.points
    inner = -1j * D - 1j * np.log(h) * np.eye(grid.n)
    return (s[:, None] * inner) / s[None, :]


def _clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    order = np.argsort(values.real + 1e-3 * values.imag, kind="stable")
    groups: list[list[int]] = []
    for i in order:
        for g in groups:
            if abs(values[g[0]] - values[i]) <= tol * max(1.0, abs(values[i])):
                g.append(int(i))
                break
        else:
            groups.append([int(i)])
    return [np.array(g) for g in groups]


def build_numeric(operator_matrix, grid: Grid, tol: float = 1e-8,
                  boundary_rows=None, n_modes: int | None = None) -> BiorthSystem:
    """Biorthogonal system from a matrix discretisation of ``L``.

    Parameters
    ----------
    operator_matrix : (n, n) array
        Grid discretisation of ``L`` with its boundary conditions imposed.
    grid : Grid
        The grid carrying the quadrature weights of the L^2 pairing.
    tol : float
        Pairing tolerance; the matrix is rejected as defective if the
        biorthonormality residual exceeds it.
    boundary_rows : sequence of int, optional
        Grid points fixed by the boundary conditions (e.g. Dirichlet nodes).
        They are eliminated before the eigen-solve and padded with zeros.
    n_modes : int, optional
        Keep only the ``n_modes`` eigenpairs of smallest modulus.

    Notes
    -----
    The adjoint is taken in the weighted pairing, ``L* = W^-1 L^H W``.
    Eigenvalues of ``L`` are matched with conjugated eigenvalues of ``L*``;
    each pair is scaled so ``||u|| = 1`` and ``(u, v) = 1``.  Degenerate
    eigenvalues are biorthogonalised blockwise.
    """
    A = np.asarray(operator_matrix, dtype=complex)
    n = grid.n
    if A.shape != (n, n):
        raise ValueError("matrix shape does not match grid")
    keep = np.ones(n, dtype=bool)
    if boundary_rows is not None:
        keep[list(boundary_rows)] = False
    Ak = A[np.ix_(keep, keep)]
    w = np.asarray(grid.weights)[keep]
    m = Ak.shape[0]

    lam, R = np.linalg.eig(Ak)
    Astar = (Ak.conj().T * w[None, :]) / w[:, None]
    mu, S = np.linalg.eig(Astar)

    # greedy matching lam <-> conj(mu) by modulus of difference
    target = np.conj(mu)
    free = np.ones(m, dtype=bool)
    match = np.empty(m, dtype=int)
    scale = max(1.0, float(np.abs(lam).max()))
    for i in np.argsort(np.abs(lam), kind="stable"):
        d = np.where(free, np.abs(target - lam[i]), np.inf)
        j = int(np.argmin(d))
        if d[j] > max(tol, 1e-8) * scale * 10:
            raise DefectiveSystemError(f"unmatched eigenvalue {lam[i]!r} (residual {d[j]:.3e})")
        match[i] = j
        free[j] = False
    S = S[:, match]

    U = R.T.copy()
    V = S.T.copy()
    for group in _clusters(lam, 1e-7):
        Ug, Vg = U[group], V[group]
        # normalise u's, then make the block pairing the identity
        Ug = Ug / np.sqrt(np.sum(w * np.abs(Ug) ** 2, axis=1))[:, None]
        Vg = Vg / np.sqrt(np.sum(w * np.abs(Vg) ** 2, axis=1))[:, None]
        G = (Ug * w) @ Vg.conj().T
        # for unit u and v, a vanishing pairing singular value means a Jordan block
        if np.linalg.svd(G, compute_uv=False).min() < np.sqrt(max(tol, 1e-14)):
            raise DefectiveSystemError("defective (non-diagonalisable) eigenvalue cluster")
        Vg = np.linalg.solve(G.conj().T, Vg)
        U[group], V[group] = Ug, Vg

    gram = (U * w) @ V.conj().T
    resid = float(np.abs(gram - np.eye(m)).max())
    if not np.isfinite(resid) or resid > tol:
        raise DefectiveSystemError(f"defective: pairing residual {resid:.3e} > tol {tol:.1e}")

    Ufull = np.zeros((m, n), dtype=complex)
    Vfull = np.zeros((m, n), dtype=complex)
    Ufull[:, keep] = U
    Vfull[:, keep] = V
    order = np.lexsort((np.arange(m), np.round(np.abs(lam), 10)))
    if n_modes is not None:
        order = order[:n_modes]
    v_norms = np.sqrt(np.sum(np.asarray(grid.weights) * np.abs(Vfull[order]) ** 2, axis=1))
    meta = {
        "model": "numeric",
        "tol": tol,
        "pairing_residual": resid,
        "u_l2": [1.0] * len(order),
        "v_l2": v_norms.tolist(),
    }
    return BiorthSystem(grid, np.arange(len(order)), lam[order], Ufull[order], Vfull[order], meta)


# --- spectral profile ------------------------------------------------------

@dataclass
class SpectralProfile:
    Q_fit: float
    gamma_table: dict
    sup_ratio_vu: float
    sup_ratio_uv: float
    counting_samples: list

    def to_dict(self) -> dict:
        return {
            "q_fit": self.Q_fit,
            "gamma_table": {str(k): v for k, v in self.gamma_table.items()},
            "sup_ratio_vu": self.sup_ratio_vu,
            "sup_ratio_uv": self.sup_ratio_uv,
            "counting_samples": [[float(a), int(b)] for a, b in self.counting_samples],
        }


def counting_function(sys: BiorthSystem, lam: float) -> int:
    return int(np.count_nonzero(sys.abs_eigenvalues <= lam))


def _lp_norms(sys: BiorthSystem, funcs: np.ndarray, p: float) -> np.ndarray:
    mod = np.abs(funcs)
    if np.isinf(p):
        return mod.max(axis=1)
    return np.sum(sys.grid.weights * mod**p, axis=1) ** (1.0 / p)


def _slope(x, y) -> float:
    return float(np.polyfit(x, y, 1)[0])


def spectral_profile(sys: BiorthSystem, p_list=(1.0, 2.0, np.inf)) -> SpectralProfile:
    """Weyl exponent, eigenfunction growth exponents and sup-ratios.

    ``Q_fit`` is the least-squares slope of ``log N(lam)`` against ``log lam``
    over dyadic ``lam`` samples; only the upper (geometric) half of the
    samples enters the fit, since ``Q`` describes ``N(lam)`` as
    ``lam -> inf`` and the smallest eigenvalues otherwise dominate.
    """
    if sys.size < 8:
        raise ValueError("spectral profile needs at least 8 indices")
    a = sys.abs_eigenvalues
    pos = a > 0
    if not pos.any():
        raise ValueError("all eigenvalues have zero modulus")
    lo, hi = float(a[pos].min()), float(a.max())
    lams = []
    lam = lo
    while lam < hi:
        lams.append(lam)
        lam *= 2.0
    lams.append(hi)
    lams = np.array(lams)
    counts = np.array([counting_function(sys, x) for x in lams])
    tail = lams >= np.sqrt(lo * hi)
    if tail.sum() < 4:
        tail = np.zeros_like(tail)
        tail[-4:] = True
    if len(lams) < 4:
        raise ValueError("fewer than 4 fit points for the Weyl exponent")
    q_fit = _slope(np.log(lams[tail]), np.log(counts[tail]))

    gamma_table = {}
    la = np.log(a[pos])
    for p in p_list:
        pp = conjugate_exponent(p)
        nu = _lp_norms(sys, sys.U[pos], p)
        nv = _lp_norms(sys, sys.V[pos], pp)
        g1 = _slope(la, np.log(nu))
        g2 = _slope(la, np.log(nv))
        gamma_table[float(p)] = {"gamma1": g1, "gamma2": g2, "gamma": g1 + g2}
    vu = sys.v_sup / sys.u_sup
    return SpectralProfile(
        Q_fit=q_fit,
        gamma_table=gamma_table,
        sup_ratio_vu=float(vu.max()),
        sup_ratio_uv=float((1.0 / vu).max()),
        counting_samples=list(zip(lams.tolist(), counts.tolist())),
    )


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1.0)


# --- CSV tables ------------------------------------------------------------

def system_header(n: int) -> list[str]:
    cols = ["xi_index", "re_lambda", "im_lambda"]
    cols += [f"{part}_u_{i}" for i in range(n) for part in ("re", "im")]
    cols += [f"{part}_v_{i}" for i in range(n) for part in ("re", "im")]
    return cols


def export_system_csv(sys: BiorthSystem, path) -> Path:
    path = Path(path)
    n = sys.grid.n
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(system_header(n))
        for k in range(sys.size):
            row = [int(sys.indices[k]), repr(float(sys.eigenvalues[k].real)), repr(float(sys.eigenvalues[k].imag))]
            for arr in (sys.U[k], sys.V[k]):
                inter = np.empty(2 * n)
                inter[0::2], inter[1::2] = arr.real, arr.imag
                row += [repr(float(x)) for x in inter]
            wr.writerow(row)
    return path


def load_system_csv(path, grid: Grid | str, tol: float = 1e-8) -> BiorthSystem:
    """Load an eigensystem table; ``grid`` may be a Grid or a kind name."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = (len(header) - 3) // 4
    if len(header) != 3 + 4 * n or header[:3] != ["xi_index", "re_lambda", "im_lambda"]:
        raise ValueError("malformed eigensystem table header")
    if isinstance(grid, str):
        grid = build_grid(grid, n)
    if grid.n != n:
        raise ValueError(f"table has {n} grid points, grid has {grid.n}")
    data = np.array([[float(c) for c in r] for r in body])
    xi = data[:, 0].astype(int)
    lam = data[:, 1] + 1j * data[:, 2]
    uv = data[:, 3:]
    U = uv[:, 0:2 * n:2] + 1j * uv[:, 1:2 * n:2]
    V = uv[:, 2 * n::2] + 1j * uv[:, 2 * n + 1::2]
    return BiorthSystem(grid, xi, lam, U, V, {"model": "table", "tol": tol, "source": str(path)})
