"""Discrete one-dimensional manifolds and the function norms used throughout.

Two built-in manifolds, both normalised to unit volume:

* ``torus``: points ``k/n`` with uniform weights ``1/n``;
* ``interval``: points ``linspace(0, 1, n)`` with composite trapezoid (or
  uniform) weights, both endpoints included.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("torus", "interval")
RULES = ("uniform", "trapezoid")


@dataclass(frozen=True, eq=False)
class Grid:
    kind: str
    points: np.ndarray
    weights: np.ndarray
    rule: str = "uniform"

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def spacing(self) -> float:
        return 1.0 / self.n if self.kind == "torus" else 1.0 / (self.n - 1)

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    def same_as(self, other: "Grid") -> bool:
        return self is other or (
            self.kind == other.kind
            and self.n == other.n
            and self.rule == other.rule
        )

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, "rule": self.rule}


def build_grid(kind: str, n: int, quadrature_rule: str | None = None) -> Grid:
    """Build a unit-volume grid.

    Parameters
    ----------
    kind : {'torus', 'interval'}
    n : int
        Number of points, at least 4.
    quadrature_rule : {'uniform', 'trapezoid'}, optional
        Defaults to uniform on the torus and trapezoid on the interval.
        The torus only accepts the uniform rule.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown manifold kind {kind!r}")
    if quadrature_rule is None:
        quadrature_rule = "uniform" if kind == "torus" else "trapezoid"
    if quadrature_rule not in RULES:
        raise ValueError(f"unknown quadrature rule {quadrature_rule!r}")
    if n < 4:
        raise ValueError(f"n too small: {n} < 4")
    if kind == "torus":
        if quadrature_rule != "uniform":
            raise ValueError("trapezoid rule requested on torus; torus requires uniform")
        points = np.arange(n) / n
        weights = np.full(n, 1.0 / n)
    else:
        points = np.linspace(0.0, 1.0, n)
        if quadrature_rule == "trapezoid":
            weights = np.full(n, 1.0 / (n - 1))
            weights[0] = weights[-1] = 0.5 / (n - 1)
        else:
            weights = np.full(n, 1.0 / n)
    points.setflags(write=False)
    weights.setflags(write=False)
    return Grid(kind, points, weights, quadrature_rule)


@dataclass(eq=False)
class GridFunction:
    """Complex samples of a function on a grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n,):
            raise ValueError(
                f"values length {self.values.shape} does not match grid size {self.grid.n}"
            )

    @classmethod
    def from_callable(cls, grid: Grid, func) -> "GridFunction":
        return cls(grid, np.broadcast_to(func(grid.points), (grid.n,)))

    def _check(self, other: "GridFunction"):
        if not self.grid.same_as(other.grid):
            raise ValueError("grid mismatch")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values + other.values)
        return GridFunction(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values - other.values)
        return GridFunction(self.grid, self.values - other)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            self._check(c)
            return GridFunction(self.grid, self.values * c.values)
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def inner(self, other: "GridFunction") -> complex:
        """Quadrature L^2 pairing ``sum w f conj(g)``."""
        self._check(other)
        return complex(np.sum(self.grid.weights * self.values * np.conj(other.values)))


def norm(f: GridFunction, p: float) -> float:
    """Weighted L^p norm, ``max |f|`` for ``p = inf``."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mod = np.abs(f.values)
    if not np.all(np.isfinite(mod)):
        raise ValueError("function has non-finite values")
    if np.isinf(p):
        return float(mod.max())
    if p == 2:
        return float(np.sqrt(np.sum(f.grid.weights * mod**2)))
    scale = mod.max()
    if scale == 0:
        return 0.0
    # rescale to avoid overflow for large p
    return float(scale * np.sum(f.grid.weights * (mod / scale) ** p) ** (1.0 / p))


def geodesic_distance(grid: Grid, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any((y < 0) | (y > 1)):
        raise ValueError("points must lie in [0, 1]")
    d = np.abs(x - y)
    if grid.kind == "torus":
        d = np.minimum(d, 1.0 - d)
    return d if d.ndim else float(d)


def ball_half_widths(grid: Grid) -> np.ndarray:
    """Half-widths (in grid steps) of the closed balls ``d <= k/(2n)``, ``k = 1..n``.

    Integer arithmetic keeps the membership test free of rounding ties.
    """
    n = grid.n
    k = np.arange(1, n + 1)
    if grid.kind == "torus":
        half = k // 2
    else:
        half = (k * (n - 1)) // (2 * n)
    return np.unique(half)


def ball_windows(grid: Grid, half: int) -> tuple[np.ndarray, np.ndarray]:
    """Index array and weight array (one row per centre) for one half-width."""
    n = grid.n
    w = np.asarray(grid.weights)
    centres = np.arange(n)[:, None]
    if grid.kind == "torus":
        offsets = np.arange(-half, half + 1) if 2 * half + 1 <= n else np.arange(-half, n - half)
        idx = (centres + offsets) % n
        return idx, w[idx]
    offsets = np.arange(-half, half + 1)
    raw = centres + offsets
    idx = np.clip(raw, 0, n - 1)
    return idx, w[idx] * ((raw >= 0) & (raw < n))


def bmo_norm(f: GridFunction) -> float:
    """Discrete BMO norm: maximal mean oscillation over grid-centred balls.

    Balls are closed, ``d(x_i, y) <= k/(2n)`` for every centre ``x_i`` and
    ``k = 1..n``; at ``k = n`` they cover the whole manifold.
    """
    grid = f.grid
    if grid.n < 2:
        raise ValueError("degenerate grid: empty ball family")
    # oscillation is shift invariant; centring makes constants exactly zero
    vals = f.values - f.values[0]
    best = 0.0
    for half in ball_half_widths(grid):
        if half == 0:
            continue
        idx, wb = ball_windows(grid, int(half))
        fb = vals[idx]
        mass = wb.sum(axis=1)
        mean = (wb * fb).sum(axis=1) / mass
        osc = (wb * np.abs(fb - mean[:, None])).sum(axis=1) / mass
        best = max(best, float(osc.max()))
    return best
