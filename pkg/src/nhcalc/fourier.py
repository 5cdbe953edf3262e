"""L- and L*-Fourier transforms, the l2_L pairing and sequence/Sobolev norms."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .eigensystem import BiorthSystem
from .grid import GridFunction

VARIANTS = ("L", "L*")


@dataclass(eq=False)
class CoefficientVector:
    system: BiorthSystem
    values: np.ndarray = field(repr=False)
    variant: str = "L"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.system.size,):
            raise ValueError("coefficient length must equal the index count")

    def __add__(self, other: "CoefficientVector"):
        _same(self, other)
        return CoefficientVector(self.system, self.values + other.values, self.variant)

    def __mul__(self, c):
        return CoefficientVector(self.system, self.values * c, self.variant)

    __rmul__ = __mul__

    @classmethod
    def delta(cls, system: BiorthSystem, xi: int, variant: str = "L"):
        a = np.zeros(system.size, dtype=complex)
        a[system.position(xi)] = 1.0
        return cls(system, a, variant)


def _same(a: CoefficientVector, b: CoefficientVector):
    if a.system is not b.system:
        raise ValueError("coefficient vectors belong to different systems")
    if a.variant != b.variant:
        raise ValueError("variant mismatch")


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")


def forward(sys: BiorthSystem, f: GridFunction, variant: str = "L") -> CoefficientVector:
    """``a(xi) = sum_i w_i f_i conj(v_xi(x_i))`` (L) or ``conj(u_xi)`` (L*)."""
    _check_variant(variant)
    if not sys.grid.same_as(f.grid):
        raise ValueError("grid mismatch")
    B = sys.V if variant == "L" else sys.U
    return CoefficientVector(sys, B.conj() @ (sys.grid.weights * f.values), variant)


def inverse(sys: BiorthSystem, a: CoefficientVector) -> GridFunction:
    """``sum a(xi) u_xi`` (L) or ``sum a(xi) v_xi`` (L*)."""
    if a.system is not sys:
        raise ValueError("coefficient vector does not belong to this system")
    B = sys.U if a.variant == "L" else sys.V
    return GridFunction(sys.grid, a.values @ B)


def l2L_inner(sys: BiorthSystem, a: CoefficientVector, b: CoefficientVector) -> complex:
    """``sum a(xi) conj((F_{L*} F_L^{-1} b)(xi))``, evaluated literally."""
    if a.variant != "L" or b.variant != "L":
        raise ValueError("l2_L pairing takes L-coefficients")
    _same(a, b)
    bstar = forward(sys, inverse(sys, b), "L*")
    return complex(np.sum(a.values * np.conj(bstar.values)))


def _weights(sys: BiorthSystem, p: float, variant: str) -> np.ndarray:
    # u-weights for p <= 2 in the L norm, v-weights for p >= 2; swapped for L*
    low, high = (sys.u_sup, sys.v_sup) if variant == "L" else (sys.v_sup, sys.u_sup)
    return low if p <= 2 else high


def sequence_norm(sys: BiorthSystem, a, p: float, variant: str = "L") -> float:
    """Weighted ``l^p(L)`` / ``l^p(L*)`` norm of a coefficient sequence.

    ``(sum |a|^p w^(2-p))^(1/p)`` with ``w = ||u_xi||_inf`` for ``p <= 2`` and
    ``w = ||v_xi||_inf`` for ``p >= 2`` (roles swapped for L*);
    ``sup |a| / w`` for ``p = inf``.
    """
    _check_variant(variant)
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    vals = a.values if isinstance(a, CoefficientVector) else np.asarray(a, dtype=complex)
    mod = np.abs(vals)
    w = _weights(sys, p, variant)
    if np.isinf(p):
        return float(np.max(mod / w))
    if p == 2:
        return float(np.sqrt(np.sum(mod**2)))
    terms = mod**p * w ** (2.0 - p)
    return float(np.sum(terms) ** (1.0 / p))


def sobolev_norm(sys: BiorthSystem, f: GridFunction, s: float, tol: float = 1e-10) -> float:
    """``(sum <xi>^{2s} fhat(xi) conj(fhat_*(xi)))^(1/2)``.

    Raises if the real part of the sum is negative beyond ``tol`` (relative
    to the sum of moduli), which signals broken biorthogonality.
    """
    a = forward(sys, f, "L").values
    b = forward(sys, f, "L*").values
    terms = sys.bracket() ** (2 * s) * a * np.conj(b)
    total = np.sum(terms)
    scale = float(np.sum(np.abs(terms)))
    if total.real < -tol * max(scale, 1e-300):
        raise ValueError(f"Sobolev sum has negative real part {total.real:.3e}")
    return float(np.sqrt(max(total.real, 0.0)))


def band_limited(sys: BiorthSystem, rng: np.random.Generator, band: int | None = None,
                 variant: str = "L") -> GridFunction:
    """Random complex-Gaussian combination of modes with ``|index| <= band``."""
    band = band if band is not None else max(1, int(np.abs(sys.indices).max()) // 2)
    mask = np.abs(sys.indices) <= band
    a = np.zeros(sys.size, dtype=complex)
    k = int(mask.sum())
    a[mask] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return inverse(sys, CoefficientVector(sys, a, variant))


def export_coefficients_csv(a: CoefficientVector, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["xi_index", "re", "im"])
        for xi, z in zip(a.system.indices, a.values):
            wr.writerow([int(xi), repr(float(z.real)), repr(float(z.imag))])
    return path


def load_coefficients_csv(sys: BiorthSystem, path, variant: str = "L") -> CoefficientVector:
    vals = np.zeros(sys.size, dtype=complex)
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            vals[sys.position(int(row["xi_index"]))] = float(row["re"]) + 1j * float(row["im"])
    return CoefficientVector(sys, vals, variant)
