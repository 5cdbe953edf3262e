"""Quantisation of sampled symbols and empirical operator-norm lower bounds."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .eigensystem import BiorthSystem
from .fourier import CoefficientVector, forward, inverse
from .grid import GridFunction, bmo_norm, norm
from .symbols import SampledSymbol

FAMILIES = ("band_limited_gaussian", "single_mode", "bump", "power_iterates")


def apply(sys: BiorthSystem, symbol: SampledSymbol, f: GridFunction,
          variant: str = "L") -> GridFunction:
    """``Af(x) = sum_xi u_xi(x) m(x, xi) fhat(xi)``.

    With ``variant='L*'`` the roles of ``u`` and ``v`` swap, which is how
    adjoint multipliers act.
    """
    if symbol.system is not sys:
        raise ValueError("symbol sampled on a different system")
    if not sys.grid.same_as(f.grid):
        raise ValueError("function lives on a different grid")
    a = forward(sys, f, variant).values
    B = sys.U if variant == "L" else sys.V
    if symbol.x_independent:
        return GridFunction(sys.grid, (symbol.sigma * a) @ B)
    return GridFunction(sys.grid, np.einsum("ik,ki,k->i", symbol.table, B, a))


def adjoint_multiplier(symbol: SampledSymbol) -> SampledSymbol:
    """Symbol ``conj(sigma)`` of ``A*``; apply it with ``variant='L*'``."""
    if not symbol.x_independent:
        raise ValueError("adjoint rule needs an x-independent symbol")
    derivs = [np.conj(d) for d in symbol.derivatives]
    return SampledSymbol(symbol.system, np.conj(symbol.table), derivs, True, None,
                         symbol.analytic_derivatives)


@dataclass
class EnsembleConfig:
    """Test-function ensemble.  Deterministic given ``seed``."""

    count: int = 64
    seed: int = 0
    families: tuple = ("band_limited_gaussian", "single_mode", "bump")
    band_limit: int | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("empty ensemble")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ValueError(f"unknown ensemble family {fam!r}")
        self.families = tuple(self.families)


@dataclass
class Member:
    label: str
    f: GridFunction = field(repr=False)


def _band(sys: BiorthSystem, cfg: EnsembleConfig) -> int:
    top = int(np.abs(sys.indices).max())
    return cfg.band_limit if cfg.band_limit is not None else max(1, top // 2)


def build_ensemble(sys: BiorthSystem, cfg: EnsembleConfig) -> list[Member]:
    """``cfg.count`` members cycled over the non-iterative families."""
    rng = np.random.default_rng(cfg.seed)
    band = _band(sys, cfg)
    mask = np.abs(sys.indices) <= band
    modes = sys.indices[mask]
    fams = [f for f in cfg.families if f != "power_iterates"] or ["band_limited_gaussian"]
    x = sys.grid.points
    out = []
    for k in range(cfg.count):
        fam = fams[k % len(fams)]
        if fam == "band_limited_gaussian":
            a = np.zeros(sys.size, dtype=complex)
            m = int(mask.sum())
            a[mask] = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            f = inverse(sys, CoefficientVector(sys, a))
            label = f"gaussian[{k}]"
        elif fam == "single_mode":
            xi = int(modes[(k // len(fams)) % len(modes)])
            f = sys.u(xi)
            label = f"mode[{xi}]"
        else:
            # smooth localised bump, projected onto the band
            c = rng.uniform(0, 1)
            width = rng.uniform(0.03, 0.25)
            d = np.abs(x - c)
            if sys.grid.kind == "torus":
                d = np.minimum(d, 1 - d)
            raw = GridFunction(sys.grid, np.exp(-0.5 * (d / width) ** 2))
            a = forward(sys, raw).values * mask
            f = inverse(sys, CoefficientVector(sys, a))
            label = f"bump[{k}]"
        out.append(Member(label, f))
    return out


def _target_norm(f: GridFunction, q) -> float:
    return bmo_norm(f) if q == "bmo" else norm(f, q)


@dataclass
class NormEstimate:
    lower_bound: float
    witness: GridFunction | None = field(repr=False)
    witness_label: str
    ratios: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    def export_witness_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "re", "im"])
            for xv, z in zip(self.witness.grid.points, self.witness.values):
                wr.writerow([repr(float(xv)), repr(float(z.real)), repr(float(z.imag))])
        return path


def power_iteration(sys: BiorthSystem, symbol: SampledSymbol, iters: int = 200,
                    seed: int = 0, tol: float = 1e-13) -> tuple[float, GridFunction]:
    """Largest singular value of the truncated operator in the grid L^2 pairing."""
    adj = adjoint_multiplier(symbol) if symbol.x_independent else None
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(sys.size) + 1j * rng.standard_normal(sys.size)
    f = inverse(sys, CoefficientVector(sys, a))
    f = f * (1.0 / norm(f, 2))
    est = 0.0
    for _ in range(iters):
        g = apply(sys, symbol, f)
        est_new = norm(g, 2)
        if est_new == 0:
            return 0.0, f
        h = apply(sys, adj, g, "L*")
        nh = norm(h, 2)
        if nh == 0:
            break
        f = h * (1.0 / nh)
        if abs(est_new - est) <= tol * est_new:
            est = est_new
            break
        est = est_new
    return float(norm(apply(sys, symbol, f), 2)), f


def estimate_norm(sys: BiorthSystem, symbol: SampledSymbol, p, q,
                  ensemble: EnsembleConfig | list) -> NormEstimate:
    """Max over the ensemble of ``||Af||_q / ||f||_p`` (``q`` may be ``'bmo'``).

    At ``p = q = 2`` with a multiplier symbol the power-iteration maximiser
    of ``A*A`` joins the ensemble.
    """
    members = build_ensemble(sys, ensemble) if isinstance(ensemble, EnsembleConfig) else list(ensemble)
    if not members:
        raise ValueError("empty ensemble")
    if p == 2 and q == 2 and symbol.x_independent:
        seed = ensemble.seed if isinstance(ensemble, EnsembleConfig) else 0
        _, f = power_iteration(sys, symbol, seed=seed)
        members.append(Member("power_iterate", f))
    ratios, labels = [], []
    best, witness, wlabel = -1.0, None, ""
    for m in members:
        den = norm(m.f, p)
        if den == 0:
            continue
        r = _target_norm(apply(sys, symbol, m.f), q) / den
        ratios.append(r)
        labels.append(m.label)
        if r > best:
            best, witness, wlabel = r, m.f, m.label
    if witness is None:
        raise ValueError("ensemble has only zero functions")
    return NormEstimate(best, witness, wlabel, ratios, labels)
