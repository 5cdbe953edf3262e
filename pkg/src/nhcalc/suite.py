"""The standard battery of inequality checks, run as truncation sweeps."""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .operators import EnsembleConfig
from .symbols import SymbolSpec
from .verify import DEFAULT_SWEEP, CheckSpec, InequalityReport, stability_sweep

PHI = "1/(1+abs(xi))"


@dataclass(frozen=True)
class SuiteEntry:
    name: str
    spec: CheckSpec
    N_list: tuple = DEFAULT_SWEEP


def default_suite(seed: int = 0, count: int = 64) -> list[SuiteEntry]:
    """Fourier inequalities on two models plus the operator theorems."""
    ens = EnsembleConfig(count=count, seed=seed)
    small = EnsembleConfig(count=max(4, count // 8), seed=seed)
    sigma = SymbolSpec("multiplier", "1/(1+w)")
    lplq = {"p": 4 / 3, "q": 4}
    out = []
    for model in ("torus_laplacian", "derivative_h"):
        tag = "torus" if model == "torus_laplacian" else "derivative_h"
        out += [
            SuiteEntry(f"hausdorff_young_{tag}", CheckSpec("hausdorff_young", model, params={"p": 1.5}, ensemble=ens)),
            SuiteEntry(f"paley_{tag}", CheckSpec("paley", model, params={"p": 1.5, "phi": PHI}, ensemble=ens)),
            SuiteEntry(f"hyp_{tag}", CheckSpec("hyp", model, params={"p": 1.5, "b": 1.8, "phi": PHI}, ensemble=ens)),
            SuiteEntry(f"lplq_multiplier_{tag}", CheckSpec("lplq_multiplier", model, params=lplq,
                                                           symbol=sigma, ensemble=ens)),
            SuiteEntry(f"lplq_pseudo_{tag}", CheckSpec(
                "lplq_pseudo", model, params=lplq,
                symbol=SymbolSpec("pseudo_multiplier", "(1+sin(2*pi*x)^2)/(1+w)"), ensemble=ens)),
        ]
    out += [
        SuiteEntry("marcinkiewicz_lp_torus", CheckSpec(
            "marcinkiewicz_lp", params={"p": 1.5},
            symbol=SymbolSpec("pseudo_multiplier", "1/(1+w)"), ensemble=ens)),
        SuiteEntry("hm_lp_torus", CheckSpec(
            "hm_lp", params={"p": 1.5},
            symbol=SymbolSpec("pseudo_multiplier", "(1+w^2)^(-2)"), ensemble=ens)),
        SuiteEntry("linf_bmo_torus", CheckSpec(
            "linf_bmo", symbol=SymbolSpec("pseudo_multiplier", "1/(1+w)"), ensemble=small)),
    ]
    return out


def run_suite(entries: list[SuiteEntry], out_dir=None) -> dict[str, InequalityReport]:
    """Run every sweep; optionally write ``<name>.json`` per entry."""
    reports = {}
    for e in entries:
        rep = stability_sweep(e.spec, e.N_list)
        reports[e.name] = rep
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            rep.write_json(Path(out_dir) / f"{e.name}.json")
    return reports


def with_sweep(entries: list[SuiteEntry], N_list) -> list[SuiteEntry]:
    return [replace(e, N_list=tuple(N_list)) for e in entries]
