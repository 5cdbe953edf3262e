"""Inequality checks over test ensembles and truncation sweeps.

Each check evaluates a hypothesis constant, forms ``LHS / RHS`` for every
ensemble member and reports the worst ratio.  A theorem with an implicit
constant passes when the worst ratio is finite and does not grow as the
truncation ``N`` increases.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .eigensystem import BiorthSystem, conjugate_exponent, model_system, spectral_profile
from .fourier import forward
from .grid import norm
from .operators import EnsembleConfig, build_ensemble, estimate_norm
from .symbols import (
    SampledSymbol,
    SymbolSpec,
    _lambdify,
    hm_norm,
    marcinkiewicz_seminorms,
    paley_weight_constant,
    parse_expression,
    sample,
    weak_quantity,
)

FOURIER_KINDS = ("hausdorff_young", "paley", "hyp")
OPERATOR_KINDS = ("lplq_multiplier", "lplq_pseudo", "hm_lp", "marcinkiewicz_lp", "linf_bmo")
GROWTH_LIMIT = 1.25
# slack on fitted exponents before rounding an order threshold up to an integer
FIT_MARGIN = 0.05
DEFAULT_SWEEP = (32, 64, 128)


@dataclass
class InequalityReport:
    check: str
    system: dict
    parameters: dict
    hypothesis: dict
    max_ratio: float
    witness_id: str
    N_sweep: list = field(default_factory=list)
    growth_factor: float | None = None
    hypothesis_growth: float | None = None
    status: str = "pass"
    members: list = field(default_factory=list, repr=False)
    witness: object = field(default=None, repr=False, compare=False)
    hypothesis_divergent: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("members", "witness", "hypothesis_divergent"):
            d.pop(key)
        return _clean(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_json(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n")
        return path

    def write_members_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["member_id", "lhs", "rhs", "ratio"])
            for mid, lhs, rhs, ratio in self.members:
                wr.writerow([mid, repr(float(lhs)), repr(float(rhs)), repr(float(ratio))])
        return path


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "nan" if v != v else "-inf")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _ratio(lhs: float, rhs: float) -> float:
    if lhs == 0:
        return 0.0
    return lhs / rhs if rhs > 0 else math.inf


def _growth(first: float, last: float) -> float:
    if first == 0 and last == 0:
        return 1.0
    if first == 0:
        return math.inf
    return last / first


def evaluate_phi(sys: BiorthSystem, phi) -> np.ndarray:
    """Paley weight on the index set from an expression (``xi``, ``w``), callable or array."""
    if isinstance(phi, str):
        expr = parse_expression(phi)
        vals = _lambdify(expr)(0.0, sys.abs_eigenvalues, sys.indices.astype(float))
        return np.real(np.asarray(vals)).astype(float)
    if callable(phi):
        return np.asarray(phi(sys.indices, sys.abs_eigenvalues), dtype=float)
    return np.broadcast_to(np.asarray(phi, dtype=float), (sys.size,)).copy()


def _finalise(report: InequalityReport) -> InequalityReport:
    ok = math.isfinite(report.max_ratio)
    if report.hypothesis_divergent:
        report.status = "hypothesis_violated"
    elif not ok:
        report.status = "fail"
    else:
        report.status = "pass"
    return report


def _members_table(members, lhs, rhs):
    return [(m.label, float(a), float(b), _ratio(a, b)) for m, a, b in zip(members, lhs, rhs)]


def _best(table):
    k = max(range(len(table)), key=lambda i: table[i][3])
    return k, table[k][3], table[k][0]


# --- Fourier inequalities --------------------------------------------------

def fourier_sides(kind: str, sys: BiorthSystem, f, params: dict, constants: dict):
    """(LHS, RHS) of one Fourier-type inequality for one function."""
    p = float(params["p"])
    variant = params.get("variant", "L")
    pp = conjugate_exponent(p)
    a = np.abs(forward(sys, f, variant).values)
    wu, wv = (sys.u_sup, sys.v_sup) if variant == "L" else (sys.v_sup, sys.u_sup)
    if kind == "hausdorff_young":
        if np.isinf(pp):
            lhs = float(np.max(a / wu))
        else:
            w = wu if pp <= 2 else wv
            lhs = float(np.sum(a**pp * w ** (2.0 - pp)) ** (1.0 / pp))
        return lhs, norm(f, p)
    phi = constants["phi_values"]
    M = constants["M_phi"]
    if kind == "paley":
        lhs = float(np.sum(a**p * wu ** (2.0 - p) * phi ** (2.0 - p)) ** (1.0 / p))
        return lhs, M ** ((2.0 - p) / p) * norm(f, p)
    b = float(params["b"])
    e = 1.0 / b - 1.0 / pp
    terms = (a * phi**e) ** b * wu ** (1.0 - b / pp) * wv ** (1.0 - b / p)
    lhs = float(np.sum(terms) ** (1.0 / b))
    return lhs, M**e * norm(f, p)


def verify_fourier_inequality(kind: str, sys: BiorthSystem, params: dict,
                              ensemble: EnsembleConfig) -> InequalityReport:
    """Hausdorff-Young, Paley or Hausdorff-Young-Paley check on one system.

    ``params`` holds ``p`` (and ``b`` for ``hyp``), ``phi`` (expression in
    ``xi``/``w``, default ``'1'``) and ``variant`` (``'L'`` or ``'L*'``).
    """
    if kind not in FOURIER_KINDS:
        raise ValueError(f"unknown Fourier check {kind!r}")
    p = float(params["p"])
    variant = params.get("variant", "L")
    pp = conjugate_exponent(p)
    if kind == "hausdorff_young" and not 1 <= p <= 2:
        raise ValueError("Hausdorff-Young needs 1 <= p <= 2")
    if kind == "paley" and not 1 < p <= 2:
        raise ValueError("Paley needs 1 < p <= 2")
    if kind == "hyp":
        b = float(params["b"])
        if not 1 < p <= b <= pp:
            raise ValueError("HYP needs 1 < p <= b <= p'")
    hyp: dict = {}
    constants: dict = {}
    vu = float(np.max(sys.v_sup / sys.u_sup))
    uv = float(np.max(sys.u_sup / sys.v_sup))
    hyp["sup_ratio_vu"], hyp["sup_ratio_uv"] = vu, uv
    divergent = not (math.isfinite(vu) and math.isfinite(uv))
    if kind in ("paley", "hyp"):
        phi = evaluate_phi(sys, params.get("phi", "1"))
        M = paley_weight_constant(sys, phi, variant)
        constants = {"phi_values": phi, "M_phi": M}
        hyp["M_phi"] = M
        e = (2.0 - p) / p if kind == "paley" else 1.0 / float(params["b"]) - 1.0 / pp
        # the power of M_phi that actually enters the bound
        hyp["constant"] = M**e
    members = build_ensemble(sys, ensemble)
    sides = [fourier_sides(kind, sys, m.f, params, constants) for m in members]
    table = _members_table(members, [s[0] for s in sides], [s[1] for s in sides])
    k, best, wid = _best(table)
    rep = InequalityReport(
        check=kind,
        system=sys.descriptor(),
        parameters=_params_record(params),
        hypothesis=hyp,
        max_ratio=best,
        witness_id=wid,
        members=table,
        witness=members[k].f,
        hypothesis_divergent=divergent,
    )
    return _finalise(rep)


def _params_record(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, SymbolSpec):
            out[k] = v.describe()
        elif callable(v):
            out[k] = getattr(v, "__name__", "callable")
        elif isinstance(v, (int, float, str, bool)) or v is None:
            out[k] = v
        else:
            out[k] = str(v)
    return out


# --- operator bounds -------------------------------------------------------

def _collar(sys: BiorthSystem, width: float) -> np.ndarray:
    x = sys.grid.points
    return ((x >= width) & (x <= 1.0 - width)).astype(float)


def _as_sampled(sys, symbol, beta_max):
    if isinstance(symbol, SampledSymbol):
        if symbol.beta_max < beta_max and not symbol.x_independent:
            raise ValueError("missing derivative tables")
        return symbol
    return sample(symbol, sys, beta_max)


def _threshold(sys: BiorthSystem, p, Q_m: float) -> tuple[float, dict]:
    prof = spectral_profile(sys, (p,))
    g = prof.gamma_table[float(p)]["gamma"]
    info = {"Q_fit": prof.Q_fit, "gamma": g}
    return max(0.5, g + prof.Q_fit + Q_m / 2.0), info


def verify_operator_bound(kind: str, sys: BiorthSystem, symbol, params: dict,
                          ensemble: EnsembleConfig) -> InequalityReport:
    """Empirical ``||A||`` against the theorem's hypothesis constant.

    Parameters
    ----------
    kind : str
        ``lplq_multiplier`` and ``lplq_pseudo`` use the weak level-set
        quantity; ``hm_lp`` uses ``hm_norm + sup|m|``; ``marcinkiewicz_lp``
        and ``linf_bmo`` use the sum of Marcinkiewicz seminorms up to the
        smallest admissible integer order (``route='hm'`` switches
        ``linf_bmo`` to the Hormander-Mihlin constant).
    symbol : SymbolSpec or SampledSymbol
        The continuous profile (``SymbolSpec``) is required by the
        ``hm_lp``, ``marcinkiewicz_lp`` and ``linf_bmo`` checks.
    params : dict
        ``p``, ``q``, and optionally ``s``, ``Q_m``, ``collar``, ``route``.
    """
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator check {kind!r}")
    hyp = {
        "sup_ratio_vu": float(np.max(sys.v_sup / sys.u_sup)),
        "sup_ratio_uv": float(np.max(sys.u_sup / sys.v_sup)),
    }
    divergent = not (math.isfinite(hyp["sup_ratio_vu"]) and math.isfinite(hyp["sup_ratio_uv"]))
    if kind in ("lplq_multiplier", "lplq_pseudo"):
        p, q = float(params["p"]), float(params["q"])
        if not (1 < p <= 2 <= q < math.inf):
            raise ValueError("L^p-L^q checks need 1 < p <= 2 <= q < inf")
        b = 1.0 / (1.0 / p - 1.0 / q) if p != q else math.inf
        beta_max = 0 if kind == "lplq_multiplier" else 1
        sym = _as_sampled(sys, symbol, beta_max)
        if kind == "lplq_multiplier" and not sym.x_independent:
            raise ValueError("multiplier check needs an x-independent symbol")
        if kind == "lplq_pseudo" and sys.grid.kind == "interval" and not sym.x_independent:
            width = float(params.get("collar", 1.0 / 16.0))
            cut = _collar(sys, width)[:, None]
            derivs = [d * cut for d in sym.derivatives]
            sym = SampledSymbol(sys, derivs[0], derivs, False, sym.spec, sym.analytic_derivatives)
            hyp["collar"] = width
        K = weak_quantity(sys, sym, b, beta_max) if math.isfinite(b) else float(np.abs(sym.table).max())
        hyp["weak_quantity"] = K
        hyp["constant"] = K
        hyp["b"] = b
    else:
        if not isinstance(symbol, SymbolSpec):
            raise ValueError(f"{kind} needs a SymbolSpec with a continuous profile")
        Q_m = float(params.get("Q_m", 1.0))
        if kind == "linf_bmo":
            p, q = math.inf, "bmo"
        else:
            p = float(params["p"])
            q = p
            if not 1 < p < math.inf:
                raise ValueError("L^p checks need 1 < p < inf")
        thr, info = _threshold(sys, p, Q_m)
        hyp.update(info)
        hyp["order_threshold"] = thr
        sym = sample(symbol, sys, 0)
        sup_m = float(np.abs(sym.table).max())
        route = params.get("route", "hm" if kind == "hm_lp" else "marcinkiewicz")
        if route == "hm":
            s = float(params.get("s", math.floor(thr + FIT_MARGIN) + 1))
            if s <= thr:
                raise ValueError(f"s = {s} is below the threshold {thr:.4f}")
            hm = hm_norm(symbol, s, Q_m)
            hyp["hm_norm"] = hm.value
            hyp["s"] = s
            divergent = divergent or hm.divergent
            K = hm.value + sup_m
        else:
            rho = int(params.get("rho", math.floor(thr + FIT_MARGIN) + 1))
            if rho <= thr:
                raise ValueError(f"rho = {rho} is below the threshold {thr:.4f}")
            omega_max = max(2.0 * float(sys.abs_eigenvalues.max()), 1e3)
            mk = marcinkiewicz_seminorms(symbol, rho, omega_max=omega_max)
            hyp["marcinkiewicz"] = mk.constants
            hyp["rho"] = rho
            divergent = divergent or mk.any_divergent
            K = float(sum(mk.constants))
        hyp["sup_m"] = sup_m
        hyp["constant"] = K
    est = estimate_norm(sys, sym, p, q, ensemble)
    # lhs = ||Af||_q / ||f||_p and rhs = K, so ratios are per unit input norm
    table = [(label, float(r), float(K), _ratio(r, K)) for label, r in zip(est.labels, est.ratios)]
    _, best, wid = _best(table)
    hyp["empirical_norm"] = est.lower_bound
    rep = InequalityReport(
        check=kind,
        system=sys.descriptor(),
        parameters=_params_record({k_: v for k_, v in params.items()}),
        hypothesis=hyp,
        max_ratio=best,
        witness_id=wid,
        members=table,
        witness=est.witness,
        hypothesis_divergent=divergent,
    )
    return _finalise(rep)


# --- sweeps ----------------------------------------------------------------

@dataclass
class CheckSpec:
    """A reproducible check: model, check kind, parameters, symbol and ensemble.

    The grid for truncation ``N`` has ``4N + 4`` points.
    """

    check: str
    model: str = "torus_laplacian"
    h: float = 2.0
    params: dict = field(default_factory=dict)
    symbol: SymbolSpec | None = None
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    grid_factor: int = 4

    def system(self, N: int) -> BiorthSystem:
        return model_system(self.model, N, self.grid_factor * N + 4, self.h)

    def run(self, N: int) -> InequalityReport:
        sys = self.system(N)
        if self.check in FOURIER_KINDS:
            return verify_fourier_inequality(self.check, sys, self.params, self.ensemble)
        if self.symbol is None:
            raise ValueError(f"{self.check} needs a symbol")
        return verify_operator_bound(self.check, sys, self.symbol, self.params, self.ensemble)


def _hypothesis_scalar(rep: InequalityReport) -> float | None:
    for key in ("constant", "weak_quantity"):
        if key in rep.hypothesis:
            return float(rep.hypothesis[key])
    return None


def stability_sweep(spec: CheckSpec, N_list=DEFAULT_SWEEP) -> InequalityReport:
    """Run a check at each ``N`` with the same seed and measure growth.

    The returned report is the largest-``N`` report with ``N_sweep``,
    ``growth_factor`` (last over first max ratio) and ``hypothesis_growth``
    (same for the hypothesis constant) filled in.  Growth of either beyond
    1.25 fails the check; growth of the hypothesis constant marks it as
    ``hypothesis_violated``.
    """
    N_list = [int(n) for n in N_list]
    if len(N_list) < 2:
        raise ValueError("a sweep needs at least two truncations")
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be increasing")
    reports = [spec.run(N) for N in N_list]
    final = reports[-1]
    final.N_sweep = [[N, r.max_ratio] for N, r in zip(N_list, reports)]
    final.growth_factor = _growth(reports[0].max_ratio, final.max_ratio)
    h0, h1 = _hypothesis_scalar(reports[0]), _hypothesis_scalar(final)
    final.hypothesis_growth = _growth(h0, h1) if h0 is not None else None
    final.hypothesis["sweep"] = [[N, _hypothesis_scalar(r)] for N, r in zip(N_list, reports)]
    diverged = any(r.hypothesis_divergent for r in reports)
    if final.hypothesis_growth is not None and final.hypothesis_growth > GROWTH_LIMIT:
        diverged = True
    final.hypothesis_divergent = diverged
    finite = all(math.isfinite(r.max_ratio) for r in reports)
    if diverged:
        final.status = "hypothesis_violated"
    elif not finite or final.growth_factor > GROWTH_LIMIT:
        final.status = "fail"
    else:
        final.status = "pass"
    return final
