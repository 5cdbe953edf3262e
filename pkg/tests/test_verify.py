import json
import math

import numpy as np
import pytest

from nhcalc.eigensystem import conjugate_exponent, model_system
from nhcalc.operators import EnsembleConfig
from nhcalc.symbols import SymbolSpec, paley_weight_constant
from nhcalc.verify import (CheckSpec, InequalityReport, evaluate_phi, fourier_sides,
                           stability_sweep, verify_fourier_inequality, verify_operator_bound)

ENS = EnsembleConfig(count=24, seed=7)
SIGMA = SymbolSpec("multiplier", "1/(1+w)")


def test_hausdorff_young_torus_constant_one():
    rep = verify_fourier_inequality("hausdorff_young", model_system("torus_laplacian", 16),
                                    {"p": 1.5}, EnsembleConfig(count=60, seed=1))
    assert rep.status == "pass"
    assert rep.max_ratio <= 1 + 1e-6
    # a single mode is an extremiser
    assert rep.max_ratio == pytest.approx(1.0, abs=1e-12)


def test_hausdorff_young_p2_torus_is_plancherel(torus16):
    rep = verify_fourier_inequality("hausdorff_young", torus16, {"p": 2}, ENS)
    np.testing.assert_allclose([r for *_, r in rep.members], 1.0, atol=1e-12)


def test_hyp_endpoint_equals_hausdorff_young(deriv16):
    p = 1.5
    hy = verify_fourier_inequality("hausdorff_young", deriv16, {"p": p}, ENS)
    hyp = verify_fourier_inequality("hyp", deriv16, {"p": p, "b": conjugate_exponent(p), "phi": "1"}, ENS)
    assert abs(hy.max_ratio - hyp.max_ratio) <= 1e-10
    for a, b in zip(hy.members, hyp.members):
        assert a[0] == b[0] and abs(a[3] - b[3]) <= 1e-10


def test_paley_constant_recorded(torus16):
    rep = verify_fourier_inequality("paley", torus16, {"p": 1.5, "phi": "1/(1+abs(xi))"}, ENS)
    phi = 1 / (1 + np.abs(torus16.indices))
    assert rep.hypothesis["M_phi"] == paley_weight_constant(torus16, phi)
    assert rep.hypothesis["constant"] == pytest.approx(rep.hypothesis["M_phi"] ** (1 / 3))
    assert rep.status == "pass"


def test_fourier_parameter_ranges(torus16):
    with pytest.raises(ValueError):
        verify_fourier_inequality("hausdorff_young", torus16, {"p": 3}, ENS)
    with pytest.raises(ValueError):
        verify_fourier_inequality("hyp", torus16, {"p": 1.5, "b": 4}, ENS)
    with pytest.raises(ValueError):
        verify_fourier_inequality("riesz", torus16, {"p": 1.5}, ENS)


def test_evaluate_phi_forms(torus16):
    a = evaluate_phi(torus16, "1/(1+abs(xi))")
    b = evaluate_phi(torus16, lambda xi, w: 1 / (1 + np.abs(xi)))
    np.testing.assert_array_equal(a, b)
    assert np.all(evaluate_phi(torus16, 2.0) == 2.0)


def test_l_star_variant(deriv16):
    rep = verify_fourier_inequality("paley", deriv16, {"p": 1.5, "phi": "1/(1+abs(xi))", "variant": "L*"}, ENS)
    assert rep.status == "pass"


def test_zero_symbol_ratio_zero(torus16):
    rep = verify_operator_bound("lplq_multiplier", torus16, SymbolSpec("multiplier", "0"),
                                {"p": 4 / 3, "q": 4}, ENS)
    assert rep.max_ratio == 0 and rep.hypothesis["empirical_norm"] == 0


def test_pseudo_reduces_to_multiplier(deriv16):
    params = {"p": 4 / 3, "q": 4}
    m = verify_operator_bound("lplq_multiplier", deriv16, SIGMA, params, ENS)
    ps = verify_operator_bound("lplq_pseudo", deriv16, SymbolSpec("pseudo_multiplier", "1/(1+w)"),
                               params, ENS)
    assert abs(m.max_ratio - ps.max_ratio) <= 1e-10
    assert m.hypothesis["weak_quantity"] == ps.hypothesis["weak_quantity"]


def test_operator_parameter_checks(torus16):
    with pytest.raises(ValueError):
        verify_operator_bound("lplq_multiplier", torus16, SIGMA, {"p": 3, "q": 4}, ENS)
    with pytest.raises(ValueError):
        verify_operator_bound("lplq_multiplier", torus16,
                              SymbolSpec("pseudo_multiplier", "sin(2*pi*x)"), {"p": 1.5, "q": 3}, ENS)
    with pytest.raises(ValueError):
        verify_operator_bound("hm_lp", torus16, SIGMA, {"p": 2, "s": 0.6}, ENS)


def test_report_json_schema(torus16, tmp_path):
    rep = verify_fourier_inequality("hausdorff_young", torus16, {"p": 1.5}, ENS)
    d = json.loads(rep.to_json())
    assert set(d) == {"check", "system", "parameters", "hypothesis", "max_ratio", "witness_id",
                      "N_sweep", "growth_factor", "hypothesis_growth", "status"}
    rep.write_members_csv(tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "member_id,lhs,rhs,ratio" and len(lines) == ENS.count + 1


def test_infinite_values_serialise():
    rep = InequalityReport("x", {}, {}, {"a": math.inf}, math.inf, "w")
    assert json.loads(rep.to_json())["max_ratio"] == "inf"


def test_sweep_hausdorff_young_torus():
    rep = stability_sweep(CheckSpec("hausdorff_young", params={"p": 1.5}, ensemble=ENS), (16, 32, 64))
    assert rep.status == "pass" and rep.growth_factor <= 1.05
    assert [n for n, _ in rep.N_sweep] == [16, 32, 64]


def test_sweep_needs_two_truncations():
    with pytest.raises(ValueError):
        stability_sweep(CheckSpec("hausdorff_young", params={"p": 1.5}), (16,))
    with pytest.raises(ValueError):
        stability_sweep(CheckSpec("hausdorff_young", params={"p": 1.5}), (32, 16))


def test_sweep_negative_control():
    spec = CheckSpec("lplq_multiplier", params={"p": 4 / 3, "q": 4},
                     symbol=SymbolSpec("multiplier", "1"), ensemble=ENS)
    rep = stability_sweep(spec, (8, 32))
    assert rep.status == "hypothesis_violated"
    assert rep.hypothesis_growth > 1.5


def test_sweep_deterministic():
    spec = CheckSpec("paley", model="derivative_h", params={"p": 1.5, "phi": "1/(1+abs(xi))"}, ensemble=ENS)
    assert stability_sweep(spec, (8, 16)).to_json() == stability_sweep(spec, (8, 16)).to_json()


def test_fourier_sides_single_mode(torus16):
    lhs, rhs = fourier_sides("hausdorff_young", torus16, torus16.u(2), {"p": 1.5}, {})
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0)


def test_marcinkiewicz_route_small(torus16):
    rep = verify_operator_bound("marcinkiewicz_lp", torus16, SymbolSpec("pseudo_multiplier", "1/(1+w)"),
                                {"p": 1.5}, EnsembleConfig(count=8, seed=1))
    assert rep.status == "pass"
    assert rep.hypothesis["rho"] >= 1


def test_divergent_symbol_flagged(torus16):
    rep = verify_operator_bound("marcinkiewicz_lp", torus16, SymbolSpec("pseudo_multiplier", "w"),
                                {"p": 1.5}, EnsembleConfig(count=4))
    assert rep.status == "hypothesis_violated"
