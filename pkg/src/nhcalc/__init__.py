"""Numerical nonharmonic analysis on one-dimensional model manifolds."""
from .eigensystem import BiorthSystem, build_analytic, build_numeric, model_system, spectral_profile
from .fourier import CoefficientVector, forward, inverse, l2L_inner, sequence_norm, sobolev_norm
from .grid import Grid, GridFunction, bmo_norm, build_grid, geodesic_distance, norm
from .operators import EnsembleConfig, adjoint_multiplier, apply, estimate_norm
from .symbols import SampledSymbol, SymbolSpec, dyadic_family, hm_norm, sample
from .suite import default_suite, run_suite
from .verify import CheckSpec, InequalityReport, stability_sweep

__all__ = [
    "BiorthSystem", "build_analytic", "build_numeric", "model_system", "spectral_profile",
    "CoefficientVector", "forward", "inverse", "l2L_inner", "sequence_norm", "sobolev_norm",
    "Grid", "GridFunction", "bmo_norm", "build_grid", "geodesic_distance", "norm",
    "EnsembleConfig", "adjoint_multiplier", "apply", "estimate_norm",
    "SampledSymbol", "SymbolSpec", "dyadic_family", "hm_norm", "sample",
    "CheckSpec", "InequalityReport", "stability_sweep", "default_suite", "run_suite",
]
__version__ = "0.1.0"
