"""Pseudospectral laboratory for wave breaking and norm inflation in the
Camassa-Holm family (b-family and Novikov equations)."""

from chlab.spectral_core import (
    DomainSpec,
    SpectralField,
    analyze,
    synthesize,
    derivative,
    helmholtz_inverse,
    green_convolve,
    dealias,
    eval_at,
)
from chlab.littlewood_paley import (
    BumpProfile,
    NormSpec,
    make_bump,
    project,
    project_low,
    lp_norm,
    besov_norm,
    sobolev_norm,
    log_interp_sides,
)
from chlab.initial_data import SeedSpec, build_h, build_ch_seed, build_novikov_seed, slope_at_zero
from chlab.evolution import ModelSpec, SolverConfig, integrate, energy
from chlab.inflation_lab import ExperimentConfig, run_blowup_bound, run_norm_inflation

__version__ = "0.1.0"

__all__ = [
    "DomainSpec",
    "SpectralField",
    "analyze",
    "synthesize",
    "derivative",
    "helmholtz_inverse",
    "green_convolve",
    "dealias",
    "eval_at",
    "BumpProfile",
    "NormSpec",
    "make_bump",
    "project",
    "project_low",
    "lp_norm",
    "besov_norm",
    "sobolev_norm",
    "log_interp_sides",
    "SeedSpec",
    "build_h",
    "build_ch_seed",
    "build_novikov_seed",
    "slope_at_zero",
    "ModelSpec",
    "SolverConfig",
    "integrate",
    "energy",
    "ExperimentConfig",
    "run_blowup_bound",
    "run_norm_inflation",
]
