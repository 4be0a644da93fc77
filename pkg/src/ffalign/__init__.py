"""Interference alignment over finite fields.

Arithmetic in GF(p^n), exact linear algebra over F_p, precoder synthesis and
verification for the two-user X channel and the three-user interference
channel, and exhaustive or sampled censuses of channel classes.
"""
from ._kernels import BACKEND
from .census import CensusReport, CensusSpec, eigen_fraction, run_census
from .fplinalg import MatFp, rep_matrix
from .gf import FieldCtx, Gfe, make_ctx, minimal_poly
from .ic3 import IC3Channel, ICScheme, classify_ic, construct_ic, simulate_ic, verify_ic
from .xch import XChannel, XScheme, classify, construct, simulate_x, verify_x

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CensusReport",
    "CensusSpec",
    "FieldCtx",
    "Gfe",
    "IC3Channel",
    "ICScheme",
    "MatFp",
    "XChannel",
    "XScheme",
    "classify",
    "classify_ic",
    "construct",
    "construct_ic",
    "eigen_fraction",
    "make_ctx",
    "minimal_poly",
    "rep_matrix",
    "run_census",
    "simulate_ic",
    "simulate_x",
    "verify_ic",
    "verify_x",
]
