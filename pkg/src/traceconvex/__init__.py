"""Numerical toolkit for joint convexity and concavity of trace functionals
``Tr(B^{q/2} K* A^p K B^{q/2})^s``, their variational representations,
and the data processing inequality for alpha-z Renyi divergences."""

from .entropies import AlphaZ, Divergence, alpha_z, dpi_region, sandwiched, renyi_alpha, umegaki, d_prime
from .errors import (
    DimensionMismatch,
    InvalidExponent,
    NoConvergence,
    NotHermitian,
    NotPSD,
    NotSelfAdjoint,
    OutOfRegion,
    SingularMatrix,
    SingularOutput,
    TraceConvexError,
)
from .probe import Label, ProbeConfig, probe_point, scan_grid, search_counterexample, theory_label
from .sampling import Rng, random_matrix
from .trace_functions import PsiParams, normalize_params, psi, psi_direct, upsilon
from .variational import ChainPlan, HolderTriple, reduction_plan, verify_reduction

__version__ = "0.1.0"
