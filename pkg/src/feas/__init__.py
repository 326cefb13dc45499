"""Pseudo-spectral simulator and diagnostics for the unidirectional fractional alignment system."""
from .model import (
    DensityModes,
    Entropy,
    NullEntropy,
    Snapshot,
    State,
    TrigPolynomial,
    alignment_term,
    entropy_of,
    make_initial_data,
    rhs,
)
from .spectral import Field, Grid, frac_laplacian, partial_x1, periodized_kernel
from .timestepper import SchemeSpec, Trajectory, integrate, step

__version__ = "0.1.0"

__all__ = [
    "DensityModes", "Entropy", "Field", "Grid", "NullEntropy", "SchemeSpec", "Snapshot", "State",
    "Trajectory", "TrigPolynomial", "alignment_term", "entropy_of", "frac_laplacian",
    "integrate", "make_initial_data", "partial_x1", "periodized_kernel", "rhs", "step",
]
