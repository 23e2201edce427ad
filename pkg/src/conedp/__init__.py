"""Differentially private mechanisms and solvers over symmetric cones."""

from conedp.eja import (
    AlgebraDescriptor,
    AlgebraMismatchError,
    EjaElement,
    RealVector,
    SpectralDecomposition,
    SpinFactor,
    SymMatrix,
    expm,
    from_coords,
    identity,
    in_cone,
    inner,
    jordan_product,
    min_eigenvalue,
    norm,
    spectral_decompose,
    to_coords,
    trace,
    zero,
)
from conedp.mechanisms import (
    PrivacyBudget,
    RandomSource,
    Sensitivity,
    advanced_composition,
    chi_square_tail_thresholds,
    exponential_mechanism,
    exponential_mechanism_error_bound,
    gaussian_mechanism,
    gaussian_sigma,
)

__all__ = [
    "AlgebraDescriptor",
    "AlgebraMismatchError",
    "EjaElement",
    "RealVector",
    "SpectralDecomposition",
    "SpinFactor",
    "SymMatrix",
    "expm",
    "from_coords",
    "identity",
    "in_cone",
    "inner",
    "jordan_product",
    "min_eigenvalue",
    "norm",
    "spectral_decompose",
    "to_coords",
    "trace",
    "zero",
    "PrivacyBudget",
    "RandomSource",
    "Sensitivity",
    "advanced_composition",
    "chi_square_tail_thresholds",
    "exponential_mechanism",
    "exponential_mechanism_error_bound",
    "gaussian_mechanism",
    "gaussian_sigma",
]

__version__ = "0.1.0"
