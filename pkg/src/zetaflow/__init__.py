"""zetaflow: zeta-regularized spectral invariants and tracial anomalies on
model operators, validated by dual computation paths (eigenvalue-sum analytic
continuation against symbol-calculus residues)."""

__version__ = "0.1.0"

from .germs import ContinuationError, LaurentSeries, MeromorphicGerm
from .reports import AnomalyReport, DetValue
from .spectra import (GradedSpectrum, Ray, SpectralCut, SpectralModelError,
                      Spectrum, asymmetric_weight, circle_dirac, drop_kernel,
                      eig_count_in, graded, kernel_adjust, lambda_weight,
                      pointwise_product, skew_double, torus_laplacian_shifted,
                      transform)

__all__ = [
    "__version__",
    "AnomalyReport", "ContinuationError", "DetValue", "GradedSpectrum",
    "LaurentSeries", "MeromorphicGerm", "Ray", "SpectralCut",
    "SpectralModelError", "Spectrum",
    "asymmetric_weight", "circle_dirac", "drop_kernel", "eig_count_in",
    "graded", "kernel_adjust", "lambda_weight", "pointwise_product",
    "skew_double", "torus_laplacian_shifted", "transform",
]
