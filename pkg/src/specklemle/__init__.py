"""Maximum-likelihood despeckling for multi-look digital holography.

Matrix-free reconstruction of a real nonnegative reflectivity image from
multi-look coherent measurements under a finite aperture: the likelihood
gradient is assembled from conjugate-gradient solves plus Monte-Carlo
diagonal estimation, with plug-in projection priors, a consensus-EM
baseline, a spectrum-cropping baseline and a speckle-free reference mode.
"""

from ._kernels import default_backend
from .cpnp import CpnpConfig, cpnp_em, e_step, m_step_prox
from .errors import (CGBreakdownError, DimensionMismatchError, DivergenceError,
                     EstimatorError, ExternalDenoiserError, FormatError,
                     GeometryError, PriorError, SizeLimitError, SpeckleError)
from .fields import (ApertureMask, annular_inner_ratio_for_transparency,
                     aperture_from_ratio, dft2, idft2, make_aperture)
from .krylov import CGConfig, CGReport, cg_solve
from .likelihood import (GradientEstimate, ProbeBatch, estimate_diag,
                         grad_exact, grad_mc, nll_exact)
from .metrics import psnr, ssim, to_image, to_reflectivity
from .operators import (CovarianceOperator, DenseOracle, HolographicOperator,
                        build_dense_oracle)
from .phantoms import shapes_phantom
from .priors import (PriorOp, apply_prior, clamp_prior, external_prior,
                     median_prior, parse_prior, tv_prior)
from .reconstruct import (CropConfig, PgdConfig, ReconResult, crop_reconstruct,
                          initialize, pgd_mc, specklefree_reconstruct)
from .simulate import (MeasurementSet, RngStream, sample_speckle_field,
                       simulate_amplitude_measurement, simulate_measurements)

__version__ = "0.1.0"

__all__ = [
    "ApertureMask", "CGBreakdownError", "CGConfig", "CGReport", "CovarianceOperator",
    "CpnpConfig", "CropConfig", "DenseOracle", "DimensionMismatchError",
    "DivergenceError", "EstimatorError", "ExternalDenoiserError", "FormatError",
    "GeometryError", "GradientEstimate", "HolographicOperator", "MeasurementSet",
    "PgdConfig", "PriorError", "PriorOp", "ProbeBatch", "ReconResult", "RngStream",
    "SizeLimitError", "SpeckleError", "annular_inner_ratio_for_transparency",
    "aperture_from_ratio", "apply_prior", "build_dense_oracle", "cg_solve",
    "clamp_prior", "cpnp_em", "crop_reconstruct", "default_backend", "dft2",
    "e_step", "estimate_diag", "external_prior", "grad_exact", "grad_mc", "idft2",
    "initialize", "m_step_prox", "make_aperture", "median_prior", "nll_exact",
    "parse_prior", "pgd_mc", "psnr", "sample_speckle_field", "shapes_phantom",
    "simulate_amplitude_measurement", "simulate_measurements",
    "specklefree_reconstruct", "ssim", "to_image", "to_reflectivity", "tv_prior",
]
