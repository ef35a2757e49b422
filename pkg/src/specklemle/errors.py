"""Exception hierarchy. The CLI maps each class to a machine-parsable category."""


class SpeckleError(Exception):
    """Base class for all library errors."""

    category = "error"


class DimensionMismatchError(SpeckleError):
    category = "dimension-mismatch"


class GeometryError(SpeckleError):
    """Invalid aperture geometry (negative radii, inner >= outer, ...)."""

    category = "geometry"


class SizeLimitError(SpeckleError):
    """Dense-oracle path requested beyond its size cap."""

    category = "size-limit"


class CGBreakdownError(SpeckleError):
    """p^H Sigma p <= 0 inside CG: operator is not positive definite."""

    category = "cg-breakdown"


class EstimatorError(SpeckleError):
    """Monte-Carlo diagonal estimate failed a sanity bound."""

    category = "estimator"


class DivergenceError(SpeckleError):
    """Iterates exceeded the divergence guard (bad step size)."""

    category = "divergence"


class PriorError(SpeckleError):
    category = "prior"


class ExternalDenoiserError(PriorError):
    """External denoiser command failed; never silently ignored."""

    category = "external-denoiser"


class FormatError(SpeckleError):
    """Malformed bundle, image, or config file."""

    category = "format"
