"""Exception types shared across the package."""


class GsensError(ValueError):
    """Base class for all gsens-specific errors."""


class SingularMatrixError(GsensError):
    """Matrix is numerically singular (reciprocal condition estimate below threshold)."""


class BlockConsistencyError(GsensError):
    """Embedding a block would require conflicting values at mirrored positions."""


class SchemeError(GsensError):
    """Covariation scheme is invalid for the requested variation/statement."""


class ModelPreconditionError(GsensError):
    """Input covariance does not satisfy the model it is being checked against."""


class InadmissibleError(GsensError):
    """Perturbed covariance is outside the domain of the requested divergence."""


class ModelFormatError(GsensError):
    """Model or config file violates the expected schema."""
