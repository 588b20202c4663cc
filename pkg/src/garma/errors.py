"""Exception and warning types shared across the package."""


class GarmaError(Exception):
    """Base class for every error raised by this package."""


class InvalidParamError(GarmaError, ValueError):
    """A parameter lies outside its allowed domain."""


class NonStationaryError(GarmaError, ValueError):
    """The autoregressive polynomial has a root on or inside the unit circle.

    Attributes
    ----------
    min_modulus : float
        Smallest root modulus found; stationarity requires it to exceed 1.
    """

    def __init__(self, min_modulus, message=None):
        self.min_modulus = float(min_modulus)
        if message is None:
            message = (
                "model is not stationary: smallest AR root modulus is "
                f"{self.min_modulus:.6g} (must be > 1)"
            )
        super().__init__(message)


class DimensionMismatchError(GarmaError, ValueError):
    """Lengths or shapes of related arguments disagree."""


class NotPositiveDefiniteError(GarmaError, ValueError):
    """A covariance matrix is not positive definite, even after bounded
    diagonal inflation."""


class AllConditionedError(GarmaError, ValueError):
    """Every retained index is a conditioning index; no free index remains."""


class AllMarginalisedError(GarmaError, ValueError):
    """Every index is marginalised away; nothing remains to work with."""


class CondOnMissingError(GarmaError, ValueError):
    """A position was flagged as conditioning but carries no value."""


class ZeroVarianceError(GarmaError, ValueError):
    """The input series is constant, so scaling by its spread is undefined."""


class EmptyInputError(GarmaError, ValueError):
    """The input series contains no observations."""


class ToleranceNotReachedError(GarmaError, RuntimeError):
    """An iterative estimate hit its sample cap before reaching the requested
    tolerance.

    Attributes
    ----------
    best_estimate : float
        The estimate at the point the cap was hit.
    error_estimate : float
        Estimated standard error of ``best_estimate``.
    """

    def __init__(self, best_estimate, error_estimate, message=None):
        self.best_estimate = float(best_estimate)
        self.error_estimate = float(error_estimate)
        if message is None:
            message = (
                f"sample cap reached with error estimate {self.error_estimate:.3g} "
                f"above the requested tolerance (best estimate {self.best_estimate:.10g})"
            )
        super().__init__(message)


class GarmaWarning(UserWarning):
    """Base class for every warning emitted by this package."""


class NearUnitRootWarning(GarmaWarning):
    """An AR root modulus is barely above 1; results may be ill-conditioned."""


class SharedRootWarning(GarmaWarning):
    """The AR and MA polynomials share a root; the model is over-parameterised."""


class AllConditionedWarning(GarmaWarning):
    """Every non-marginalised position is a conditioning value; the density or
    probability is set to one by convention."""
