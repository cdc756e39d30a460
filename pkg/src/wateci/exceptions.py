"""Exception hierarchy.

Numeric/statistical failures derive from :class:`EstimationError`; the CLI maps
those to exit code 3.
"""


class WateError(Exception):
    """Base class for all package errors."""


class EstimationError(WateError):
    """A numeric or statistical failure (CLI exit code 3)."""


class DimensionMismatch(WateError, ValueError):
    pass


class NonSquare(WateError, ValueError):
    pass


class NotPositiveDefinite(EstimationError):
    pass


class Separation(EstimationError):
    """The logistic likelihood has no finite maximiser (or did not converge)."""


class RankDeficient(EstimationError):
    pass


class EmptyArm(EstimationError):
    """A treatment arm is empty or carries zero total weight."""


class SingularBread(EstimationError):
    pass


class OutOfRange(WateError, ValueError):
    """A propensity score outside the open interval (0, 1)."""


class OutOfDomain(WateError, ValueError):
    pass


class UnsupportedEstimand(WateError, ValueError):
    pass


class InvalidLevel(WateError, ValueError):
    pass


class ExtremePropensityWarning(UserWarning):
    """Fitted scores close to 0 or 1; inverse weights may be unstable."""
