"""Exception types shared across the package."""


class BrownMeasureError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BrownMeasureError, ValueError):
    """An argument lies outside the domain of the operation."""


class NormalizationError(BrownMeasureError, ValueError):
    """Atom weights do not sum to one."""


class SingularMomentError(BrownMeasureError, ValueError):
    """A negative power or inverse was requested of a measure with an atom at 0."""


class DiracUnsupported(BrownMeasureError, ValueError):
    """The subordination machinery needs a non-Dirac distribution of |T|."""


class BelowInnerRadius(DomainError):
    """|lambda| <= lambda_1: s(lambda, 0) does not exist (it degenerates to 0)."""


class AboveOuterRadius(DomainError):
    """|lambda| >= lambda_2: s(lambda, 0) does not exist (it degenerates to +inf)."""


class DivergentIntegral(BrownMeasureError, ArithmeticError):
    """An improper integral was detected to diverge."""


class SimulationError(BrownMeasureError, RuntimeError):
    """A random-matrix draw could not be completed."""


class BoxTooTight(BrownMeasureError, ValueError):
    """An eigenvalue lies too close to the edge of the Laplacian grid."""


class NegativeMassError(BrownMeasureError, ArithmeticError):
    """A Laplacian cell mass fell below the negative-mass tolerance."""
