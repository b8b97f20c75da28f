"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`RiccatiError`, so callers (notably the CLI) can map failures to
exit codes without catching unrelated exceptions.
"""


class RiccatiError(Exception):
    """Base class for all library errors."""


# model

class ModelError(RiccatiError, ValueError):
    """Inconsistent model data (dimensions, interval, coefficients)."""


class NotHermitian(ModelError):
    pass


class SpectrumNotEmbedded(ModelError):
    """An eigenvalue of the A entry lies outside the open band."""


# contour

class InvalidContour(RiccatiError, ValueError):
    pass


class ContourMismatch(RiccatiError, ValueError):
    """Objects built on different contours were combined."""


class NotInOmega(RiccatiError, ValueError):
    pass


class TooCloseToContour(RiccatiError, ValueError):
    """Evaluation point too close to the quadrature nodes to be trusted."""


# solver

class NotContractive(RiccatiError):
    """The contraction condition fails and ``force`` was not requested."""


class NoConvergence(RiccatiError):
    pass


class SingularResolvent(RiccatiError, ArithmeticError):
    pass


class WrongSpecialCase(RiccatiError, ValueError):
    pass


class NoAdmissibleContour(RiccatiError):
    pass


class BoundViolation(RiccatiError, AssertionError):
    """A bound guaranteed by the theory was violated (indicates a bug)."""


# schur / blockdiag

class CountMismatch(RiccatiError):
    pass


class NotContraction(RiccatiError):
    pass


# cli

class ConfigInvalid(RiccatiError, ValueError):
    pass


class IoError(RiccatiError, OSError):
    pass
