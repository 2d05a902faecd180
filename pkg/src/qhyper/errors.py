"""Exception hierarchy shared by all modules.

Configuration problems and numerical-machinery failures are kept apart so the
command line can map them to different exit codes.
"""


class QHyperError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(QHyperError, ValueError):
    """Invalid arguments or configuration."""


class NumericalError(QHyperError, ArithmeticError):
    """A numerical procedure could not deliver a trustworthy answer."""


class DivergenceError(NumericalError):
    """A product or series was requested outside its convergence domain."""


class TailBoundError(NumericalError):
    """Truncation limits were reached before the tail bound met the tolerance."""


class ZeroArgumentError(NumericalError):
    """A function was evaluated at an argument where it is undefined (zero)."""


class LatticeError(NumericalError):
    """A quantity that must avoid p^Z lies within the lattice margin."""


class PoleProximityError(NumericalError):
    """An evaluation point is too close to a pole of the function."""


class NonSimplePoleError(NumericalError):
    """Residue extrapolation diverged, indicating a pole of higher order."""


class QuasiPeriodError(NumericalError):
    """The p-shift multiplier of a function is inconsistent across probe points."""


class MembershipError(NumericalError):
    """A function failed the collocation membership test for a space."""


class ConditioningError(NumericalError):
    """A collocation or change-of-basis matrix is too ill-conditioned."""


class GenericityError(NumericalError):
    """Parameters violate the required genericity conditions."""
