"""Numerical verification of elliptic hypergeometric pairings and their identities."""

from .errors import (ConditioningError, ConfigError, DivergenceError, GenericityError, LatticeError,
                     MembershipError, NonSimplePoleError, NumericalError, PoleProximityError, QHyperError,
                     QuasiPeriodError, TailBoundError, ZeroArgumentError)
from .identities import (SUITES, CheckReport, verify_asymptotics, verify_biorthogonality, verify_determinants,
                         verify_onedim, verify_qkz, verify_restricted, verify_riemann, verify_series)
from .indexing import Composition, composition_count, enumerate_compositions
from .params import ParameterSet, check_generic, check_restricted, sample_generic, sample_restricted
from .qseries import Truncation, phi_series, qpoch_fin, qpoch_inf, theta

__version__ = "0.1.0"

__all__ = [
    "ConditioningError", "ConfigError", "DivergenceError", "GenericityError", "LatticeError", "MembershipError",
    "NonSimplePoleError", "NumericalError", "PoleProximityError", "QHyperError", "QuasiPeriodError",
    "TailBoundError", "ZeroArgumentError", "SUITES", "CheckReport", "verify_asymptotics",
    "verify_biorthogonality", "verify_determinants", "verify_onedim", "verify_qkz", "verify_restricted",
    "verify_riemann", "verify_series", "Composition", "composition_count", "enumerate_compositions",
    "ParameterSet", "check_generic", "check_restricted", "sample_generic", "sample_restricted", "Truncation",
    "phi_series", "qpoch_fin", "qpoch_inf", "theta", "__version__",
]
