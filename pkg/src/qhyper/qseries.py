"""Scalar q-analysis kernel: q-Pochhammer symbols, the Jacobi theta function and
basic hypergeometric series.

All functions accept scalars or numpy arrays of complex arguments and work in the
precision selected by the :class:`Truncation` passed in (double by default,
x87 extended precision on request).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DivergenceError, LatticeError, TailBoundError, ZeroArgumentError

PRECISION_ENV = "QHYPER_PRECISION"
_DTYPES = {"double": np.complex128, "extended": np.clongdouble}


def default_precision() -> str:
    """Precision mode named by the environment, falling back to double."""
    mode = os.environ.get(PRECISION_ENV, "double").strip().lower() or "double"
    if mode not in _DTYPES:
        raise ConfigError(f"{PRECISION_ENV} must be one of {sorted(_DTYPES)}, got {mode!r}")
    return mode


@dataclass(frozen=True)
class Truncation:
    """Stopping rules for products, series and Jackson sums.

    ``series_tail_tol`` is the relative size of the estimated remainder at which a
    series or a Jackson shell sum stops. Infinite products are always carried to
    working precision. ``jackson_shell_max`` caps the total shift |s_1|+...+|s_l|.
    """

    series_tail_tol: float = 1e-15
    max_terms: int = 4000
    jackson_shell_max: int = 80
    precision: str = field(default_factory=default_precision)

    def __post_init__(self):
        if not self.series_tail_tol > 0:
            raise ConfigError("series_tail_tol must be positive")
        if self.max_terms < 1:
            raise ConfigError("max_terms must be at least 1")
        if self.jackson_shell_max < 0:
            raise ConfigError("jackson_shell_max must be nonnegative")
        if self.precision not in _DTYPES:
            raise ConfigError(f"precision must be one of {sorted(_DTYPES)}")

    @property
    def dtype(self):
        return _DTYPES[self.precision]

    @property
    def eps(self) -> float:
        return float(np.finfo(self.dtype).eps)

    @property
    def product_tol(self) -> float:
        return min(self.series_tail_tol, self.eps / 4)


DEFAULT_TRUNCATION = Truncation(precision="double")


def _trunc(trunc: Truncation | None) -> Truncation:
    return DEFAULT_TRUNCATION if trunc is None else trunc


def _scalar_out(arr: np.ndarray):
    return arr[()] if arr.ndim == 0 else arr


def _nfactors(umax: float, ap: float, tol: float, max_terms: int) -> int:
    """Factors needed so the product tail |p|^K umax / (1-|p|) drops below tol."""
    if umax == 0.0 or ap == 0.0:
        return 1
    k = math.ceil(math.log(tol * (1.0 - ap) / umax) / math.log(ap))
    k = max(k, 1)
    if k > max_terms:
        raise TailBoundError(f"q-Pochhammer product needs {k} factors, cap is {max_terms}")
    return k


def qpoch_inf(u, p, trunc: Truncation | None = None):
    """(u; p)_inf = prod_{s>=0} (1 - p^s u), elementwise in u."""
    trunc = _trunc(trunc)
    dt = trunc.dtype
    u = np.asarray(u, dtype=dt)
    p = dt(p)
    ap = float(abs(p))
    if ap >= 1.0:
        raise DivergenceError(f"(u;p)_inf needs |p| < 1, got |p| = {ap}")
    if ap == 0.0:
        return _scalar_out(1 - u)
    umax = float(np.max(np.abs(u))) if u.size else 0.0
    nf = _nfactors(umax, ap, trunc.product_tol, trunc.max_terms)
    out = np.ones_like(u)
    pk = dt(1)
    for _ in range(nf):
        out = out * (1 - pk * u)
        pk = pk * p
    return _scalar_out(out)


def qpoch_fin(u, p, k: int, trunc: Truncation | None = None):
    """(u; p)_k = prod_{s=0}^{k-1} (1 - p^s u)."""
    if k < 0:
        raise ConfigError("finite q-Pochhammer symbol needs k >= 0")
    dt = _trunc(trunc).dtype
    u = np.asarray(u, dtype=dt)
    p = dt(p)
    out = np.ones_like(u)
    pk = dt(1)
    for _ in range(k):
        out = out * (1 - pk * u)
        pk = pk * p
    return _scalar_out(out)


def theta(u, p, trunc: Truncation | None = None):
    """Jacobi theta function theta(u) = (u)_inf (p/u)_inf (p)_inf."""
    trunc = _trunc(trunc)
    dt = trunc.dtype
    u = np.asarray(u, dtype=dt)
    if np.any(u == 0):
        raise ZeroArgumentError("theta is undefined at u = 0")
    p = dt(p)
    return _scalar_out(qpoch_inf(u, p, trunc) * qpoch_inf(p / u, p, trunc) * qpoch_inf(p, p, trunc))


def theta_prime_at_1(p, trunc: Truncation | None = None):
    """Derivative of theta at u = 1, equal to -(p; p)_inf^3."""
    return -qpoch_inf(p, p, trunc) ** 3


def lattice_window(q, p) -> int:
    """Half-width S of the window of exponents probed by :func:`lattice_distance`."""
    aq, ap = abs(complex(q)), abs(complex(p))
    if ap == 0.0 or aq == 0.0:
        return 4
    return int(math.ceil(abs(math.log(aq) / math.log(ap)))) + 4


def lattice_distance(q, p, nonneg_only: bool = False) -> float:
    """min over s of |1 - q p^{-s}|, the relative distance of q from p^Z.

    With ``nonneg_only`` only s <= 0 is probed, i.e. the distance of q from the
    half lattice {p^{-s}: s >= 0}, which is what denominators (q)_k care about.
    """
    q, p = complex(q), complex(p)
    if q == 0:
        return 1.0
    if p == 0:
        return abs(1 - q)
    window = lattice_window(q, p)
    lo = 0 if nonneg_only else -window
    if nonneg_only:
        exps = np.arange(0, window + 1)
        vals = np.abs(1 - q * p ** exps.astype(float))
    else:
        exps = np.arange(lo, window + 1)
        vals = np.abs(1 - q * np.power(p, -exps.astype(float)))
    return float(np.min(vals))


def phi_series_with_bound(a, b, p, z, trunc: Truncation | None = None, lattice_margin: float = 1e-4):
    """Basic hypergeometric series n phi n-1 together with its tail estimate.

    Returns ``(value, tail_bound)`` where the bound is |r|/(1-|r|) times the last
    term, r being the larger of the observed term ratio and |z|.
    """
    trunc = _trunc(trunc)
    dt = trunc.dtype
    a = np.asarray(list(a), dtype=dt)
    b = np.asarray(list(b), dtype=dt)
    if b.size != a.size - 1:
        raise ConfigError(f"phi series needs len(b) = len(a) - 1, got {a.size} and {b.size}")
    p = dt(p)
    z = dt(z)
    if abs(p) >= 1:
        raise DivergenceError("phi series needs |p| < 1")
    for bm in b:
        if lattice_distance(bm, p, nonneg_only=True) < lattice_margin:
            raise LatticeError(f"denominator parameter {complex(bm)} is within margin of p^(-s)")
    total = dt(1)
    if z == 0:
        return total, 0.0
    az = float(abs(z))
    term = dt(1)
    pk = dt(1)
    tol = trunc.series_tail_tol
    for k in range(trunc.max_terms):
        num = np.prod(1 - a * pk)
        den = np.prod(1 - b * pk) * (1 - pk * p)
        ratio = num / den * z
        term = term * ratio
        total = total + term
        pk = pk * p
        if term == 0:
            return total, 0.0
        r = max(float(abs(ratio)), az)
        if r < 1:
            bound = float(abs(term)) * r / (1 - r)
            if bound <= tol * float(abs(total)):
                return total, bound
        elif az >= 1 and k > 8:
            raise DivergenceError(f"phi series diverges for |z| = {az}")
    raise TailBoundError(f"phi series did not converge in {trunc.max_terms} terms (|z| = {az})")


def phi_series(a, b, p, z, trunc: Truncation | None = None, lattice_margin: float = 1e-4):
    """n phi n-1 (a; b; z) = sum_k (a_1)_k...(a_n)_k / ((b_1)_k...(b_{n-1})_k (p)_k) z^k."""
    return phi_series_with_bound(a, b, p, z, trunc, lattice_margin)[0]
