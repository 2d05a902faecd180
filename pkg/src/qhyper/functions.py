"""Phase functions, weight functions, elliptic and trigonometric bases, the
one-variable functions, and collocation frames for the hypergeometric spaces.

Every function in the trigonometric space F[x;eta] becomes a symmetric
polynomial of degree < n in each variable after multiplication by a fixed
normalizer, and every function in the elliptic space becomes an entire
function. The ``reg_*`` evaluators compute those regular parts directly, in a
form that stays finite on the ladder points where the functions themselves
have poles. The plain evaluators transcribe the defining symmetrizations.

Points are arrays whose last axis has length ell; leading axes are batched.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConditioningError, ConfigError, MembershipError, PoleProximityError, QuasiPeriodError
from .indexing import Composition, bracket_factor_rational, bracket_factor_theta, enumerate_compositions
from .params import ParameterSet
from .qseries import Truncation, qpoch_inf, theta

POLE_MARGIN = 1e-6
SYMMETRIZATION_CAP = 6


def _dtype(trunc: Truncation | None):
    return np.complex128 if trunc is None else trunc.dtype


def _pts(t, trunc=None) -> np.ndarray:
    t = np.asarray(t, dtype=_dtype(trunc))
    if t.ndim == 0:
        t = t.reshape(1)
    return t


def _out(v):
    v = np.asarray(v)
    return v[()] if v.ndim == 0 else v


def _perms(ell: int):
    if ell > SYMMETRIZATION_CAP:
        raise ConfigError(f"symmetrization over S_{ell} exceeds the cap ell <= {SYMMETRIZATION_CAP}")
    import itertools

    return list(itertools.permutations(range(ell)))


def _inverse(sigma):
    inv = [0] * len(sigma)
    for a, c in enumerate(sigma):
        inv[c] = a
    return inv


def _vandermonde(T):
    ell = T.shape[-1]
    out = np.ones(T.shape[:-1], dtype=T.dtype)
    for c in range(ell):
        for d in range(c + 1, ell):
            out = out * (T[..., c] - T[..., d])
    return out


def _comp(comp) -> Composition:
    return comp if isinstance(comp, Composition) else Composition(tuple(comp))


def _check_eta(eta, ell):
    for s in range(2, ell + 1):
        if abs(1 - eta**s) < POLE_MARGIN:
            raise PoleProximityError(f"eta is within margin of a root of unity of order {s}")


# ---------------------------------------------------------------- phase functions


def phase_phi(t, x, y, eta, p, trunc: Truncation | None = None):
    """prod (t_a/x_m)_inf / (t_a/y_m)_inf  prod_{a<b} (eta t_a/t_b)_inf / (t_a/(eta t_b))_inf."""
    T = _pts(t, trunc)
    ell = T.shape[-1]
    out = np.ones(T.shape[:-1], dtype=T.dtype)
    for a in range(ell):
        for xm, ym in zip(x, y):
            den = qpoch_inf(T[..., a] / ym, p, trunc)
            _guard(den, "phase function")
            out = out * qpoch_inf(T[..., a] / xm, p, trunc) / den
    for a in range(ell):
        for b in range(a + 1, ell):
            u = T[..., a] / T[..., b]
            den = qpoch_inf(u / eta, p, trunc)
            _guard(den, "phase function")
            out = out * qpoch_inf(eta * u, p, trunc) / den
    return _out(out)


def phase_phi_tilde(t, x, y, eta, p, trunc: Truncation | None = None):
    """prod 1/((x_m/t_a)_inf (t_a/y_m)_inf)  prod_{a != b} 1/(t_a/(eta t_b))_inf."""
    T = _pts(t, trunc)
    ell = T.shape[-1]
    den = np.ones(T.shape[:-1], dtype=T.dtype)
    for a in range(ell):
        for xm, ym in zip(x, y):
            den = den * qpoch_inf(xm / T[..., a], p, trunc) * qpoch_inf(T[..., a] / ym, p, trunc)
        for b in range(ell):
            if a != b:
                den = den * qpoch_inf(T[..., a] / (eta * T[..., b]), p, trunc)
    _guard(den, "reduced phase function")
    return _out(1 / den)


def _guard(den, what):
    scale = np.max(np.abs(den)) if np.size(den) else 0.0
    if np.any(np.abs(den) <= 1e-300) or (scale and np.any(np.abs(den) < POLE_MARGIN * 1e-10 * scale)):
        raise PoleProximityError(f"{what} evaluated on a pole")


# ---------------------------------------------------------------- normalizers


def trig_normalizer(t, x, eta, trunc=None):
    """prod t_a^{-1} prod (t_a - x_m) prod_{c<d} (eta t_c - t_d)/(t_c - t_d).

    Multiplying an element of F[x;eta] by this gives a symmetric polynomial.
    """
    T = _pts(t, trunc)
    ell = T.shape[-1]
    out = np.ones(T.shape[:-1], dtype=T.dtype)
    for a in range(ell):
        out = out / T[..., a]
        for xm in x:
            out = out * (T[..., a] - xm)
    for c in range(ell):
        for d in range(c + 1, ell):
            out = out * (eta * T[..., c] - T[..., d]) / (T[..., c] - T[..., d])
    return _out(out)


def trig_prime_normalizer(t, y, eta, trunc=None):
    """prod (t_a - y_m) prod_{c<d} (t_c/eta - t_d)/(t_c - t_d), the analog for F'[y;eta]."""
    T = _pts(t, trunc)
    ell = T.shape[-1]
    out = np.ones(T.shape[:-1], dtype=T.dtype)
    for a in range(ell):
        for ym in y:
            out = out * (T[..., a] - ym)
    for c in range(ell):
        for d in range(c + 1, ell):
            out = out * (T[..., c] / eta - T[..., d]) / (T[..., c] - T[..., d])
    return _out(out)


def ell_normalizer(t, x, eta, p, trunc=None):
    """prod theta(t_a/x_m) prod_{c<d} theta(eta t_c/t_d)/theta(t_c/t_d)."""
    T = _pts(t, trunc)
    ell = T.shape[-1]
    out = np.ones(T.shape[:-1], dtype=T.dtype)
    for a in range(ell):
        for xm in x:
            out = out * theta(T[..., a] / xm, p, trunc)
    for c in range(ell):
        for d in range(c + 1, ell):
            u = T[..., c] / T[..., d]
            out = out * theta(eta * u, p, trunc) / theta(u, p, trunc)
    return _out(out)


# ---------------------------------------------------------------- trigonometric weight functions


def _w_prefactor(comp: Composition, eta):
    c = 1
    for lm in comp.parts:
        for s in range(1, lm + 1):
            c = c * (1 - eta) / (1 - eta**s)
    return c


def weight_w(comp, t, x, y, eta, trunc: Truncation | None = None):
    """Trigonometric weight function w_l(t; x; y; eta) by explicit symmetrization."""
    comp = _comp(comp)
    T = _pts(t, trunc)
    ell = T.shape[-1]
    if comp.ell != ell or comp.n != len(x):
        raise ConfigError("composition does not match the point or parameter sizes")
    _check_eta(eta, ell)
    blk = comp.block_of()
    total = np.zeros(T.shape[:-1], dtype=T.dtype)
    for sigma in _perms(ell):
        Ts = T[..., list(sigma)]
        f = np.ones(T.shape[:-1], dtype=T.dtype)
        for a in range(ell):
            m = blk[a]
            ta = Ts[..., a]
            f = f * ta / (ta - x[m])
            for l in range(m):
                f = f * (ta - y[l]) / (ta - x[l])
        total = total + f * bracket_factor_rational(sigma, T, eta)
    return _out(_w_prefactor(comp, eta) * total)


def weight_w_prime(comp, t, x, y, eta, trunc: Truncation | None = None):
    """w'_l(t; x; y; eta) = prod y_m^{l_m} prod t_a^{-1} w_l(t; y; x; 1/eta)."""
    comp = _comp(comp)
    T = _pts(t, trunc)
    scale = np.prod([complex(ym) ** lm for ym, lm in zip(y, comp.parts)])
    return _out(scale * weight_w(comp, T, y, x, 1 / eta, trunc) / np.prod(T, axis=-1))


def reg_w(comp, t, x, y, eta, trunc: Truncation | None = None):
    """Polynomial part of w_l: w_l times :func:`trig_normalizer`.

    Finite everywhere except on coinciding coordinates, so it can be evaluated on
    ladder points.
    """
    comp = _comp(comp)
    T = _pts(t, trunc)
    ell = T.shape[-1]
    _check_eta(eta, ell)
    if ell == 0:
        return _out(np.ones(T.shape[:-1], dtype=T.dtype))
    blk = comp.block_of()
    n = len(x)
    # slot a holding variable c contributes prod_{j<m(a)} (t_c - y_j) prod_{j>m(a)} (t_c - x_j)
    slot = np.empty((ell,) + T.shape, dtype=T.dtype)
    for a in range(ell):
        m = blk[a]
        v = np.ones(T.shape, dtype=T.dtype)
        for j in range(m):
            v = v * (T - y[j])
        for j in range(m + 1, n):
            v = v * (T - x[j])
        slot[a] = v
    pair_inv = {}
    pair_ord = {}
    for c in range(ell):
        for d in range(c + 1, ell):
            pair_inv[c, d] = T[..., c] - eta * T[..., d]
            pair_ord[c, d] = eta * T[..., c] - T[..., d]
    total = np.zeros(T.shape[:-1], dtype=T.dtype)
    for sigma in _perms(ell):
        pos = _inverse(sigma)
        term = np.ones(T.shape[:-1], dtype=T.dtype)
        for a in range(ell):
            term = term * slot[a][..., sigma[a]]
        for (c, d), v in pair_ord.items():
            term = term * (pair_inv[c, d] if pos[c] > pos[d] else v)
        total = total + term
    return _out(_w_prefactor(comp, eta) * total / _vandermonde(T))


def reg_w_prime(comp, t, x, y, eta, trunc: Truncation | None = None):
    """w'_l times :func:`trig_prime_normalizer` (with the y of w')."""
    comp = _comp(comp)
    scale = np.prod([complex(ym) ** lm for ym, lm in zip(y, comp.parts)])
    return _out(scale * reg_w(comp, t, y, x, 1 / eta, trunc))


# ---------------------------------------------------------------- elliptic weight functions


def _W_prefactor(comp: Composition, eta, p, trunc):
    c = 1
    te = theta(eta, p, trunc)
    for lm in comp.parts:
        for s in range(1, lm + 1):
            c = c * te / theta(eta**s, p, trunc)
    return c


def _alpha_blocks(alpha, x, y):
    out = []
    a = alpha
    for m in range(len(x)):
        out.append(a)
        a = a * x[m] / y[m]
    return out


def weight_W_ell(comp, t, alpha, x, y, eta, p, trunc: Truncation | None = None):
    """Elliptic weight function W_l(t; alpha; x; y; eta) by explicit symmetrization."""
    comp = _comp(comp)
    T = _pts(t, trunc)
    ell = T.shape[-1]
    if comp.ell != ell or comp.n != len(x):
        raise ConfigError("composition does not match the point or parameter sizes")
    blk = comp.block_of()
    am = _alpha_blocks(alpha, x, y)
    total = np.zeros(T.shape[:-1], dtype=T.dtype)
    for sigma in _perms(ell):
        Ts = T[..., list(sigma)]
        f = np.ones(T.shape[:-1], dtype=T.dtype)
        for a in range(ell):
            m = blk[a]
            ta = Ts[..., a]
            f = f * theta(eta ** (2 * a) / am[m] * ta / x[m], p, trunc) / theta(ta / x[m], p, trunc)
            for l in range(m):
                f = f * theta(ta / y[l], p, trunc) / theta(ta / x[l], p, trunc)
        total = total + f * bracket_factor_theta(sigma, T, eta, p, trunc)
    return _out(_W_prefactor(comp, eta, p, trunc) * total)


def weight_W_ell_prime(comp, t, alpha, x, y, eta, p, trunc: Truncation | None = None):
    """W'_l(t; alpha; x; y; eta) = W_l(t; 1/alpha; y; x; 1/eta)."""
    return weight_W_ell(comp, t, 1 / alpha, y, x, 1 / eta, p, trunc)


def reg_W(comp, t, alpha, x, y, eta, p, trunc: Truncation | None = None):
    """Entire part of W_l: W_l times :func:`ell_normalizer`.

    It satisfies H(.., p t_a, ..) = A (-t_a)^{-n} H(t) with A = alpha eta^{1-l} prod x.
    """
    comp = _comp(comp)
    T = _pts(t, trunc)
    ell = T.shape[-1]
    if ell == 0:
        return _out(np.ones(T.shape[:-1], dtype=T.dtype))
    blk = comp.block_of()
    n = len(x)
    am = _alpha_blocks(alpha, x, y)
    th_x = [theta(T / xj, p, trunc) for xj in x]
    th_y = [theta(T / yj, p, trunc) for yj in y]
    slot = np.empty((ell,) + T.shape, dtype=T.dtype)
    for a in range(ell):
        m = blk[a]
        v = theta(eta ** (2 * a) / am[m] * T / x[m], p, trunc)
        for j in range(m):
            v = v * th_y[j]
        for j in range(m + 1, n):
            v = v * th_x[j]
        slot[a] = v
    pair_inv = {}
    pair_ord = {}
    den = np.ones(T.shape[:-1], dtype=T.dtype)
    for c in range(ell):
        for d in range(c + 1, ell):
            u = T[..., c] / T[..., d]
            pair_inv[c, d] = eta * theta(u / eta, p, trunc)
            pair_ord[c, d] = theta(eta * u, p, trunc)
            den = den * theta(u, p, trunc)
    total = np.zeros(T.shape[:-1], dtype=T.dtype)
    for sigma in _perms(ell):
        pos = _inverse(sigma)
        term = np.ones(T.shape[:-1], dtype=T.dtype)
        for a in range(ell):
            term = term * slot[a][..., sigma[a]]
        for (c, d), v in pair_ord.items():
            term = term * (pair_inv[c, d] if pos[c] > pos[d] else v)
        total = total + term
    return _out(_W_prefactor(comp, eta, p, trunc) * total / den)


def reg_W_prime(comp, t, alpha, x, y, eta, p, trunc: Truncation | None = None):
    """W'_l times ell_normalizer(t, y, 1/eta)."""
    return reg_W(comp, t, 1 / alpha, y, x, 1 / eta, p, trunc)


# ---------------------------------------------------------------- g and G bases


def _factorial_norm(comp: Composition):
    return 1.0 / np.prod([math.factorial(v) for v in comp.parts])


def reg_g(comp, t, trunc: Truncation | None = None):
    """Polynomial part of g_l: (1/prod l_m!) sum_sigma prod_a t_{sigma a}^{m(a)} with m 0-based."""
    comp = _comp(comp)
    T = _pts(t, trunc)
    ell = T.shape[-1]
    blk = comp.block_of()
    total = np.zeros(T.shape[:-1], dtype=T.dtype)
    for sigma in _perms(ell):
        term = np.ones(T.shape[:-1], dtype=T.dtype)
        for a in range(ell):
            term = term * T[..., sigma[a]] ** blk[a]
        total = total + term
    return _out(_factorial_norm(comp) * total)


def basis_g(comp, t, x, eta, trunc: Truncation | None = None):
    """g_l(t; x; eta) = (1/prod l_m!) prod 1/(t_a - x_m) prod_{a<b} (t_a - t_b)/(eta t_a - t_b)
    sum_sigma prod t_{sigma a}^m."""
    comp = _comp(comp)
    T = _pts(t, trunc)
    ell = T.shape[-1]
    blk = comp.block_of()
    pre = np.ones(T.shape[:-1], dtype=T.dtype)
    for a in range(ell):
        for xm in x:
            pre = pre / (T[..., a] - xm)
    for a in range(ell):
        for b in range(a + 1, ell):
            pre = pre * (T[..., a] - T[..., b]) / (eta * T[..., a] - T[..., b])
    total = np.zeros(T.shape[:-1], dtype=T.dtype)
    for sigma in _perms(ell):
        term = np.ones(T.shape[:-1], dtype=T.dtype)
        for a in range(ell):
            term = term * T[..., sigma[a]] ** (blk[a] + 1)
        total = total + term
    return _out(_factorial_norm(comp) * pre * total)


@dataclass(frozen=True)
class ThetaRoots:
    """Root data for the theta basis of E[A]: xi^n = p and zeta^n = -1/A."""

    n: int
    A: complex
    p: complex
    xi: complex
    zeta: complex

    @property
    def omega(self) -> complex:
        return cmath.exp(2j * cmath.pi / self.n)


def theta_roots(A, p, n: int) -> ThetaRoots:
    """Principal n-th roots fixing the theta basis."""
    A, p = complex(A), complex(p)
    xi = p ** (1.0 / n)
    zeta = (-1 / A) ** (1.0 / n)
    return ThetaRoots(n, A, p, xi, zeta)


def _check_roots(n, A, p, zeta, xi):
    if abs(xi**n - p) > 1e-12 * abs(p) or abs(zeta**n * A + 1) > 1e-12:
        raise ConfigError("theta basis roots violate xi^n = p or zeta^n = -1/A")


def theta_basis(l: int, u, A, p, zeta, xi, trunc: Truncation | None = None, n: int | None = None):
    """theta_l(u) = u^{l-1} prod_{m=1}^n theta(-zeta xi^{l-1} omega^m u), l = 1..n."""
    if n is None:
        n = _infer_n(A, zeta)
    _check_roots(n, A, p, zeta, xi)
    if not 1 <= l <= n:
        raise ConfigError(f"theta basis index must be in 1..{n}")
    U = np.asarray(u, dtype=_dtype(trunc))
    om = cmath.exp(2j * cmath.pi / n)
    out = U ** (l - 1)
    for m in range(1, n + 1):
        out = out * theta(-zeta * xi ** (l - 1) * om**m * U, p, trunc)
    return _out(out)


def _infer_n(A, zeta):
    for n in range(1, 64):
        if abs(zeta**n * A + 1) <= 1e-12:
            return n
    raise ConfigError("cannot infer n from theta root data; pass n explicitly")


def reg_G(comp, t, alpha, x, eta, p, zeta=None, xi=None, trunc: Truncation | None = None):
    """Entire part of G_l: (1/prod l_m!) sum_sigma prod_a theta_{m(a)}(t_{sigma a})."""
    comp = _comp(comp)
    T = _pts(t, trunc)
    ell, n = T.shape[-1], len(x)
    A = alpha * eta ** (1 - ell) * np.prod(np.array(x, dtype=complex))
    if zeta is None or xi is None:
        r = theta_roots(A, p, n)
        zeta, xi = r.zeta, r.xi
    blk = comp.block_of()
    th = [theta_basis(l, T, A, p, zeta, xi, trunc, n=n) for l in range(1, n + 1)]
    total = np.zeros(T.shape[:-1], dtype=T.dtype)
    for sigma in _perms(ell):
        term = np.ones(T.shape[:-1], dtype=T.dtype)
        for a in range(ell):
            term = term * th[blk[a]][..., sigma[a]]
        total = total + term
    return _out(_factorial_norm(comp) * total)


def basis_G(comp, t, alpha, x, eta, p, zeta=None, xi=None, trunc: Truncation | None = None):
    """G_l(t; alpha; x; eta) = reg_G / ell_normalizer(t, x, eta)."""
    T = _pts(t, trunc)
    return _out(reg_G(comp, T, alpha, x, eta, p, zeta, xi, trunc) / ell_normalizer(T, x, eta, p, trunc))


# ---------------------------------------------------------------- one-variable functions


def _scalar_t(t, trunc=None):
    return np.asarray(t, dtype=_dtype(trunc))


def onedim_f(k: int, t, x, y, trunc=None):
    """f_k(t) = (t/y_k) prod_m (y_k - x_m)/(t - x_m) prod_{m != k} (t - y_m)/(y_k - y_m); k is 1-based."""
    t = _scalar_t(t, trunc)
    k0 = k - 1
    out = t / y[k0]
    for m in range(len(x)):
        out = out * (y[k0] - x[m]) / (t - x[m])
        if m != k0:
            out = out * (t - y[m]) / (y[k0] - y[m])
    return _out(out)


def onedim_f_prime(k: int, t, x, y, trunc=None):
    """f'_k(t) = y_k / (t - y_k)."""
    t = _scalar_t(t, trunc)
    return _out(y[k - 1] / (t - y[k - 1]))


def _alpha_tilde(alpha, x, y):
    return alpha * np.prod(np.array(x, dtype=complex) / np.array(y, dtype=complex))


def onedim_F(k: int, t, alpha, x, y, p, trunc=None):
    """F_k(t) = (p)^2 theta(t/(at y_k))/theta(1/at) prod (p x_m/y_k)/theta(t/x_m)
    prod_{m != k} theta(t/y_m)/(p y_m/y_k), with at = alpha prod x/y."""
    t = _scalar_t(t, trunc)
    k0 = k - 1
    at = _alpha_tilde(alpha, x, y)
    pp = qpoch_inf(p, p, trunc)
    out = pp**2 * theta(t / (at * y[k0]), p, trunc) / theta(1 / at, p, trunc)
    for m in range(len(x)):
        out = out * qpoch_inf(p * x[m] / y[k0], p, trunc) / theta(t / x[m], p, trunc)
        if m != k0:
            out = out * theta(t / y[m], p, trunc) / qpoch_inf(p * y[m] / y[k0], p, trunc)
    return _out(out)


def onedim_F_prime(k: int, t, alpha, x, y, p, trunc=None):
    """F'_k(t) = (p)^2 theta(alpha t/y_k)/(theta(alpha) theta(t/y_k)) prod (y_k/x_m) prod_{m != k} 1/(y_k/y_m)."""
    t = _scalar_t(t, trunc)
    k0 = k - 1
    pp = qpoch_inf(p, p, trunc)
    out = pp**2 * theta(alpha * t / y[k0], p, trunc) / (theta(alpha, p, trunc) * theta(t / y[k0], p, trunc))
    for m in range(len(x)):
        out = out * qpoch_inf(y[k0] / x[m], p, trunc)
        if m != k0:
            out = out / qpoch_inf(y[k0] / y[m], p, trunc)
    return _out(out)


def reg_onedim_f(k, t, x, y, trunc=None):
    """f_k times trig_normalizer (ell = 1): (1/y_k) prod (y_k - x_m) prod_{m != k} (t - y_m)/(y_k - y_m)."""
    t = _scalar_t(t, trunc)
    k0 = k - 1
    out = np.ones_like(t) / y[k0]
    for m in range(len(x)):
        out = out * (y[k0] - x[m])
        if m != k0:
            out = out * (t - y[m]) / (y[k0] - y[m])
    return _out(out)


def reg_onedim_f_prime(k, t, x, y, trunc=None):
    """f'_k times trig_prime_normalizer (ell = 1): y_k prod_{m != k} (t - y_m)."""
    t = _scalar_t(t, trunc)
    out = np.ones_like(t) * y[k - 1]
    for m in range(len(y)):
        if m != k - 1:
            out = out * (t - y[m])
    return _out(out)


def reg_onedim_F(k, t, alpha, x, y, p, trunc=None):
    """F_k times ell_normalizer(t, x) (ell = 1)."""
    t = _scalar_t(t, trunc)
    k0 = k - 1
    at = _alpha_tilde(alpha, x, y)
    pp = qpoch_inf(p, p, trunc)
    out = pp**2 * theta(t / (at * y[k0]), p, trunc) / theta(1 / at, p, trunc)
    for m in range(len(x)):
        out = out * qpoch_inf(p * x[m] / y[k0], p, trunc)
        if m != k0:
            out = out * theta(t / y[m], p, trunc) / qpoch_inf(p * y[m] / y[k0], p, trunc)
    return _out(out)


def reg_onedim_F_prime(k, t, alpha, x, y, p, trunc=None):
    """F'_k times ell_normalizer(t, y) (ell = 1)."""
    t = _scalar_t(t, trunc)
    k0 = k - 1
    pp = qpoch_inf(p, p, trunc)
    out = pp**2 * theta(alpha * t / y[k0], p, trunc) / theta(alpha, p, trunc)
    for m in range(len(x)):
        out = out * qpoch_inf(y[k0] / x[m], p, trunc)
        if m != k0:
            out = out * theta(t / y[m], p, trunc) / qpoch_inf(y[k0] / y[m], p, trunc)
    return _out(out)


# ---------------------------------------------------------------- function handles

# space tags: which hypergeometric space a function belongs to
TRIG = "trig"  # F[x; eta]
TRIG_PRIME = "trig_prime"  # F'[y; eta]
ELL = "ell"  # F_ell[alpha; x; eta]
ELL_PRIME = "ell_prime"  # F'_ell[alpha; y; eta]
SPACES = (TRIG, TRIG_PRIME, ELL, ELL_PRIME)


@dataclass(frozen=True)
class PoleFamily:
    """Hyperplanes t_a = p^s base (kind 'x'/'y'), eta t_c = p^s t_d for c < d
    (kind 'pair', base eta), or t_a = 0. ``lattice`` says whether all p-shifts occur."""

    kind: str
    base: complex
    lattice: bool


@dataclass(frozen=True)
class EvaluableFunction:
    """A function of ell variables with declared poles, space and quasi-period.

    ``regular`` evaluates the function times the normalizer of its space, which
    is what the pairings consume; ``quasi_period`` is the constant A with
    regular(.., p t_a, ..) = A (-t_a)^{-n} regular(t) for elliptic elements.
    """

    arity: int
    func: Callable
    pole_divisor: tuple = ()
    quasi_period: complex | None = None
    space: str | None = None
    regular: Callable | None = None
    params: ParameterSet | None = None
    label: str = ""
    symmetry: str | None = None

    def evaluate(self, t, check_poles: bool = True):
        T = np.asarray(t)
        if T.shape[-1:] != (self.arity,) and not (self.arity == 1 and T.ndim <= 1):
            raise ConfigError(f"{self.label or 'function'} takes points with {self.arity} coordinates")
        if check_poles and self.params is not None:
            check_pole_margin(T if self.arity != 1 or T.ndim > 1 else T.reshape(-1, 1) if T.ndim else T.reshape(1),
                              self.pole_divisor, self.params.p)
        return self.func(t)

    __call__ = evaluate

    def scaled(self, c) -> "EvaluableFunction":
        reg = None if self.regular is None else (lambda t, r=self.regular: c * r(t))
        return EvaluableFunction(self.arity, lambda t, f=self.func: c * f(t), self.pole_divisor, self.quasi_period,
                                 self.space, reg, self.params, f"{c}*{self.label}", self.symmetry)

    def __add__(self, other: "EvaluableFunction") -> "EvaluableFunction":
        if other.arity != self.arity:
            raise ConfigError("cannot add functions of different arity")
        reg = None
        if self.regular is not None and other.regular is not None and self.space == other.space:
            reg = lambda t, a=self.regular, b=other.regular: a(t) + b(t)
        q = self.quasi_period if self.quasi_period == other.quasi_period else None
        return EvaluableFunction(self.arity, lambda t, a=self.func, b=other.func: a(t) + b(t),
                                 tuple(dict.fromkeys(self.pole_divisor + other.pole_divisor)), q,
                                 self.space if self.space == other.space else None, reg, self.params,
                                 f"{self.label}+{other.label}", self.symmetry)


def check_pole_margin(T, families, p, margin: float = POLE_MARGIN):
    """Raise PoleProximityError if any point lies within relative ``margin`` of a pole."""
    T = np.asarray(T)
    if T.ndim == 1:
        T = T[None, :]
    ell = T.shape[-1]
    lp = math.log(abs(p)) if p != 0 else None

    def dist(u, lattice):
        u = np.asarray(u, dtype=complex)
        if not lattice or lp is None:
            return np.abs(1 - u)
        s0 = np.round(np.log(np.abs(u)) / lp)
        best = np.full(u.shape, np.inf)
        for ds in (-1, 0, 1):
            best = np.minimum(best, np.abs(1 - u * complex(p) ** (-(s0 + ds))))
        return best

    for fam in families:
        if fam.kind == "zero":
            if np.any(np.abs(T) < margin):
                raise PoleProximityError("point too close to t_a = 0")
        elif fam.kind in ("x", "y"):
            if np.any(dist(T / fam.base, fam.lattice) < margin):
                raise PoleProximityError(f"point within margin of a pole at p^s {fam.base}")
        elif fam.kind == "pair":
            for c in range(ell):
                for d in range(c + 1, ell):
                    if np.any(dist(fam.base * T[..., c] / T[..., d], fam.lattice) < margin):
                        raise PoleProximityError("point within margin of a diagonal pole")


def _trig_poles(x, eta):
    return tuple(PoleFamily("x", complex(v), False) for v in x) + (PoleFamily("pair", complex(eta), False),)


def _trig_prime_poles(y, eta):
    return tuple(PoleFamily("y", complex(v), False) for v in y) + (PoleFamily("pair", complex(1 / eta), False),
                                                                  PoleFamily("zero", 0j, False))


def _ell_poles(x, eta):
    return tuple(PoleFamily("x", complex(v), True) for v in x) + (PoleFamily("pair", complex(eta), True),)


def space_normalizer(space: str, ps: ParameterSet, t, trunc=None):
    """The factor turning elements of ``space`` into their regular parts."""
    if space == TRIG:
        return trig_normalizer(t, ps.x, ps.eta, trunc)
    if space == TRIG_PRIME:
        return trig_prime_normalizer(t, ps.y, ps.eta, trunc)
    if space == ELL:
        return ell_normalizer(t, ps.x, ps.eta, ps.p, trunc)
    if space == ELL_PRIME:
        return ell_normalizer(t, ps.y, 1 / ps.eta, ps.p, trunc)
    raise ConfigError(f"unknown space tag {space!r}")


def quasi_period_constant(space: str, ps: ParameterSet) -> complex | None:
    """A with H(.., p t_a, ..) = A (-t_a)^{-n} H for regular parts of elliptic elements."""
    prod_x = complex(np.prod(np.array(ps.x)))
    prod_y = complex(np.prod(np.array(ps.y)))
    if space == ELL:
        return ps.alpha * ps.eta ** (1 - ps.ell) * prod_x
    if space == ELL_PRIME:
        return ps.eta ** (ps.ell - 1) * prod_y / ps.alpha
    return None


def make_w(comp, ps: ParameterSet, trunc=None) -> EvaluableFunction:
    comp = _comp(comp)
    return EvaluableFunction(
        ps.ell, lambda t: weight_w(comp, t, ps.x, ps.y, ps.eta, trunc), _trig_poles(ps.x, ps.eta), None, TRIG,
        lambda t: reg_w(comp, t, ps.x, ps.y, ps.eta, trunc), ps, f"w{comp}", "rational")


def make_w_prime(comp, ps: ParameterSet, trunc=None) -> EvaluableFunction:
    comp = _comp(comp)
    return EvaluableFunction(
        ps.ell, lambda t: weight_w_prime(comp, t, ps.x, ps.y, ps.eta, trunc), _trig_prime_poles(ps.y, ps.eta), None,
        TRIG_PRIME, lambda t: reg_w_prime(comp, t, ps.x, ps.y, ps.eta, trunc), ps, f"w'{comp}", None)


def make_W(comp, ps: ParameterSet, trunc=None) -> EvaluableFunction:
    comp = _comp(comp)
    return EvaluableFunction(
        ps.ell, lambda t: weight_W_ell(comp, t, ps.alpha, ps.x, ps.y, ps.eta, ps.p, trunc), _ell_poles(ps.x, ps.eta),
        quasi_period_constant(ELL, ps), ELL,
        lambda t: reg_W(comp, t, ps.alpha, ps.x, ps.y, ps.eta, ps.p, trunc), ps, f"W{comp}", "theta")


def make_W_prime(comp, ps: ParameterSet, trunc=None) -> EvaluableFunction:
    comp = _comp(comp)
    return EvaluableFunction(
        ps.ell, lambda t: weight_W_ell_prime(comp, t, ps.alpha, ps.x, ps.y, ps.eta, ps.p, trunc),
        _ell_poles(ps.y, 1 / ps.eta), quasi_period_constant(ELL_PRIME, ps), ELL_PRIME,
        lambda t: reg_W_prime(comp, t, ps.alpha, ps.x, ps.y, ps.eta, ps.p, trunc), ps, f"W'{comp}", None)


def make_g(comp, ps: ParameterSet, trunc=None) -> EvaluableFunction:
    comp = _comp(comp)
    return EvaluableFunction(
        ps.ell, lambda t: basis_g(comp, t, ps.x, ps.eta, trunc), _trig_poles(ps.x, ps.eta), None, TRIG,
        lambda t: reg_g(comp, t, trunc), ps, f"g{comp}", "rational")


def make_G(comp, ps: ParameterSet, trunc=None, roots: ThetaRoots | None = None) -> EvaluableFunction:
    comp = _comp(comp)
    A = quasi_period_constant(ELL, ps)
    roots = roots or theta_roots(A, ps.p, ps.n)
    return EvaluableFunction(
        ps.ell, lambda t: basis_G(comp, t, ps.alpha, ps.x, ps.eta, ps.p, roots.zeta, roots.xi, trunc),
        _ell_poles(ps.x, ps.eta), A, ELL,
        lambda t: reg_G(comp, t, ps.alpha, ps.x, ps.eta, ps.p, roots.zeta, roots.xi, trunc), ps, f"G{comp}", "theta")


def make_G_prime(comp, ps: ParameterSet, trunc=None, roots: ThetaRoots | None = None) -> EvaluableFunction:
    """G'_l = G_l(t; 1/alpha; y; 1/eta), an element of F'_ell[alpha; y; eta]."""
    comp = _comp(comp)
    A = quasi_period_constant(ELL_PRIME, ps)
    roots = roots or theta_roots(A, ps.p, ps.n)
    a, y, e = 1 / ps.alpha, ps.y, 1 / ps.eta
    return EvaluableFunction(
        ps.ell, lambda t: basis_G(comp, t, a, y, e, ps.p, roots.zeta, roots.xi, trunc), _ell_poles(y, e), A,
        ELL_PRIME, lambda t: reg_G(comp, t, a, y, e, ps.p, roots.zeta, roots.xi, trunc), ps, f"G'{comp}", None)


def _onedim(ps: ParameterSet):
    if ps.ell != 1:
        raise ConfigError("one-variable functions need ell = 1")


def make_onedim_f(k, ps, trunc=None):
    _onedim(ps)
    return EvaluableFunction(1, lambda t: onedim_f(k, np.asarray(t)[..., 0], ps.x, ps.y, trunc),
                             _trig_poles(ps.x, ps.eta), None, TRIG,
                             lambda t: reg_onedim_f(k, np.asarray(t)[..., 0], ps.x, ps.y, trunc), ps, f"f{k}")


def make_onedim_f_prime(k, ps, trunc=None):
    _onedim(ps)
    return EvaluableFunction(1, lambda t: onedim_f_prime(k, np.asarray(t)[..., 0], ps.x, ps.y, trunc),
                             _trig_prime_poles(ps.y, ps.eta), None, TRIG_PRIME,
                             lambda t: reg_onedim_f_prime(k, np.asarray(t)[..., 0], ps.x, ps.y, trunc), ps, f"f'{k}")


def make_onedim_F(k, ps, trunc=None):
    _onedim(ps)
    return EvaluableFunction(1, lambda t: onedim_F(k, np.asarray(t)[..., 0], ps.alpha, ps.x, ps.y, ps.p, trunc),
                             _ell_poles(ps.x, ps.eta), quasi_period_constant(ELL, ps), ELL,
                             lambda t: reg_onedim_F(k, np.asarray(t)[..., 0], ps.alpha, ps.x, ps.y, ps.p, trunc),
                             ps, f"F{k}")


def make_onedim_F_prime(k, ps, trunc=None):
    _onedim(ps)
    return EvaluableFunction(1, lambda t: onedim_F_prime(k, np.asarray(t)[..., 0], ps.alpha, ps.x, ps.y, ps.p, trunc),
                             _ell_poles(ps.y, 1 / ps.eta), quasi_period_constant(ELL_PRIME, ps), ELL_PRIME,
                             lambda t: reg_onedim_F_prime(k, np.asarray(t)[..., 0], ps.alpha, ps.x, ps.y, ps.p, trunc),
                             ps, f"F'{k}")


BASIS_FACTORIES = {
    "w": (TRIG, make_w),
    "w'": (TRIG_PRIME, make_w_prime),
    "W": (ELL, make_W),
    "W'": (ELL_PRIME, make_W_prime),
    "g": (TRIG, make_g),
    "G": (ELL, make_G),
    "G'": (ELL_PRIME, make_G_prime),
}


def basis(tag: str, ps: ParameterSet, trunc=None) -> list[EvaluableFunction]:
    """The named basis in canonical composition order."""
    if tag not in BASIS_FACTORIES:
        raise ConfigError(f"unknown basis tag {tag!r}; choose from {sorted(BASIS_FACTORIES)}")
    make = BASIS_FACTORIES[tag][1]
    return [make(c, ps, trunc) for c in enumerate_compositions(ps.n, ps.ell)]


def quasi_period_probe(f: EvaluableFunction, ps: ParameterSet, seed: int = 0, slot: int = 0,
                       tol: float = 1e-8, trunc=None) -> complex:
    """Measure A from regular(.., p t_a, ..) / regular(t) (-t_a)^n at two random points.

    Raises QuasiPeriodError if the two probes disagree beyond ``tol``.
    """
    if f.regular is None:
        raise ConfigError("quasi-period probe needs the regular part")
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(2):
        t = np.exp(rng.uniform(-0.3, 0.3, f.arity) + 2j * np.pi * rng.uniform(size=f.arity))
        tp = t.copy()
        tp[slot] *= ps.p
        h0 = complex(np.asarray(f.regular(t[None, :])).ravel()[0])
        h1 = complex(np.asarray(f.regular(tp[None, :])).ravel()[0])
        vals.append(h1 / h0 * (-t[slot]) ** ps.n)
    if abs(vals[0] - vals[1]) > tol * max(abs(vals[0]), abs(vals[1])):
        raise QuasiPeriodError(f"quasi-period probes disagree: {vals[0]} vs {vals[1]}")
    return vals[0]


# ---------------------------------------------------------------- collocation


@dataclass(frozen=True)
class CollocationFrame:
    """Sample values of a basis at generic points, used to expand space elements."""

    space: str
    basis_tag: str
    sample_points: np.ndarray
    basis_matrix: np.ndarray  # rows: points, columns: basis elements
    condition_estimate: float
    validation_points: np.ndarray
    validation_matrix: np.ndarray
    params: ParameterSet
    seed: int
    basis_functions: tuple = field(default=(), repr=False)


CONDITION_CAP = 1e10


def _random_points(rng, count, ell, radius=(0.8, 1.25)):
    mod = np.exp(rng.uniform(np.log(radius[0]), np.log(radius[1]), size=(count, ell)))
    return mod * np.exp(2j * np.pi * rng.uniform(size=(count, ell)))


def _good_points(rng, count, fams, ps, ell):
    pts = []
    while len(pts) < count:
        t = _random_points(rng, 1, ell)
        try:
            check_pole_margin(t, fams, ps.p, margin=1e-2)
        except PoleProximityError:
            continue
        pts.append(t[0])
    return np.array(pts)


def _values(funcs, T, use_regular: bool, space, ps, trunc):
    if use_regular:
        return np.stack([np.asarray(f.regular(T)) for f in funcs], axis=-1)
    return np.stack([np.asarray(f.func(T)) for f in funcs], axis=-1)


def build_collocation(space_tag: str, params: ParameterSet, seed: int = 0, trunc=None, basis_tag: str | None = None,
                      retries: int = 8) -> CollocationFrame:
    """Collocation frame for a space, built from its canonical weight basis (or ``basis_tag``).

    Samples N = dim points, evaluates the basis there, and resamples while the
    condition number exceeds the cap.
    """
    default = {TRIG: "w", TRIG_PRIME: "w'", ELL: "W", ELL_PRIME: "W'"}
    if space_tag not in default:
        raise ConfigError(f"unknown space tag {space_tag!r}")
    tag = basis_tag or default[space_tag]
    if BASIS_FACTORIES[tag][0] != space_tag:
        raise ConfigError(f"basis {tag!r} does not span space {space_tag!r}")
    funcs = basis(tag, params, trunc)
    N, ell = len(funcs), params.ell
    fams = funcs[0].pole_divisor
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(retries):
        if ell == 0:
            pts = np.zeros((N, 0), dtype=complex)
            val = np.zeros((2 * N, 0), dtype=complex)
        else:
            pts = _good_points(rng, N, fams, params, ell)
            val = _good_points(rng, 2 * N, fams, params, ell)
        B = _values(funcs, pts, True, space_tag, params, trunc)
        cond = float(np.linalg.cond(B.astype(np.complex128)))
        if best is None or cond < best[2]:
            best = (pts, B, cond, val)
        if cond < CONDITION_CAP:
            break
    pts, B, cond, val = best
    if not cond < CONDITION_CAP:
        raise ConditioningError(f"collocation matrix condition {cond:.3g} above cap {CONDITION_CAP:.1g}")
    V = _values(funcs, val, True, space_tag, params, trunc)
    return CollocationFrame(space_tag, tag, pts, B, cond, val, V, params, seed, tuple(funcs))


def _solve(B, rhs):
    if B.dtype == np.clongdouble:
        import mpmath

        with mpmath.workprec(64):
            Bm = mpmath.matrix([[mpmath.mpc(complex(v)) for v in row] for row in B])
            out = []
            for col in np.atleast_2d(rhs.T):
                sol = mpmath.lu_solve(Bm, mpmath.matrix([mpmath.mpc(complex(v)) for v in col]))
                out.append([complex(sol[i]) for i in range(B.shape[0])])
        return np.array(out, dtype=np.clongdouble).T.reshape(rhs.shape)
    return np.linalg.solve(B, rhs)


def coordinates_of(f: EvaluableFunction, frame: CollocationFrame, tol: float = 1e-8):
    """Coefficients c with f = sum c_k basis_k, certified at the frame's validation points."""
    if f.arity != frame.params.ell:
        raise ConfigError("function arity does not match the frame")
    if frame.params.ell == 0:
        return np.array([complex(np.asarray(f.regular(frame.sample_points)).ravel()[0])]) if f.regular else \
            np.array([complex(f.func(frame.sample_points))])
    same_space = f.space == frame.space and f.regular is not None
    if same_space:
        rhs = np.asarray(f.regular(frame.sample_points))
        check = np.asarray(f.regular(frame.validation_points))
        B, V = frame.basis_matrix, frame.validation_matrix
    else:
        # plain values: scale the regular-part matrices back by the space normalizer
        nb = space_normalizer(frame.space, frame.params, frame.sample_points)
        nv = space_normalizer(frame.space, frame.params, frame.validation_points)
        B = frame.basis_matrix / nb[:, None]
        V = frame.validation_matrix / nv[:, None]
        rhs = np.asarray(f.func(frame.sample_points))
        check = np.asarray(f.func(frame.validation_points))
    c = _solve(B, rhs)
    resid = V @ c - check
    scale = max(float(np.max(np.abs(check))), float(np.max(np.abs(V) @ np.abs(c))), 1e-300)
    rel = float(np.max(np.abs(resid))) / scale
    if not rel <= tol:
        raise MembershipError(f"{f.label or 'function'} is not in space {frame.space}: residual {rel:.3g}")
    return c
