"""Verification suites.

Each ``verify_*`` function evaluates both sides of one identity family and
returns a :class:`CheckReport`. Residuals are relative to the largest magnitude
among the terms being compared; diagonal-type identities are measured entry by
entry against sqrt(|D_i D_j|) so that the check does not depend on how the basis
elements are scaled.
"""

from __future__ import annotations

import cmath
import functools
import inspect
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, NumericalError
from .functions import basis, make_onedim_F, make_onedim_F_prime, make_onedim_f, make_onedim_f_prime
from .indexing import Composition, d_exponent, dominance_ll, enumerate_compositions
from .pairings import (matrix_I, matrix_I_prime, matrix_Q, matrix_S, matrix_S_ell, matrix_X, operator_K,
                       operator_M, pairing_matrix, restricted_matrices)
from .params import ParameterSet
from .qseries import Truncation, phi_series, qpoch_inf, theta, theta_prime_at_1

DEFAULT_TOL = 1e-7


@dataclass
class CheckReport:
    check_name: str
    parameters_digest: str
    max_abs_residual: float
    max_rel_residual: float
    tol: float
    per_entry_residuals: np.ndarray | None = None
    elapsed: float = 0.0
    passed: bool = False
    skipped: bool = False
    details: dict = field(default_factory=dict)
    error: str | None = None

    def parts_view(self) -> dict:
        """(abs, rel) residual of each named part."""
        return {k: (v["abs"], v["rel"]) for k, v in self.details.items() if isinstance(v, dict) and "rel" in v}

    def to_dict(self) -> dict:
        per = None
        if self.per_entry_residuals is not None:
            per = np.asarray(self.per_entry_residuals, dtype=float).tolist()
        return {
            "check_name": self.check_name,
            "parameters_digest": self.parameters_digest,
            "max_abs_residual": self.max_abs_residual,
            "max_rel_residual": self.max_rel_residual,
            "tol": self.tol,
            "pass": self.passed,
            "skipped": self.skipped,
            "elapsed": self.elapsed,
            "per_entry_residuals": per,
            "details": _jsonable(self.details),
            "error": self.error,
        }


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


class _Parts:
    """Accumulates named sub-residuals of one check."""

    def __init__(self):
        self.parts: dict[str, tuple[float, float]] = {}
        self.per_entry = None

    def add(self, name: str, abs_res: float, rel_res: float):
        self.parts[name] = (float(abs_res), float(rel_res))

    def report(self, name, ps_digest, tol, t0, details=None, per_entry=None) -> CheckReport:
        ab = max((a for a, _ in self.parts.values()), default=0.0)
        rel = max((r for _, r in self.parts.values()), default=0.0)
        d = {k: {"abs": a, "rel": r} for k, (a, r) in self.parts.items()}
        if details:
            d.update(details)
        ok = bool(np.isfinite(rel) and rel <= tol)
        return CheckReport(name, ps_digest, ab, rel, tol, per_entry if per_entry is not None else self.per_entry,
                           time.perf_counter() - t0, ok, False, d)


def _failed(name, digest, tol, t0, exc: Exception) -> CheckReport:
    return CheckReport(name, digest, math.inf, math.inf, tol, None, time.perf_counter() - t0, False, False,
                       {"exception": type(exc).__name__}, f"{type(exc).__name__}: {exc}")


def residual(lhs, rhs, scale=None) -> tuple[float, float]:
    """(max abs difference, same divided by the largest term magnitude)."""
    lhs, rhs = np.asarray(lhs, dtype=complex), np.asarray(rhs, dtype=complex)
    ab = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
    if scale is None:
        scale = max(float(np.max(np.abs(lhs))) if lhs.size else 0.0, float(np.max(np.abs(rhs))) if rhs.size else 0.0)
    return ab, (ab / scale if scale > 0 else ab)


def diagonal_residual(lhs: np.ndarray, diag: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Compare a matrix to diag(D) entry by entry, entry (i,j) scaled by sqrt|D_i D_j|."""
    lhs = np.asarray(lhs, dtype=complex)
    D = np.asarray(diag, dtype=complex)
    diff = np.abs(lhs - np.diag(D))
    scale = np.sqrt(np.outer(np.abs(D), np.abs(D)))
    with np.errstate(divide="ignore", invalid="ignore"):
        per = np.where(scale > 0, diff / scale, diff)
    return float(diff.max()), float(per.max()), per


# ---------------------------------------------------------------- closed forms


def _poch(u, p):
    return complex(qpoch_inf(complex(u), p))


def _th(u, p):
    return complex(theta(complex(u), p))


def alpha_block(comp: Composition, m: int, ps: ParameterSet) -> complex:
    """alpha_{l,m} = alpha prod_{j<m} eta^{-2 l_j} x_j / y_j  (m 0-based)."""
    a = ps.alpha
    for j in range(m):
        a *= ps.eta ** (-2 * comp.parts[j]) * ps.x[j] / ps.y[j]
    return a


def trig_norm_M(comp: Composition, ps: ParameterSet) -> complex:
    """M_l = prod_m prod_{s<l_m} (1 - eta^{s+1})(x_m - eta^s y_m) / ((1 - eta) eta^s y_m)."""
    e, out = ps.eta, 1 + 0j
    for m, lm in enumerate(comp.parts):
        for s in range(lm):
            out *= (1 - e ** (s + 1)) * (ps.x[m] - e**s * ps.y[m]) / ((1 - e) * e**s * ps.y[m])
    return out


def ell_norm_N(comp: Composition, ps: ParameterSet) -> complex:
    """N_l, the diagonal of the elliptic Shapovalov form on the W'/W bases (with theta'(1))."""
    e, p = ps.eta, ps.p
    tp = complex(theta_prime_at_1(p))
    out = 1 + 0j
    for m, lm in enumerate(comp.parts):
        am = alpha_block(comp, m, ps)
        r = ps.x[m] / ps.y[m]
        for s in range(lm):
            out *= (e**s * _th(e, p) * _th(e**s / am, p) * _th(e ** (1 - s - lm) * am * r, p)
                    / (tp * _th(e ** (s + 1), p) * _th(e ** (-s) * r, p)))
    return out


def riemann_diagonal(comp: Composition, ps: ParameterSet) -> complex:
    """Diagonal of the dual trigonometric form: the N_l product with (p)_inf^3 in place of theta'(1)."""
    e, p = ps.eta, ps.p
    c3 = _poch(p, p) ** 3
    out = 1 + 0j
    for m, lm in enumerate(comp.parts):
        am = alpha_block(comp, m, ps)
        r = ps.x[m] / ps.y[m]
        for s in range(lm):
            out *= (e**s * _th(e, p) * _th(e**s / am, p) * _th(e ** (1 - s - lm) * am * r, p)
                    / (_th(e ** (s + 1), p) * _th(e ** (-s) * r, p) * c3))
    return out


def _binom(a, b):
    return math.comb(a, b) if a >= 0 and 0 <= b <= a else 0


def _mult(n, ell, s):
    return _binom(n + ell - s - 2, n - 1)


def _alpha_theta_block(ps: ParameterSet, alpha) -> complex:
    """prod_{s=1-l}^{l-1} prod_{m<n} theta(eta^{s+l-1} / (alpha prod_{j<=m} x_j/y_j))^{d(n,m,l,s)}  (reciprocal y/x)."""
    n, ell, e, p = ps.n, ps.ell, ps.eta, ps.p
    out = 1 + 0j
    for s in range(1 - ell, ell):
        for m in range(1, n):
            d = d_exponent(n, m, ell, s)
            if d:
                r = complex(np.prod(np.array(ps.y[:m]) / np.array(ps.x[:m])))
                out *= _th(e ** (s + ell - 1) / alpha * r, p) ** d
    return out


def xi_constant(n: int, ell: int, p) -> complex:
    """[(p)_inf^{1-n^2} prod_{m<n} (theta(w^m)/(w^m - 1))^{n-m}]^{C(n+l-1,n)}, w = exp(2 pi i/n)."""
    w = cmath.exp(2j * cmath.pi / n)
    base = _poch(p, p) ** (1 - n * n)
    for m in range(1, n):
        base *= (_th(w**m, p) / (w**m - 1)) ** (n - m)
    return base ** _binom(n + ell - 1, n)


def det_X_closed(ps: ParameterSet) -> complex:
    n, ell, e = ps.n, ps.ell, ps.eta
    out = 1 + 0j
    for s in range(ell):
        k = _mult(n, ell, s)
        for l in range(n):
            for m in range(l + 1, n):
                out *= (e**s * ps.y[l] - ps.x[m]) ** k
    return out


def det_Q_closed(ps: ParameterSet) -> complex:
    n, ell, e, p = ps.n, ps.ell, ps.eta, ps.p
    out = xi_constant(n, ell, p) * _alpha_theta_block(ps, ps.alpha)
    c = _binom(n + ell - 1, n)
    for m in range(n):
        out *= ps.y[m] ** ((m + 1 - n) * c)
    for s in range(ell):
        k = _mult(n, ell, s)
        for l in range(n):
            for m in range(l + 1, n):
                out *= _th(e**s * ps.y[l] / ps.x[m], p) ** k
    return out


def _F_block(ps: ParameterSet, s: int, extra_p: int, all_pairs: bool) -> complex:
    n, ell, e, p, a = ps.n, ps.ell, ps.eta, ps.p, ps.alpha
    r = complex(np.prod(np.array(ps.x) / np.array(ps.y)))
    num = _poch(1 / e, p) ** n * _poch(e**s / a, p) * _poch(p * e ** (s + 2 - 2 * ell) * a * r, p)
    den = _poch(e ** (-s - 1), p) ** n * _poch(p, p) ** (2 * n - 1 + extra_p)
    if all_pairs:
        for l in range(n):
            for m in range(n):
                den *= _poch(e ** (-s) * ps.x[l] / ps.y[m], p)
    else:
        for m in range(n):
            den *= _poch(e ** (-s) * ps.x[m] / ps.y[m], p)
    return num / den


def det_IW_closed(ps: ParameterSet) -> complex:
    n, ell, e, p = ps.n, ps.ell, ps.eta, ps.p
    out = e ** (-n * _binom(n + ell - 1, n + 1)) * _alpha_theta_block(ps, ps.alpha)
    for s in range(ell):
        u = _F_block(ps, s, 0, False)
        for l in range(n):
            for m in range(l + 1, n):
                u *= _poch(e**s * ps.y[l] / ps.x[m], p) / _poch(e ** (-s) * ps.x[l] / ps.y[m], p)
        out *= u ** _mult(n, ell, s)
    return out


def det_IG_closed(ps: ParameterSet) -> complex:
    n, ell, e = ps.n, ps.ell, ps.eta
    out = e ** (-n * (n + 1) // 2 * _binom(n + ell - 1, n + 1)) / xi_constant(n, ell, ps.p)
    for s in range(ell):
        out *= _F_block(ps, s, n * (n - 1) // 2, True) ** _mult(n, ell, s)
    return out


def det_S_closed(ps: ParameterSet) -> complex:
    n, ell, e, p, a = ps.n, ps.ell, ps.eta, ps.p, ps.alpha
    c = _binom(n + ell - 1, n)
    r = complex(np.prod(np.array(ps.x) / np.array(ps.y)))
    out = xi_constant(n, ell, p) ** -2 * (-1) ** (n * (n - 1) // 2 * c)
    out *= e ** (n * (3 - n) // 2 * _binom(n + ell - 1, n + 1))
    out *= complex(np.prod(np.array(ps.x))) ** ((n - 1) * c)
    tp = complex(theta_prime_at_1(p))
    for s in range(ell):
        v = _th(e, p) ** n * _th(e**s / a, p) * _th(e ** (s + 2 - 2 * ell) * a * r, p)
        v /= tp**n * _th(e ** (s + 1), p) ** n
        for l in range(n):
            for m in range(n):
                v /= _th(e ** (-s) * ps.x[l] / ps.y[m], p)
        out *= v ** _mult(n, ell, s)
    return out


def det_IF_closed(ps: ParameterSet) -> complex:
    r = complex(np.prod(np.array(ps.y) / np.array(ps.x)))
    return _poch(1 / ps.alpha, ps.p) / _poch(r / ps.alpha, ps.p)


def limit_I_diagonal(comp: Composition, ps: ParameterSet) -> complex:
    """Zone limit of I(W_l, w_l) (depends on x, y only through x_m / y_m)."""
    e, p, out = ps.eta, ps.p, 1 + 0j
    for m, lm in enumerate(comp.parts):
        am = alpha_block(comp, m, ps)
        r = ps.x[m] / ps.y[m]
        for s in range(lm):
            out *= (e ** (-s) * _poch(1 / e, p) * _poch(e**s / am, p) * _poch(p * e ** (1 - s - lm) * am * r, p)
                    / (_poch(e ** (-s - 1), p) * _poch(e ** (-s) * r, p) * _poch(p, p)))
    return out


def limit_I_prime_diagonal(comp: Composition, ps: ParameterSet) -> complex:
    """Zone limit of I'(W'_l, w'_l)."""
    e, p, out = ps.eta, ps.p, 1 + 0j
    for m, lm in enumerate(comp.parts):
        am = alpha_block(comp, m, ps)
        r = ps.y[m] / ps.x[m]
        for s in range(lm):
            out *= (-(e ** (-s)) * am * _poch(e, p) * _poch(p * e ** (-s) * am, p)
                    * _poch(e ** (s - 1 + lm) / am * r, p)
                    / (_poch(e ** (s + 1), p) * _poch(e**s * r, p) * _poch(p, p)))
    return out


# ---------------------------------------------------------------- suites


def _digest(ps) -> str:
    try:
        return ps.digest()
    except Exception:  # pragma: no cover - defensive, digest is plain serialization
        return "?"


def _guarded(name: str):
    """Turn machinery exceptions inside a check into a failed report."""

    def wrap(fn):
        sig = inspect.signature(fn)

        @functools.wraps(fn)
        def inner(*args, **kw):
            t0 = time.perf_counter()
            try:
                return fn(*args, **kw)
            except NumericalError as exc:
                bound = sig.bind(*args, **kw)
                bound.apply_defaults()
                ps = next(iter(bound.arguments.values()))
                digest = _digest(ps) if isinstance(ps, ParameterSet) else "-"
                return _failed(name, digest, bound.arguments.get("tol", DEFAULT_TOL), t0, exc)

        return inner

    return wrap


@_guarded("riemann")
def verify_riemann(ps: ParameterSet, trunc: Truncation | None = None, tol: float = DEFAULT_TOL) -> CheckReport:
    """I'^T diag(M) I against the diagonal Shapovalov form, both as entries and as a matrix."""
    t0 = time.perf_counter()
    comps = enumerate_compositions(ps.n, ps.ell)
    I = matrix_I(ps, trunc).entries
    Ip = matrix_I_prime(ps, trunc).entries
    M = np.array([trig_norm_M(c, ps) for c in comps])
    N = np.array([ell_norm_N(c, ps) for c in comps])
    # sum_m M_m I'(W'_l, w'_m) I(W_n, w_m)
    lhs = Ip @ np.diag(M) @ I.T
    parts = _Parts()
    ab, rel, per = diagonal_residual(lhs, (-1) ** ps.ell * N)
    parts.add("sum_form", ab, rel)
    # matrix form: the transposed pairing matrices carry diag(M) to the dual diagonal form
    Ib, Ipb = I.T, Ip.T
    ab2, rel2, _ = diagonal_residual(Ipb.T @ np.diag(M) @ Ib, np.array([riemann_diagonal(c, ps) for c in comps]))
    parts.add("matrix_form", ab2, rel2)
    return parts.report("riemann", _digest(ps), tol, t0, per_entry=per)


@_guarded("biorthogonality")
def verify_biorthogonality(ps: ParameterSet, trunc: Truncation | None = None,
                           tol: float = DEFAULT_TOL) -> CheckReport:
    """S(w'_l, w_m) = delta/M_l and S_ell(W'_l, W_m) = delta N_l."""
    t0 = time.perf_counter()
    comps = enumerate_compositions(ps.n, ps.ell)
    parts = _Parts()
    S = matrix_S(ps, trunc).entries
    ab, rel, per = diagonal_residual(S, [1 / trig_norm_M(c, ps) for c in comps])
    parts.add("trig", ab, rel)
    Se = matrix_S_ell(ps, trunc).entries
    ab, rel, per_e = diagonal_residual(Se, [ell_norm_N(c, ps) for c in comps])
    parts.add("elliptic", ab, rel)
    return parts.report("biorthogonality", _digest(ps), tol, t0, per_entry=np.maximum(per, per_e))


def onedim_matrix(ps: ParameterSet, trunc=None, primed: bool = False) -> np.ndarray:
    """[I(F_l, f_m)] (or [I'(F'_l, f'_m)]) for the one-variable functions."""
    ks = range(1, ps.n + 1)
    if primed:
        left = [make_onedim_F_prime(k, ps, trunc) for k in ks]
        right = [make_onedim_f_prime(k, ps, trunc) for k in ks]
    else:
        left = [make_onedim_F(k, ps, trunc) for k in ks]
        right = [make_onedim_f(k, ps, trunc) for k in ks]
    return pairing_matrix(left, right, ps, primed, trunc)


def _rel_scalar(a, b):
    ab = abs(a - b)
    sc = max(abs(a), abs(b))
    return ab, (ab / sc if sc > 0 else ab)


@_guarded("determinants")
def verify_determinants(ps: ParameterSet, trunc: Truncation | None = None, tol: float = DEFAULT_TOL,
                        seed: int = 0) -> CheckReport:
    """Six determinants against their product formulas."""
    t0 = time.perf_counter()
    parts = _Parts()
    vals = {}
    pairs = {
        "X": (lambda: matrix_X(ps, trunc, seed).det, lambda: det_X_closed(ps)),
        "Q": (lambda: matrix_Q(ps, trunc, seed).det, lambda: det_Q_closed(ps)),
        "IW": (lambda: matrix_I(ps, trunc).det, lambda: det_IW_closed(ps)),
        "IG": (lambda: complex(np.linalg.det(pairing_matrix(basis("G", ps, trunc), basis("g", ps, trunc), ps,
                                                            False, trunc))), lambda: det_IG_closed(ps)),
        "S_ell": (lambda: matrix_S_ell(ps, trunc, left="G'", right="G").det, lambda: det_S_closed(ps)),
    }
    if ps.ell == 1:
        pairs["IF"] = (lambda: complex(np.linalg.det(onedim_matrix(ps, trunc))), lambda: det_IF_closed(ps))
    for name, (num, closed) in pairs.items():
        a, b = num(), closed()
        vals[name] = {"numeric": a, "closed": b}
        parts.add(name, *_rel_scalar(a, b))
    return parts.report("determinants", _digest(ps), tol, t0, details={"values": vals})


@_guarded("qkz")
def verify_qkz(ps: ParameterSet, trunc: Truncation | None = None, tol: float = DEFAULT_TOL,
               seed: int = 0) -> CheckReport:
    """Shifted pairing matrices against K_m I M_m, the primed system and form preservation by K."""
    t0 = time.perf_counter()
    comps = enumerate_compositions(ps.n, ps.ell)
    parts = _Parts()
    Ib = matrix_I(ps, trunc).entries.T
    Ipb = matrix_I_prime(ps, trunc).entries.T
    D = np.diag([trig_norm_M(c, ps) for c in comps])
    for m in range(1, ps.n + 1):
        K = operator_K(m, ps, False, trunc, seed).entries
        Kp = operator_K(m, ps, True, trunc, seed).entries
        Mm = operator_M(m, ps).entries
        sh = ps.shifted(m)
        T = matrix_I(sh, trunc).entries.T
        parts.add(f"m{m}", *residual(T, K @ Ib @ Mm))
        Tp = matrix_I_prime(sh, trunc).entries.T
        parts.add(f"m{m}_primed", *residual(Tp, Kp @ Ipb @ np.linalg.inv(Mm)))
        parts.add(f"m{m}_form", *residual(Kp.T @ D @ K, D))
    return parts.report("qkz", _digest(ps), tol, t0)


def zone_path(template: ParameterSet, rho: float) -> ParameterSet:
    """x_m = c_m rho^{n-m}, y_m = d_m rho^{n-m} with c, d read off the template."""
    n = template.n
    x = tuple(template.x[m] * rho ** (n - 1 - m) for m in range(n))
    y = tuple(template.y[m] * rho ** (n - 1 - m) for m in range(n))
    return template.replace(x=x, y=y)


def _allowed(a: Composition, b: Composition, primed: bool) -> bool:
    if a == b:
        return True
    return dominance_ll(b, a) if primed else dominance_ll(a, b)


@_guarded("asymptotics")
def verify_asymptotics(template: ParameterSet, rho_list: Sequence[float] = (1e-1, 1e-2, 1e-3),
                       trunc: Truncation | None = None, tol: float = 1e-3) -> CheckReport:
    """Diagonal limits and triangular decay of I and I' along the zone path.

    Passes when at the smallest rho the diagonal deviation is within ``tol``,
    the deviation decreases along ``rho_list`` (taken in decreasing order), and
    the entries outside the allowed triangle shrink along the same schedule.
    """
    t0 = time.perf_counter()
    rhos = sorted(rho_list, reverse=True)
    comps = enumerate_compositions(template.n, template.ell)
    parts = _Parts()
    hist = {"rho": list(rhos)}
    ok = True
    for primed in (False, True):
        tag = "I'" if primed else "I"
        limits = np.array([(limit_I_prime_diagonal if primed else limit_I_diagonal)(c, template) for c in comps])
        devs, forb = [], []
        for rho in rhos:
            q = zone_path(template, rho)
            A = (matrix_I_prime(q, trunc) if primed else matrix_I(q, trunc)).entries
            devs.append(float(np.max(np.abs(np.diag(A) - limits) / np.abs(limits))))
            mask = np.array([[not _allowed(a, b, primed) for b in comps] for a in comps])
            scale = np.sqrt(np.outer(np.abs(limits), np.abs(limits)))
            forb.append(float(np.max(np.abs(A)[mask] / scale[mask])) if mask.any() else 0.0)
        hist[f"path_{tag}"] = {"diagonal_deviation": devs, "forbidden_entries": forb}
        parts.add(tag, devs[-1] * float(np.max(np.abs(limits))), devs[-1])
        monotone = all(devs[i + 1] < devs[i] or devs[i + 1] <= 1e-13 for i in range(len(devs) - 1))
        decays = all(forb[i + 1] < forb[i] or forb[i + 1] <= 1e-13 for i in range(len(forb) - 1))
        ok = ok and monotone and decays
        hist[f"path_{tag}"].update(monotone=monotone, forbidden_decay=decays)
    rep = parts.report("asymptotics", _digest(template), tol, t0, details=hist)
    rep.passed = rep.passed and ok
    return rep


REVERSED_MARGIN = 1e-10


def restricted_set(ell_bounds: Sequence[int], ell: int) -> list[Composition]:
    return [c for c in enumerate_compositions(len(ell_bounds), ell)
            if all(v <= b for v, b in zip(c.parts, ell_bounds))]


@_guarded("restricted")
def verify_restricted(ps: ParameterSet, ell_bounds: Sequence[int] | None = None,
                      trunc: Truncation | None = None, tol: float = DEFAULT_TOL) -> CheckReport:
    """Riemann identity for restricted parameters x_m = eta^{l_m} y_m, summed over the restricted set.

    Checks I'_Z M_Z I_Z^T = diag((-1)^l N) on the restricted set Z, the reversed
    product I_Z^T N_Z^{-1} I'_Z = diag(M_Z^{-1}) while all |N| clear the margin,
    and that M vanishes on compositions outside Z.
    """
    t0 = time.perf_counter()
    bounds = tuple(ell_bounds if ell_bounds is not None else ps.restricted_bounds or ())
    if len(bounds) != ps.n:
        raise ConfigError("restricted check needs one bound per coordinate")
    comps = enumerate_compositions(ps.n, ps.ell)
    Z = restricted_set(bounds, ps.ell)
    idx = [comps.index(c) for c in Z]
    parts = _Parts()
    outside = [trig_norm_M(c, ps) for c in comps if c not in Z]
    scale_M = max(abs(trig_norm_M(c, ps)) for c in Z)
    parts.add("M_outside", max((abs(v) for v in outside), default=0.0),
              max((abs(v) for v in outside), default=0.0) / scale_M)
    I, Ip = restricted_matrices(ps, bounds, trunc)
    I, Ip = I[np.ix_(idx, idx)], Ip[np.ix_(idx, idx)]
    M = np.array([trig_norm_M(c, ps) for c in Z])
    N = np.array([(-1) ** ps.ell * ell_norm_N(c, ps) for c in Z])
    ab, rel, per = diagonal_residual(Ip @ np.diag(M) @ I.T, N)
    parts.add("restricted_sum", ab, rel)
    details = {"restricted_set": [str(c) for c in Z], "N_min": float(np.min(np.abs(N)))}
    skip_reversed = bool(np.min(np.abs(N)) < REVERSED_MARGIN)
    if not skip_reversed:
        ab, rel, _ = diagonal_residual(I.T @ np.diag(1 / N) @ Ip, 1 / M)
        parts.add("reversed", ab, rel)
    details["reversed_skipped"] = skip_reversed
    return parts.report("restricted", _digest(ps), tol, t0, details=details, per_entry=per)


# ---- one-variable suite


def _A_coefficients(a, b):
    n = len(a)
    A0 = np.prod(1 - a) / np.prod(1 - b)
    A = [np.prod(a - b[k]) / ((1 - b[k]) * np.prod([b[m] - b[k] for m in range(n - 1) if m != k]))
         for k in range(n - 1)]
    return A0, A


def _put(v, k, val):
    v = list(v)
    v[k] = val
    return v


def bilinear_identities(a, b, z, p, trunc=None) -> dict[str, tuple[complex, complex]]:
    """Both sides of the general-n bilinear identities for the n phi n-1 series.

    Four families, keyed "E1".."E4". The first and third share their left side.
    """
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    n = len(a)
    zt = z * np.prod(a) / np.prod(b)
    A0, A = _A_coefficients(a, b)

    def phi(aa, bb, zz):
        return complex(phi_series(aa, bb, p, zz, trunc))

    b1 = b[0]
    rest = range(1, n - 1)
    out = {}
    base = phi(a, b, z)

    lhs = base * phi(1 / a, 1 / b, zt)
    rhs = 1 + sum(z**2 * A0 * A[m] / ((1 - p * b[m]) * (p - b[m]))
                  * phi(p * a, _put(p * b, m, p * p * b[m]), z)
                  * phi(p / a, _put(p / b, m, p * p / b[m]), zt) for m in range(n - 1))
    out["E1"] = (lhs, rhs)

    lhs = base * phi(p * b1 / a, [p * p * b1] + [p * b1 / b[j] for j in rest], zt)
    rhs = (phi(p * a, [p * p * b1] + [p * b[j] for j in rest], z)
           * phi(b1 / a, [b1] + [b1 / b[j] for j in rest], zt))
    for m in rest:
        lst = [p * b1] + [(p * p if j == m else p) * b1 / b[j] for j in rest]
        rhs += (z * A[m] * (1 - p * b1) / ((1 - p * b[m]) * (b[m] - p * b1))
                * phi(p * a, _put(p * b, m, p * p * b[m]), z) * phi(p * b1 / a, lst, zt))
    out["E2"] = (lhs, rhs)

    lhs = base * phi(1 / a, 1 / b, zt)
    rhs = 1 + 0j
    for m in range(n - 1):
        l1 = [p * p / b[m] if j == m else p * b[j] / b[m] for j in range(n - 1)]
        l2 = [p * p * b[m] if j == m else p * b[m] / b[j] for j in range(n - 1)]
        rhs += (z**2 * A0 * A[m] / ((1 - p * b[m]) * (p - b[m]))
                * phi(p * a / b[m], l1, z) * phi(p * b[m] / a, l2, zt))
    out["E3"] = (lhs, rhs)

    lhs = base * phi(p / a, [p * p / b1] + [p / b[j] for j in rest], zt)
    rhs = (phi(p * a / b1, [p * p / b1] + [p * b[j] / b1 for j in rest], z)
           * phi(b1 / a, [b1] + [b1 / b[j] for j in rest], zt))
    for m in rest:
        l1 = [p * p / b[m] if j == m else p * b[j] / b[m] for j in range(n - 1)]
        l2 = [p * b[m], p * p * b[m] / b1] + [p * b[m] / b[j] for j in rest if j != m]
        rhs += (z * A[m] * (p - b1) / ((p - b[m]) * (b1 - p * b[m]))
                * phi(p * a / b[m], l1, z) * phi(p * b[m] / a, l2, zt))
    out["E4"] = (lhs, rhs)
    return out


def heine_identity(a, b, z, p, trunc=None) -> tuple[complex, complex]:
    """2phi1(a1,a2;b;z)(z)_inf against 2phi1(b/a1,b/a2;b;z a1 a2/b)(z a1 a2/b)_inf."""
    a = np.asarray(a, dtype=complex)
    b = complex(np.asarray(b, dtype=complex).ravel()[0])
    zt = z * a[0] * a[1] / b
    lhs = complex(phi_series(a, [b], p, z, trunc)) * _poch(z, p)
    rhs = complex(phi_series(b / a, [b], p, zt, trunc)) * _poch(zt, p)
    return lhs, rhs


def three_phi_two_identities(a, b, z, p, trunc=None) -> dict[str, tuple[complex, complex]]:
    """The two n = 3 bilinear identities, keyed "first" and "second"."""
    a = np.asarray(a, dtype=complex)
    b1, b2 = (complex(v) for v in b)
    zt = z * np.prod(a) / (b1 * b2)
    ratio = _poch(z, p) / _poch(zt, p)

    def phi(aa, bb, zz):
        return complex(phi_series(aa, bb, p, zz, trunc))

    lhs = phi(a, [b1, b2], z) * ratio
    c = (np.prod(a - b1) * np.prod(a - b2)
         / ((1 - b1) * (1 - b2) * (b1 - b2) ** 2 * (b1 - p * b2) * (p * b1 - b2)))
    rhs = (phi(b1 / a, [b1, b1 / b2], zt) * phi(b2 / a, [b2, b2 / b1], zt)
           - z**2 * c * phi(p * b1 / a, [p * b1, p * p * b1 / b2], zt) * phi(p * b2 / a, [p * b2, p * p * b2 / b1], zt))
    out = {"first": (lhs, rhs)}
    lhs = phi(p * a, [p * p * b1, p * b2], z) * ratio
    c = (1 - p * b1) * np.prod(a - b2) / ((1 - b2) * (1 - p * b2) * (b1 - b2) * (p * b1 - b2))
    rhs = (phi(p * b1 / a, [p * p * b1, p * b1 / b2], zt) * phi(b2 / a, [b2, b2 / b1], zt)
           + z * c * phi(p * b1 / a, [p * b1, p * p * b1 / b2], zt) * phi(p * b2 / a, [p * p * b2, p * b2 / b1], zt))
    out["second"] = (lhs, rhs)
    return out


def sample_series_args(n: int, rng: np.random.Generator, zmax: float = 0.5):
    """Random (a, b, z, p) with |z|, |z~| below zmax and b away from the p^(-k) poles."""
    from .qseries import lattice_distance

    while True:
        p = 0.3 * rng.uniform(0.3, 1.0) * np.exp(2j * np.pi * rng.random())
        a = rng.uniform(0.4, 1.6, n) * np.exp(2j * np.pi * rng.random(n))
        b = rng.uniform(0.4, 1.6, n - 1) * np.exp(2j * np.pi * rng.random(n - 1))
        z = rng.uniform(0.05, zmax) * np.exp(2j * np.pi * rng.random())
        zt = z * np.prod(a) / np.prod(b)
        if abs(zt) >= zmax:
            continue
        # every series above has lower parameters of the form p^k b^{+-1}, p^k b_i/b_j
        cand = list(b) + list(1 / b) + [b[i] / b[j] for i in range(n - 1) for j in range(n - 1) if i != j]
        if all(lattice_distance(c, p) > 1e-2 for c in cand):
            return a, b, complex(z), complex(p)


def _series_parts(parts: _Parts, tag: str, pairs):
    for k, (l, r) in pairs.items():
        parts.add(f"{tag}:{k}", *_rel_scalar(l, r))


def verify_series(n: int, draws: int = 100, seed: int = 0, trunc: Truncation | None = None,
                  tol: float = 1e-9) -> CheckReport:
    """The series identities at random admissible arguments (no integrals involved)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = _Parts()
    for _ in range(draws):
        a, b, z, p = sample_series_args(n, rng)
        parts = _Parts()
        _series_parts(parts, "general", bilinear_identities(a, b, z, p, trunc))
        if n == 2:
            parts.add("heine", *_rel_scalar(*heine_identity(a, b, z, p, trunc)))
        if n == 3:
            _series_parts(parts, "3phi2", three_phi_two_identities(a, b, z, p, trunc))
        for k, (ab, rel) in parts.parts.items():
            old = worst.parts.get(k, (0.0, 0.0))
            worst.add(k, max(old[0], ab), max(old[1], rel))
    return worst.report(f"series_n{n}", f"seed{seed}", tol, t0, details={"draws": draws})


@_guarded("onedim")
def verify_onedim(ps: ParameterSet, trunc: Truncation | None = None, tol: float = 1e-8,
                  series_draws: int = 20, seed: int = 0) -> CheckReport:
    """Orthogonality sums of the one-variable pairings plus the series identities for this n."""
    t0 = time.perf_counter()
    if ps.ell != 1:
        raise ConfigError("the one-variable suite needs ell = 1")
    n = ps.n
    parts = _Parts()
    A = onedim_matrix(ps, trunc)
    Ap = onedim_matrix(ps, trunc, primed=True)
    # sum_m I(F_k,f_m) I'(F'_l,f'_m) and sum_m I(F_m,f_k) I'(F'_m,f'_l)
    parts.add("rows", *residual(A @ Ap.T, np.eye(n), scale=1.0))
    parts.add("columns", *residual(A.T @ Ap, np.eye(n), scale=1.0))
    # first entries against series
    r = complex(np.prod(np.array(ps.x) / np.array(ps.y)))
    at = ps.alpha * r
    x, y = np.array(ps.x), np.array(ps.y)
    if abs(1 / at) < 1:
        parts.add("I11_series", *_rel_scalar(A[0, 0], complex(phi_series(x / y[0], y[1:] / y[0], ps.p, 1 / at, trunc))))
    if abs(1 / ps.alpha) < 1:
        parts.add("I'11_series",
                  *_rel_scalar(Ap[0, 0], complex(phi_series(y[0] / x, y[0] / y[1:], ps.p, 1 / ps.alpha, trunc))))
    if n <= 4 and series_draws:
        s = verify_series(n, series_draws, seed, trunc, tol)
        for k, v in s.parts_view().items():
            parts.add(k, *v)
    return parts.report("onedim", _digest(ps), tol, t0, details={"n": n})


# ---- scale covariance and the shift invariance of the diagonal form


@_guarded("scale_covariance")
def verify_scale_covariance(ps: ParameterSet, lam: complex = 1.7 * cmath.exp(0.4j),
                            trunc: Truncation | None = None, tol: float = DEFAULT_TOL) -> CheckReport:
    """Riemann residual is unchanged (within 2 tol) when x and y are rescaled together."""
    t0 = time.perf_counter()
    a = verify_riemann(ps, trunc, tol=tol)
    q = ps.replace(x=tuple(lam * v for v in ps.x), y=tuple(lam * v for v in ps.y))
    b = verify_riemann(q, trunc, tol=tol)
    parts = _Parts()
    parts.add("original", a.max_abs_residual, a.max_rel_residual)
    parts.add("rescaled", b.max_abs_residual, b.max_rel_residual)
    rep = parts.report("scale_covariance", _digest(ps), 2 * tol, t0)
    rep.passed = a.passed and b.passed and b.max_rel_residual <= 2 * tol
    return rep


@_guarded("shift_invariance")
def verify_shift_invariance(ps: ParameterSet, trunc: Truncation | None = None, tol: float = DEFAULT_TOL) -> CheckReport:
    """G = I' diag(M) I^T transforms under each shift T_k by mu_{l,k}^{-1} mu_{m,k}."""
    t0 = time.perf_counter()
    comps = enumerate_compositions(ps.n, ps.ell)

    def gram(q):
        M = np.diag([trig_norm_M(c, q) for c in comps])
        return matrix_I_prime(q, trunc).entries @ M @ matrix_I(q, trunc).entries.T

    G = gram(ps)
    parts = _Parts()
    for k in range(1, ps.n + 1):
        Gk = gram(ps.shifted(k))
        mu = np.diag(operator_M(k, ps).entries)
        parts.add(f"k{k}", *residual(Gk, G * np.outer(1 / mu, mu)))
    return parts.report("shift_invariance", _digest(ps), tol, t0)


SUITES = ("riemann", "biorthogonality", "determinants", "qkz", "asymptotics", "restricted", "onedim")
