"""Residue functionals, Shapovalov pairings, Jackson sums for the
hypergeometric integrals, and the matrices built from them.

Conventions used throughout:

* a ladder point in block m reads (e^{1-k} b_m, ..., e^{-1} b_m, b_m) for base b
  and step e, and a shifted one multiplies position j by p^(s_j + ... + s_k);
* the integrand of I(fe, ft) is written as
  ``c * H(t) * P(t) * prod t_a^{1-n} * prod_{a != b} (t_a/t_b)_inf * PhiTilde(t)``
  where H is the entire part of fe and P the polynomial part of ft;
* Jackson sums are evaluated as exact sums of residues, walking from the
  unshifted ladder with exact one-step ratios so nothing overflows in deep shells.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, NonSimplePoleError, PoleProximityError, QuasiPeriodError, TailBoundError
from .functions import (ELL, ELL_PRIME, TRIG, TRIG_PRIME, EvaluableFunction, basis, build_collocation,
                        coordinates_of, make_w, make_w_prime, phase_phi, quasi_period_probe)
from .indexing import Composition, LadderPoint, enumerate_compositions, shifted_ladder_point
from .params import ParameterSet, convergence_margin, jackson_ratios
from .qseries import DEFAULT_TRUNCATION, Truncation, qpoch_fin, qpoch_inf, theta, theta_prime_at_1

QUASI_PERIOD_TOL = 1e-8
# a shell this many times larger than the smallest one so far means divergence
DIVERGENCE_FACTOR = 1e6


def _trunc(trunc):
    return DEFAULT_TRUNCATION if trunc is None else trunc


@dataclass(frozen=True)
class PairingMatrix:
    """Square matrix indexed by compositions in canonical order."""

    order: tuple
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.shape != (len(self.order), len(self.order)):
            raise ConfigError(f"entries shape {e.shape} does not match {len(self.order)} compositions")

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.entries.astype(np.complex128)))

    def index(self, comp) -> int:
        return self.order.index(comp if isinstance(comp, Composition) else Composition(tuple(comp)))

    def __getitem__(self, key):
        a, b = key
        return self.entries[self.index(a), self.index(b)]


def _pm(ps: ParameterSet, entries) -> PairingMatrix:
    return PairingMatrix(tuple(enumerate_compositions(ps.n, ps.ell)), np.asarray(entries))


# ---------------------------------------------------------------- numeric residues


@dataclass(frozen=True)
class ResidueScheme:
    """Step schedule for the numeric iterated residue.

    Coordinate a is perturbed as t_a = t*_a (1 + h_a) with h_a = h * ratio^(a)
    so inner variables approach their poles much faster than outer ones.
    """

    h: float = 1e-2
    ratio: float = 1e-2
    tol: float = 1e-6
    fallback: float = 0.25


def _richardson(g0, g1, g2):
    # steps h, h/2, h/4: removes the O(h) and O(h^2) terms
    return (8 * g2 - 6 * g1 + g0) / 3


def _nested_limit(g: Callable, center: np.ndarray, steps: Sequence[float]):
    ell = center.size
    factors = np.array([1.0, 0.5, 0.25])
    grid = np.array(list(itertools.product(range(3), repeat=ell)))
    eps = np.array([[steps[a] * factors[i] for a, i in enumerate(row)] for row in grid])
    T = center[None, :] * (1 + eps)
    raw = np.asarray(g(T)).reshape((3,) * ell)
    vals = raw
    # innermost variable (last coordinate) first
    for axis in range(ell - 1, -1, -1):
        v0 = np.take(vals, 0, axis=axis)
        v1 = np.take(vals, 1, axis=axis)
        v2 = np.take(vals, 2, axis=axis)
        vals = _richardson(v0, v1, v2)
    # growth check on the innermost axis: |g| doubling per halving means a double pole
    inner = raw[(0,) * (ell - 1) + (slice(None),)]
    return complex(vals), np.abs(inner), float(np.max(np.abs(raw)))


def multiple_residue(f: Callable, point, scheme: ResidueScheme | None = None) -> complex:
    """Iterated residue at ``point``, t_l first, as the limit of prod (t_a - t*_a) f(t)."""
    scheme = scheme or ResidueScheme()
    center = (point.as_array() if isinstance(point, LadderPoint) else np.asarray(point, dtype=complex)).ravel()
    ell = center.size
    if ell == 0:
        return complex(np.asarray(f(np.zeros((1, 0), dtype=complex))).ravel()[0])

    def g(T):
        return np.asarray(f(T)) * np.prod(T - center[None, :], axis=-1)

    def run(h):
        steps = [h * scheme.ratio**a for a in range(ell)]
        return _nested_limit(g, center, steps)

    try:
        r1, inner, gmax = run(scheme.h)
        r2, _, _ = run(scheme.h * scheme.fallback)
    except (PoleProximityError, ZeroDivisionError, FloatingPointError) as exc:
        raise PoleProximityError(f"residue evaluation hit a pole: {exc}") from None
    if inner[2] > 1.8 * inner[1] > 3.2 * inner[0] and inner[2] > 1e-200:
        raise NonSimplePoleError("extrapolation diverges: the pole is not simple")
    if gmax == 0.0:
        return 0j
    if abs(r1 - r2) <= 10 * scheme.tol * max(abs(r1), abs(r2)):
        return r2
    r3, _, _ = run(scheme.h * scheme.fallback**2)
    d12, d23 = abs(r1 - r2), abs(r2 - r3)
    if d23 <= 10 * scheme.tol * max(abs(r3), abs(r2)):
        return r3
    # estimates shrinking geometrically towards zero: no pole at this point
    if d23 <= d12 / 2 and abs(r3) <= 2 * d23:
        return 0j
    raise NonSimplePoleError(f"residue estimates disagree: {r1}, {r2}, {r3}")


# ---------------------------------------------------------------- exact residues of space products

# normalizer description: (kind, base, step, power of prod t)
#   trig: prod t^-1 prod (t - b) prod_{c<d} (e t_c - t_d) / (t_c - t_d), times prod t^power
#   ell:  prod theta(t/b) prod_{c<d} theta(e t_c/t_d) / theta(t_c/t_d)


def normalizer_data(space: str, ps: ParameterSet):
    if space == TRIG:
        return ("trig", ps.x, ps.eta, 0)
    if space == TRIG_PRIME:
        return ("trig", ps.y, 1 / ps.eta, 1)
    if space == ELL:
        return ("ell", ps.x, ps.eta, 0)
    if space == ELL_PRIME:
        return ("ell", ps.y, 1 / ps.eta, 0)
    raise ConfigError(f"unknown space tag {space!r}")


def _same(a, b) -> bool:
    return np.allclose(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex), rtol=1e-14, atol=0)


def _vanishing_sets(comp: Composition):
    ends = {blk.stop - 1: m for m, blk in enumerate(comp.blocks()) if len(blk)}
    pairs = {(j, j + 1) for blk in comp.blocks() for j in list(blk)[:-1]}
    return ends, pairs


def _normalizer_value(ndata, T, comp: Composition | None, p, trunc=None):
    """The normalizer at T; with ``comp`` set, its reduced form on the ladder of that composition."""
    kind, base, e, power = ndata
    ends, pairs = _vanishing_sets(comp) if comp is not None else ({}, set())
    ell = T.shape[-1]
    out = np.ones(T.shape[:-1], dtype=T.dtype)
    tp = theta_prime_at_1(p, trunc) if kind == "ell" else None
    for a in range(ell):
        if kind == "trig":
            out = out * T[..., a] ** (power - 1)
        for m, b in enumerate(base):
            if ends.get(a) == m:
                if kind == "ell":
                    out = out * tp / b
                continue
            out = out * ((T[..., a] - b) if kind == "trig" else theta(T[..., a] / b, p, trunc))
    for c in range(ell):
        for d in range(c + 1, ell):
            if kind == "trig":
                num = e if (c, d) in pairs else e * T[..., c] - T[..., d]
                out = out * num / (T[..., c] - T[..., d])
            else:
                num = tp * e / T[..., d] if (c, d) in pairs else theta(e * T[..., c] / T[..., d], p, trunc)
                out = out * num / theta(T[..., c] / T[..., d], p, trunc)
    return out


def ladder_residue(f: EvaluableFunction, g: EvaluableFunction, comp, base, step, ps: ParameterSet,
                   trunc=None) -> complex:
    """Res of prod t^-1 f g at the ladder base|>comp[step], exactly.

    The simple poles come from the normalizers of f and g whose ladder matches;
    those normalizers are replaced by their reduced forms.
    """
    comp = comp if isinstance(comp, Composition) else Composition(tuple(comp))
    pt = shifted_ladder_point(base, comp, (0,) * comp.ell, step, ps.p)
    T = pt.as_array()[None, :]
    out = 1 / np.prod(T, axis=-1)
    hits = 0
    for h in (f, g):
        if h.regular is None or h.space is None:
            raise ConfigError("exact residues need functions with a space and a regular part")
        ndata = normalizer_data(h.space, ps)
        match = _same(ndata[1], base) and _same(ndata[2], step)
        hits += match
        out = out * np.asarray(h.regular(T)) / _normalizer_value(ndata, T, comp if match else None, ps.p, trunc)
    if not hits:
        return 0j
    return complex(np.asarray(out).ravel()[0])


def res_functional(f, base, eta, ps: ParameterSet, exact: bool = True, scheme: ResidueScheme | None = None,
                   trunc=None) -> complex:
    """Sum over compositions of the iterated residue of prod t^-1 f at base|>m[eta].

    ``f`` is either one callable (numeric residues) or a pair of space elements
    whose product is the integrand (exact residues unless ``exact`` is False).
    """
    comps = enumerate_compositions(ps.n, ps.ell)
    if ps.ell == 0:
        if isinstance(f, tuple):
            return complex(np.asarray(f[0].func(np.zeros((1, 0)))).ravel()[0] *
                           np.asarray(f[1].func(np.zeros((1, 0)))).ravel()[0])
        return complex(np.asarray(f(np.zeros((1, 0)))).ravel()[0])
    if isinstance(f, tuple) and exact:
        a, b = f
        return sum(ladder_residue(a, b, c, base, eta, ps, trunc) for c in comps)
    if isinstance(f, tuple):
        a, b = f
        func = lambda T: np.asarray(a.func(T)) * np.asarray(b.func(T))
    else:
        func = f
    integrand = lambda T: np.asarray(func(T)) / np.prod(T, axis=-1)
    total = 0j
    for c in comps:
        pt = shifted_ladder_point(base, c, (0,) * ps.ell, eta, ps.p)
        total += multiple_residue(integrand, pt, scheme)
    return total


def _check_space(f, space, what):
    if f.space != space:
        raise ConfigError(f"{what} expects an element of {space}, got {f.space}")


def shapovalov_S(f: EvaluableFunction, g: EvaluableFunction, ps: ParameterSet, trunc=None) -> complex:
    """S(f, g) for f in F'[y;eta], g in F[x;eta]."""
    _check_space(f, TRIG_PRIME, "shapovalov_S")
    _check_space(g, TRIG, "shapovalov_S")
    return res_functional((f, g), ps.x, ps.eta, ps, trunc=trunc)


def shapovalov_S_ell(f: EvaluableFunction, g: EvaluableFunction, ps: ParameterSet, trunc=None) -> complex:
    """S_ell(f, g) for f in F'_ell[alpha;y;eta], g in F_ell[alpha;x;eta]."""
    _check_space(f, ELL_PRIME, "shapovalov_S_ell")
    _check_space(g, ELL, "shapovalov_S_ell")
    return res_functional((f, g), ps.x, ps.eta, ps, trunc=trunc)


# ---------------------------------------------------------------- Jackson sums


def phi_tilde_reduced(t, comp, s, x, y, eta, p, side: str = "x", trunc=None):
    """prod t^-1 PhiTilde with its ladder-vanishing factors reduced: the exact residue
    of PhiTilde prod t^-1 at the shifted ladder, up to the sign (-1)^l on the y side."""
    comp = comp if isinstance(comp, Composition) else Composition(tuple(comp))
    T = np.asarray(t, dtype=complex).reshape(-1)
    s = [abs(int(v)) for v in s]
    ell = T.size
    ends, pairs = _vanishing_sets(comp)
    pp = qpoch_inf(p, p, trunc)

    def red(k):
        return qpoch_fin(p ** (-k), p, k, trunc) * pp

    den = 1 + 0j
    for a in range(ell):
        for m, (xm, ym) in enumerate(zip(x, y)):
            if ends.get(a) == m and side == "x":
                den *= red(s[a]) * qpoch_inf(T[a] / ym, p, trunc)
            elif ends.get(a) == m:
                den *= qpoch_inf(xm / T[a], p, trunc) * red(s[a])
            else:
                den *= qpoch_inf(xm / T[a], p, trunc) * qpoch_inf(T[a] / ym, p, trunc)
        for b in range(ell):
            if a == b:
                continue
            # x side: (t_{j+1}/(eta t_j)) vanishes; y side: (t_j/(eta t_{j+1}))
            if side == "x" and (b, a) in pairs:
                den *= red(s[b])
            elif side == "y" and (a, b) in pairs:
                den *= red(s[a])
            else:
                den *= qpoch_inf(T[a] / (eta * T[b]), p, trunc)
    return 1 / den


def _cross_poch(T, p, trunc=None):
    ell = T.shape[-1]
    out = np.ones(T.shape[:-1], dtype=T.dtype)
    for a in range(ell):
        for b in range(ell):
            if a != b:
                out = out * qpoch_inf(T[..., a] / T[..., b], p, trunc)
    return out


def _shift_ratio(T, a, X, Y, eta, p, A, n):
    """C(.., p t_a, ..) / C(t) for the walked weight C = H-ratio * prod t^{1-n} * cross * PhiTilde."""
    ta = T[:, a]
    r = A * (-ta) ** (-n) * p ** (1 - n)
    for b in range(T.shape[1]):
        if b == a:
            continue
        tb = T[:, b]
        r = r * (1 - tb / (p * ta)) / (1 - ta / tb)
        r = r * (1 - ta / (eta * tb)) / (1 - tb / (p * eta * ta))
    for Xm, Ym in zip(X, Y):
        r = r * (1 - ta / Ym) / (1 - Xm / (p * ta))
    return r


def _walk(T, C, positions, side, shift, setup):
    """Apply p-shifts (x side) or 1/p-shifts (y side) to ``positions`` in order; T is updated in place."""
    for pos in positions:
        if side == "x":
            C = C * complex(_shift_ratio(T[None, :], pos, setup.x, setup.y, setup.eta, setup.p, setup.A, setup.n)[0])
            T[pos] *= shift
        else:
            T[pos] *= shift
            C = C / complex(_shift_ratio(T[None, :], pos, setup.x, setup.y, setup.eta, setup.p, setup.A, setup.n)[0])
    return C


def _shells(ell: int, k: int):
    if ell == 0:
        return [()] if k == 0 else []
    out = []
    for c in itertools.combinations(range(k + ell - 1), ell - 1):
        prev, parts = -1, []
        for v in c:
            parts.append(v - prev - 1)
            prev = v
        parts.append(k + ell - 2 - prev)
        out.append(tuple(parts))
    return out


@dataclass(frozen=True)
class JacksonSetup:
    """Data of one Jackson sum family: x, y, eta are those of the phase function."""

    x: tuple
    y: tuple
    eta: complex
    p: complex
    A: complex
    n: int
    ell: int


@dataclass
class JacksonResult:
    value: np.ndarray
    side: str
    shells: int
    tail_bound: float
    ratio: float


def _ladder_base(setup: JacksonSetup, side: str):
    return (setup.x, setup.eta) if side == "x" else (setup.y, 1 / setup.eta)


def jackson_bilinear(H: Sequence[Callable], P: Sequence[Callable], setup: JacksonSetup, side: str = "x",
                     trunc: Truncation | None = None) -> JacksonResult:
    """Matrix (1/l!) Int of c H_i P_j prod t^{1-n} prod (t_a/t_b) PhiTilde as exact Jackson sums.

    Every H_i must be entire with H(.., p t_a, ..) = A (-t_a)^{-n} H(t), every P_j a
    polynomial; c = (p)_inf^{-nl} eta^{-l(l-1)/2}. Shells are enumerated by
    total shift and summation stops once a whole shell, measured in absolute
    values, falls below ``series_tail_tol`` relative to the accumulated sum
    together with its geometric tail estimate.
    """
    trunc = _trunc(trunc)
    ell, n, p, eta = setup.ell, setup.n, setup.p, setup.eta
    nH, nP = len(H), len(P)
    if ell == 0:
        return JacksonResult(np.ones((nH, nP), dtype=complex), side, 0, 0.0, 0.0)
    if side not in ("x", "y"):
        raise ConfigError(f"side must be 'x' or 'y', got {side!r}")
    base, step = _ladder_base(setup, side)
    shift = p if side == "x" else 1 / p
    comps = enumerate_compositions(n, ell)
    const = qpoch_inf(p, p, trunc) ** (-n * ell) * eta ** (-ell * (ell - 1) / 2)
    states = []
    for comp in comps:
        t0 = shifted_ladder_point(base, comp, (0,) * ell, step, p).as_array()[None, :]
        h0 = np.array([complex(np.asarray(h(t0)).ravel()[0]) for h in H])
        c0 = complex(phi_tilde_reduced(t0[0], comp, (0,) * ell, setup.x, setup.y, eta, p, side, trunc)
                     * _cross_poch(t0, p, trunc)[0] * np.prod(t0[0]) ** (1 - n))
        owner = comp.block_of()
        start = [comp.blocks()[owner[j]].start for j in range(ell)]
        states.append({"comp": comp, "H0": h0, "start": start, "layer": {(0,) * ell: (t0[0], c0)}})
    total = np.zeros((nH, nP), dtype=complex)
    acc_max = 0.0
    prev_shell = None
    min_shell = math.inf
    ratio = math.inf
    cap = trunc.jackson_shell_max
    for k in range(cap + 1):
        shell_abs = np.zeros((nH, nP))
        shell_sum = np.zeros((nH, nP), dtype=complex)
        for st in states:
            layer = st["layer"]
            keys = _shells(ell, k)
            if k == 0:
                new = layer
            else:
                new = {}
                for s in keys:
                    j = next(i for i, v in enumerate(s) if v)
                    parent = s[:j] + (s[j] - 1,) + s[j + 1:]
                    T, C = layer[parent]
                    T = T.copy()
                    try:
                        C = _walk(T, C, range(st["start"][j], j + 1), side, shift, setup)
                    except ZeroDivisionError:
                        raise TailBoundError(f"Jackson walk ({side} side) hit a vanishing factor") from None
                    new[s] = (T, C)
                st["layer"] = new
            pts = np.array([new[s][0] for s in keys])
            cs = np.array([new[s][1] for s in keys])
            pv = np.stack([np.asarray(pf(pts)).reshape(len(keys)) for pf in P], axis=-1)
            vec = cs @ pv
            vabs = np.abs(cs) @ np.abs(pv)
            shell_sum += np.outer(st["H0"], vec)
            shell_abs += np.outer(np.abs(st["H0"]), vabs)
        shell_sum *= const
        shell_abs *= abs(const)
        total += shell_sum
        acc_max = max(acc_max, float(np.max(np.abs(total))))
        cur = float(np.max(shell_abs))
        if prev_shell is not None and prev_shell > 0:
            ratio = cur / prev_shell
        prev_shell = cur
        if not math.isfinite(cur) or not np.all(np.isfinite(total)):
            raise TailBoundError(f"Jackson sum ({side} side) overflowed at shell {k}")
        if cur == 0.0 and k > 0:
            return JacksonResult(total, side, k, 0.0, 0.0)
        min_shell = min(min_shell, cur)
        if k >= 8 and cur > DIVERGENCE_FACTOR * min_shell:
            raise TailBoundError(f"Jackson sum ({side} side) diverges: shell ratio {ratio:.3g} at shell {k}")
        if k >= 2 and ratio < 1:
            bound = cur * ratio / (1 - ratio)
            if cur <= trunc.series_tail_tol * acc_max and bound <= trunc.series_tail_tol * acc_max:
                return JacksonResult(total, side, k, bound, ratio)
    raise TailBoundError(f"Jackson sum ({side} side) not converged after {cap} shells; last shell ratio {ratio:.3g}")


def jackson_integral(H: Callable, P: Callable, setup: JacksonSetup, side: str = "auto",
                     trunc: Truncation | None = None) -> complex:
    """Scalar Jackson sum; see :func:`jackson_bilinear` for the integrand shape.

    ``side='auto'`` tries the x side first and falls back to the y side.
    """
    res = _jackson_auto([H], [P], setup, side, trunc)
    return complex(res.value[0, 0])


def _jackson_auto(H, P, setup, side, trunc, prefer="x"):
    if side != "auto":
        return jackson_bilinear(H, P, setup, side, trunc)
    order = [prefer, "y" if prefer == "x" else "x"]
    last = None
    for sd in order:
        try:
            return jackson_bilinear(H, P, setup, sd, trunc)
        except (TailBoundError, OverflowError, FloatingPointError) as exc:
            last = exc
    raise TailBoundError(f"Jackson sum diverges on both sides: {last}")


def _setup_I(ps: ParameterSet, A) -> JacksonSetup:
    return JacksonSetup(ps.x, ps.y, ps.eta, ps.p, A, ps.n, ps.ell)


def _setup_I_prime(ps: ParameterSet, A) -> JacksonSetup:
    return JacksonSetup(ps.y, ps.x, 1 / ps.eta, ps.p, A, ps.n, ps.ell)


def _prefer(ps: ParameterSet, primed: bool) -> str:
    r = jackson_ratios(ps)
    key = "I'" if primed else "I"
    return "x" if r[f"{key}:x"] <= r[f"{key}:y"] else "y"


def extract_quasi_period(f: EvaluableFunction, ps: ParameterSet) -> complex:
    """A measured at two probe points, checked against the declared constant."""
    A = quasi_period_probe(f, ps, tol=QUASI_PERIOD_TOL)
    if f.quasi_period is not None and abs(A - f.quasi_period) > QUASI_PERIOD_TOL * abs(f.quasi_period):
        raise QuasiPeriodError(f"measured quasi-period {A} differs from the declared {f.quasi_period}")
    return A if f.quasi_period is None else f.quasi_period


def _trig_poly(ft: EvaluableFunction, ps: ParameterSet, primed: bool):
    """Polynomial part of ft relative to the trig normalizer of the phase function."""
    if not primed:
        _check_space(ft, TRIG, "pairing_I")
        return ft.regular
    _check_space(ft, TRIG_PRIME, "pairing_I_prime")
    return lambda T, r=ft.regular: np.asarray(r(T)) / np.prod(np.asarray(T), axis=-1)


def _pair_matrix(Hs, Ps, ps, primed, side, trunc, A):
    setup = _setup_I_prime(ps, A) if primed else _setup_I(ps, A)
    if side == "auto":
        side_pref = _prefer(ps, primed)
        return _jackson_auto(Hs, Ps, setup, "auto", trunc, prefer=side_pref)
    return jackson_bilinear(Hs, Ps, setup, side, trunc)


def check_convergence(ps: ParameterSet, A, side: str, primed: bool = False) -> float:
    """Slack of the sufficient convergence inequality for the given family."""
    q = ps if not primed else ps.replace(x=ps.y, y=ps.x, eta=1 / ps.eta)
    return convergence_margin(q, A, ps.n - 1, side)


def pairing_I(fe: EvaluableFunction, ft: EvaluableFunction, ps: ParameterSet, trunc=None, side="auto") -> complex:
    """I(fe, ft) = (1/l!) Int[x;y;eta](fe ft Phi)."""
    _check_space(fe, ELL, "pairing_I")
    A = extract_quasi_period(fe, ps)
    return complex(_pair_matrix([fe.regular], [_trig_poly(ft, ps, False)], ps, False, side, trunc, A).value[0, 0])


def pairing_I_prime(fe: EvaluableFunction, ft: EvaluableFunction, ps: ParameterSet, trunc=None,
                    side="auto") -> complex:
    """I'(fe, ft) = (1/l!) Int[y;x;1/eta](fe ft Phi(t;y;x;1/eta))."""
    _check_space(fe, ELL_PRIME, "pairing_I_prime")
    A = extract_quasi_period(fe, ps)
    return complex(_pair_matrix([fe.regular], [_trig_poly(ft, ps, True)], ps, True, side, trunc, A).value[0, 0])


def pairing_matrix(left: Sequence[EvaluableFunction], right: Sequence[EvaluableFunction], ps: ParameterSet,
                   primed: bool = False, trunc=None, side="auto") -> np.ndarray:
    """[I(left_i, right_j)] (or I') for lists of elliptic and trigonometric elements."""
    if ps.ell == 0:
        return np.ones((len(left), len(right)), dtype=complex)
    A = extract_quasi_period(left[0], ps)
    for f in left[1:]:
        if f.quasi_period is not None and abs(f.quasi_period - A) > QUASI_PERIOD_TOL * abs(A):
            raise QuasiPeriodError("elliptic elements in one matrix must share their quasi-period")
    Hs = [f.regular for f in left]
    Ps = [_trig_poly(g, ps, primed) for g in right]
    return _pair_matrix(Hs, Ps, ps, primed, side, trunc, A).value


def matrix_I(ps: ParameterSet, trunc=None, side="auto") -> PairingMatrix:
    """I_{lm} = I(W_l, w_m)."""
    return _pm(ps, pairing_matrix(basis("W", ps, trunc), basis("w", ps, trunc), ps, False, trunc, side))


def matrix_I_prime(ps: ParameterSet, trunc=None, side="auto") -> PairingMatrix:
    """I'_{lm} = I'(W'_l, w'_m)."""
    return _pm(ps, pairing_matrix(basis("W'", ps, trunc), basis("w'", ps, trunc), ps, True, trunc, side))


def matrix_S(ps: ParameterSet, trunc=None, left: str = "w'", right: str = "w") -> PairingMatrix:
    L, R = basis(left, ps, trunc), basis(right, ps, trunc)
    return _pm(ps, [[shapovalov_S(f, g, ps, trunc) for g in R] for f in L])


def matrix_S_ell(ps: ParameterSet, trunc=None, left: str = "W'", right: str = "W") -> PairingMatrix:
    L, R = basis(left, ps, trunc), basis(right, ps, trunc)
    return _pm(ps, [[shapovalov_S_ell(f, g, ps, trunc) for g in R] for f in L])


def matrix_X(ps: ParameterSet, trunc=None, seed: int = 0) -> PairingMatrix:
    """w_l = sum_m X_{lm} g_m."""
    frame = build_collocation(TRIG, ps, seed, trunc, basis_tag="g")
    return _pm(ps, [coordinates_of(f, frame) for f in basis("w", ps, trunc)])


def matrix_Q(ps: ParameterSet, trunc=None, seed: int = 0) -> PairingMatrix:
    """W_l = sum_m Q_{lm} G_m."""
    frame = build_collocation(ELL, ps, seed, trunc, basis_tag="G")
    return _pm(ps, [coordinates_of(f, frame) for f in basis("W", ps, trunc)])


# ---------------------------------------------------------------- qKZ operators


def _cycle(seq, k):
    seq = tuple(seq)
    return seq[k:] + seq[:k]


def _L_image(comp: Composition, m: int, ps: ParameterSet, primed: bool, trunc=None) -> EvaluableFunction:
    """L_m w_l (or L'_m w'_l): the weight function for the cycled data, scaled."""
    ck = Composition(_cycle(comp.parts, m))
    q = ps.replace(x=_cycle(ps.x, m), y=_cycle(ps.y, m))
    full = complex(np.prod(np.array(ps.x) / np.array(ps.y)))
    lk = comp.partial_sums()[m - 1]
    c = (ps.alpha * ps.eta ** (1 - ps.ell) * full) ** (-lk if primed else lk)
    base = make_w_prime(ck, q, trunc) if primed else make_w(ck, q, trunc)
    return base.scaled(c)


def operator_K(m: int, ps: ParameterSet, primed: bool = False, trunc=None, seed: int = 0) -> PairingMatrix:
    """K_m (or K'_m) acting on V: the transpose of the matrix of L_m in the weight basis."""
    if not 1 <= m <= ps.n:
        raise ConfigError(f"m must be in 1..{ps.n}")
    comps = enumerate_compositions(ps.n, ps.ell)
    frame = build_collocation(TRIG_PRIME if primed else TRIG, ps, seed, trunc)
    # column l of Lam holds the coordinates of L_m w_l
    cols = []
    for c in comps:
        # the normalizers are symmetric in x and y, so the cycled regular part is valid as is
        cols.append(coordinates_of(_L_image(c, m, ps, primed, trunc), frame))
    lam = np.array(cols).T
    return _pm(ps, lam.T)


def mu(comp, m: int, ps: ParameterSet) -> complex:
    """(alpha eta^{1 - l^m} prod_{j<=m} x_j/y_j)^{-l^m}."""
    comp = comp if isinstance(comp, Composition) else Composition(tuple(comp))
    lm = comp.partial_sums()[m - 1]
    r = complex(np.prod(np.array(ps.x[:m]) / np.array(ps.y[:m])))
    return (ps.alpha * ps.eta ** (1 - lm) * r) ** (-lm)


def operator_M(m: int, ps: ParameterSet) -> PairingMatrix:
    if not 1 <= m <= ps.n:
        raise ConfigError(f"m must be in 1..{ps.n}")
    return _pm(ps, np.diag([mu(c, m, ps) for c in enumerate_compositions(ps.n, ps.ell)]))


# ---------------------------------------------------------------- one-variable contour oracle


def contour_integral_1d(fe: EvaluableFunction, ft: EvaluableFunction, ps: ParameterSet, nodes: int = 2048,
                        radius: float = 1.0, primed: bool = False) -> complex:
    """Trapezoidal rule on |t| = radius for (1/2 pi i) integral of fe ft Phi dt/t (l = 1)."""
    if ps.ell != 1:
        raise ConfigError("the contour oracle is one-dimensional")
    t = radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    T = t[:, None]
    if primed:
        ph = phase_phi(T, ps.y, ps.x, 1 / ps.eta, ps.p)
    else:
        ph = phase_phi(T, ps.x, ps.y, ps.eta, ps.p)
    return complex(np.mean(np.asarray(fe.func(T)) * np.asarray(ft.func(T)) * ph))


# ---------------------------------------------------------------- restricted parameters

RESTRICTED_RADIUS = 1e-3
RESTRICTED_POINTS = 6


def restricted_matrices(ps: ParameterSet, ell_bounds: Sequence[int], trunc=None, radius: float = RESTRICTED_RADIUS,
                        points: int = RESTRICTED_POINTS):
    """I and I' at parameters with x_m = eta^{l_m} y_m for the bounded coordinates.

    At such points x-ladder poles pinch against y-poles and the residue sum no
    longer represents the (holomorphic) pairing. The pairings are evaluated
    instead as the mean over ``points`` perturbations x_m -> x_m (1 + e) with e on
    a circle of the given radius, which reproduces the value at the centre up to
    O(radius^points). Only rows indexed by the restricted set are meaningful.
    """
    bounds = [int(b) for b in ell_bounds]
    if len(bounds) != ps.n:
        raise ConfigError("need one bound per coordinate")
    moved = [m for m in range(ps.n) if bounds[m] < ps.ell]
    if not moved:
        return matrix_I(ps, trunc).entries, matrix_I_prime(ps, trunc).entries
    I = Ip = 0
    for k in range(points):
        e = radius * cmath.exp(2j * cmath.pi * (k + 0.5) / points)
        x = tuple(v * (1 + e) if m in moved else v for m, v in enumerate(ps.x))
        q = ps.replace(x=x)
        I = I + matrix_I(q, trunc).entries / points
        Ip = Ip + matrix_I_prime(q, trunc).entries / points
    return I, Ip
