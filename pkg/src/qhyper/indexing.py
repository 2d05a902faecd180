"""Compositions, the inverse dominance order, ladder points and the
symmetric-group bracket factors.

Permutations are tuples of 0-based images: ``sigma[a]`` is the index of the
coordinate that lands in slot ``a`` of ``f(t_sigma(0), ..., t_sigma(l-1))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, PoleProximityError
from .qseries import Truncation, theta


@dataclass(frozen=True)
class Composition:
    """A tuple of n nonnegative parts summing to ell."""

    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(v) for v in self.parts)
        if not parts:
            raise ConfigError("a composition needs at least one part")
        if any(v < 0 for v in parts):
            raise ConfigError(f"composition parts must be nonnegative, got {parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def n(self) -> int:
        return len(self.parts)

    @property
    def ell(self) -> int:
        return sum(self.parts)

    def partial_sums(self) -> tuple[int, ...]:
        """(l^1, ..., l^n) with l^m = l_1 + ... + l_m."""
        return tuple(itertools.accumulate(self.parts))

    def blocks(self) -> list[range]:
        """0-based coordinate positions belonging to each part."""
        out, start = [], 0
        for v in self.parts:
            out.append(range(start, start + v))
            start += v
        return out

    def block_of(self) -> tuple[int, ...]:
        """For each coordinate position, the 0-based index of its block."""
        return tuple(m for m, v in enumerate(self.parts) for _ in range(v))

    def shifted(self, m: int) -> "Composition":
        """The composition with part m (0-based) lowered by one."""
        if self.parts[m] == 0:
            raise ConfigError(f"part {m} of {self.parts} is already zero")
        parts = list(self.parts)
        parts[m] -= 1
        return Composition(tuple(parts))

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __getitem__(self, k):
        return self.parts[k]

    def __str__(self):
        return "(" + ",".join(map(str, self.parts)) + ")"


def _as_comp(c) -> Composition:
    return c if isinstance(c, Composition) else Composition(tuple(c))


def enumerate_compositions(n: int, ell: int) -> list[Composition]:
    """All compositions of ell into n parts, first part descending.

    This is the global row/column order of every matrix in the package.
    """
    if n < 1 or ell < 0:
        raise ConfigError(f"need n >= 1 and ell >= 0, got n={n}, ell={ell}")

    def rec(k: int, rest: int) -> Iterator[tuple[int, ...]]:
        if k == 1:
            yield (rest,)
            return
        for first in range(rest, -1, -1):
            for tail in rec(k - 1, rest - first):
                yield (first,) + tail

    return [Composition(c) for c in rec(n, ell)]


def composition_count(n: int, ell: int) -> int:
    return math.comb(n + ell - 1, n - 1)


def dominance_ll(a, b) -> bool:
    """True iff a << b, i.e. a^k <= b^k for k = 1..n-1."""
    a, b = _as_comp(a), _as_comp(b)
    if a.n != b.n or a.ell != b.ell:
        raise ConfigError(f"compositions {a} and {b} are not in the same set")
    if a == b:
        raise ConfigError("dominance_ll is only defined for distinct compositions")
    pa, pb = a.partial_sums(), b.partial_sums()
    return all(pa[k] <= pb[k] for k in range(a.n - 1))


@dataclass(frozen=True)
class LadderPoint:
    coordinates: tuple
    base: str
    composition: Composition
    shifts: tuple[int, ...]

    def as_array(self, dtype=np.complex128) -> np.ndarray:
        return np.array(self.coordinates, dtype=dtype)


def _check_nonzero(vals, what):
    for v in vals:
        if v == 0:
            raise ConfigError(f"{what} must be nonzero")


def shifted_ladder_point(x: Sequence, comp, s: Sequence[int], eta, p, base: str = "x") -> LadderPoint:
    """Ladder point with integer shifts.

    In block m the coordinate at local position j (1-based, block length k) is
    p^(s_j + ... + s_k) eta^(j-k) x_m, the shifts being indexed by global position.
    """
    comp = _as_comp(comp)
    if len(x) != comp.n:
        raise ConfigError(f"expected {comp.n} base values, got {len(x)}")
    s = tuple(int(v) for v in s)
    if len(s) != comp.ell:
        raise ConfigError(f"expected {comp.ell} shifts, got {len(s)}")
    _check_nonzero(x, "ladder base values")
    _check_nonzero([eta], "eta")
    if any(v != 0 for v in s):
        if not (all(v >= 0 for v in s) or all(v <= 0 for v in s)):
            raise ConfigError("shifts must be all nonnegative or all nonpositive")
        if p == 0 and any(v < 0 for v in s):
            raise ConfigError("negative shifts need p != 0")
    coords = []
    for m, block in enumerate(comp.blocks()):
        k = len(block)
        for j, pos in enumerate(block, start=1):
            cum = sum(s[pos: block.stop])
            coords.append(p**cum * eta ** (j - k) * x[m])
    return LadderPoint(tuple(coords), base, comp, s)


def ladder_point(x: Sequence, comp, eta, base: str = "x") -> LadderPoint:
    """Unshifted ladder point: block m reads (eta^(1-k) x_m, ..., eta^(-1) x_m, x_m)."""
    comp = _as_comp(comp)
    return shifted_ladder_point(x, comp, (0,) * comp.ell, eta, 0.5, base)


def permutations(ell: int) -> list[tuple[int, ...]]:
    return list(itertools.permutations(range(ell)))


def inversions(sigma: Sequence[int]) -> list[tuple[int, int]]:
    """Pairs (a, b), a < b, with sigma[a] > sigma[b]."""
    ell = len(sigma)
    return [(a, b) for a in range(ell) for b in range(a + 1, ell) if sigma[a] > sigma[b]]


def _check_perm(sigma, ell):
    if sorted(sigma) != list(range(ell)):
        raise ConfigError(f"{tuple(sigma)} is not a permutation of 0..{ell - 1}")


def bracket_factor_rational(sigma: Sequence[int], t, eta, margin: float = 1e-12):
    """Product over inversions of (t_sb - eta t_sa) / (eta t_sb - t_sa).

    ``t`` may be a single point or an array of points along the last axis.
    """
    t = np.asarray(t)
    _check_perm(sigma, t.shape[-1])
    out = np.ones(t.shape[:-1], dtype=np.result_type(t.dtype, np.complex128))
    for a, b in inversions(sigma):
        ta, tb = t[..., sigma[a]], t[..., sigma[b]]
        den = eta * tb - ta
        if np.any(np.abs(den) <= margin * np.maximum(np.abs(ta), np.abs(tb))):
            raise PoleProximityError("bracket factor denominator vanishes")
        out = out * (tb - eta * ta) / den
    return out[()]


def bracket_factor_theta(sigma: Sequence[int], t, eta, p, trunc: Truncation | None = None,
                         margin: float = 1e-12):
    """Product over inversions of eta theta(t_sb / (eta t_sa)) / theta(eta t_sb / t_sa)."""
    t = np.asarray(t)
    _check_perm(sigma, t.shape[-1])
    out = np.ones(t.shape[:-1], dtype=np.result_type(t.dtype, np.complex128))
    for a, b in inversions(sigma):
        u = t[..., sigma[b]] / t[..., sigma[a]]
        den = theta(eta * u, p, trunc)
        if np.any(np.abs(den) <= margin):
            raise PoleProximityError("theta bracket factor denominator vanishes")
        out = out * eta * theta(u / eta, p, trunc) / den
    return out[()]


def d_exponent(n: int, m: int, ell: int, s: int) -> int:
    """Sum over i, j >= 0 with i + j < ell and i - j = s of C(m-1+i, m-1) C(n-m-1+j, n-m-1)."""
    if not 1 <= m <= n - 1:
        raise ConfigError(f"d_exponent needs 1 <= m <= n-1, got m={m}, n={n}")
    total = 0
    for j in range(max(0, -s), ell):
        i = j + s
        if i < 0 or i + j >= ell:
            continue
        total += math.comb(m - 1 + i, m - 1) * math.comb(n - m - 1 + j, n - m - 1)
    return total


def combi_identity_residual(j: int, k: int, l: int, m: int) -> int:
    """LHS - RHS of the triple-binomial summation identity, in exact integers."""
    if min(j, k, l, m) < 0:
        raise ConfigError("combinatorial identity arguments must be nonnegative")
    lhs = sum(math.comb(j + a, j) * math.comb(j + k + a, k) * math.comb(l + m - a, m) for a in range(l + 1))
    rhs = math.comb(j + k, k) * math.comb(j + k + l + m + 1, j + k + m + 1)
    return lhs - rhs
