import math

import numpy as np
import pytest

from qhyper.errors import ConfigError, PoleProximityError
from qhyper.indexing import (Composition, bracket_factor_rational, bracket_factor_theta, combi_identity_residual,
                             composition_count, d_exponent, dominance_ll, enumerate_compositions, inversions,
                             ladder_point, permutations, shifted_ladder_point)
from qhyper.qseries import theta


def test_order_and_count():
    assert [c.parts for c in enumerate_compositions(2, 2)] == [(2, 0), (1, 1), (0, 2)]
    assert [c.parts for c in enumerate_compositions(3, 1)] == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    for n in range(1, 5):
        for ell in range(5):
            comps = enumerate_compositions(n, ell)
            assert len(set(comps)) == len(comps) == composition_count(n, ell)
            assert all(c.ell == ell and c.n == n for c in comps)


def test_composition_helpers():
    c = Composition((2, 0, 1))
    assert c.partial_sums() == (2, 2, 3)
    assert [list(b) for b in c.blocks()] == [[0, 1], [], [2]]
    assert c.block_of() == (0, 0, 2)
    assert c.shifted(0).parts == (1, 0, 1)
    with pytest.raises(ConfigError):
        c.shifted(1)
    with pytest.raises(ConfigError):
        Composition((1, -1))


def test_dominance():
    assert dominance_ll((0, 2), (1, 1))
    assert not dominance_ll((2, 0), (1, 1))
    assert dominance_ll((0, 1, 1), (1, 0, 1))
    with pytest.raises(ConfigError):
        dominance_ll((1, 1), (1, 1))
    with pytest.raises(ConfigError):
        dominance_ll((1, 1), (1, 0))


def test_ladder_points():
    x, eta, p = (1.0, 2.0), 4.0, 0.1
    assert ladder_point(x, (2, 1), eta).coordinates == (0.25, 1.0, 2.0)
    pt = shifted_ladder_point((0.2,), (2,), (1, 1), 2.0, p)
    # position j takes p^(s_j + ... + s_k) eta^(j-k) x
    assert np.allclose(pt.coordinates, (0.001, 0.02))
    pt = shifted_ladder_point((0.2,), (2,), (0, 1), 2.0, p)
    assert np.allclose(pt.coordinates, (0.01, 0.02))
    with pytest.raises(ConfigError):
        shifted_ladder_point(x, (1, 1), (1, -1), eta, p)


def test_permutations_and_inversions():
    assert len(permutations(3)) == 6
    assert inversions((0, 1, 2)) == []
    assert inversions((2, 0, 1)) == [(0, 1), (0, 2)]


def test_bracket_factors():
    t = np.array([0.7 + 0.2j, 1.3 - 0.4j])
    eta, p = 1.8 + 0.3j, 0.2
    assert bracket_factor_rational((0, 1), t, eta) == 1
    assert np.isclose(bracket_factor_rational((1, 0), t, eta), (t[0] - eta * t[1]) / (eta * t[0] - t[1]))
    u = t[0] / t[1]
    assert np.isclose(bracket_factor_theta((1, 0), t, eta, p), eta * theta(u / eta, p) / theta(eta * u, p))
    with pytest.raises(PoleProximityError):
        bracket_factor_rational((1, 0), np.array([1.0, eta]), eta)
    with pytest.raises(ConfigError):
        bracket_factor_rational((0, 0), t, eta)


def test_d_exponent_brute_force():
    for n in range(2, 5):
        for m in range(1, n):
            for ell in range(1, 5):
                for s in range(-ell, ell + 1):
                    want = sum(math.comb(m - 1 + i, m - 1) * math.comb(n - m - 1 + j, n - m - 1)
                               for i in range(ell) for j in range(ell) if i + j < ell and i - j == s)
                    assert d_exponent(n, m, ell, s) == want
    with pytest.raises(ConfigError):
        d_exponent(2, 2, 1, 0)


def test_combinatorial_identity():
    assert combi_identity_residual(3, 2, 4, 1) == 0
    with pytest.raises(ConfigError):
        combi_identity_residual(-1, 0, 0, 0)
