import numpy as np
import pytest

from qhyper.errors import ConfigError, PoleProximityError
from qhyper.functions import (ELL, ELL_PRIME, TRIG, TRIG_PRIME, basis, build_collocation, coordinates_of,
                              quasi_period_constant, quasi_period_probe, space_normalizer)
from qhyper.indexing import composition_count
from qhyper.params import sample_generic

SPACE_OF = {"w": TRIG, "w'": TRIG_PRIME, "W": ELL, "W'": ELL_PRIME}


@pytest.fixture(scope="module")
def ps():
    return sample_generic(2, 2, 4)


def _points(rng, k, ell):
    return np.exp(rng.uniform(-0.2, 0.2, (k, ell)) + 2j * np.pi * rng.uniform(size=(k, ell)))


@pytest.mark.parametrize("tag", ["w", "w'", "W", "W'", "g", "G", "G'"])
def test_basis_sizes(ps, tag):
    assert len(basis(tag, ps)) == composition_count(ps.n, ps.ell)


@pytest.mark.parametrize("tag", list(SPACE_OF))
def test_regular_part_is_value_times_normalizer(ps, tag):
    rng = np.random.default_rng(1)
    T = _points(rng, 5, ps.ell)
    for f in basis(tag, ps):
        lhs = np.asarray(f.regular(T))
        rhs = np.asarray(f.func(T)) * np.asarray(space_normalizer(SPACE_OF[tag], ps, T))
        assert np.allclose(lhs, rhs, rtol=1e-10, atol=0)


@pytest.mark.parametrize("tag,space", [("W", ELL), ("W'", ELL_PRIME)])
def test_quasi_period(ps, tag, space):
    want = quasi_period_constant(space, ps)
    for f in basis(tag, ps):
        for slot in range(ps.ell):
            assert abs(quasi_period_probe(f, ps, slot=slot) - want) < 1e-9 * abs(want)


def test_collocation_recovers_basis_elements(ps):
    frame = build_collocation(ELL, ps, seed=3)
    for k, f in enumerate(basis("W", ps)):
        c = coordinates_of(f, frame)
        assert np.allclose(c, np.eye(len(c))[k], atol=1e-9)


def test_change_of_basis_is_invertible(ps):
    frame = build_collocation(ELL, ps, seed=3)
    M = np.array([coordinates_of(g, frame) for g in basis("G", ps)])
    assert abs(np.linalg.det(M)) > 1e-12


def test_pole_guard(ps):
    f = basis("w", ps)[0]
    t = np.array([ps.x[0], 0.9 + 0.3j])
    with pytest.raises(PoleProximityError):
        f(t)


def test_unknown_tag(ps):
    with pytest.raises(ConfigError):
        basis("v", ps)
