import numpy as np
import pytest

from qhyper.errors import ConfigError, DivergenceError, LatticeError, TailBoundError, ZeroArgumentError
from qhyper.qseries import (Truncation, lattice_distance, phi_series, phi_series_with_bound, qpoch_fin, qpoch_inf,
                            theta, theta_prime_at_1)

P = 0.3 + 0.1j
U = 0.7 - 0.4j

# reference values from mpmath.qp / mpmath.qhyper at 30 digits
QPOCH_INF = 0.19167207621980967 + 0.27535592638621154j
QPOCH_FIN5 = 0.19096259700000004 + 0.2763373415j
THETA = 0.1615322803170785 + 0.026672430345936506j
PHI21 = 8.14372578555754 - 1.7071520705591883j
PHI32 = 1.0239268957838112 + 0.0465563117862217j


def close(a, b, tol=1e-13):
    return abs(a - b) <= tol * abs(b)


def test_frozen_products():
    assert close(qpoch_inf(U, P), QPOCH_INF)
    assert close(qpoch_fin(U, P, 5), QPOCH_FIN5)
    assert close(theta(U, P), THETA)


def test_frozen_series():
    assert close(phi_series([0.5 + 0.2j, -0.3 + 0.6j], [0.9 - 0.1j], P, 0.4 + 0.3j), PHI21)
    assert close(phi_series([0.5, 1.2, 0.3 - 0.7j], [0.8 + 0.5j, -1.1], P, -0.2 + 0.45j), PHI32)


def test_against_mpmath_live():
    mpmath = pytest.importorskip("mpmath")
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = 0.4 * rng.uniform() * np.exp(2j * np.pi * rng.uniform())
        u = rng.uniform(0.2, 2) * np.exp(2j * np.pi * rng.uniform())
        assert close(qpoch_inf(u, p), complex(mpmath.qp(u, p)), 1e-12)


def test_q_binomial_theorem():
    # 1phi0(a;;z) = (az)_inf / (z)_inf
    a, z = 0.4 - 0.9j, 0.3 + 0.2j
    assert close(phi_series([a], [], P, z), qpoch_inf(a * z, P) / qpoch_inf(z, P))


def test_vectorized_matches_scalar():
    us = np.array([0.2, 0.5j, -1.3 + 0.2j])
    vals = qpoch_inf(us, P)
    assert vals.shape == (3,)
    assert all(close(v, qpoch_inf(u, P)) for u, v in zip(us, vals))


def test_edge_cases():
    assert qpoch_fin(U, P, 0) == 1
    assert qpoch_inf(0.0, P) == 1
    assert close(theta_prime_at_1(P), -qpoch_inf(P, P) ** 3)
    with pytest.raises(ZeroArgumentError):
        theta(0.0, P)
    with pytest.raises(DivergenceError):
        qpoch_inf(U, 1.2)
    with pytest.raises(ConfigError):
        qpoch_fin(U, P, -1)


def test_series_errors():
    with pytest.raises(DivergenceError):
        phi_series([0.5, 0.2], [0.3], P, 2.0)
    with pytest.raises(LatticeError):
        phi_series([0.5, 0.2], [P ** -2], P, 0.3)
    with pytest.raises(ConfigError):
        phi_series([0.5], [0.3], P, 0.3)
    with pytest.raises(TailBoundError):
        phi_series([0.5, 0.2], [0.3], P, 0.999, trunc=Truncation(max_terms=10))


def test_tail_bound_is_reported():
    val, bound = phi_series_with_bound([0.5, 0.2], [0.3], P, 0.5)
    assert 0 <= bound <= 1e-14 * abs(val)


def test_extended_precision_agrees():
    ext = Truncation(precision="extended")
    assert close(complex(qpoch_inf(U, P, ext)), QPOCH_INF, 1e-15)


def test_precision_from_environment(monkeypatch):
    monkeypatch.setenv("QHYPER_PRECISION", "extended")
    assert Truncation().precision == "extended"
    monkeypatch.setenv("QHYPER_PRECISION", "quad")
    with pytest.raises(ConfigError):
        Truncation()


def test_lattice_distance():
    assert lattice_distance(P ** 3, P) < 1e-12
    assert lattice_distance(0.5 * P ** 2, P) > 0.1
