import numpy as np
import pytest

from qhyper.errors import ConfigError, TailBoundError
from qhyper.functions import basis
from qhyper.indexing import enumerate_compositions
from qhyper.pairings import (PairingMatrix, contour_integral_1d, matrix_I, matrix_I_prime, matrix_S, mu,
                             operator_M, pairing_I, pairing_I_prime, pairing_matrix, res_functional,
                             restricted_matrices, shapovalov_S)
from qhyper.params import jackson_ratios, sample_generic
from qhyper.qseries import Truncation


def rel(a, b):
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) / np.max(np.abs(b))


def test_numeric_residue_matches_exact():
    ps = sample_generic(2, 1, 2)
    for f in basis("w'", ps):
        for g in basis("w", ps):
            exact = shapovalov_S(f, g, ps)
            numeric = res_functional((f, g), ps.x, ps.eta, ps, exact=False)
            assert abs(exact - numeric) <= 1e-8 * max(1.0, abs(exact))


# these draws, with |x| and |y| swapped across the unit circle, keep a convergent Jackson sum
PRIMED_CONTOUR_SEEDS = (0, 3, 11, 18)


@pytest.mark.parametrize("seed", PRIMED_CONTOUR_SEEDS)
def test_primed_pairing_against_contour(seed):
    ps = sample_generic(2, 1, seed)
    q = ps.replace(x=tuple(4 * v for v in ps.x), y=tuple(v / 4 for v in ps.y))
    for fe in basis("W'", q):
        for ft in basis("w'", q):
            ref = contour_integral_1d(fe, ft, q, primed=True)
            assert abs(pairing_I_prime(fe, ft, q) - ref) <= 1e-10 * abs(ref)


def test_contour_oracle_is_one_dimensional():
    ps = sample_generic(2, 2, 0)
    with pytest.raises(ConfigError):
        contour_integral_1d(basis("W", ps)[0], basis("w", ps)[0], ps)


def test_both_ladder_sides_agree():
    # x close to y and a large alpha make both residue ladders converge
    ps = sample_generic(2, 1, 0)
    ps = ps.replace(x=tuple(0.8 * np.exp(0.3j) * v for v in ps.y), alpha=3.0 + 0.5j)
    ratios = jackson_ratios(ps)
    assert max(ratios["I:x"], ratios["I:y"]) < 1
    W, w = basis("W", ps), basis("w", ps)
    assert rel(pairing_matrix(W, w, ps, side="x"), pairing_matrix(W, w, ps, side="y")) < 1e-12


def test_matrix_agrees_with_scalar_pairing():
    ps = sample_generic(2, 2, 1)
    I = matrix_I(ps)
    W, w = basis("W", ps), basis("w", ps)
    c = enumerate_compositions(2, 2)
    assert abs(I[c[1], c[2]] - pairing_I(W[1], w[2], ps)) <= 1e-12 * abs(I[c[1], c[2]])
    assert abs(I.det) > 0


def test_shell_cap_raises():
    ps = sample_generic(2, 2, 1)
    with pytest.raises(TailBoundError):
        matrix_I(ps, Truncation(jackson_shell_max=2))


def test_shapovalov_matrix_is_diagonal():
    ps = sample_generic(3, 2, 0)
    S = matrix_S(ps).entries
    off = S - np.diag(np.diag(S))
    assert np.max(np.abs(off)) <= 1e-10 * np.max(np.abs(S))


def test_operator_M():
    ps = sample_generic(2, 2, 0)
    M = operator_M(1, ps)
    assert np.allclose(np.diag(M.entries), [mu(c, 1, ps) for c in M.order])
    # m = n has l^n = l for every composition
    assert np.allclose(np.diag(operator_M(2, ps).entries), mu((2, 0), 2, ps))
    with pytest.raises(ConfigError):
        operator_M(3, ps)


def test_restricted_matrices_without_bounds_reduce_to_plain():
    ps = sample_generic(2, 1, 0)
    I, Ip = restricted_matrices(ps, (1, 1))
    assert rel(I, matrix_I(ps).entries) < 1e-14
    assert rel(Ip, matrix_I_prime(ps).entries) < 1e-14


def test_pairing_matrix_shape_check():
    with pytest.raises(ConfigError):
        PairingMatrix(tuple(enumerate_compositions(2, 1)), np.zeros((3, 3)))
