import json

import numpy as np
import pytest

from qhyper import identities as ids
from qhyper.errors import ConfigError
from qhyper.indexing import enumerate_compositions
from qhyper.params import sample_generic
from qhyper.qseries import Truncation


@pytest.fixture(scope="module")
def ps21():
    return sample_generic(2, 1, 3)


def test_residual_helpers():
    ab, rel = ids.residual(np.array([1.0, 2.0]), np.array([1.0, 2.0 + 1e-9]))
    assert ab == pytest.approx(1e-9) and rel == pytest.approx(5e-10)
    D = np.array([4.0, 1e-6])
    lhs = np.diag(D) + np.array([[0, 1e-12], [0, 0]])
    _, rel, per = ids.diagonal_residual(lhs, D)
    assert rel == pytest.approx(1e-12 / 2e-3) and per.shape == (2, 2)


def test_riemann_diagonal_is_signed_norm():
    for n, ell in [(2, 1), (2, 2), (1, 3)]:
        ps = sample_generic(n, ell, 0)
        for c in enumerate_compositions(n, ell):
            assert np.isclose(ids.riemann_diagonal(c, ps), (-1) ** ell * ids.ell_norm_N(c, ps), rtol=1e-12)


def test_report_is_json_serializable(ps21):
    rep = ids.verify_riemann(ps21)
    d = rep.to_dict()
    assert d["pass"] is True and d["check_name"] == "riemann"
    json.dumps(d)
    assert set(rep.parts_view()) == {"sum_form", "matrix_form"}


def test_check_detects_a_wrong_closed_form(ps21, monkeypatch):
    monkeypatch.setattr(ids, "ell_norm_N", lambda c, ps: 1.01 * ids.riemann_diagonal(c, ps) * (-1) ** ps.ell)
    rep = ids.verify_riemann(ps21)
    assert not rep.passed and rep.details["sum_form"]["rel"] > 1e-3


def test_numerical_failure_becomes_report(ps21):
    rep = ids.verify_riemann(sample_generic(2, 2, 0), Truncation(jackson_shell_max=2))
    assert not rep.passed and rep.error.startswith("TailBoundError")
    assert rep.to_dict()["max_rel_residual"] == float("inf")


def test_config_error_propagates():
    with pytest.raises(ConfigError):
        ids.verify_onedim(sample_generic(2, 2, 0))


def test_determinants_small_case():
    rep = ids.verify_determinants(sample_generic(1, 2, 1))
    assert rep.passed
    vals = rep.details["values"]
    assert set(vals) >= {"X", "Q", "IW", "IG", "S_ell"}


def test_biorthogonality_parts(ps21):
    rep = ids.verify_biorthogonality(ps21, tol=1e-8)
    assert rep.passed and set(rep.parts_view()) == {"trig", "elliptic"}


def test_qkz_has_every_m(ps21):
    rep = ids.verify_qkz(ps21)
    assert rep.passed
    assert {"m1", "m2", "m1_primed", "m2_primed", "m1_form", "m2_form"} <= set(rep.parts_view())


def test_restricted_default_bounds():
    from qhyper.params import sample_restricted
    rep = ids.verify_restricted(sample_restricted(2, 2, (1, 2), 2))
    assert rep.passed
    # bounds (1, 2) allow l_1 <= 1
    assert [c.parts for c in ids.restricted_set((1, 2), 2)] == [(1, 1), (0, 2)]
    assert rep.details["restricted_set"] == ["(1,1)", "(0,2)"]


def test_series_identities_at_one_point():
    rng = np.random.default_rng(0)
    a, b, z, p = ids.sample_series_args(3, rng)
    for lhs, rhs in ids.bilinear_identities(a, b, z, p).values():
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))
    for lhs, rhs in ids.three_phi_two_identities(a, b, z, p).values():
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))


def test_series_identities_fail_on_perturbed_input():
    rng = np.random.default_rng(0)
    a, b, z, p = ids.sample_series_args(2, rng)
    lhs, _ = ids.heine_identity(a, b, z, p)
    _, rhs = ids.heine_identity(a, b, z * 1.001, p)
    assert abs(lhs - rhs) > 1e-6 * abs(lhs)


def test_invariants(ps21):
    assert ids.verify_scale_covariance(ps21).passed
    assert ids.verify_shift_invariance(ps21).passed


def test_asymptotics_report_structure():
    from qhyper.params import sample_zone_template
    rep = ids.verify_asymptotics(sample_zone_template(2, 1, 0))
    assert rep.passed and rep.tol == 1e-3
    path = rep.details["path_I"]
    assert path["monotone"] and len(path["diagonal_deviation"]) == 3
