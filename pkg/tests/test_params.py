import json

import numpy as np
import pytest

from qhyper.errors import ConfigError, GenericityError
from qhyper.params import (ZONE_PROFILE, MagnitudeProfile, ParameterSet, build_restricted, check_alpha, check_generic,
                           check_restricted, from_dict, from_json, jackson_ratios, load, sample_generic,
                           sample_restricted, sample_zone_template, save, to_dict, to_json)


def test_sampling_is_deterministic():
    a, b = sample_generic(2, 2, 7), sample_generic(2, 2, 7)
    assert a == b and a.digest() == b.digest()
    assert sample_generic(2, 2, 8) != a


def test_samples_satisfy_all_conditions():
    for seed in range(5):
        ps = sample_generic(3, 1, seed)
        assert not check_generic(ps) and not check_alpha(ps)
        r = jackson_ratios(ps)
        assert min(r["I:x"], r["I:y"]) <= 0.5 and min(r["I':x"], r["I':y"]) <= 0.5


def test_json_round_trip(tmp_path):
    ps = sample_restricted(2, 2, (1, 2), 0)
    assert from_json(to_json(ps)) == ps
    assert from_dict(json.loads(json.dumps(to_dict(ps)))).restricted_bounds == [1, 2]
    path = tmp_path / "ps.json"
    save(ps, path)
    assert load(path) == ps and load(path).digest() == ps.digest()


def test_complex_encoding():
    d = to_dict(sample_generic(1, 1, 0))
    assert isinstance(d["p"], list) and len(d["p"]) == 2
    assert isinstance(d["x"][0], list)


def test_violation_detected():
    ps = sample_generic(2, 1, 0)
    bad = ps.replace(x=(ps.y[0] * ps.p ** 2, ps.x[1]))
    names = [v.condition for v in check_generic(bad)]
    assert "eta^0 x1/y1" in names
    assert all(v.distance < bad.lattice_margin for v in check_generic(bad))


def test_restricted_construction():
    y, eta = (1.7 + 0.4j, -2.1 + 0.3j), 1.9 - 0.5j
    ps = build_restricted(y, eta, (1, 2), 0.8 + 0.3j, 0.2 + 0.1j, x_free=(0, 0.4j))
    assert ps.ell == 2
    assert ps.x[0] == eta * y[0] and ps.x[1] == 0.4j
    assert check_generic(ps)  # the exact relation breaks the generic conditions
    assert not check_restricted(ps, (1, 2))
    with pytest.raises(ConfigError):
        build_restricted(y, eta, (1, 2), 1.0, 0.2)
    with pytest.raises(ConfigError):
        check_restricted(ps, (0, 2))


def test_zone_template_separates_blocks():
    ps = sample_zone_template(3, 1, 0)
    raw = sample_generic(3, 1, 0, ZONE_PROFILE)
    for m, f in enumerate((0.02 ** 2, 0.02, 1.0)):
        assert np.isclose(ps.x[m], f * raw.x[m]) and np.isclose(ps.y[m], f * raw.y[m])
    assert ps.flags["zone_template"]


def test_shifted():
    ps = sample_generic(3, 1, 0)
    q = ps.shifted(2)
    assert q.x[:2] == tuple(v * ps.p for v in ps.x[:2]) and q.x[2] == ps.x[2]
    with pytest.raises(ConfigError):
        ps.shifted(4)


@pytest.mark.parametrize("kw", [dict(p=1.1), dict(p=0), dict(eta=0), dict(x=(0.5,)), dict(ell=-1)])
def test_invalid_parameters(kw):
    base = dict(p=0.2, eta=2.0, alpha=1.0, x=(0.5, 0.4j), y=(2.0, -1.7), n=2, ell=1)
    base.update(kw)
    with pytest.raises(ConfigError):
        ParameterSet(**base)


def test_sampler_gives_up():
    hopeless = MagnitudeProfile(jackson_ratio_max=1e-9, max_draws=5)
    with pytest.raises(GenericityError):
        sample_generic(2, 1, 0, hopeless)
