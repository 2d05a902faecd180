"""Acceptance criteria, one test each.

Every test prints a single PASS/FAIL line with its worst residual and tolerance,
so `pytest tests/test_acceptance.py` gives a readable summary.
"""

import math
import time

import numpy as np
import pytest

from qhyper.functions import basis
from qhyper.identities import (verify_asymptotics, verify_biorthogonality, verify_determinants, verify_onedim,
                               verify_qkz, verify_restricted, verify_riemann, verify_series)
from qhyper.indexing import combi_identity_residual, composition_count, enumerate_compositions
from qhyper.pairings import contour_integral_1d, pairing_I
from qhyper.params import sample_generic, sample_restricted, sample_zone_template
from qhyper.qseries import qpoch_fin, qpoch_inf, theta

SEEDS5 = range(5)


@pytest.fixture
def announce(capsys):
    def _say(ok, number, label, worst, tol, extra=""):
        with capsys.disabled():
            tag = "PASS" if ok else "FAIL"
            print(f"\n[{tag}] criterion {number:2d} {label}: worst {worst:.3g} (tol {tol:g}){extra}")
    return _say


def _worst(reports):
    return max(r.max_rel_residual for r in reports)


def test_01_riemann_identity(announce):
    tol, reports, slowest = 1e-7, [], 0.0
    for n, ell in [(1, 1), (2, 1), (2, 2), (3, 1), (2, 3)]:
        for seed in SEEDS5:
            ps = sample_generic(n, ell, seed)
            assert abs(ps.p) <= 0.3
            t0 = time.perf_counter()
            reports.append(verify_riemann(ps, tol=tol))
            slowest = max(slowest, time.perf_counter() - t0)
    ok = all(r.passed for r in reports) and slowest <= 120
    announce(ok, 1, "Riemann identity, 25 cases", _worst(reports), tol, f", slowest case {slowest:.1f}s")
    assert ok


def test_02_biorthogonality(announce):
    tol = 1e-8
    reports = [verify_biorthogonality(sample_generic(n, ell, seed), tol=tol)
               for n in (1, 2, 3) for ell in (1, 2) for seed in range(3)]
    ok = all(r.passed for r in reports)
    announce(ok, 2, "Shapovalov biorthogonality up to (3,2)", _worst(reports), tol)
    assert ok


def test_03_determinants(announce):
    tol = 1e-7
    reports = [verify_determinants(sample_generic(n, ell, seed), tol=tol, seed=seed)
               for n, ell in [(2, 1), (2, 2), (3, 1)] for seed in range(3)]
    ok = all(r.passed for r in reports)
    announce(ok, 3, "determinant closed forms", _worst(reports), tol)
    assert ok


def test_04_qkz(announce):
    tol = 1e-7
    reports = [verify_qkz(sample_generic(n, ell, seed), tol=tol, seed=seed)
               for n, ell in [(2, 1), (2, 2)] for seed in range(3)]
    ok = all(r.passed for r in reports)
    announce(ok, 4, "qKZ difference equations, all m", _worst(reports), tol)
    assert ok


def test_05_asymptotic_limits(announce):
    tol = 1e-3
    reports = [verify_asymptotics(sample_zone_template(n, ell, seed), rho_list=(1e-1, 1e-2, 1e-3), tol=tol)
               for n, ell in [(2, 1), (2, 2), (3, 1)] for seed in range(3)]
    monotone = all(r.details[k]["monotone"] and r.details[k]["forbidden_decay"]
                   for r in reports for k in ("path_I", "path_I'"))
    ok = all(r.passed for r in reports) and monotone
    announce(ok, 5, "asymptotic diagonal limits at rho=1e-3", _worst(reports), tol,
             f", monotone and decaying: {monotone}")
    assert ok


def test_06_restricted_identities(announce):
    tol, bounds = 1e-7, (1, 2)
    reports = [verify_restricted(sample_restricted(2, 2, bounds, seed), bounds, tol=tol) for seed in SEEDS5]
    ok = all(r.passed for r in reports)
    announce(ok, 6, "restricted identities n=2 l=2 bounds (1,2)", _worst(reports), tol)
    assert ok


def test_07_one_dimensional_suite(announce):
    stol, itol = 1e-9, 1e-8
    series = [verify_series(2, draws=100, seed=1, tol=stol), verify_series(3, draws=100, seed=2, tol=stol)]
    named = {k: v[1] for r in series for k, v in r.parts_view().items() if k == "heine" or k.startswith("3phi2")}
    assert set(named) == {"heine", "3phi2:first", "3phi2:second"}
    ortho = [verify_onedim(sample_generic(n, 1, seed), tol=itol, series_draws=0) for n in (2, 3, 4)
             for seed in range(10)]
    worst_series = max(named.values())
    ok = all(r.passed for r in series) and worst_series <= stol and all(r.passed for r in ortho)
    announce(ok, 7, "2phi1/3phi2 identities (100 draws) and orthogonality n=2,3,4", max(worst_series, _worst(ortho)),
             itol, f", series worst {worst_series:.3g} (tol {stol:g})")
    assert ok


def test_08_jackson_vs_contour(announce):
    tol, worst = 1e-8, 0.0
    for seed in range(20):
        ps = sample_generic(2, 1, seed)
        for fe in basis("W", ps):
            for ft in basis("w", ps):
                ref = contour_integral_1d(fe, ft, ps, nodes=2048)
                worst = max(worst, abs(pairing_I(fe, ft, ps) - ref) / abs(ref))
    ok = worst <= tol
    announce(ok, 8, "Jackson sum vs 2048-node contour, 20 seeds", worst, tol)
    assert ok


def test_09_exact_combinatorics(announce):
    bad = [(j, k, l, m) for j in range(9) for k in range(9) for l in range(9) for m in range(9)
           if combi_identity_residual(j, k, l, m) != 0]
    counts = all(composition_count(n, ell) == math.comb(n + ell - 1, n - 1) == len(enumerate_compositions(n, ell))
                 for n in range(1, 6) for ell in range(7))
    ok = not bad and counts
    announce(ok, 9, "binomial identity and composition counts", float(len(bad)), 0, f", counts match: {counts}")
    assert ok


def test_10_scalar_kernels(announce):
    rng = np.random.default_rng(2024)
    tol, worst = 1e-12, 0.0
    for _ in range(1000):
        p = rng.uniform(0.05, 0.6) * np.exp(2j * np.pi * rng.uniform())
        u = rng.uniform(0.3, 2.0) * np.exp(2j * np.pi * rng.uniform())
        k = int(rng.integers(0, 12))
        th = theta(u, p)
        r1 = abs(theta(p * u, p) + th / u) / abs(th / u)
        r2 = abs(qpoch_inf(u, p) - (1 - u) * qpoch_inf(p * u, p)) / abs(qpoch_inf(u, p))
        r3 = abs(qpoch_fin(u, p, k + 1) - qpoch_fin(u, p, k) * (1 - p**k * u)) / abs(qpoch_fin(u, p, k + 1))
        worst = max(worst, r1, r2, r3)
    ok = worst <= tol
    announce(ok, 10, "theta quasi-periodicity and Pochhammer recursion, 1000 draws", worst, tol)
    assert ok
