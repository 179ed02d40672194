import itertools

import numpy as np
import pytest

from onetwo import correlation, oracle
from onetwo.hexlattice import LatticeParams, TorusLattice, decorate, nw_path


@pytest.fixture(scope="module")
def torus():
    p = LatticeParams(1.4, 0.9, 1.7)
    d = decorate(TorusLattice(2), p)
    return p, d, correlation.TorusPfaffians(d)


def test_even_sector_is_half_Z():
    for t in ((1, 1, 1), (1, 1, 0), (3, 2, 2)):
        p = LatticeParams(*t)
        assert correlation.even_sector_partition(p, 2) == pytest.approx(oracle.enumerate_Z(2, p) / 2, rel=1e-10)


def test_dimer_partition_exceeds_even_sector():
    p = LatticeParams(1, 2, 3)
    assert correlation.dimer_partition(p, 2) > correlation.even_sector_partition(p, 2)


def test_unknown_rule(torus):
    with pytest.raises(ValueError):
        correlation.TorusPfaffians(torus[1], "odd")


@pytest.mark.parametrize("sites", [
    [("B", 0, 0)], [("W", 1, 0)], [("B", 0, 1), ("W", 0, 1)], [("B", 0, 0), ("W", 1, 1), ("B", 1, 0)],
])
def test_occupation_matches_enumeration(torus, sites):
    p, d, tp = torus
    bis = [d.c_bisector(i, j, kind == "W") for kind, i, j in sites]
    assert tp.probability(bis) == pytest.approx(oracle.enumerate_occupation(2, p, sites), abs=1e-10)


def test_occupation_is_monotone(torus):
    _, d, tp = torus
    bis = [d.c_bisector(i, j, w) for i in range(2) for j in range(2) for w in (False, True)][:5]
    for r in range(len(bis)):
        for sub in itertools.combinations(bis, r):
            base = tp.probability(sub)
            assert -1e-10 <= base <= 1 + 1e-10
            for extra in bis:
                if extra not in sub:
                    assert tp.probability(sub + (extra,)) <= base + 1e-10


def test_probability_edge_cases(torus):
    _, d, tp = torus
    assert tp.probability([]) == 1.0
    u, v = d.c_bisector(0, 0, False)
    assert tp.probability([(u, v), (u, v)]) == 0.0
    with pytest.raises(correlation.HomologyError):
        tp.probability([(0, 5)])


def test_dimer_rule_probability_is_a_probability(torus):
    _, d, _ = torus
    val = correlation.dimer_cylinder_prob(d, [d.c_bisector(0, 0, True)], rule="dimer")
    assert 0 <= val <= 1


@pytest.mark.parametrize("t", [(1, 1, 1), (3, 1, 1), (0.5, 2, 1.2)])
def test_finite_correlation_matches_enumeration(t):
    p = LatticeParams(*t)
    d = decorate(TorusLattice(2), p)
    cache = correlation.TorusPfaffians(d)
    for i, j, k in itertools.product(range(2), range(2), range(2)):
        e, f = (i, j, "b"), (i, j + k, "b")
        val = correlation.finite_correlation(d, nw_path(d, e, f), cache=cache)
        assert val == pytest.approx(oracle.enumerate_correlation(2, p, e, f), abs=1e-8)


def test_path_length_guard():
    d = decorate(TorusLattice(12), LatticeParams(1, 1, 1))
    path = nw_path(d, (0, 0, "b"), (0, 7, "b"))
    with pytest.raises(ValueError):
        correlation.finite_correlation(d, path, cache=object())


@pytest.fixture(scope="module")
def sub():
    p = LatticeParams(1, 1, 1)
    return p, correlation.ToeplitzData.compute(p, 128)


@pytest.fixture(scope="module")
def sup():
    p = LatticeParams(9, 1, 1)
    return p, correlation.ToeplitzData.compute(p, 128)


def test_toeplitz_matrix_structure(sub):
    _, data = sub
    t = data.matrix(3)
    assert t.shape == (12, 12)
    assert np.allclose(t[4:8, 8:12], data.coeffs[1])
    assert np.allclose(t[8:12, 0:4], data.coeffs[-2 % data.m])
    assert np.abs(t + t.T).max() <= 1e-12
    with pytest.raises(ValueError):
        data.matrix(100)


def test_pfaffian_squares_to_det(sub, sup):
    for p, data in (sub, sup):
        for k in (1, 4, 7):
            det, pf = correlation.toeplitz_correlation_sq(p, k, data=data)
            assert pf * pf == pytest.approx(det, rel=1e-9, abs=1e-30)


def test_toeplitz_rejects_k_zero(sub):
    with pytest.raises(ValueError):
        correlation.toeplitz_correlation_sq(sub[0], 0, data=sub[1])


def test_subcritical_limit_and_decay(sub):
    p, data = sub
    lam, g, _ = correlation.widom_limit(p, 14, data=data)
    assert abs(lam) <= 1e-6
    assert g == pytest.approx(1.0, abs=1e-9)
    fit = correlation.decay_rate(p, 14, data=data)
    assert 0 < fit.alpha < 1 and fit.ok


def test_supercritical_limit(sup):
    p, data = sup
    lam, g, err = correlation.widom_limit(p, 14, data=data)
    assert lam > 0.5 and err < 1e-12
    assert g == pytest.approx(1.0, abs=1e-6)
    fit = correlation.decay_rate(p, 14, data=data)
    assert 0 < fit.alpha < 1


def test_geometric_contraction_of_differences(sup):
    p, data = sup
    dets, _ = correlation.toeplitz_series(p, 10, data=data)
    diffs = np.abs(np.diff(dets))[:6]
    assert np.all(diffs[1:] < diffs[:-1])


def test_critical_slowing():
    near = correlation.decay_rate(LatticeParams(3.9, 1, 1), 14, m=128)
    far = correlation.decay_rate(LatticeParams(1, 1, 1), 14, m=128)
    assert far.alpha < near.alpha < 1


def test_decay_rate_needs_kmax():
    with pytest.raises(ValueError):
        correlation.decay_rate(LatticeParams(1, 1, 1), 5)


def test_extreme_continuity():
    _, pf = correlation.toeplitz_correlation_sq(LatticeParams(4, 1, 1e-4), 10, m=128)
    assert pf == pytest.approx(1.0, abs=1e-3)


def test_series_outputs_are_deterministic():
    p = LatticeParams(9, 1, 1)
    a = correlation.correlation_series(p, 8, 64)
    b = correlation.correlation_series(p, 8, 64)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()
    lines = a.to_csv().splitlines()
    assert lines[0] == "k,det,pf,diff,fit" and len(lines) == 9
