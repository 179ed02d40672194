from collections import Counter

import numpy as np
import pytest
from hypothesis import given

from conftest import angles, triples
from onetwo import kasteleyn
from onetwo.correlation import dimer_partition
from onetwo.hexlattice import LatticeParams, TorusLattice, decorate


def matchings(d):
    """Every perfect matching of the decorated torus as a tuple of edge indices."""
    adj = [[] for _ in range(d.num_vertices)]
    for e, (t, h, _, _) in enumerate(d.edges):
        adj[t].append((h, e))
        adj[h].append((t, e))
    matched = [False] * d.num_vertices
    out, cur = [], []

    def rec(start):
        v = start
        while v < len(matched) and matched[v]:
            v += 1
        if v == len(matched):
            out.append(tuple(cur))
            return
        matched[v] = True
        for u, e in adj[v]:
            if not matched[u]:
                matched[u] = True
                cur.append(e)
                rec(v + 1)
                cur.pop()
                matched[u] = False
        matched[v] = False

    rec(0)
    return out


@pytest.fixture(scope="module")
def torus2():
    p = LatticeParams(1.3, 0.7, 2.1)
    d = decorate(TorusLattice(2), p)
    return p, d, matchings(d)


def test_pfaffian_sectors_count_all_matchings(torus2):
    p, d, ms = torus2
    wts = {"a": p.a, "b": p.b, "c": p.c, "1": 1.0}
    total = sum(np.prod([wts[d.edges[e][2]] for e in m]) for m in ms)
    assert dimer_partition(p, 2) == pytest.approx(total, rel=1e-10)


def test_gadget_has_one_matching_per_bisector_pattern(torus2):
    _, d, ms = torus2
    patterns = Counter(frozenset(e for e in m if d.edges[e][2] != "1") for m in ms)
    assert max(patterns.values()) == 1


def test_char_poly_at_one_one():
    p = LatticeParams(1, 2, 3)
    a, b, c = p.as_tuple()
    assert kasteleyn.char_poly(p, 1, 1) == pytest.approx((a * a + b * b + c * c - 2 * a * b - 2 * b * c - 2 * a * c) ** 2)
    assert kasteleyn.char_poly(LatticeParams(4, 1, 1), 1, 1) == 0


@given(triples, angles, angles)
def test_det_identity(p, t, s):
    z, w = np.exp(1j * t), np.exp(1j * s)
    f = kasteleyn.char_poly(p, z, w)
    assert abs(kasteleyn.char_poly_det(p, z, w) - f) <= 1e-9 * abs(f)


@given(triples, angles, angles)
def test_char_poly_real_and_nonnegative_on_torus(p, t, s):
    f = kasteleyn.char_poly(p, np.exp(1j * t), np.exp(1j * s))
    assert abs(f.imag) <= 1e-9 * p.total ** 4
    assert f.real >= -1e-9 * p.total ** 4


def test_char_poly_broadcasts():
    p = LatticeParams(1, 2, 3)
    g = kasteleyn.grid_points(8)
    grid = kasteleyn.char_poly(p, g[:, None], g[None, :])
    assert grid.shape == (8, 8)
    assert grid[3, 5] == pytest.approx(kasteleyn.char_poly(p, g[3], g[5]))


def test_grid_assembly_matches_pointwise():
    p = LatticeParams(1, 2, 3)
    g = kasteleyn.grid_points(4)
    grid = kasteleyn.assemble_grid(p, g, g)
    assert np.allclose(grid[1, 2], kasteleyn.assemble_fundamental(p, g[1], g[2]))


def test_torus_matrix_antisymmetric_at_sign_points():
    p = LatticeParams(1, 2, 3)
    for z, w in kasteleyn.SECTORS:
        k = kasteleyn.assemble_torus(p, 2, z, w)
        assert k.shape == (64, 64)
        assert np.array_equal(k, -k.T)


def test_torus_determinant_factorizes():
    # a 2 x 2 torus with phases (z, w) has det = product of K1 over the square roots
    p = LatticeParams(1.2, 0.8, 1.7)
    z, w = np.exp(0.7j), np.exp(2.3j)
    big = np.linalg.det(kasteleyn.assemble_torus(p, 2, z, w))
    prod = 1
    for sz in (1, -1):
        for sw in (1, -1):
            prod *= kasteleyn.char_poly(p, sz * np.sqrt(z), sw * np.sqrt(w))
    assert big == pytest.approx(prod, rel=1e-9)


def test_torus_size_guard():
    with pytest.raises(MemoryError):
        kasteleyn.assemble_torus(LatticeParams(1, 1, 1), 14)


def test_sector_pfaffians_square_to_det():
    p = LatticeParams(1, 1, 1)
    pf = kasteleyn.sector_pfaffians(p, 2)
    for zw, val in pf.items():
        det = np.linalg.det(kasteleyn.assemble_torus(p, 2, *zw))
        assert val * val == pytest.approx(det, rel=1e-9)


def test_off_critical_guard():
    with pytest.raises(kasteleyn.CriticalParameterError):
        kasteleyn.check_off_critical(LatticeParams(4, 1, 1), 64)
    assert kasteleyn.check_off_critical(LatticeParams(1, 1, 1), 64) > 0


@pytest.mark.parametrize("t", [(1, 1, 1), (9, 1, 1), (2, 3, 1.5)])
def test_symbol_has_unit_determinant(t):
    p = LatticeParams(*t)
    for z in np.exp(1j * np.array([0.3, 1.9, 4.4])):
        assert abs(np.linalg.det(kasteleyn.symbol(p, z, 128)) - 1) <= 1e-9


def test_symbol_samples_match_pointwise():
    p = LatticeParams(2, 1, 1)
    s = kasteleyn.symbol_samples(p, 32)
    g = kasteleyn.grid_points(32)
    assert np.allclose(s[5], kasteleyn.symbol(p, g[5], 32))


def test_fourier_round_trip():
    s = kasteleyn.symbol_samples(LatticeParams(1, 1, 1), 32)
    c = kasteleyn.symbol_fourier(s)
    assert np.allclose(kasteleyn.symbol_from_fourier(c), s)


def test_fourier_coefficients_are_inverse_entries():
    # off the diagonal block, psi_k = 2c K^{-1}(u, v shifted k along t2)
    p = LatticeParams(1.5, 1, 0.8)
    m = 32
    coeffs = kasteleyn.symbol_fourier(kasteleyn.symbol_samples(p, m))
    idx = kasteleyn.SYMBOL_VERTICES
    for k in (1, 2, -1):
        for r, s in ((0, 1), (0, 3), (2, 1)):
            g = kasteleyn.inverse_entry(p, idx[r], idx[s], shift=k, m=m)
            assert 2 * p.c * g == pytest.approx(coeffs[k % m][r, s], abs=1e-12)


def test_inverse_entry_converges():
    p = LatticeParams(1, 1, 1)
    g64 = kasteleyn.inverse_entry(p, 0, 1, shift=(0, 1), m=64)
    g128 = kasteleyn.inverse_entry(p, 0, 1, shift=(0, 1), m=128)
    assert abs(g64 - g128) <= 1e-10


def test_inverse_entry_is_an_inverse():
    # sum over neighbours of K(u, .) G(., v) = delta(u, v) in infinite volume
    p = LatticeParams(1, 1, 1)
    m = 64
    cell = kasteleyn.decorated_fundamental()
    wts = kasteleyn.bisector_weights(p)
    terms = cell.phase_terms(wts)
    target = 3
    for u in (0, 3, 7):
        acc = 0j
        for (d1, d2), coef in terms:
            for v in np.nonzero(coef[u])[0]:
                # coef at offset (d1, d2) couples u in domain 0 to v in domain (d1, d2)
                acc += coef[u, v] * kasteleyn.inverse_entry(p, v, target, shift=(-d1, -d2), m=m)
        assert acc == pytest.approx(1.0 if u == target else 0.0, abs=1e-10)


def test_symbol_json_shape():
    out = kasteleyn.symbol_to_json(LatticeParams(1, 1, 1), 8)
    assert out["m"] == 8 and len(out["samples"]) == 8
    assert set(out["fourier"]) == {str(k) for k in range(-3, 5)}
