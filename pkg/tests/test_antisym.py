import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from onetwo.antisym import (
    AntisymMatrix,
    SingularMatrixError,
    check_expansion_identity,
    check_minor_identity,
    paired_minor_sum,
    pfaffian,
    pfaffian_expansion,
    pfaffian_minor,
    random_antisym,
    y_block,
)


def perm_sign(p):
    sign, p = 1, list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def pf_by_permutations(a):
    """Pf = 1/(2^n n!) sum over all permutations; independent of both module routines."""
    dim = a.shape[0]
    n = dim // 2
    total = 0j
    for p in itertools.permutations(range(dim)):
        term = perm_sign(p)
        for i in range(n):
            term *= a[p[2 * i], p[2 * i + 1]]
        total += term
    return total / (2 ** n * math.factorial(n))


seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def test_small_closed_forms():
    a = AntisymMatrix.from_upper(np.array([[0, 3.0], [0, 0]]))
    assert a.pfaffian() == 3
    m = np.zeros((4, 4), dtype=complex)
    vals = dict(zip(itertools.combinations(range(4), 2), [2, 3, 5, 7, 11, 13]))
    for (i, j), v in vals.items():
        m[i, j], m[j, i] = v, -v
    expect = vals[0, 1] * vals[2, 3] - vals[0, 2] * vals[1, 3] + vals[0, 3] * vals[1, 2]
    assert pfaffian(m) == pytest.approx(expect)


def test_empty_and_odd():
    assert pfaffian(np.zeros((0, 0))) == 1
    assert pfaffian(random_antisym(5, np.random.default_rng(0))) == 0
    assert pfaffian_expansion(random_antisym(3, np.random.default_rng(0))) == 0


@pytest.mark.parametrize("dim", [2, 4, 6])
def test_matches_permutation_sum(dim, rng):
    a = random_antisym(dim, rng)
    ref = pf_by_permutations(a)
    assert abs(pfaffian(a) - ref) <= 1e-12 * max(1, abs(ref))
    assert abs(pfaffian_expansion(a) - ref) <= 1e-12 * max(1, abs(ref))


@given(seeds, st.sampled_from([2, 4, 6, 8, 10]))
def test_fast_pfaffian_matches_expansion(seed, dim):
    a = random_antisym(dim, np.random.default_rng(seed))
    ref = pfaffian_expansion(a)
    assert abs(pfaffian(a) - ref) <= 1e-10 * max(1, abs(ref))


@given(seeds, st.sampled_from([2, 4, 8, 16, 24]))
def test_square_is_determinant(seed, dim):
    a = random_antisym(dim, np.random.default_rng(seed))
    pf, det = pfaffian(a), np.linalg.det(a)
    assert abs(pf * pf - det) <= 1e-9 * abs(det)


@given(seeds)
def test_congruence(seed):
    # Pf(B A B^T) = det(B) Pf(A)
    r = np.random.default_rng(seed)
    a = random_antisym(6, r)
    b = r.standard_normal((6, 6)) + 1j * r.standard_normal((6, 6))
    lhs = pfaffian(b @ a @ b.T)
    rhs = np.linalg.det(b) * pfaffian(a)
    assert abs(lhs - rhs) <= 1e-9 * max(1, abs(rhs))


def test_zero_pivot_gives_zero():
    m = np.zeros((4, 4))
    m[0, 1], m[1, 0] = 1, -1
    assert pfaffian(m) == 0


def test_pivoting_handles_zero_leading_entry():
    m = np.zeros((4, 4))
    for (i, j), v in {(0, 2): 1.0, (1, 3): 1.0}.items():
        m[i, j], m[j, i] = v, -v
    # the only matching is {0,2},{1,3}, with sign -1
    assert pfaffian(m) == pytest.approx(-1)


def test_rejects_non_antisymmetric():
    with pytest.raises(ValueError):
        AntisymMatrix(np.ones((2, 2)))
    with pytest.raises(ValueError):
        AntisymMatrix(np.zeros((2, 3)))


def test_matrix_helpers(rng):
    a = AntisymMatrix(random_antisym(6, rng))
    assert a.dim == 6
    assert a.det() == pytest.approx(np.linalg.det(a.entries))
    assert np.allclose(a.inverse() @ a.entries, np.eye(6))
    assert a.minor([1, 4]).shape == (2, 2)
    assert a.minor([1, 4])[0, 1] == a.entries[1, 4]
    assert a.delete([0, 5]).shape == (4, 4)
    with pytest.raises(ValueError):
        a.entries[0, 1] = 0


def test_y_block():
    y = y_block(2, 3.0)
    assert y.shape == (8, 8)
    assert np.array_equal(y, -y.T)
    assert pfaffian(y) == pytest.approx(81)


def test_pfaffian_minor(rng):
    a = random_antisym(6, rng)
    keep = [0, 2, 3, 5]
    assert pfaffian_minor(a, [1, 4]) == pytest.approx(pfaffian(a[np.ix_(keep, keep)]))
    with pytest.raises(ValueError):
        pfaffian_minor(a, [1])


@given(seeds, st.sampled_from([4, 6, 8, 12]), st.data())
def test_minor_identity(seed, dim, data):
    a = random_antisym(dim, np.random.default_rng(seed))
    size = data.draw(st.integers(min_value=0, max_value=dim // 2)) * 2
    rows = data.draw(st.lists(st.integers(0, dim - 1), min_size=size, max_size=size, unique=True))
    assert check_minor_identity(a, rows) <= 1e-9


def test_minor_identity_needs_even_set_and_invertible(rng):
    with pytest.raises(ValueError):
        check_minor_identity(random_antisym(4, rng), [0])
    sing = np.zeros((4, 4))
    with pytest.raises(SingularMatrixError):
        check_minor_identity(sing, [0, 1])


def test_paired_minor_sum_small(rng):
    # for one pair: 1 + a01; for 4x4: 1 + a01 + a23 + Pf(A)
    a = random_antisym(4, rng)
    assert paired_minor_sum(a) == pytest.approx(1 + a[0, 1] + a[2, 3] + pfaffian(a))


@given(seeds, st.sampled_from([4, 8, 12]))
def test_expansion_identity(seed, dim):
    a = random_antisym(dim, np.random.default_rng(seed))
    assert check_expansion_identity(a) <= 1e-9


def test_expansion_identity_guards(rng):
    with pytest.raises(ValueError):
        check_expansion_identity(random_antisym(6, rng))
    with pytest.raises(ValueError):
        check_expansion_identity(random_antisym(20, rng))
