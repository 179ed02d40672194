"""Dense complex antisymmetric linear algebra.

The Pfaffian is computed by a Parlett-Reid skew tridiagonalization with
partial pivoting. A matching expansion is kept for small matrices so the
fast routine has something to be checked against.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class SingularMatrixError(ValueError):
    """Raised when an identity needs an inverse that does not exist."""


@dataclass(frozen=True)
class AntisymMatrix:
    """Even-dimensional complex matrix with ``A.T == -A`` enforced on entry."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("antisymmetric matrix must be square")
        if not np.array_equal(a, -a.T):
            raise ValueError("matrix is not antisymmetric")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_upper(cls, a: np.ndarray) -> "AntisymMatrix":
        """Build from the strict upper triangle of ``a``."""
        u = np.triu(np.asarray(a, dtype=complex), 1)
        return cls(u - u.T)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def pfaffian(self) -> complex:
        return pfaffian(self.entries)

    def det(self) -> complex:
        return complex(np.linalg.det(self.entries))

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.entries)

    def minor(self, rows: Sequence[int]) -> np.ndarray:
        """Principal submatrix on ``rows`` (0-based, in the given order)."""
        idx = np.asarray(rows, dtype=int)
        return self.entries[np.ix_(idx, idx)]

    def delete(self, rows: Iterable[int]) -> np.ndarray:
        keep = np.setdiff1d(np.arange(self.dim), np.asarray(list(rows), dtype=int))
        return self.entries[np.ix_(keep, keep)]


def _as_array(a) -> np.ndarray:
    if isinstance(a, AntisymMatrix):
        return a.entries
    return np.asarray(a, dtype=complex)


def random_antisym(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random complex antisymmetric matrix with standard normal parts."""
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    u = np.triu(m, 1)
    return u - u.T


def pfaffian(a) -> complex:
    """Pfaffian of an antisymmetric matrix.

    Uses the Parlett-Reid elimination: at step k the largest entry of
    column k below the diagonal is pivoted to row k+1 (a symmetric swap,
    which flips the sign), and the Gauss transform built from that pivot
    removes the rest of the column while keeping the trailing block
    antisymmetric. The Pfaffian is the product of the pivots.
    """
    m = np.array(_as_array(a), dtype=complex)
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n % 2:
        return 0j
    result = 1.0 + 0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(m[k + 1:, k])))
        if kp != k + 1:
            m[[k + 1, kp], :] = m[[kp, k + 1], :]
            m[:, [k + 1, kp]] = m[:, [kp, k + 1]]
            result = -result
        pivot = m[k, k + 1]
        if pivot == 0:
            return 0j
        result *= pivot
        if k + 2 < n:
            tau = m[k, k + 2:] / pivot
            col = m[k + 2:, k + 1]
            m[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return complex(result)


def pfaffian_expansion(a) -> complex:
    """Pfaffian as a signed sum over perfect matchings. Only for dim <= 10."""
    m = _as_array(a)
    n = m.shape[0]
    if n % 2:
        return 0j
    if n > 10:
        raise ValueError("matching expansion limited to dim <= 10")

    def rec(idx: tuple[int, ...]) -> complex:
        if not idx:
            return 1.0 + 0j
        first, rest = idx[0], idx[1:]
        total = 0j
        for pos, j in enumerate(rest):
            # pairing first with the pos-th remaining index costs pos transpositions
            sign = -1 if pos % 2 else 1
            total += sign * m[first, j] * rec(rest[:pos] + rest[pos + 1:])
        return total

    return rec(tuple(range(n)))


def y_block(k: int, lam: complex = 1.0) -> np.ndarray:
    """Block diagonal with 2k blocks [[0, lam], [-lam, 0]], size 4k."""
    y = np.zeros((4 * k, 4 * k), dtype=complex)
    for i in range(2 * k):
        y[2 * i, 2 * i + 1] = lam
        y[2 * i + 1, 2 * i] = -lam
    return y


def pfaffian_minor(a, deleted: Iterable[int]) -> complex:
    """Pfaffian of ``a`` with the rows and columns in ``deleted`` removed (0-based)."""
    m = _as_array(a)
    drop = sorted(set(deleted))
    if len(drop) % 2:
        raise ValueError("deleted index set must have even size")
    keep = np.setdiff1d(np.arange(m.shape[0]), np.asarray(drop, dtype=int))
    return pfaffian(m[np.ix_(keep, keep)])


def check_minor_identity(a, rows: Sequence[int]) -> float:
    """Relative residual of (-1)^S(L) Pf(A without L) = Pf(A) Pf((A^-1)_L).

    ``rows`` is 0-based; S(L) is the sum of the 1-based positions. An empty
    L compares Pf(A) with itself, with Pf of the empty inverse block set to 1.
    """
    m = _as_array(a)
    rows = sorted(set(rows))
    if len(rows) % 2:
        raise ValueError("index set must have even size")
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("matrix is singular") from exc
    pf = pfaffian(m)
    if pf == 0:
        raise SingularMatrixError("matrix is singular")
    s = sum(r + 1 for r in rows)
    lhs = (-1) ** s * pfaffian_minor(m, rows)
    idx = np.asarray(rows, dtype=int)
    rhs = pf * pfaffian(inv[np.ix_(idx, idx)])
    return float(abs(lhs - rhs) / abs(rhs))


def paired_minor_sum(a) -> complex:
    """Sum over subsets I of the 2k index pairs of Pf(A restricted to I)."""
    m = _as_array(a)
    npairs = m.shape[0] // 2
    total = 0j
    for mask in range(1 << npairs):
        idx = [r for i in range(npairs) if mask >> i & 1 for r in (2 * i, 2 * i + 1)]
        total += pfaffian(m[np.ix_(idx, idx)]) if idx else 1.0
    return total


def check_expansion_identity(a, max_k: int = 4) -> float:
    """Relative residual of Pf[Y(1) + A] against the paired-minor subset sum."""
    m = _as_array(a)
    dim = m.shape[0]
    if dim % 4:
        raise ValueError("dimension must be a multiple of 4")
    k = dim // 4
    if k > max_k:
        raise ValueError(f"k={k} exceeds the subset-sum cost guard ({max_k})")
    lhs = pfaffian(y_block(k) + m)
    rhs = paired_minor_sum(m)
    return float(abs(lhs - rhs) / max(abs(rhs), 1e-300))
