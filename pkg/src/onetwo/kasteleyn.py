"""Kasteleyn matrices of the decorated lattice and their Fourier inverses.

Phase convention: a crossing edge whose head lies d1 domains along t1 and
d2 along t2 carries w**d1 * z**d2 on (tail, head) and the inverse phase
on (head, tail). With this choice det K1(z, w) equals the closed-form
characteristic polynomial with no further substitution.
"""
from __future__ import annotations

import logging

import numpy as np

from .antisym import pfaffian, y_block
from .hexlattice import (
    C_BISECTORS,
    LatticeParams,
    TorusLattice,
    bisector_weights,
    decorate,
    decorated_fundamental,
)

log = logging.getLogger(__name__)

DEFAULT_M = 256
SYMBOL_VERTICES = (C_BISECTORS[0][0], C_BISECTORS[0][1], C_BISECTORS[1][0], C_BISECTORS[1][1])


class CriticalParameterError(ValueError):
    """The spectral curve comes too close to the unit torus for quadrature."""


def char_poly(p: LatticeParams, z, w):
    """Closed-form characteristic polynomial; broadcasts over z and w."""
    a, b, c = p.a, p.b, p.c
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    a2, b2, c2 = a * a, b * b, c * c
    val = (a2 * a2 + b2 * b2 + c2 * c2 + 6 * (a2 * b2 + a2 * c2 + b2 * c2)
           - 2 * a * b * (z + 1 / z) * (a2 + b2 - c2)
           - 2 * a * c * (w + 1 / w) * (a2 + c2 - b2)
           - 2 * b * c * (z / w + w / z) * (b2 + c2 - a2))
    return val[()] if val.ndim == 0 else val


def char_poly_det(p: LatticeParams, z: complex, w: complex) -> complex:
    return complex(np.linalg.det(assemble_fundamental(p, z, w)))


def assemble_fundamental(p: LatticeParams, z: complex, w: complex) -> np.ndarray:
    """16 x 16 phased Kasteleyn matrix K1(z, w)."""
    cell = decorated_fundamental()
    return cell.kasteleyn(bisector_weights(p), complex(z), complex(w))


def assemble_grid(p: LatticeParams, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """K1 at every pair (z[i], w[j]); shape (len(z), len(w), 16, 16)."""
    return decorated_fundamental().kasteleyn_grid(bisector_weights(p), z, w)


def assemble_torus(p: LatticeParams, n: int, z: complex = 1, w: complex = 1) -> np.ndarray:
    """Kasteleyn matrix of the decorated n x n torus, 16 n^2 square.

    Edges crossing the t1 seam pick up w (or 1/w), those crossing the t2
    seam z (or 1/z). It is antisymmetric for z, w in {1, -1}.
    """
    if n > 12:
        raise MemoryError("torus assembly capped at n = 12")
    d = decorate(TorusLattice(n), p)
    dim = d.num_vertices
    k = np.zeros((dim, dim), dtype=complex)
    wts = bisector_weights(p)
    for tail, head, lab, (h1, h2) in d.edges:
        ph = complex(w) ** h1 * complex(z) ** h2
        k[tail, head] += wts[lab] * ph
        k[head, tail] -= wts[lab] / ph
    return k


SECTORS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def sector_pfaffians(p: LatticeParams, n: int) -> dict[tuple[int, int], complex]:
    """Pf K_n(z, w) at the four sign points, keyed by (z, w)."""
    return {s: pfaffian(assemble_torus(p, n, *s)) for s in SECTORS}


def grid_points(m: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(m) / m)


def torus_gap_grid(p: LatticeParams, m: int) -> float:
    g = grid_points(m)
    return float(np.abs(char_poly(p, g[:, None], g[None, :])).min())


def check_off_critical(p: LatticeParams, m: int) -> float:
    gap = torus_gap_grid(p, m)
    if gap <= 1e-8 * (p.a + p.b + p.c) ** 4:
        raise CriticalParameterError(
            f"spectral curve meets the unit torus at (a,b,c)={p.as_tuple()}: min |P| = {gap:.3e}")
    return gap


def fiber_average(p: LatticeParams, z: complex, m: int, d1: int = 0) -> np.ndarray:
    """(1/m) sum over w on the m-point circle of K1(z, w)^{-1} w^{-d1}."""
    w = grid_points(m)
    mats = assemble_grid(p, np.array([z]), w)[0]
    inv = np.linalg.inv(mats)
    return np.tensordot(w ** (-d1), inv, axes=1) / m


def inverse_entry(p: LatticeParams, u: int, v: int, shift=0, m: int = DEFAULT_M,
                  check: bool = True) -> complex:
    """Infinite-volume K^{-1} between local u in domain 0 and local v in the
    domain ``shift`` away; an integer shift means that many steps along t2."""
    d1, d2 = (0, int(shift)) if np.isscalar(shift) else (int(shift[0]), int(shift[1]))
    if check:
        check_off_critical(p, m)
    g = grid_points(m)
    total = 0j
    for zj in g:
        total += fiber_average(p, zj, m, d1)[u, v] * zj ** (-d2)
    return complex(total / m)


def symbol(p: LatticeParams, z: complex, m: int = DEFAULT_M, check: bool = True) -> np.ndarray:
    """psi(z) = Y2(1) + 2c [mean over w of K1(z, w)^{-1}] on the c-bisector vertices."""
    if check:
        check_off_critical(p, m)
    idx = np.array(SYMBOL_VERTICES)
    avg = fiber_average(p, z, m)
    return y_block(1) + 2 * p.c * avg[np.ix_(idx, idx)]


def symbol_samples(p: LatticeParams, m: int = DEFAULT_M, check: bool = True) -> np.ndarray:
    """psi at the m-point circle, shape (m, 4, 4)."""
    if check:
        check_off_critical(p, m)
    idx = np.array(SYMBOL_VERTICES)
    g = grid_points(m)
    inv = np.linalg.inv(assemble_grid(p, g, g))
    avg = inv.mean(axis=1)[:, idx[:, None], idx[None, :]]
    return y_block(1)[None] + 2 * p.c * avg


def symbol_fourier(samples: np.ndarray) -> np.ndarray:
    """Coefficients psi_k = (1/m) sum_j psi(z_j) z_j^{-k}, indexed k mod m."""
    return np.fft.fft(samples, axis=0) / samples.shape[0]


def symbol_from_fourier(coeffs: np.ndarray) -> np.ndarray:
    return np.fft.ifft(coeffs, axis=0) * coeffs.shape[0]


def symbol_to_json(p: LatticeParams, m: int = 64) -> dict:
    s = symbol_samples(p, m)
    c = symbol_fourier(s)

    def enc(x: np.ndarray) -> list:
        return [[[round(float(v.real), 14), round(float(v.imag), 14)] for v in row] for row in x]

    return {
        "params": list(p.as_tuple()),
        "m": m,
        "samples": [enc(x) for x in s],
        "fourier": {str(k if k <= m // 2 else k - m): enc(c[k]) for k in range(m)},
    }
