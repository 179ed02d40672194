"""k x 1 periodic 1-2 models and the 2 x 1 Fisher graph.

The k x 1 cell stacks k copies of the decorated domain along t1. Its
periods are S_w = t2 - t1 (phase w) and S_z = -k t1 (phase z). Block i
holds the two lattice vertices W(i) and B(i+1) joined by a NE edge;
vertex 1 of the block is W(i) and vertex 2 is B(i+1).
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .hexlattice import (
    GADGET_EDGES,
    LOCAL_POSITIONS,
    LOCAL_VERTICES,
    T1,
    T2,
    LatticeError,
    PeriodicGraph,
)
from .kasteleyn import grid_points

log = logging.getLogger(__name__)

BLOCK_FIELDS = ("a1", "b1", "c1", "a2", "b2", "c2")


@dataclass(frozen=True)
class PeriodicParams:
    """Per-block weights: blocks[i] = (a_i1, b_i1, c_i1, a_i2, b_i2, c_i2)."""

    blocks: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        blocks = tuple(tuple(float(x) for x in b) for b in self.blocks)
        if not blocks:
            raise ValueError("need at least one block")
        for b in blocks:
            if len(b) != 6:
                raise ValueError("each block needs six weights")
            if any(not math.isfinite(x) or x < 0 for x in b):
                raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "blocks", blocks)

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def strictly_positive(self) -> bool:
        return all(x > 0 for b in self.blocks for x in b)

    @classmethod
    def uniform(cls, k: int, a: float, b: float, c: float) -> "PeriodicParams":
        return cls(tuple((a, b, c, a, b, c) for _ in range(k)))

    @classmethod
    def from_json(cls, text: str) -> "PeriodicParams":
        """Accepts a list of blocks, each a list of six numbers or a dict
        with keys a1, b1, c1, a2, b2, c2; or {"blocks": [...]}."""
        data = json.loads(text)
        if isinstance(data, dict):
            data = data["blocks"]
        blocks = []
        for b in data:
            if isinstance(b, dict):
                blocks.append(tuple(b[f] for f in BLOCK_FIELDS))
            else:
                blocks.append(tuple(b))
        return cls(tuple(blocks))

    def vertex_weights(self) -> dict[str, float]:
        """Bisector weights keyed 'type:Hm' with H in {B, W}, m the domain."""
        k = self.k
        out = {"1": 1.0}
        for i, blk in enumerate(self.blocks):
            for t, x in zip("abc", blk[:3]):
                out[f"{t}:W{i}"] = x
            for t, x in zip("abc", blk[3:]):
                out[f"{t}:B{(i + 1) % k}"] = x
        return out


@lru_cache(maxsize=16)
def periodic_cell(k: int) -> PeriodicGraph:
    """The decorated k x 1 cell with a clockwise-odd orientation.

    Lifting the single-domain orientation gives the right face parities.
    For even k the edges crossing the z seam are then reversed, which moves
    to the spin class in which the block decomposition holds verbatim.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    names, pos, edges = [], {}, []
    for m in range(k):
        for nm in LOCAL_VERTICES:
            names.append(f"{nm}{m}")
            pos[f"{nm}{m}"] = LOCAL_POSITIONS[nm] + m * T1
    for m in range(k):
        for u, v, (d1, d2), lab in GADGET_EDGES:
            t = m + d1 + d2
            alpha, mp = -(t // k), t % k
            if lab != "1":
                lab = f"{lab}:{v}{mp}"
            tail, head = f"{u}{m}", f"{v}{mp}"
            if k % 2 == 0 and alpha % 2:
                tail, head, off = head, tail, (-d2, -alpha)
            else:
                off = (d2, alpha)
            edges.append((tail, head, off, lab))
    g = PeriodicGraph.from_named(names, pos, edges, periods=(T2 - T1, -k * T1))
    if g.clockwise_odd_violations():
        raise LatticeError("periodic cell orientation is not clockwise odd")
    return g


def assemble_periodic(pp: PeriodicParams, z: complex, w: complex) -> np.ndarray:
    """16k x 16k phased Kasteleyn matrix of the k x 1 cell."""
    return periodic_cell(pp.k).kasteleyn(pp.vertex_weights(), complex(z), complex(w))


def periodic_det(pp: PeriodicParams, z: complex, w: complex) -> complex:
    return complex(np.linalg.det(assemble_periodic(pp, z, w)))


def block_coefficients(blk: Sequence[float]) -> tuple[float, float]:
    """(A_i, B_i) of the single-cycle sector."""
    a1, b1, c1, a2, b2, c2 = blk
    A = (-a1 ** 2 * a2 * b2 - a1 * a2 ** 2 * b1 - a1 * b1 * b2 ** 2 + a1 * b1 * c2 ** 2
         - a2 * b1 ** 2 * b2 + a2 * b2 * c1 ** 2)
    B = (-a1 ** 2 * a2 * c2 - a1 * a2 ** 2 * c1 + a1 * b2 ** 2 * c1 - a1 * c1 * c2 ** 2
         + a2 * b1 ** 2 * c2 - a2 * c1 ** 2 * c2)
    return A, B


def block_partition(blk: Sequence[float], w: complex) -> dict[tuple[int, int], complex]:
    """Q^{st} of one block, s and t the occupations (0 or 2) of its left and right z-edges."""
    a1, b1, c1, a2, b2, c2 = blk
    W = w - 1 / w
    s = w + 1 / w
    q00 = ((a1 * a2 - b1 * c2 / w + b1 * b2 + c1 * c2 - b2 * c1 * w)
           * (a1 * a2 - b2 * c1 / w + b1 * b2 + c1 * c2 - b1 * c2 * w))
    q02 = W * (a2 ** 2 * b1 * c1 + a1 * c2 * a2 * b1 + a1 * b2 * a2 * c1
               + b2 * c2 * (b1 ** 2 - b1 * c1 * s + c1 ** 2))
    q20 = W * (a1 ** 2 * b2 * c2 + a2 * c1 * a1 * b2 + a2 * b1 * a1 * c2
               + b1 * c1 * (b2 ** 2 - b2 * c2 * s + c2 ** 2))
    q22 = (-b1 * b2 * c1 * c2 * W ** 2 + (a1 * b2 + a2 * b1) ** 2 + (a1 * c2 + a2 * c1) ** 2
           + (a2 ** 2 * b1 * c1 + a1 ** 2 * b2 * c2 + a1 * a2 * b1 * c2 + a1 * a2 * b2 * c1) * s)
    return {(0, 0): q00, (0, 2): q02, (2, 0): q20, (2, 2): q22}


def case_decomposition(pp: PeriodicParams, z: complex, w: complex,
                       literal: bool = False) -> tuple[complex, complex]:
    """(P1, P2) for the single-cycle and the doubled-z-edge sectors.

    P2 is the cyclic transfer sum over z-edge occupations t in {0, 2}^k.
    Each 0 -> 2 switch carries a factor -1, which makes every mixed term
    nonnegative on the unit circle. ``literal=True`` drops that sign; the
    two agree when k = 1 and differ from k = 2 on.
    """
    coef = [block_coefficients(b) for b in pp.blocks]
    p1 = (np.prod([A * w + B for A, B in coef]) / z
          + z * np.prod([A / w + B for A, B in coef]))
    qs = [block_partition(b, w) for b in pp.blocks]
    k = pp.k
    p2 = 0j
    for t in itertools.product((0, 2), repeat=k):
        term = 1 + 0j
        switches = 0
        for i in range(k):
            key = (t[i - 1], t[i])
            term *= qs[i][key]
            switches += key == (0, 2)
        p2 += term if literal else (-1) ** switches * term
    return complex(p1), complex(p2)


@dataclass
class ScanReport:
    m: int
    min_abs: float
    argmin: tuple[float, float]
    threshold: float
    near_zero_cells: list[tuple[int, int]]
    violating_cells: list[tuple[int, int]]
    max_imag: float  # largest |Im P| relative to max |P|

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "min_abs": self.min_abs,
            "argmin_theta_phi": list(self.argmin),
            "threshold": self.threshold,
            "near_zero_cells": [list(c) for c in self.near_zero_cells],
            "violating_cells": [list(c) for c in self.violating_cells],
            "max_imag_over_abs": self.max_imag,
        }


def det_grid(pp: PeriodicParams, m: int) -> np.ndarray:
    """det K(e^{i theta_j}, e^{i phi_l}) on the m x m grid, indexed [j, l]."""
    g = grid_points(m)
    cell = periodic_cell(pp.k)
    terms = cell.phase_terms(pp.vertex_weights())
    out = np.empty((m, m), dtype=complex)
    wpow = {d1: g[:, None, None] ** d1 for (d1, _), _ in terms}
    for j, z in enumerate(g):
        mats = sum(coef * wpow[d1] * z ** d2 for (d1, d2), coef in terms)
        out[j] = np.linalg.det(mats)
    return out


def real_intersection_scan(pp: PeriodicParams, m: int = 128, rel_threshold: float = 1e-3) -> ScanReport:
    """Locate near-zeros of P on the grid and flag any away from real points.

    A cell is near-zero when |P| is below ``rel_threshold`` times the grid
    median of |P| and it is a local minimum among its eight neighbours. It
    violates the real-point property unless theta or phi lies within one
    cell of 0 or pi.
    """
    vals = det_grid(pp, m)
    mag = np.abs(vals)
    thr = rel_threshold * float(np.median(mag))
    near, bad = [], []
    for j in range(m):
        for l in range(m):
            if mag[j, l] >= thr:
                continue
            nb = [mag[(j + dj) % m, (l + dl) % m] for dj in (-1, 0, 1) for dl in (-1, 0, 1) if dj or dl]
            if mag[j, l] > min(nb):
                continue
            near.append((j, l))
            if not (_near_real(j, m) or _near_real(l, m)):
                bad.append((j, l))
    j0, l0 = np.unravel_index(np.argmin(mag), mag.shape)
    imag = float(np.abs(vals.imag).max() / mag.max())
    step = 2 * np.pi / m
    return ScanReport(m, float(mag.min()), (float(j0 * step), float(l0 * step)), thr, near, bad, imag)


def _near_real(idx: int, m: int) -> bool:
    # grid index of angle 0 is 0, of pi is m/2
    return min(idx % m, (-idx) % m, abs(idx - m / 2)) <= 1


_FISHER_DIRS_B = {"a": 0.0, "b": 120.0, "c": 240.0}
_FISHER_DIRS_W = {"a": 180.0, "b": 300.0, "c": 60.0}
_FISHER_STEP = {"a": (0, 0), "b": (0, 1), "c": (1, 0)}


@lru_cache(maxsize=1)
def fisher_cell() -> tuple[PeriodicGraph, tuple[int, ...]]:
    """Fisher graph of the hexagonal lattice with a 2 x 1 cell along t1.

    Each lattice vertex becomes a triangle whose corners face its three
    edges; the edge owned by W in cell m carries weight a_m, b_m or c_m.
    Periods are (2 t1, t2) with phases (w, z). The orientation is the
    GF(2) solution of the face parity system.
    """
    names, pos, edges = [], {}, []
    cells = ((0, 0), (1, 0))
    for m, (ci, cj) in enumerate(cells):
        base = ci * T1 + cj * T2
        for t in "abc":
            r = math.radians(_FISHER_DIRS_B[t])
            pos[f"B{m}{t}"] = base + 0.25 * np.array([math.cos(r), math.sin(r)])
            r = math.radians(_FISHER_DIRS_W[t])
            pos[f"W{m}{t}"] = base + np.array([1.0, 0.0]) + 0.25 * np.array([math.cos(r), math.sin(r)])
            names += [f"B{m}{t}", f"W{m}{t}"]
        for x in "BW":
            edges += [(f"{x}{m}a", f"{x}{m}b", (0, 0), "1"),
                      (f"{x}{m}b", f"{x}{m}c", (0, 0), "1"),
                      (f"{x}{m}c", f"{x}{m}a", (0, 0), "1")]
    for m, (ci, cj) in enumerate(cells):
        for t, (di, dj) in _FISHER_STEP.items():
            i, j = ci + di, cj + dj
            edges.append((f"W{m}{t}", f"B{i % 2}{t}", (i // 2, j), f"{t}{m + 1}"))
    g = PeriodicGraph.from_named(names, pos, edges, periods=(2 * T1, T2))
    orient = tuple(g.solve_orientation())
    if g.clockwise_odd_violations(orient):
        raise LatticeError("Fisher orientation is not clockwise odd")
    return g, orient


def fisher_matrix(weights: Sequence[float], z: complex, w: complex) -> np.ndarray:
    if len(weights) != 6 or any(x < 0 for x in weights):
        raise ValueError("Fisher weights are six nonnegative numbers (a1, b1, c1, a2, b2, c2)")
    g, orient = fisher_cell()
    wts = dict(zip(("a1", "b1", "c1", "a2", "b2", "c2"), (float(x) for x in weights)))
    wts["1"] = 1.0
    return g.kasteleyn(wts, complex(z), complex(w), orient)


def fisher_ising_poly(weights: Sequence[float], z: complex, w: complex) -> complex:
    return complex(np.linalg.det(fisher_matrix(weights, z, w)))


def fisher_sign_product(weights: Sequence[float]) -> tuple[float, float]:
    """(raw, normalized) product of P at the four sign points.

    P has degree at most 12 in the six edge weights (a perfect matching
    of the 12-vertex cell uses at most six weighted edges, squared by the
    determinant), so each factor is divided by max(1, max weight)**12.
    """
    scale = max(1.0, max(float(x) for x in weights)) ** 12
    raw = 1.0
    for z, w in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        raw *= float(np.linalg.det(fisher_matrix(weights, z, w)).real)
    return raw, raw / scale ** 4
