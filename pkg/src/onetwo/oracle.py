"""Brute-force ground truth on small tori.

Configurations are bitmasks over the 3 n^2 edges of the torus, bit e set
when edge e is present. Everything is vectorized over chunks of masks and
summed in a fixed order so repeated runs agree bit for bit.
"""
from __future__ import annotations

import logging
from typing import Iterator, Sequence

import numpy as np

from .hexlattice import LatticeParams, TorusLattice

log = logging.getLogger(__name__)

CHUNK = 1 << 20
MAX_DEFAULT_EDGES = 12

# sig = 4*c + 2*b + a (bit set = edge present); weight label per signature
SIGNATURE_LABEL = {0b000: None, 0b111: None,
                   0b001: "a", 0b110: "a",
                   0b010: "b", 0b101: "b",
                   0b100: "c", 0b011: "c"}


class CostGuardError(ValueError):
    """Enumeration larger than the caller allowed."""


class DegenerateCouplingError(ValueError):
    """ABC = 0, so the Ising couplings are undefined."""


def local_weight(sig: int, p: LatticeParams) -> float:
    """Vertex weight for the 3-bit signature (c, b, a) of its incident edges."""
    lab = SIGNATURE_LABEL[sig & 7]
    return 0.0 if lab is None else p.weight(lab)


def _weight_table(p: LatticeParams) -> np.ndarray:
    return np.array([local_weight(s, p) for s in range(8)])


def _check_cost(t: TorusLattice, allow_large: bool) -> None:
    ne = len(t.edges)
    if ne > MAX_DEFAULT_EDGES and not allow_large:
        raise CostGuardError(f"{ne} edges means 2^{ne} states; pass allow_large=True to run")


def _mask_chunks(nbits: int) -> Iterator[np.ndarray]:
    total = 1 << nbits
    for start in range(0, total, CHUNK):
        yield np.arange(start, min(total, start + CHUNK), dtype=np.int64)


def _vertex_signatures(t: TorusLattice, masks: np.ndarray) -> np.ndarray:
    """Signature of every vertex for every mask; shape (len(masks), |V|)."""
    inc = t.incidence
    bits = lambda e: (masks[:, None] >> e[None, :]) & 1
    return bits(inc[:, 0]) | (bits(inc[:, 1]) << 1) | (bits(inc[:, 2]) << 2)


def is_valid(t: TorusLattice, mask: int) -> bool:
    """Every vertex has one or two present edges."""
    deg = [0] * t.num_vertices
    for e, (_, _, _, w, b) in enumerate(t.edges):
        if mask >> e & 1:
            deg[w] += 1
            deg[b] += 1
    return all(d in (1, 2) for d in deg)


def config_weights(t: TorusLattice, p: LatticeParams, masks: np.ndarray) -> np.ndarray:
    table = _weight_table(p)
    return table[_vertex_signatures(t, masks)].prod(axis=1)


def enumerate_Z(n: int, p: LatticeParams, allow_large: bool = False) -> float:
    t = TorusLattice(n)
    _check_cost(t, allow_large)
    return float(sum(config_weights(t, p, m).sum() for m in _mask_chunks(len(t.edges))))


def _edge_spin(masks: np.ndarray, e: int) -> np.ndarray:
    return 2 * ((masks >> e) & 1) - 1


def enumerate_correlation(n: int, p: LatticeParams, e: tuple, f: tuple,
                          allow_large: bool = False) -> float:
    t = TorusLattice(n)
    _check_cost(t, allow_large)
    ie, jf = t.edge_index(e), t.edge_index(f)
    if ie == jf:
        return 1.0
    num = den = 0.0
    for m in _mask_chunks(len(t.edges)):
        w = config_weights(t, p, m)
        num += float((w * _edge_spin(m, ie) * _edge_spin(m, jf)).sum())
        den += float(w.sum())
    return num / den


def enumerate_occupation(n: int, p: LatticeParams, sites: Sequence[tuple[str, int, int]],
                         allow_large: bool = False) -> float:
    """Probability that the c-bisector is present at every listed vertex.

    A site is ("B" or "W", i, j); its c-bisector is present when the a and
    b edges there share a state.
    """
    t = TorusLattice(n)
    _check_cost(t, allow_large)
    verts = [t.black(i, j) if kind == "B" else t.white(i, j) for kind, i, j in sites]
    num = den = 0.0
    for m in _mask_chunks(len(t.edges)):
        w = config_weights(t, p, m)
        ok = np.ones(len(m), dtype=bool)
        for v in verts:
            ea, eb = t.incidence[v, 0], t.incidence[v, 1]
            ok &= ((m >> ea) & 1) == ((m >> eb) & 1)
        num += float(w[ok].sum())
        den += float(w.sum())
    return num / den


def spin_rep_Z(n: int, p: LatticeParams, allow_large: bool = False) -> float:
    """Sum over all edge spins of prod_v (1 + A s_b s_c + B s_a s_c + C s_a s_b)."""
    t = TorusLattice(n)
    _check_cost(t, allow_large)
    inc = t.incidence
    total = 0.0
    for m in _mask_chunks(len(t.edges)):
        s = [2 * ((m[:, None] >> inc[:, k][None, :]) & 1) - 1 for k in range(3)]
        fac = 1 + p.A * s[1] * s[2] + p.B * s[0] * s[2] + p.C * s[0] * s[1]
        total += float(fac.prod(axis=1).sum())
    return total


def _ising_sums(t: TorusLattice, p: LatticeParams,
                pairs: Sequence[tuple[int, int]]) -> tuple[complex, list[complex]]:
    """Brute-force sum over edge and vertex spins of the coupled Ising weight.

    Returns Z_I and, for each pair of edge indices, the unnormalized sum of
    s_e s_f times the weight.
    """
    eps = np.array(p.eps)
    ne, nv = len(t.edges), t.num_vertices
    inc = t.incidence
    nbits = ne + nv
    z_total = 0j
    pair_totals = [0j] * len(pairs)
    for m in _mask_chunks(nbits):
        edge_s = 2 * ((m[:, None] >> np.arange(ne)[None, :]) & 1) - 1
        vert_s = 2 * ((m[:, None] >> (ne + np.arange(nv))[None, :]) & 1) - 1
        wt = np.ones(len(m), dtype=complex)
        for k in range(3):
            wt *= (1 + eps[k] * vert_s * edge_s[:, inc[:, k]]).prod(axis=1)
        z_total += wt.sum()
        for q, (e, f) in enumerate(pairs):
            pair_totals[q] += (wt * edge_s[:, e] * edge_s[:, f]).sum()
    return z_total, pair_totals


def ising_vertex_correlation(t: TorusLattice, p: LatticeParams, e: int, f: int) -> complex:
    """Average of D_{e,f} over vertex spins under prod_g (1 + eps_g^2 s_u s_v)."""
    eps = dict(zip("abc", p.eps))
    nv = t.num_vertices
    spins = 2 * ((np.arange(1 << nv)[:, None] >> np.arange(nv)[None, :]) & 1) - 1
    w = np.ones(len(spins), dtype=complex)
    for _, _, typ, u, v in t.edges:
        w *= 1 + eps[typ] ** 2 * spins[:, u] * spins[:, v]

    def half(g: int) -> np.ndarray:
        _, _, typ, u, v = t.edges[g]
        return eps[typ] * (spins[:, u] + spins[:, v]) / (1 + eps[typ] ** 2)

    return complex((half(e) * half(f) * w).sum() / w.sum())


DEFAULT_PAIRS = (((0, 0, "b"), (0, 1, "b")), ((0, 0, "a"), (1, 1, "c")),
                 ((0, 0, "b"), (1, 0, "a")), ((0, 1, "c"), (1, 0, "c")))


def ising_check(n: int, p: LatticeParams,
                pairs: Sequence[tuple[tuple, tuple]] = DEFAULT_PAIRS) -> tuple[float, float]:
    """Residuals (resZ, resCorr) of the coupled Ising identities on H_n.

    resZ compares the brute-force Z_I with 2^|V| Z'. resCorr is the worst
    mismatch between the enumerated two-edge function and both Ising forms:
    the full edge-spin expectation and the vertex-spin average of D.
    """
    if p.A == 0 or p.B == 0 or p.C == 0:
        raise DegenerateCouplingError(f"ABC = 0 at {p.as_tuple()}")
    t = TorusLattice(n)
    if len(t.edges) + t.num_vertices > 20:
        raise CostGuardError("coupled Ising brute force is limited to n = 2")
    idx = [(t.edge_index(e), t.edge_index(f)) for e, f in pairs]
    z_i, sums = _ising_sums(t, p, idx)
    z_spin = spin_rep_Z(n, p)
    ref = 2 ** t.num_vertices * z_spin
    res_z = abs(z_i - ref) / abs(ref)
    res_c = 0.0
    for (e, f), (ie, jf), s in zip(pairs, idx, sums):
        target = enumerate_correlation(n, p, e, f)
        res_c = max(res_c, abs(s / z_i - target), abs(ising_vertex_correlation(t, p, ie, jf) - target))
    return float(res_z), float(res_c)


def dimer_partition_check(n: int, p: LatticeParams) -> float:
    """Relative gap between the even-sector Pfaffian sum and Z/2."""
    from .correlation import even_sector_partition

    lhs = even_sector_partition(p, n)
    rhs = 0.5 * enumerate_Z(n, p)
    return float(abs(lhs - rhs) / abs(rhs))


def superset_sums(prob: np.ndarray) -> np.ndarray:
    """P(S contains I) for every I, from the law of S over 2^m subsets.

    Works along the last axis so a batch of laws is transformed at once.
    """
    out = np.array(prob, dtype=float, copy=True)
    size = out.shape[-1]
    m = size.bit_length() - 1
    for bit in range(m):
        step = 1 << bit
        view = out.reshape(out.shape[:-1] + (size // (2 * step), 2, step))
        view[..., 0, :] += view[..., 1, :]
    return out


def pgf_identity_check(trials: int, rng: np.random.Generator, max_size: int = 10) -> float:
    """Worst residual of E[(1+l)^|S|] = sum_I l^|I| P(S contains I).

    Each trial draws a random exact law on the subsets of a set of size
    0..max_size and a random l in [-3, 3]. Residuals are scaled by
    E[(1+|l|)^|S|], the size of the largest possible cancellation.
    """
    sizes = rng.integers(0, max_size + 1, size=trials)
    worst = 0.0
    for m in range(max_size + 1):
        count = int((sizes == m).sum())
        if count == 0:
            continue
        law = rng.random((count, 1 << m)) ** 3
        law /= law.sum(axis=1, keepdims=True)
        lam = rng.uniform(-3, 3, size=(count, 1))
        card = np.array([bin(s).count("1") for s in range(1 << m)])
        lhs = (law * (1 + lam) ** card).sum(axis=1)
        sup = superset_sums(law)
        rhs = (sup * lam ** card).sum(axis=1)
        scale = (law * (1 + np.abs(lam)) ** card).sum(axis=1)
        worst = max(worst, float((np.abs(lhs - rhs) / scale).max()))
    return worst
