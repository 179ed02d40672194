"""Phase classification, torus gap scans, free energy and the acute-angle certificate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hexlattice import LatticeParams
from .kasteleyn import CriticalParameterError, char_poly, grid_points

REGIONS = ("Subcritical", "SupercriticalA", "SupercriticalC", "CriticalBoundary")
BOUNDARY_TOL = 1e-12


@dataclass
class Certificate:
    sum_sq: float
    tan_theta: float
    holds: bool
    degenerate: bool = False


@dataclass
class PhaseReport:
    region: str
    p11: float
    torus_gap: float
    certificate: Certificate | None
    permutation: tuple[int, int, int] = (0, 1, 2)
    sorted_weights: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def to_dict(self) -> dict:
        out = {
            "region": self.region,
            "p11": self.p11,
            "torus_gap": self.torus_gap,
            "permutation": list(self.permutation),
            "sorted_weights": list(self.sorted_weights),
        }
        if self.certificate is not None:
            c = self.certificate
            out["certificate"] = {
                "sum_sq": c.sum_sq,
                "tan_theta": None if math.isinf(c.tan_theta) else c.tan_theta,
                "holds": c.holds,
                "degenerate": c.degenerate,
            }
        return out


def p_at_one_one(p: LatticeParams) -> float:
    a, b, c = p.a, p.b, p.c
    return (a * a + b * b + c * c - 2 * a * b - 2 * b * c - 2 * c * a) ** 2


def p_at_one_one_abc(p: LatticeParams) -> float:
    """Same value written through A, B, C."""
    s = p.A ** 2 + p.B ** 2 + p.C ** 2
    return 0.25 * ((s - 1) * p.total ** 2) ** 2


def torus_gap(p: LatticeParams, m: int = 64) -> tuple[float, tuple[float, float]]:
    """min |P| over the m x m grid and its (theta, phi) location, z = e^{i theta}."""
    if m < 32:
        raise ValueError("grid must have at least 32 points per side")
    g = grid_points(m)
    vals = np.abs(char_poly(p, g[:, None], g[None, :]))
    j, l = np.unravel_index(np.argmin(vals), vals.shape)
    step = 2 * np.pi / m
    return float(vals[j, l]), (float(j * step), float(l * step))


def subcritical_certificate(p: LatticeParams) -> Certificate:
    A, B, C = p.A, p.B, p.C
    s = A * A + B * B + C * C
    if A == 0 or B == 0 or C == 0:
        return Certificate(s, math.inf, s < 1, degenerate=True)
    if s == 1:
        return Certificate(s, math.inf, False)
    tan = abs(A * B * C) * (A ** -2 + B ** -2 + C ** -2) / (1 - s)
    return Certificate(s, tan, s < 1)


def canonical_order(p: LatticeParams) -> tuple[tuple[float, float, float], tuple[int, int, int]]:
    """Weights sorted in decreasing order and the original positions they came from."""
    w = p.as_tuple()
    perm = tuple(sorted(range(3), key=lambda i: (-w[i], i)))
    return tuple(w[i] for i in perm), perm


def classify_phase(p: LatticeParams, m: int = 64) -> PhaseReport:
    """Region of (a, b, c) on the phase diagram.

    Inputs are sorted decreasingly first. The boundary is where the square
    root of the largest weight equals the sum of the other two square
    roots, up to a relative tolerance of 1e-12. Above it the phase is
    labelled by the dominant weight: a or b gives SupercriticalA (the two
    are exchanged by a lattice symmetry), c gives SupercriticalC.
    """
    (x, y, zz), perm = canonical_order(p)
    sx, sy, sz = math.sqrt(x), math.sqrt(y), math.sqrt(zz)
    if abs(sx - sy - sz) < BOUNDARY_TOL * (sx + sy + sz):
        region = "CriticalBoundary"
    elif sx < sy + sz:
        region = "Subcritical"
    else:
        region = "SupercriticalC" if perm[0] == 2 else "SupercriticalA"
    gap, _ = torus_gap(p, m)
    return PhaseReport(region, p_at_one_one(p), gap, subcritical_certificate(p), perm, (x, y, zz))


def free_energy(p: LatticeParams, m: int = 128) -> float:
    """(1/4 pi^2) double integral of log P over the unit torus, m x m trapezoid.

    The raw integral is returned, without any additive normalization.
    """
    g = grid_points(m)
    vals = char_poly(p, g[:, None], g[None, :]).real
    if vals.min() <= 1e-8 * p.total ** 4:
        raise CriticalParameterError(
            f"P vanishes (or nearly) on the unit torus at {p.as_tuple()}; free energy quadrature refused")
    return float(np.log(vals).mean())
