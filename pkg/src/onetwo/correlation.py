"""Two-edge correlations along a NW ray.

Two independent routes are provided. On a finite even torus the
occupation probabilities of c-bisectors come from sector sums of deleted
Pfaffians, and the correlation is their (-2)-weighted subset sum. In
infinite volume the same subset sum collapses to one Pfaffian of a block
Toeplitz matrix built from the symbol psi.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Literal, Sequence

import numpy as np

from .antisym import pfaffian, pfaffian_minor
from .hexlattice import BisectorPath, DecoratedTorus, LatticeParams
from .kasteleyn import (
    DEFAULT_M,
    SECTORS,
    assemble_torus,
    symbol_fourier,
    symbol_samples,
)

log = logging.getLogger(__name__)

SectorRule = Literal["even", "dimer"]
SECTOR_SIGNS: dict[str, dict[tuple[int, int], int]] = {
    # toroidal 1-2 configurations
    "even": {(1, 1): 1, (1, -1): 1, (-1, 1): 1, (-1, -1): 1},
    # all dimer configurations of the decorated torus
    "dimer": {(1, 1): -1, (1, -1): 1, (-1, 1): 1, (-1, -1): 1},
}
MAX_PATH_K = 6
FIT_TOLERANCE = 0.05


class HomologyError(ValueError):
    """A requested bisector crosses a seam of the torus."""


class NonGeometricTailWarning(UserWarning):
    pass


def even_sector_partition(p: LatticeParams, n: int) -> float:
    """(1/4) sum of the four sector Pfaffians; equals Z/2 for the 1-2 model."""
    total = sum(pfaffian(assemble_torus(p, n, z, w)) for z, w in SECTORS)
    return float((total / 4).real)


def dimer_partition(p: LatticeParams, n: int) -> float:
    """All perfect matchings of the decorated torus, weighted."""
    s = SECTOR_SIGNS["dimer"]
    total = sum(s[zw] * pfaffian(assemble_torus(p, n, *zw)) for zw in SECTORS)
    return float((total / 2).real)


class TorusPfaffians:
    """Sector matrices of one decorated torus, shared across many events."""

    def __init__(self, d: DecoratedTorus, rule: SectorRule = "even"):
        if rule not in SECTOR_SIGNS:
            raise ValueError(f"unknown sector rule {rule!r}")
        self.d = d
        self.signs = SECTOR_SIGNS[rule]
        self.mats = {zw: assemble_torus(d.params, d.n, *zw) for zw in SECTORS}
        self.denominator = sum(self.signs[zw] * pfaffian(m) for zw, m in self.mats.items())
        self._internal = {(t, h) for t, h, _, hom in d.edges if hom == (0, 0)}
        self._internal |= {(h, t) for t, h in self._internal}

    def probability(self, bisectors: Sequence[tuple[int, int]]) -> float:
        """Probability that every listed decorated edge carries a dimer."""
        if not bisectors:
            return 1.0
        verts = [x for uv in bisectors for x in uv]
        if len(set(verts)) < len(verts):
            return 0.0
        for uv in bisectors:
            if tuple(uv) not in self._internal:
                raise HomologyError(f"edge {uv} is not an internal edge of the torus")
        k11 = self.mats[(1, 1)]
        j = np.prod([k11[u, v] for u, v in bisectors])
        # bring the pairs to the front in the listed order; track that permutation's sign
        rest = [x for x in range(k11.shape[0]) if x not in set(verts)]
        sign = _perm_sign(verts + rest)
        num = sum(self.signs[zw] * pfaffian_minor(m, verts) for zw, m in self.mats.items())
        val = sign * j * num / self.denominator
        if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
            log.warning("cylinder probability has imaginary part %.3e", val.imag)
        return float(val.real)


def _perm_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def dimer_cylinder_prob(d: DecoratedTorus, bisectors: Sequence[tuple[int, int]],
                        rule: SectorRule = "even") -> float:
    return TorusPfaffians(d, rule).probability(bisectors)


def finite_correlation(d: DecoratedTorus, path: BisectorPath, rule: SectorRule = "even",
                       cache: TorusPfaffians | None = None) -> float:
    """sum over I of (-2)^|I| P(all bisectors in I present)."""
    if path.k > MAX_PATH_K:
        raise ValueError(f"path has k={path.k} > {MAX_PATH_K}; subset sum too large")
    tp = cache or TorusPfaffians(d, rule)
    b = path.bisectors
    total = 0.0
    for r in range(len(b) + 1):
        for sub in itertools.combinations(b, r):
            total += (-2.0) ** r * tp.probability(sub)
    return total


@dataclass
class ToeplitzData:
    """Fourier coefficients of psi for one parameter triple."""

    params: LatticeParams
    m: int
    coeffs: np.ndarray
    samples: np.ndarray

    @classmethod
    def compute(cls, p: LatticeParams, m: int = DEFAULT_M) -> "ToeplitzData":
        s = symbol_samples(p, m)
        return cls(p, m, symbol_fourier(s), s)

    def matrix(self, k: int) -> np.ndarray:
        """4k x 4k block Toeplitz T_k; block (r, s) is psi_{s-r}."""
        if 2 * k > self.m:
            raise ValueError("k too large for the quadrature grid")
        t = np.zeros((4 * k, 4 * k), dtype=complex)
        for r in range(k):
            for s in range(k):
                t[4 * r:4 * r + 4, 4 * s:4 * s + 4] = self.coeffs[(s - r) % self.m]
        return t


def toeplitz_correlation_sq(p: LatticeParams, k: int, m: int = DEFAULT_M,
                            data: ToeplitzData | None = None) -> tuple[float, float]:
    """(det T_k, Pf T_k): the squared and the signed correlation at separation k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    data = data or ToeplitzData.compute(p, m)
    t = data.matrix(k)
    det = np.linalg.det(t)
    pf = pfaffian((t - t.T) / 2)
    return float(det.real), float(pf.real)


def toeplitz_series(p: LatticeParams, kmax: int, m: int = DEFAULT_M,
                    data: ToeplitzData | None = None) -> tuple[np.ndarray, np.ndarray]:
    data = data or ToeplitzData.compute(p, m)
    dets, pfs = [], []
    for k in range(1, kmax + 1):
        d, f = toeplitz_correlation_sq(p, k, m, data)
        dets.append(d)
        pfs.append(f)
    return np.array(dets), np.array(pfs)


def _tail_ratio(values: np.ndarray) -> float:
    diffs = np.diff(values)
    nz = np.abs(diffs) > 1e-15 * max(1.0, float(np.abs(values).max()))
    d = diffs[nz]
    if len(d) < 3:
        return 0.0
    tail = d[-min(len(d), 4):]
    return float(np.median(tail[1:] / tail[:-1]))


def widom_limit(p: LatticeParams, kmax: int = 14, m: int = DEFAULT_M,
                data: ToeplitzData | None = None) -> tuple[float, float, float]:
    """(Lambda, G, error estimate).

    G = exp(mean log det psi) over the quadrature circle. Lambda extrapolates
    det T_k by summing the geometric tail of its successive differences,
    with ratio taken from the last few differences.
    """
    data = data or ToeplitzData.compute(p, m)
    g = complex(np.exp(np.mean(np.log(np.linalg.det(data.samples)))))
    dets, _ = toeplitz_series(p, kmax, m, data)
    r = _tail_ratio(dets)
    last = float(dets[-1] - dets[-2])
    if not 0 <= r < 1:
        warnings.warn(f"successive differences do not contract (ratio {r:.3g})", NonGeometricTailWarning)
        return float(dets[-1]), float(g.real), abs(last)
    tail = last * r / (1 - r)
    return float(dets[-1] + tail), float(g.real), abs(tail)


@dataclass
class DecayFit:
    C: float
    alpha: float
    residual: float
    ks: list[int] = field(default_factory=list)
    ok: bool = True


def decay_rate(p: LatticeParams, kmax: int = 14, m: int = DEFAULT_M, kmin: int = 6,
               data: ToeplitzData | None = None, limit: float | None = None) -> DecayFit:
    """Least-squares fit of log|det T_k - Lambda| = log C + k log alpha.

    ``residual`` is the root-mean-square misfit in log scale. Points whose
    distance to Lambda is at rounding level are dropped, and a Lambda
    estimate smaller than its own error bar is taken as zero.
    """
    if kmax < 8:
        raise ValueError("kmax must be at least 8")
    data = data or ToeplitzData.compute(p, m)
    dets, _ = toeplitz_series(p, kmax, m, data)
    if limit is None:
        lam, _, err = widom_limit(p, kmax, m, data)
        if abs(lam) <= err:
            lam = 0.0
    else:
        lam = limit
    floor = 1e-13 * abs(lam)
    ks = np.arange(kmin, kmax + 1)
    dev = np.abs(dets[ks - 1] - lam)
    keep = dev > floor
    if keep.sum() < 3:
        ks, dev = np.arange(1, kmax + 1), np.abs(dets - lam)
        keep = dev > floor
    x, y = ks[keep], np.log(dev[keep])
    if len(x) < 3:
        # already at the limit to rounding; nothing left to fit
        return DecayFit(0.0, 0.0, 0.0, [int(k) for k in x], ok=False)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    alpha = float(math.exp(slope))
    return DecayFit(float(math.exp(intercept)), alpha, resid, [int(k) for k in x],
                    ok=bool(resid <= FIT_TOLERANCE and alpha < 1))


@dataclass
class CorrelationSeries:
    params: tuple[float, float, float]
    ks: list[int]
    det: list[float]
    pf: list[float]
    limit: float
    G: float
    fit: DecayFit

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["k", "det", "pf", "diff", "fit"])
        prev = None
        for k, d, f in zip(self.ks, self.det, self.pf):
            diff = "" if prev is None else repr(d - prev)
            fitted = self.limit + self.fit.C * self.fit.alpha ** k
            wr.writerow([k, repr(d), repr(f), diff, repr(fitted)])
            prev = d
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def correlation_series(p: LatticeParams, kmax: int = 14, m: int = DEFAULT_M) -> CorrelationSeries:
    data = ToeplitzData.compute(p, m)
    dets, pfs = toeplitz_series(p, kmax, m, data)
    lam, g, _ = widom_limit(p, kmax, m, data)
    fit = decay_rate(p, max(kmax, 8), m, min(6, kmax - 2), data)
    return CorrelationSeries(p.as_tuple(), list(range(1, kmax + 1)), [float(x) for x in dets],
                             [float(x) for x in pfs], lam, g, fit)
