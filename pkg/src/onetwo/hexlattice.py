"""Hexagonal lattice on the torus and its decorated dimer graph.

Coordinates. Black sites sit at B(i, j) = i*t1 + j*t2 with
t1 = (3/2, sqrt3/2) and t2 = (3/2, -sqrt3/2); white sites at
W(i, j) = B(i, j) + (1, 0). The three edges owned by W(i, j) are

* ``a`` (horizontal): W(i, j) - B(i, j)
* ``b`` (NW-SE):      W(i, j) - B(i, j + 1)
* ``c`` (NE-SW):      W(i, j) - B(i + 1, j)

so an edge key (i, j, t) is the white endpoint plus the type.

Each lattice vertex sends three bisector edges into the three faces
around it. Inside every hexagonal face the six bisector ports are wired
by a gadget (three triangles and a pentagon) that admits exactly one
perfect matching for every even set of present bisectors and none for
odd sets. Cutting the result into translates gives 16 decorated vertices
per fundamental domain; both weight-c bisectors of a domain are interior
to it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

T1 = np.array([1.5, math.sqrt(3) / 2])
T2 = np.array([1.5, -math.sqrt(3) / 2])
EDGE_TYPES = ("a", "b", "c")


class LatticeError(ValueError):
    """Invalid lattice size, edge key or path request."""


@dataclass(frozen=True)
class LatticeParams:
    """Weight triple (a, b, c) with the derived spin and Ising couplings."""

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        for name in EDGE_TYPES:
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"weight {name} must be finite and nonnegative, got {v}")
        if self.a + self.b + self.c <= 0:
            raise ValueError("weights must not all vanish")

    @property
    def total(self) -> float:
        return self.a + self.b + self.c

    @property
    def A(self) -> float:
        return (self.a - self.b - self.c) / self.total

    @property
    def B(self) -> float:
        return (self.b - self.a - self.c) / self.total

    @property
    def C(self) -> float:
        return (self.c - self.a - self.b) / self.total

    @property
    def eps(self) -> tuple[complex, complex, complex]:
        """Couplings with eps_b*eps_c = A, eps_a*eps_c = B, eps_a*eps_b = C.

        eps_a takes the principal square root of BC/A; the other two are
        then fixed by the product relations, which pins the branch.
        """
        A, B, C = self.A, self.B, self.C
        if A == 0 or B == 0 or C == 0:
            raise ValueError("couplings undefined when ABC = 0")
        ea = complex(np.sqrt(complex(B * C / A)))
        return ea, C / ea, B / ea

    def weight(self, kind: str) -> float:
        return getattr(self, kind)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)


def _unit(deg: float) -> np.ndarray:
    r = math.radians(deg)
    return np.array([math.cos(r), math.sin(r)])


def _face_center(i: int, j: int) -> np.ndarray:
    return np.array([2.0, 0.0]) + i * T1 + j * T2


_PORT = 0.3
_APEX = 0.55
_CORE = 0.2
_W0 = np.array([1.0, 0.0])
_B0 = np.zeros(2)
# port direction from a vertex toward the face its bisector enters
_B_PORT_DIR = {"a": 180.0, "b": 300.0, "c": 60.0}
_W_PORT_DIR = {"a": 0.0, "b": 120.0, "c": 240.0}

# Local vertex order puts each weight-c bisector pair next to each other.
LOCAL_VERTICES: tuple[str, ...] = (
    "Bc", "B", "Wc", "W",
    "Ba", "p1", "Bb", "Wa", "p2", "Wb", "p3",
    "k1", "k2", "kx", "ky", "k3",
)

LOCAL_POSITIONS: dict[str, np.ndarray] = {
    "B": _B0,
    "W": _W0,
    # triangle in the face left of W(0,0): ports of B(0,1) (a) and W(0,0) (c)
    "Ba": T2 + _PORT * _unit(_B_PORT_DIR["a"]),
    "Wc": _W0 + _PORT * _unit(_W_PORT_DIR["c"]),
    "p1": _face_center(-1, 0) + _APEX * _unit(30),
    # triangle in face (0,0): ports of B(1,0) (b) and W(0,0) (a)
    "Bb": T1 + _PORT * _unit(_B_PORT_DIR["b"]),
    "Wa": _W0 + _PORT * _unit(_W_PORT_DIR["a"]),
    "p2": _face_center(0, 0) + _APEX * _unit(150),
    # triangle in face (0,-1): ports of B(0,0) (c) and W(0,0) (b)
    "Bc": _B0 + _PORT * _unit(_B_PORT_DIR["c"]),
    "Wb": _W0 + _PORT * _unit(_W_PORT_DIR["b"]),
    "p3": _face_center(0, -1) + _APEX * _unit(270),
    # pentagon core of face (0,0)
    "k1": _face_center(0, 0) + _CORE * _unit(30),
    "k2": _face_center(0, 0) + _CORE * _unit(150),
    "kx": _face_center(0, 0) + _CORE * _unit(190),
    "ky": _face_center(0, 0) + _CORE * _unit(230),
    "k3": _face_center(0, 0) + _CORE * _unit(270),
}

# (tail, head, offset of the head's domain in (t1, t2) units, weight label).
# Every edge is oriented tail -> head; this orientation is clockwise odd.
GADGET_EDGES: tuple[tuple[str, str, tuple[int, int], str], ...] = (
    ("Ba", "B", (0, 1), "a"),
    ("Bb", "B", (1, 0), "b"),
    ("Bc", "B", (0, 0), "c"),
    ("Wa", "W", (0, 0), "a"),
    ("Wb", "W", (0, 0), "b"),
    ("Wc", "W", (0, 0), "c"),
    ("Wc", "Ba", (0, 0), "1"),
    ("p1", "Wc", (0, 0), "1"),
    ("Ba", "p1", (0, 0), "1"),
    ("Wa", "Bb", (0, 0), "1"),
    ("p2", "Wa", (0, 0), "1"),
    ("Bb", "p2", (0, 0), "1"),
    ("Wb", "Bc", (0, 0), "1"),
    ("p3", "Wb", (0, 0), "1"),
    ("Bc", "p3", (0, 0), "1"),
    ("k1", "p1", (1, 0), "1"),
    ("k2", "p2", (0, 0), "1"),
    ("k3", "p3", (0, 1), "1"),
    ("k2", "k1", (0, 0), "1"),
    ("kx", "k2", (0, 0), "1"),
    ("ky", "kx", (0, 0), "1"),
    ("k3", "ky", (0, 0), "1"),
    ("k1", "k3", (0, 0), "1"),
)

# local index pairs (u, v) of the two weight-c bisectors, u the port, v the lattice vertex
C_BISECTORS: tuple[tuple[int, int], tuple[int, int]] = ((0, 1), (2, 3))


@dataclass(frozen=True)
class PeriodicGraph:
    """A doubly periodic planar graph given by one fundamental domain.

    ``edges`` holds (tail, head, (d1, d2), label) with tail/head indices into
    ``names`` and (d1, d2) the head's domain relative to the tail's.
    """

    names: tuple[str, ...]
    positions: np.ndarray
    edges: tuple[tuple[int, int, tuple[int, int], str], ...]
    periods: tuple[np.ndarray, np.ndarray] = (T1, T2)

    @classmethod
    def from_named(cls, names: Sequence[str], positions: dict[str, np.ndarray],
                   edges: Iterable[tuple[str, str, tuple[int, int], str]],
                   periods: tuple[np.ndarray, np.ndarray] = (T1, T2)) -> "PeriodicGraph":
        idx = {n: i for i, n in enumerate(names)}
        pos = np.array([positions[n] for n in names], dtype=float)
        es = tuple((idx[u], idx[v], tuple(off), lab) for u, v, off, lab in edges)
        return cls(tuple(names), pos, es, periods)

    @property
    def size(self) -> int:
        return len(self.names)

    def displacement(self, e: int) -> np.ndarray:
        u, v, (d1, d2), _ = self.edges[e]
        p1, p2 = self.periods
        return self.positions[v] + d1 * p1 + d2 * p2 - self.positions[u]

    @cached_property
    def faces(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Faces of the torus embedding as cyclic lists of darts (edge, +-1).

        Darts are arranged around each vertex by angle; following the next
        dart clockwise after the reverse dart keeps the face on the left, so
        every face comes out counter-clockwise.
        """
        out: list[list[tuple[int, int]]] = [[] for _ in range(self.size)]
        for e, (u, v, _, _) in enumerate(self.edges):
            out[u].append((e, 1))
            out[v].append((e, -1))

        def angle(d: tuple[int, int]) -> float:
            vec = self.displacement(d[0]) * d[1]
            return math.atan2(vec[1], vec[0])

        for lst in out:
            lst.sort(key=angle)

        def head(d: tuple[int, int]) -> int:
            u, v, _, _ = self.edges[d[0]]
            return v if d[1] > 0 else u

        seen: set[tuple[int, int]] = set()
        faces = []
        for e in range(len(self.edges)):
            for s in (1, -1):
                d = (e, s)
                if d in seen:
                    continue
                face = []
                while d not in seen:
                    seen.add(d)
                    face.append(d)
                    ring = out[head(d)]
                    d = ring[(ring.index((d[0], -d[1])) - 1) % len(ring)]
                faces.append(tuple(face))
        return tuple(faces)

    def face_area(self, face: Sequence[tuple[int, int]]) -> float:
        p = np.zeros(2)
        area = 0.0
        for e, s in face:
            q = p + s * self.displacement(e)
            area += p[0] * q[1] - q[0] * p[1]
            p = q
        return area / 2

    def clockwise_odd_violations(self, orientation: Sequence[int] | None = None) -> list[int]:
        """Indices of faces whose clockwise traversal meets an even number
        of co-oriented edges. ``orientation[e] = 1`` keeps tail -> head,
        0 reverses it; default keeps every edge as listed."""
        if orientation is None:
            orientation = [1] * len(self.edges)
        bad = []
        for fi, face in enumerate(self.faces):
            # faces are counter-clockwise; count edges pointing clockwise
            cw = sum(1 for e, s in face if (orientation[e] == 1) != (s > 0))
            if self.face_area(face) < 0:
                cw = len(face) - cw
            if cw % 2 == 0:
                bad.append(fi)
        return bad

    def solve_orientation(self) -> list[int]:
        """A clockwise-odd orientation from Gaussian elimination over GF(2)."""
        nvar = len(self.edges)
        pivots: dict[int, tuple[int, int]] = {}
        for face in self.faces:
            row, rhs = 0, 0
            for e, s in face:
                row ^= 1 << e
                if s < 0:
                    rhs ^= 1
            # ccw faces: co-oriented count must have parity len(face) + 1
            need = (len(face) + 1) % 2 if self.face_area(face) > 0 else 1
            rhs ^= need
            for col, (prow, prhs) in pivots.items():
                if row >> col & 1:
                    row ^= prow
                    rhs ^= prhs
            if row == 0:
                if rhs:
                    raise LatticeError("no clockwise-odd orientation exists")
                continue
            col = row.bit_length() - 1
            for c2, (prow, prhs) in list(pivots.items()):
                if prow >> col & 1:
                    pivots[c2] = (prow ^ row, prhs ^ rhs)
            pivots[col] = (row, rhs)
        sol = [0] * nvar
        for col, (_, rhs) in pivots.items():
            sol[col] = rhs
        return sol

    def phase_terms(self, weights: dict[str, complex],
                    orientation: Sequence[int] | None = None) -> list[tuple[tuple[int, int], np.ndarray]]:
        """K(z, w) split as sum over (d1, d2) of C_d * w**d1 * z**d2."""
        n = self.size
        terms: dict[tuple[int, int], np.ndarray] = {}
        for e, (u, v, (d1, d2), lab) in enumerate(self.edges):
            s = 1 if orientation is None or orientation[e] else -1
            wt = weights[lab]
            for key, (r, c), val in (((d1, d2), (u, v), s * wt), ((-d1, -d2), (v, u), -s * wt)):
                if key not in terms:
                    terms[key] = np.zeros((n, n), dtype=complex)
                terms[key][r, c] += val
        return sorted(terms.items())

    def kasteleyn_grid(self, weights: dict[str, complex], z: np.ndarray, w: np.ndarray,
                       orientation: Sequence[int] | None = None) -> np.ndarray:
        """K at every pair (z[i], w[j]); shape (len(z), len(w), n, n)."""
        z = np.asarray(z, dtype=complex)[:, None, None, None]
        w = np.asarray(w, dtype=complex)[None, :, None, None]
        out = np.zeros((z.shape[0], w.shape[1], self.size, self.size), dtype=complex)
        for (d1, d2), coef in self.phase_terms(weights, orientation):
            out += coef * (w ** d1) * (z ** d2)
        return out

    def kasteleyn(self, weights: dict[str, complex], z: complex, w: complex,
                  orientation: Sequence[int] | None = None) -> np.ndarray:
        """Phased Kasteleyn matrix of one fundamental domain.

        A tail -> head edge whose head lies d1 domains along t1 and d2 along
        t2 enters at (tail, head) with w**d1 * z**d2 and at (head, tail)
        with the opposite sign and the inverse phase. On the unit torus the
        result is skew-Hermitian; it is antisymmetric at z, w = +-1.
        """
        n = self.size
        k = np.zeros((n, n), dtype=complex)
        for e, (u, v, (d1, d2), lab) in enumerate(self.edges):
            s = 1 if orientation is None or orientation[e] else -1
            wt = weights[lab]
            ph = (w ** d1) * (z ** d2)
            k[u, v] += s * wt * ph
            k[v, u] -= s * wt / ph
        return k


def decorated_fundamental() -> PeriodicGraph:
    """The 16-vertex decorated fundamental domain with its fixed orientation."""
    return PeriodicGraph.from_named(LOCAL_VERTICES, LOCAL_POSITIONS, GADGET_EDGES)


def bisector_weights(p: LatticeParams) -> dict[str, float]:
    return {"a": p.a, "b": p.b, "c": p.c, "1": 1.0}


@dataclass(frozen=True)
class TorusLattice:
    """Hexagonal lattice on an n x n torus; vertex 2*(i*n+j) is B(i,j), +1 is W(i,j)."""

    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 2 or self.n % 2:
            raise LatticeError(
                f"torus size must be even and >= 2 (the even-sector Pfaffian formula needs it), got {self.n}")

    @property
    def num_vertices(self) -> int:
        return 2 * self.n * self.n

    def black(self, i: int, j: int) -> int:
        n = self.n
        return 2 * ((i % n) * n + (j % n))

    def white(self, i: int, j: int) -> int:
        return self.black(i, j) + 1

    @cached_property
    def edges(self) -> tuple[tuple[int, int, str, int, int], ...]:
        """Records (i, j, type, white endpoint, black endpoint)."""
        out = []
        for i in range(self.n):
            for j in range(self.n):
                w = self.white(i, j)
                out.append((i, j, "a", w, self.black(i, j)))
                out.append((i, j, "b", w, self.black(i, j + 1)))
                out.append((i, j, "c", w, self.black(i + 1, j)))
        return tuple(out)

    def edge_index(self, key: tuple[int, int, str]) -> int:
        i, j, t = key
        if t not in EDGE_TYPES:
            raise LatticeError(f"unknown edge type {t!r}")
        return 3 * ((i % self.n) * self.n + (j % self.n)) + EDGE_TYPES.index(t)

    @cached_property
    def incidence(self) -> np.ndarray:
        """incidence[v, t] is the index of the type-t edge at vertex v."""
        inc = np.full((self.num_vertices, 3), -1, dtype=int)
        for e, (_, _, t, w, b) in enumerate(self.edges):
            k = EDGE_TYPES.index(t)
            for v in (w, b):
                if inc[v, k] != -1:
                    raise LatticeError("vertex has two edges of one type")
                inc[v, k] = e
        return inc


def build_torus(n: int) -> TorusLattice:
    return TorusLattice(n)


@dataclass(frozen=True)
class DecoratedTorus:
    """The decorated graph on an n x n torus, 16 vertices per domain.

    Vertex ``16*(i*n+j) + l`` is local vertex ``l`` of domain (i, j). Each
    edge record is (tail, head, label, (h1, h2)) where (h1, h2) counts the
    signed crossings of the two seams of the torus.
    """

    base: TorusLattice
    params: LatticeParams
    cell: PeriodicGraph = field(default_factory=decorated_fundamental)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def num_vertices(self) -> int:
        return 16 * self.n * self.n

    def vertex(self, i: int, j: int, local: int) -> int:
        n = self.n
        return 16 * ((i % n) * n + (j % n)) + local

    @cached_property
    def edges(self) -> tuple[tuple[int, int, str, tuple[int, int]], ...]:
        n = self.n
        out = []
        for i in range(n):
            for j in range(n):
                for u, v, (d1, d2), lab in self.cell.edges:
                    tail = self.vertex(i, j, u)
                    head = self.vertex(i + d1, j + d2, v)
                    out.append((tail, head, lab, ((i + d1) // n, (j + d2) // n)))
        return tuple(out)

    def weight(self, label: str) -> float:
        return bisector_weights(self.params)[label]

    def clockwise_odd_violations(self) -> list[int]:
        return self.cell.clockwise_odd_violations()

    def c_bisector(self, i: int, j: int, white: bool) -> tuple[int, int]:
        """Global (u, v) of the weight-c bisector at B(i,j) or W(i,j)."""
        u, v = C_BISECTORS[1 if white else 0]
        return self.vertex(i, j, u), self.vertex(i, j, v)

    def to_json(self) -> dict:
        n = self.n
        verts = []
        for i in range(n):
            for j in range(n):
                for l, name in enumerate(self.cell.names):
                    x, y = self.cell.positions[l] + i * T1 + j * T2
                    verts.append({"id": self.vertex(i, j, l), "domain": [i, j], "local": name,
                                  "x": round(float(x), 12), "y": round(float(y), 12)})
        edges = [{"tail": t, "head": h, "label": lab, "weight": self.weight(lab),
                  "homology": list(hom)} for t, h, lab, hom in self.edges]
        return {"n": n, "params": list(self.params.as_tuple()), "vertices": verts, "edges": edges}


def decorate(t: TorusLattice, p: LatticeParams) -> DecoratedTorus:
    if p.a <= 0 or p.b <= 0:
        raise ValueError("decoration needs a, b > 0")
    d = DecoratedTorus(t, p)
    if d.clockwise_odd_violations():
        raise LatticeError("gadget orientation is not clockwise odd")
    return d


@dataclass(frozen=True)
class BisectorPath:
    """A horizontal + NW path from NW edge e to NW edge f.

    ``vertices`` lists the lattice vertices passed through, ``steps`` the
    lattice edges traversed (keys), and ``bisectors`` the 2k weight-c
    bisectors (u, v) flanked by the path at those vertices, in path order.
    """

    e: tuple[int, int, str]
    f: tuple[int, int, str]
    steps: tuple[tuple[int, int, str], ...]
    vertices: tuple[tuple[str, int, int], ...]
    bisectors: tuple[tuple[int, int], ...]

    @property
    def k(self) -> int:
        return len(self.bisectors) // 2


def nw_path(d: DecoratedTorus, e: tuple[int, int, str], f: tuple[int, int, str]) -> BisectorPath:
    """Walk from e along +t2: B(i,j+1), a-edge, W(i,j+1), next NW edge, ...

    The NW edge (i, j, b) joins W(i, j) to B(i, j+1); a path through B and
    W of one domain uses that vertex's a and b edges, which flank its
    weight-c bisector. The walk must reach f before wrapping the torus.
    """
    n = d.n
    if e[2] != "b" or f[2] != "b":
        raise LatticeError("both edges must be NW (type b)")
    i0, j0 = e[0] % n, e[1] % n
    i1, j1 = f[0] % n, f[1] % n
    if i0 != i1:
        raise LatticeError("no horizontal + NW path joins these edges")
    k = (j1 - j0) % n
    steps, verts, bis = [], [], []
    for m in range(1, k + 1):
        j = j0 + m
        steps.append((i0, j % n, "a"))
        verts += [("B", i0, j % n), ("W", i0, j % n)]
        bis += [d.c_bisector(i0, j, False), d.c_bisector(i0, j, True)]
    return BisectorPath((i0, j0, "b"), (i1, j1, "b"), tuple(steps), tuple(verts), tuple(bis))
