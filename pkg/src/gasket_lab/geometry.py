"""Cell addresses, vertex sets and conductance graphs.

Every vertex is an integer coordinate vector: barycentric coordinates
summing to ``side**level`` for the Sierpinski gaskets, Cartesian
coordinates in ``{0, ..., side**level}**d`` for the Vicsek sets.  Shared
cell corners are merged by exact integer comparison, so no floating point
enters the combinatorics.
"""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import comb, sqrt
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import GuardExceeded, SpecError

DEFAULT_MAX_VERTICES = 10**7

Letter = tuple
CellWord = tuple  # tuple of letters; () is the 0-cell itself


class Family(str, enum.Enum):
    SG = "SG"
    VS2D = "VS2D"
    VS3D = "VS3D"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            for member in cls:
                if member.value == value.upper():
                    return member
        return None


@dataclass(frozen=True)
class GasketSpec:
    """One discrete model: family, dimension ``d``, side ``l``, level ``m``."""

    family: Family
    dimension: int
    side: int
    level: int

    def __post_init__(self):
        try:
            family = Family(self.family)
        except ValueError:
            raise SpecError(f"unknown family {self.family!r}") from None
        object.__setattr__(self, "family", family)
        d, l, m = self.dimension, self.side, self.level
        if m < 0:
            raise SpecError(f"level must be >= 0, got {m}")
        if family is Family.SG:
            if d < 2 or l < 2:
                raise SpecError(f"SG needs d >= 2 and l >= 2, got d={d}, l={l}")
        else:
            want = 2 if family is Family.VS2D else 3
            if d != want:
                raise SpecError(f"{family.value} is {want}-dimensional, got d={d}")
            if l < 3 or l % 2 == 0:
                raise SpecError(f"Vicsek side must be odd and >= 3, got {l}")

    @classmethod
    def sg(cls, d, l, m=1):
        return cls(Family.SG, d, l, m)

    @classmethod
    def vs2d(cls, l, m=1):
        return cls(Family.VS2D, 2, l, m)

    @classmethod
    def vs3d(cls, l, m=1):
        return cls(Family.VS3D, 3, l, m)

    @property
    def scale(self) -> int:
        return self.side**self.level

    @property
    def n_letters(self) -> int:
        if self.family is Family.SG:
            return count_cells(self.dimension, self.side)
        return count_vicsek_cells(self.dimension, self.side)

    @property
    def n_cells(self) -> int:
        return self.n_letters**self.level

    @property
    def corners_per_cell(self) -> int:
        if self.family is Family.SG:
            return self.dimension + 1
        return 2**self.dimension

    def with_level(self, m):
        return GasketSpec(self.family, self.dimension, self.side, m)

    def as_dict(self):
        return {"family": self.family.value, "dimension": self.dimension,
                "side": self.side, "level": self.level}


def count_cells(d: int, l: int) -> int:
    """Number of same-orientation sub-simplices kept at one level.

    Equals ``C(d + l - 1, d)``; Python integers are unbounded, so there is
    no overflow to report.
    """
    if d < 1 or l < 1:
        raise SpecError(f"count_cells needs d >= 1 and l >= 1, got d={d}, l={l}")
    return comb(d + l - 1, d)


def count_vicsek_cells(d: int, l: int) -> int:
    n = (l - 1) // 2
    return (n + 1) ** d + n**d


def compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``.

    Descending lexicographic order, so ``(total, 0, ..., 0)`` comes first.
    """
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


def letters(spec: GasketSpec) -> list[Letter]:
    """Single-level cell labels in canonical order."""
    d, l = spec.dimension, spec.side
    if spec.family is Family.SG:
        return compositions(l - 1, d + 1)
    # checkerboard: all coordinates share a parity
    return [c for c in itertools.product(range(l), repeat=d)
            if len({x % 2 for x in c}) == 1]


def _check_guard(spec, max_vertices):
    if spec.n_cells * spec.corners_per_cell > 4 * max_vertices:
        raise GuardExceeded(
            f"{spec.family.value}(d={spec.dimension}, l={spec.side}) at level "
            f"{spec.level} has {spec.n_cells} cells; guard is {max_vertices} vertices")


def enumerate_cells(spec: GasketSpec, max_vertices=DEFAULT_MAX_VERTICES) -> list[CellWord]:
    _check_guard(spec, max_vertices)
    return list(itertools.product(letters(spec), repeat=spec.level))


def _corner_offsets(spec: GasketSpec) -> np.ndarray:
    d = spec.dimension
    if spec.family is Family.SG:
        return np.eye(d + 1, dtype=np.int64)
    return np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.int64)


def cell_corners(word: Sequence[Letter], spec: GasketSpec) -> list[tuple[int, ...]]:
    """Corners of a cell, in the integer coordinates of ``spec.level``.

    A word shorter than the level names a coarser cell; its corners are
    scaled up accordingly.
    """
    word = [tuple(a) for a in word]
    m, l = spec.level, spec.side
    if len(word) > m:
        raise SpecError(f"word of length {len(word)} exceeds level {m}")
    valid = set(letters(spec))
    for a in word:
        if a not in valid:
            raise SpecError(f"{a} is not a valid cell letter for {spec}")
    k = spec.dimension + 1 if spec.family is Family.SG else spec.dimension
    origin = np.zeros(k, dtype=np.int64)
    for i, a in enumerate(word, start=1):
        origin += l ** (m - i) * np.asarray(a, dtype=np.int64)
    size = l ** (m - len(word))
    return [tuple(int(x) for x in origin + size * off) for off in _corner_offsets(spec)]


# -- conductance schemes -----------------------------------------------------

@dataclass(frozen=True)
class ConductanceScheme:
    """Conductance per corner-pair class inside a cell.

    Classes are indexed by the Hamming distance between corner offsets
    (1 = cube edge, 2 = face diagonal, 3 = long diagonal); simplices only
    use class 1.
    """

    name: str
    values: tuple  # conductance for class 1, 2, 3 (unused entries ignored)

    def __post_init__(self):
        for v in self.values:
            if not v > 0:
                raise SpecError(f"conductances must be positive, got {self.values}")

    @property
    def rational(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in self.values)

    def for_class(self, k: int):
        return self.values[k - 1]


SG_UNIT = ConductanceScheme("sg-unit", (1,))


def sg_form(d: int) -> ConductanceScheme:
    """Per-pair conductance 2/(d+1): boundary pair resistance of one cell is 1."""
    return ConductanceScheme("sg-form", (Fraction(2, d + 1),))


def vs2d_scheme(c_diag) -> ConductanceScheme:
    return ConductanceScheme("vs2d", (1, c_diag))


def vs3d_scheme(c2, c3) -> ConductanceScheme:
    return ConductanceScheme("vs3d", (1, c2, c3))


def default_scheme(spec: GasketSpec) -> ConductanceScheme:
    if spec.family is Family.SG:
        return SG_UNIT
    if spec.family is Family.VS2D:
        return vs2d_scheme(1)
    return vs3d_scheme(1, 1)


# -- graphs ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ApproxGraph:
    """Conductance graph of one approximation level.

    ``cells[c]`` lists the vertex indices of finest cell ``c`` in corner
    order; ``boundary[0]`` is the corner treated as the origin.
    """

    spec: GasketSpec | None
    scheme: ConductanceScheme
    dimension: int
    scale: int
    vertices: np.ndarray
    edges: np.ndarray
    conductance: np.ndarray
    cells: np.ndarray
    boundary: np.ndarray
    simplicial: bool = True
    lattice: bool = False

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def index(self) -> dict:
        return {tuple(int(x) for x in v): i for i, v in enumerate(self.vertices)}

    def vertex_index(self, coords) -> int:
        return self.index[tuple(int(x) for x in coords)]

    @cached_property
    def weights(self) -> sp.csr_matrix:
        """Symmetric conductance matrix."""
        n = self.n_vertices
        u, v = self.edges[:, 0], self.edges[:, 1]
        w = sp.coo_matrix((np.r_[self.conductance, self.conductance], (np.r_[u, v], np.r_[v, u])),
                          shape=(n, n))
        return w.tocsr()

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.weights.sum(axis=1)).ravel()

    def laplacian(self) -> sp.csr_matrix:
        return (sp.diags(self.degrees) - self.weights).tocsr()

    def is_connected(self) -> bool:
        ncomp, _ = connected_components(self.weights, directed=False)
        return ncomp == 1

    @cached_property
    def normalized(self) -> np.ndarray:
        return self.vertices / float(self.scale)

    @cached_property
    def positions(self) -> np.ndarray:
        """Euclidean positions.

        Simplices: barycentric coordinates divided by sqrt(2), i.e. the
        regular simplex of unit side sitting in R^(d+1).  Cubes: the unit
        cube.
        """
        if self.simplicial:
            return self.normalized / sqrt(2.0)
        return self.normalized

    @cached_property
    def cell_counts(self) -> np.ndarray:
        """Number of finest cells incident to each vertex."""
        return np.bincount(self.cells.ravel(), minlength=self.n_vertices)

    def cell_membership(self, vertex: int) -> list[int]:
        return [int(c) for c in np.nonzero((self.cells == vertex).any(axis=1))[0]]

    @cached_property
    def cell_barycenters(self) -> np.ndarray:
        return self.positions[self.cells].mean(axis=1)

    def cell_mass(self, mass: np.ndarray) -> np.ndarray:
        """Split each vertex mass equally among its incident cells."""
        share = np.asarray(mass, dtype=float) / self.cell_counts
        return share[self.cells].sum(axis=1)

    def to_json(self) -> str:
        if self.scheme.rational:
            conds = _rational_conductances(self)
        else:
            conds = [float(f"{c:.17g}") for c in self.conductance]
        doc = {
            "spec": None if self.spec is None else self.spec.as_dict(),
            "scheme": {"name": self.scheme.name,
                       "values": [str(v) if isinstance(v, Fraction) else v for v in self.scheme.values]},
            "dimension": self.dimension,
            "scale": self.scale,
            "lattice": self.lattice,
            "vertices": self.vertices.tolist(),
            "edges": [[int(u), int(v), c] for (u, v), c in zip(self.edges, conds)],
            "boundary": self.boundary.tolist(),
            "cells": self.cells.tolist(),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ApproxGraph":
        doc = json.loads(text)
        spec = None if doc["spec"] is None else GasketSpec(**doc["spec"])
        values = tuple(Fraction(v) if isinstance(v, str) else v for v in doc["scheme"]["values"])
        edges = np.array([[e[0], e[1]] for e in doc["edges"]], dtype=np.int64).reshape(-1, 2)
        cond = np.array([float(Fraction(e[2])) if isinstance(e[2], str) else e[2]
                         for e in doc["edges"]], dtype=float)
        simplicial = spec is None or spec.family is Family.SG
        return cls(spec, ConductanceScheme(doc["scheme"]["name"], values), doc["dimension"],
                   doc["scale"], np.array(doc["vertices"], dtype=np.int64), edges, cond,
                   np.array(doc["cells"], dtype=np.int64), np.array(doc["boundary"], dtype=np.int64),
                   simplicial=simplicial, lattice=doc["lattice"])


def _rational_conductances(graph: ApproxGraph) -> list[str]:
    exact = {float(v): v for v in graph.scheme.values}
    out = []
    for c in graph.conductance:
        # parallel merges could produce sums; fall back to limit_denominator
        v = exact.get(float(c))
        if v is None:
            v = Fraction(float(c)).limit_denominator(10**9)
        out.append(str(Fraction(v)))
    return out


def _pair_class(offsets: np.ndarray, i: int, j: int, simplicial: bool) -> int:
    if simplicial:
        return 1
    return int(np.abs(offsets[i] - offsets[j]).sum())


def _merge_edges(u, v, c, n):
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    keys = lo * n + hi
    uniq, inv = np.unique(keys, return_inverse=True)
    total = np.bincount(inv, weights=c)
    return np.stack([uniq // n, uniq % n], axis=1), total


def build_graph(spec: GasketSpec, scheme: ConductanceScheme | None = None,
                max_vertices=DEFAULT_MAX_VERTICES) -> ApproxGraph:
    """Union of per-cell complete graphs at the finest level of ``spec``."""
    scheme = default_scheme(spec) if scheme is None else scheme
    simplicial = spec.family is Family.SG
    if simplicial != (scheme.name.startswith("sg")):
        raise SpecError(f"scheme {scheme.name} does not fit family {spec.family.value}")
    _check_guard(spec, max_vertices)
    l, m = spec.side, spec.level
    lets = np.array(letters(spec), dtype=np.int64)
    k = lets.shape[1]
    origins = np.zeros((1, k), dtype=np.int64)
    for _ in range(m):
        origins = (l * origins[:, None, :] + lets[None, :, :]).reshape(-1, k)
    offsets = _corner_offsets(spec)
    corners = origins[:, None, :] + offsets[None, :, :]
    vertices, inv = np.unique(corners.reshape(-1, k), axis=0, return_inverse=True)
    if len(vertices) > max_vertices:
        raise GuardExceeded(f"{len(vertices)} vertices exceed guard {max_vertices}")
    cells = inv.reshape(len(origins), len(offsets))
    if simplicial:
        assert (vertices >= 0).all() and (vertices.sum(axis=1) == spec.scale).all()

    us, vs, cs = [], [], []
    for i, j in itertools.combinations(range(len(offsets)), 2):
        us.append(cells[:, i])
        vs.append(cells[:, j])
        value = float(scheme.for_class(_pair_class(offsets, i, j, simplicial)))
        cs.append(np.full(len(cells), value))
    edges, cond = _merge_edges(np.concatenate(us), np.concatenate(vs), np.concatenate(cs),
                               len(vertices))

    index = {tuple(v): i for i, v in enumerate(vertices.tolist())}
    boundary = np.array([index[tuple(int(x) for x in spec.scale * off)] for off in offsets],
                        dtype=np.int64)
    return ApproxGraph(spec, scheme, spec.dimension, spec.scale, vertices, edges, cond, cells,
                       boundary, simplicial=simplicial)


def lattice_graph(d: int, L: int, max_vertices=DEFAULT_MAX_VERTICES) -> ApproxGraph:
    """Nearest-neighbour simplex lattice with side ``L`` and unit conductances.

    Built directly from lattice points and the moves ``e_i - e_j``; it
    coincides with the level-1 gasket graph of side ``L``.
    """
    if d < 2 or L < 1:
        raise SpecError(f"lattice_graph needs d >= 2 and L >= 1, got d={d}, L={L}")
    if comb(L + d, d) > max_vertices:
        raise GuardExceeded(f"lattice with {comb(L + d, d)} vertices exceeds guard {max_vertices}")
    verts = np.array(sorted(compositions(L, d + 1)), dtype=np.int64)
    radix = (L + 1) ** np.arange(d, -1, -1, dtype=np.int64)
    keys = verts @ radix
    us, vs = [], []
    for i, j in itertools.permutations(range(d + 1), 2):
        ok = verts[:, j] > 0
        moved = verts[ok].copy()
        moved[:, i] += 1
        moved[:, j] -= 1
        tgt = np.searchsorted(keys, moved @ radix)
        src = np.nonzero(ok)[0]
        keep = src < tgt
        us.append(src[keep])
        vs.append(tgt[keep])
    u, v = np.concatenate(us), np.concatenate(vs)
    edges, cond = _merge_edges(u, v, np.ones(len(u)), len(verts))
    ups = np.array(compositions(L - 1, d + 1), dtype=np.int64)
    cells = np.searchsorted(keys, (ups[:, None, :] + np.eye(d + 1, dtype=np.int64)) @ radix)
    boundary = np.searchsorted(keys, (L * np.eye(d + 1, dtype=np.int64)) @ radix)
    spec = GasketSpec.sg(d, L, 1) if L >= 2 else None
    return ApproxGraph(spec, SG_UNIT, d, L, verts, edges, cond, cells, boundary, lattice=True)


def simplex_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance between normalized barycentric points (unit side)."""
    return np.linalg.norm(np.asarray(a, float) - np.asarray(b, float), axis=-1) / sqrt(2.0)


def network_graph(n: int, edges, conductance=None) -> ApproxGraph:
    """Plain weighted graph wrapped as an ApproxGraph (edges double as cells).

    Vertices sit at integer positions on a line; only the walk-related
    members are meaningful.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    cond = np.ones(len(edges)) if conductance is None else np.asarray(conductance, dtype=float)
    if (edges[:, 0] == edges[:, 1]).any():
        raise SpecError("self-loops are not allowed")
    if not (cond > 0).all():
        raise SpecError("conductances must be positive")
    merged, total = _merge_edges(edges[:, 0], edges[:, 1], cond, n)
    return ApproxGraph(None, ConductanceScheme("network", (1,)), 1, 1,
                       np.arange(n, dtype=np.int64)[:, None], merged, total, merged.copy(),
                       np.array([0], dtype=np.int64), simplicial=False)
