"""Effective resistance and network reduction on weighted graphs."""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import DisconnectedError, GuardExceeded, NumericalFailure, SpecError

log = logging.getLogger(__name__)

DIRECT_LIMIT = 10**5
RESIDUAL_TOL = 1e-12
DENSE_LIMIT = 6000


class ResistorNetwork:
    """Undirected network with positive conductances.

    ``labels`` maps local node indices to the ids of a parent network, which
    is how a traced network remembers where its nodes came from.
    """

    def __init__(self, n, edges, conductance, boundary=None, labels=None):
        self.n = int(n)
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.conductance = np.asarray(conductance, dtype=float).ravel()
        if len(self.edges) != len(self.conductance):
            raise SpecError("one conductance per edge required")
        if (self.edges[:, 0] == self.edges[:, 1]).any():
            raise SpecError("self-loops are not allowed")
        if not (np.isfinite(self.conductance).all() and (self.conductance > 0).all()):
            raise SpecError("conductances must be finite and positive")
        self.boundary = None if boundary is None else np.asarray(boundary, dtype=np.int64)
        self.labels = np.arange(self.n) if labels is None else np.asarray(labels)

    @classmethod
    def from_graph(cls, graph):
        return cls(graph.n_vertices, graph.edges, graph.conductance, boundary=graph.boundary)

    @classmethod
    def from_matrix(cls, lap, labels=None, drop_tol=1e-13):
        """Network whose Laplacian is ``lap``; tiny off-diagonals are zeros."""
        lap = np.asarray(lap, dtype=float)
        n = len(lap)
        iu, ju = np.triu_indices(n, 1)
        c = -lap[iu, ju]
        cmax = np.abs(c).max() if len(c) else 0.0
        keep = np.abs(c) > drop_tol * cmax
        if (c[keep] < 0).any():
            raise NumericalFailure("traced network has a negative conductance")
        return cls(n, np.stack([iu[keep], ju[keep]], axis=1), c[keep], labels=labels)

    @property
    def weights(self) -> sp.csr_matrix:
        u, v = self.edges[:, 0], self.edges[:, 1]
        c = self.conductance
        return sp.coo_matrix((np.r_[c, c], (np.r_[u, v], np.r_[v, u])),
                             shape=(self.n, self.n)).tocsr()

    def laplacian(self) -> sp.csr_matrix:
        w = self.weights
        return (sp.diags(np.asarray(w.sum(axis=1)).ravel()) - w).tocsr()

    def dense_laplacian(self) -> np.ndarray:
        return self.laplacian().toarray()

    def components(self) -> np.ndarray:
        _, labels = connected_components(self.weights, directed=False)
        return labels

    def conductance_between(self, a, b) -> float:
        hit = ((self.edges[:, 0] == a) & (self.edges[:, 1] == b)) | \
              ((self.edges[:, 0] == b) & (self.edges[:, 1] == a))
        return float(self.conductance[hit].sum())


def _as_network(net):
    return net if isinstance(net, ResistorNetwork) else ResistorNetwork.from_graph(net)


def solve_spd(matrix: sp.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """Solve a grounded Laplacian system; direct below 1e5 unknowns, CG above."""
    matrix = sp.csc_matrix(matrix)
    rhs = np.asarray(rhs, dtype=float)
    if matrix.shape[0] <= DIRECT_LIMIT:
        x = spla.splu(matrix).solve(rhs)
    else:
        pre = sp.diags(1.0 / matrix.diagonal())
        cols = rhs.reshape(len(rhs), -1)
        out = []
        for col in cols.T:
            x, info = spla.cg(matrix, col, rtol=RESIDUAL_TOL, maxiter=20 * matrix.shape[0], M=pre)
            if info != 0:
                raise NumericalFailure(f"conjugate gradient did not converge (info={info})")
            out.append(x)
        x = np.stack(out, axis=1).reshape(rhs.shape)
    resid = np.linalg.norm(matrix @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not np.isfinite(resid) or resid > 1e3 * RESIDUAL_TOL:
        raise NumericalFailure(f"linear solve residual {resid:.3e} too large")
    return x


def effective_resistance(net, a: int, b: int) -> float:
    """Resistance between ``a`` and ``b``: ground ``a``, unit current into ``b``."""
    net = _as_network(net)
    if a == b:
        raise SpecError("effective resistance needs two distinct nodes")
    comp = net.components()
    if comp[a] != comp[b]:
        raise DisconnectedError(f"nodes {a} and {b} are not connected")
    nodes = np.nonzero(comp == comp[a])[0]
    lap = net.laplacian()[nodes][:, nodes]
    pos = {int(v): i for i, v in enumerate(nodes)}
    ia, ib = pos[a], pos[b]
    keep = np.r_[0:ia, ia + 1:len(nodes)]
    rhs = np.zeros(len(keep))
    jb = ib if ib < ia else ib - 1
    rhs[jb] = 1.0
    x = solve_spd(lap[keep][:, keep], rhs)
    return float(x[jb])


def resistance_matrix(net) -> np.ndarray:
    """All-pairs effective resistances via a grounded dense inverse."""
    net = _as_network(net)
    if net.n > DENSE_LIMIT:
        raise GuardExceeded(f"all-pairs resistance limited to {DENSE_LIMIT} nodes, got {net.n}")
    if len(np.unique(net.components())) != 1:
        raise DisconnectedError("all-pairs resistance needs a connected network")
    lap = net.dense_laplacian()
    g = np.zeros_like(lap)
    g[1:, 1:] = np.linalg.inv(lap[1:, 1:])
    diag = np.diag(g)
    return diag[:, None] + diag[None, :] - 2.0 * g


def schur_lap(net, boundary) -> np.ndarray:
    """Dense Schur complement of the Laplacian onto ``boundary``."""
    net = _as_network(net)
    boundary = np.asarray(boundary, dtype=np.int64)
    if len(boundary) == 0 or len(np.unique(boundary)) != len(boundary):
        raise SpecError("boundary must be a nonempty set of distinct nodes")
    if len(boundary) >= net.n:
        raise SpecError("boundary must be strictly contained in the node set")
    comp = net.components()
    if len(set(comp) - set(comp[boundary])):
        raise DisconnectedError("an interior component has no link to the boundary")
    mask = np.ones(net.n, dtype=bool)
    mask[boundary] = False
    interior = np.nonzero(mask)[0]
    lap = net.laplacian()
    l_ii = lap[interior][:, interior]
    l_ib = lap[interior][:, boundary].toarray()
    l_bb = lap[boundary][:, boundary].toarray()
    x = solve_spd(l_ii, l_ib)
    s = l_bb - l_ib.T @ x
    return 0.5 * (s + s.T)


def schur_trace(net, boundary) -> ResistorNetwork:
    """Network on ``boundary`` with the same boundary effective resistances."""
    net = _as_network(net)
    boundary = np.asarray(boundary, dtype=np.int64)
    s = schur_lap(net, boundary)
    return ResistorNetwork.from_matrix(s, labels=net.labels[boundary])
