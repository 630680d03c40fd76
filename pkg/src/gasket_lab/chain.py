"""Exact linear-algebra computations for discrete walks on approximation graphs.

Hitting moments, harmonic measure, exit times, Poincare constants and exact
n-step evolution.  Everything here is a deterministic function of the graph.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import DisconnectedError, GuardExceeded, NumericalFailure, SpecError
from .geometry import ApproxGraph, Family, GasketSpec, SG_UNIT, build_graph, count_cells
from .renormalization import ScaleFunction, rho

DENSE_EIG_LIMIT = 2000


@dataclass(frozen=True, eq=False)
class WalkModel:
    """Walk moving along edges with probability proportional to conductance.

    ``alpha`` is the holding probability of the lazy variant.
    """

    graph: ApproxGraph
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise SpecError(f"holding probability must lie in [0, 1), got {self.alpha}")

    @property
    def kind(self) -> str:
        return "simple" if self.alpha == 0 else f"lazy({self.alpha})"

    @property
    def transition(self) -> sp.csr_matrix:
        g = self.graph
        p = sp.diags(1.0 / g.degrees) @ g.weights
        if self.alpha:
            p = self.alpha * sp.identity(g.n_vertices) + (1 - self.alpha) * p
        return p.tocsr()

    @property
    def stationary(self) -> np.ndarray:
        deg = self.graph.degrees
        return deg / deg.sum()


@dataclass
class HittingReport:
    start: int
    targets: tuple
    expected_steps: float
    second_moment: float
    hit_distribution: dict = field(default_factory=dict)

    @property
    def variance(self) -> float:
        return self.second_moment - self.expected_steps**2


@dataclass
class FirstPassage:
    """First-passage solution for every non-target node of one component."""

    nodes: np.ndarray        # non-target nodes, in graph indexing
    mean: np.ndarray         # E[sigma] for each of ``nodes``
    second: np.ndarray | None
    harmonic: np.ndarray | None  # rows: nodes, cols: targets
    targets: np.ndarray


def first_passage(model: WalkModel, targets, second=True, harmonic=True,
                  component_of=None) -> FirstPassage:
    """Solve the first-passage systems for hitting ``targets``.

    With W the conductances, D the degrees and U the non-targets:
        (1-a)(D-W)_UU h = D_U
        (1-a)(D-W)_UU s = D_U + 2 (a D + (1-a) W)_UU h
        (D-W)_UU H = W_UT
    """
    g = model.graph
    targets = np.unique(np.asarray(targets, dtype=np.int64))
    if len(targets) == 0:
        raise SpecError("target set is empty")
    _, comp = connected_components(g.weights, directed=False)
    keep = np.ones(g.n_vertices, dtype=bool)
    if component_of is not None:
        keep = comp == comp[component_of]
    reach = set(comp[targets])
    if not set(comp[keep]).issubset(reach):
        raise DisconnectedError("target set is unreachable from part of the start component")
    mask = keep.copy()
    mask[targets] = False
    nodes = np.nonzero(mask)[0]
    tgt = targets[keep[targets]]
    a = model.alpha
    w = g.weights
    deg = g.degrees
    w_uu = w[nodes][:, nodes]
    system = sp.csc_matrix(sp.diags(deg[nodes]) - w_uu)
    if len(nodes) == 0:
        return FirstPassage(nodes, np.zeros(0), np.zeros(0), np.zeros((0, len(tgt))), tgt)
    lu = spla.splu(system)
    h = lu.solve(deg[nodes]) / (1 - a)
    s = None
    if second:
        rhs = deg[nodes] + 2 * (a * deg[nodes] * h + (1 - a) * (w_uu @ h))
        s = lu.solve(rhs) / (1 - a)
    hm = None
    if harmonic:
        hm = lu.solve(w[nodes][:, tgt].toarray())
        hm = hm.reshape(len(nodes), len(tgt))
    _check_residual(system, h * (1 - a), deg[nodes])
    return FirstPassage(nodes, h, s, hm, tgt)


def _check_residual(matrix, x, rhs, tol=1e-9):
    resid = np.linalg.norm(matrix @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not np.isfinite(resid) or resid > tol:
        raise NumericalFailure(f"first-passage residual {resid:.3e}")


def hitting_moments(model: WalkModel, start: int, targets) -> HittingReport:
    targets = tuple(sorted(int(t) for t in np.atleast_1d(targets)))
    if start in targets:
        return HittingReport(start, targets, 0.0, 0.0, {start: 1.0})
    fp = first_passage(model, targets, component_of=start)
    i = int(np.searchsorted(fp.nodes, start))
    dist = {int(t): float(p) for t, p in zip(fp.targets, fp.harmonic[i])}
    return HittingReport(start, targets, float(fp.mean[i]), float(fp.second[i]), dist)


def harmonic_measure_by_trace(graph: ApproxGraph, start: int, targets) -> dict:
    """Hitting distribution read off the network traced onto start + targets."""
    from .resistance import schur_lap
    targets = [int(t) for t in targets]
    s = schur_lap(graph, [start] + targets)
    c = -s[0, 1:]
    return {t: float(v) for t, v in zip(targets, c / c.sum())}


# -- boundary identities -----------------------------------------------------

def unit_graph(d: int, l: int, m: int) -> ApproxGraph:
    return build_graph(GasketSpec.sg(d, l, m), SG_UNIT)


def boundary_identity_check(d: int, l: int, m: int, tol=1e-9) -> dict:
    """Harmonic-measure and crossing-time identities at the corners of level m."""
    g = unit_graph(d, l, m)
    model = WalkModel(g)
    corner = int(g.boundary[0])
    others = [int(b) for b in g.boundary[1:]]
    to_set = hitting_moments(model, corner, others)
    to_one = hitting_moments(model, corner, [others[0]])
    probs = np.array([to_set.hit_distribution[b] for b in others])
    p_later = 1.0 - to_set.hit_distribution[others[0]]
    uniform_err = float(np.abs(probs - 1.0 / d).max())
    p_err = abs(p_later - (d - 1) / d)
    mean_err = abs(to_set.expected_steps - to_one.expected_steps / d) / to_one.expected_steps
    return {
        "spec": {"d": d, "l": l, "m": m},
        "hit_distribution": probs.tolist(),
        "p_other_first": p_later,
        "mean_to_set": to_set.expected_steps,
        "mean_to_corner": to_one.expected_steps,
        "errors": {"uniform": uniform_err, "probability": p_err, "mean_ratio": mean_err},
        "tolerance": tol,
        "pass": max(uniform_err, p_err, mean_err) <= tol,
    }


@dataclass(frozen=True)
class CrossingStats:
    mean: float
    variance: float
    ratio: float
    step_time: float  # duration of one level-m step when E(crossing) = 1/(2d)


def crossing_time_stats(d: int, l: int, m: int) -> CrossingStats:
    """Moments of the corner-to-other-corners crossing time at level m."""
    g = unit_graph(d, l, m)
    rep = hitting_moments(WalkModel(g), int(g.boundary[0]), g.boundary[1:])
    var = rep.variance
    return CrossingStats(rep.expected_steps, var, var / rep.expected_steps**2,
                         1.0 / (2 * d * rep.expected_steps))


# -- exit times --------------------------------------------------------------

def distances(graph: ApproxGraph, center) -> np.ndarray:
    """Euclidean distance from ``center`` (vertex index or normalized point)."""
    if np.ndim(center) == 0:
        point = graph.positions[int(center)]
    else:
        point = np.asarray(center, dtype=float)
        point = point / math.sqrt(2.0) if graph.simplicial else point
    return np.linalg.norm(graph.positions - point, axis=1)


def ball(graph: ApproxGraph, center, r: float) -> np.ndarray:
    """Vertices in the closed Euclidean ball of radius ``r``."""
    return np.nonzero(distances(graph, center) <= r + 1e-12)[0]


@dataclass(frozen=True)
class ExitRecord:
    r: float
    steps: float    # max over starts in the ball of the expected exit step count
    time: float     # steps converted to diffusion time (nan for lattices)
    ratio: float    # time / psi(r) on gaskets, steps / (r L)^2 on lattices


def exit_time_profile(model: WalkModel, center, radii) -> list[ExitRecord]:
    g = model.graph
    dist = distances(g, center)
    scale = None
    if not g.lattice:
        spec = g.spec
        if spec is None or spec.family is not Family.SG:
            raise SpecError("exit-time conversion is implemented for gaskets and lattices")
        d, l, m = spec.dimension, spec.side, spec.level
        scale = ScaleFunction.for_gasket(d, l)
        step_time = 1.0 / (2 * d * (rho(d, l) * count_cells(d, l)) ** m)
    out = []
    for r in radii:
        inside = dist <= r + 1e-12
        if inside.all():
            raise SpecError(f"ball of radius {r} contains the whole graph: exit time is infinite")
        if not inside.any():
            out.append(ExitRecord(float(r), 0.0, 0.0, 0.0))
            continue
        fp = first_passage(model, np.nonzero(~inside)[0], second=False, harmonic=False)
        steps = float(fp.mean.max()) if len(fp.mean) else 0.0
        if g.lattice:
            out.append(ExitRecord(float(r), steps, math.nan, steps / (r * g.scale) ** 2))
        else:
            time = steps * step_time
            out.append(ExitRecord(float(r), steps, time, time / scale(min(r, 1.0))))
    return out


# -- Poincare constants ------------------------------------------------------

def _smallest_positive(lap, mass=None) -> float:
    n = lap.shape[0]
    if n <= DENSE_EIG_LIMIT:
        dense = lap.toarray() if sp.issparse(lap) else np.asarray(lap)
        vals = sla.eigh(dense, None if mass is None else np.diag(mass), eigvals_only=True,
                        subset_by_index=[0, 1])
    else:
        m = None if mass is None else sp.diags(mass)
        vals = spla.eigsh(sp.csc_matrix(lap), k=2, M=m, sigma=-1e-6, which="LM",
                          return_eigenvectors=False)
    vals = np.sort(vals)
    if vals[1] <= 1e-12 * max(abs(vals).max(), 1.0):
        raise DisconnectedError("region is disconnected (second eigenvalue vanishes)")
    return float(vals[1])


def induced_laplacian(graph: ApproxGraph, region) -> sp.csr_matrix:
    region = np.asarray(region)
    if region.dtype == bool:
        region = np.nonzero(region)[0]
    w = graph.weights[region][:, region]
    ncomp, _ = connected_components(w, directed=False)
    if ncomp != 1:
        raise DisconnectedError(f"region splits into {ncomp} components")
    return (sp.diags(np.asarray(w.sum(axis=1)).ravel()) - w).tocsr()


def poincare_constant(graph: ApproxGraph, region) -> float:
    """Best constant in (1/|B|) sum_{y,z in B} (f(y)-f(z))^2 <= C sum_edges c (f(y)-f(z))^2.

    The double sum runs over ordered pairs, so C = 2 / lambda_1 of the
    induced (Neumann) Laplacian.  Uniform vertex measure on the region.
    """
    lap = induced_laplacian(graph, region)
    if lap.shape[0] < 2:
        raise SpecError("region needs at least two vertices")
    return 2.0 / _smallest_positive(lap)


def cell_poincare_report(d: int, l: int) -> dict:
    """Poincare constant of one level-1 cell refined to level 2, in form units.

    Measure: the normalized gasket measure (vertex mass split over incident
    cells); energy: rho^2 * 2/(d+1) * sum over edges.  The ratio to
    psi(l^-1) * rho is the quantity the cell-restricted inequality bounds.
    """
    g = unit_graph(d, l, 2)
    n_cells = count_cells(d, l)
    r_l = rho(d, l)
    # finest cells are ordered with the first letter outermost; corner cell 0 first
    cells = g.cells[:n_cells]
    region = np.unique(cells)
    share = 1.0 / ((d + 1) * len(g.cells))
    counts = np.bincount(cells.ravel(), minlength=g.n_vertices)[region]
    mass = counts * share
    lap = induced_laplacian(g, region) * (r_l**2 * 2.0 / (d + 1))
    lam = _smallest_positive(lap, mass)
    const = 1.0 / lam
    scale = ScaleFunction.for_gasket(d, l)
    return {"d": d, "l": l, "constant": const, "psi": scale(1.0 / l), "rho": r_l,
            "ratio": const / (scale(1.0 / l) * r_l)}


# -- exact evolution ---------------------------------------------------------

def point_mass(n: int, vertex: int) -> np.ndarray:
    out = np.zeros(n)
    out[vertex] = 1.0
    return out


def evolve(model: WalkModel, mass: np.ndarray, steps: int, max_vertices=2 * 10**6) -> np.ndarray:
    """Exact distribution after ``steps`` steps of the walk.

    ``mass`` may be a matrix whose columns are evolved independently.
    """
    if steps < 0:
        raise SpecError("steps must be nonnegative")
    g = model.graph
    if g.n_vertices > max_vertices:
        raise GuardExceeded(f"exact evolution limited to {max_vertices} vertices")
    mass = np.array(mass, dtype=float)
    if steps == 0:
        return mass
    pt = model.transition.T.tocsr()
    total = mass.sum(axis=0)
    for _ in range(steps):
        mass = pt @ mass
    # floating drift only; the kernel is exactly stochastic
    drift = np.abs(mass.sum(axis=0) - total).max()
    if drift > 1e-12 * max(1.0, steps / 1e4):
        raise NumericalFailure(f"mass drift {drift:.3e} after {steps} steps")
    return mass
