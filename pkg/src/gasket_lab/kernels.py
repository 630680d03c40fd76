"""Heat-kernel estimates on probe regions and comparison with a lattice reference.

Mass attribution: a vertex's mass is split equally among its incident
finest cells and each cell belongs to the probe containing its barycenter.
Densities divide probe mass by the probe's share of the uniform measure,
measured once on a fine lattice.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .chain import WalkModel, evolve, point_mass
from .errors import SpecError
from .geometry import ApproxGraph, Family, GasketSpec, SG_UNIT, build_graph, compositions, count_cells, \
    lattice_graph
from .renormalization import rho
from .sampling import SimConfig, sample_paths

FRACTION_SIDE = 256
DEFAULT_REFERENCE_SIDE = {2: 64, 3: 16}


@dataclass(frozen=True)
class ProbeSet:
    """Balls in the unit simplex, centers in barycentric coordinates."""

    centers: tuple  # tuple of tuples, each of length d+1 summing to 1
    radius: float
    name: str = "custom"

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        if c.ndim != 2 or len(c) == 0:
            raise SpecError("probe set needs at least one center")
        if (c < -1e-12).any() or np.abs(c.sum(axis=1) - 1).max() > 1e-9:
            raise SpecError("probe centers must lie in the simplex")
        if not self.radius > 0:
            raise SpecError("probe radius must be positive")

    @classmethod
    def grid(cls, d: int, k: int = 4, radius: float = 0.1) -> "ProbeSet":
        """Barycenters of the upward cells of the side-k subdivision."""
        cells = np.array(compositions(k - 1, d + 1), dtype=float)
        centers = (cells + 1.0 / (d + 1)) / k
        return cls(tuple(tuple(float(x) for x in c) for c in centers), radius, f"grid-k{k}-r{radius}")

    @classmethod
    def from_json(cls, text: str) -> "ProbeSet":
        doc = json.loads(text)
        return cls(tuple(tuple(c) for c in doc["centers"]), float(doc["radius"]), doc.get("name", "custom"))

    def to_json(self) -> str:
        return json.dumps({"name": self.name, "radius": self.radius,
                           "centers": [list(c) for c in self.centers]}, sort_keys=True)

    @property
    def dimension(self) -> int:
        return len(self.centers[0]) - 1

    @property
    def points(self) -> np.ndarray:
        """Centers in the unit-side embedding used by ApproxGraph.positions."""
        return np.asarray(self.centers, dtype=float) / math.sqrt(2.0)

    @property
    def content_hash(self) -> str:
        return hashlib.sha1(self.to_json().encode()).hexdigest()

    def __len__(self):
        return len(self.centers)

    @property
    def interior(self) -> np.ndarray:
        """Mask of probes whose ball stays inside the simplex."""
        d = self.dimension
        height = math.sqrt((d + 1) / (2 * d))  # unit-side simplex
        return np.asarray(self.centers).min(axis=1) * height >= self.radius

    def assignment(self, points: np.ndarray) -> np.ndarray:
        """Probe index of each point, -1 outside all probes; overlaps go to the nearest."""
        dist = np.linalg.norm(points[:, None, :] - self.points[None, :, :], axis=2)
        best = dist.argmin(axis=1)
        inside = dist[np.arange(len(points)), best] <= self.radius
        return np.where(inside, best, -1)

    def fractions(self) -> np.ndarray:
        return _reference_fractions(self.to_json(), self.dimension)


@lru_cache(maxsize=32)
def _reference_fractions(probe_json: str, d: int) -> np.ndarray:
    probes = ProbeSet.from_json(probe_json)
    cells = np.array(compositions(FRACTION_SIDE - 1, d + 1), dtype=float)
    bary = (cells + 1.0 / (d + 1)) / FRACTION_SIDE / math.sqrt(2.0)
    owner = probes.assignment(bary)
    return np.bincount(owner[owner >= 0], minlength=len(probes)) / len(cells)


def probe_masses(graph: ApproxGraph, mass: np.ndarray, probes: ProbeSet) -> np.ndarray:
    owner = probes.assignment(graph.cell_barycenters)
    cm = graph.cell_mass(mass)
    keep = owner >= 0
    return np.bincount(owner[keep], weights=cm[keep], minlength=len(probes))


def probe_weights(graph: ApproxGraph, probes: ProbeSet) -> np.ndarray:
    """Matrix (probes x vertices): share of each vertex's mass landing in each probe."""
    owner = probes.assignment(graph.cell_barycenters)
    w = np.zeros((len(probes), graph.n_vertices))
    share = 1.0 / graph.cell_counts
    for c, p in enumerate(owner):
        if p >= 0:
            np.add.at(w[p], graph.cells[c], share[graph.cells[c]])
    return w


@dataclass
class KernelEstimate:
    t: float
    steps: int
    mass: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    probes: ProbeSet
    source: dict = field(default_factory=dict)
    gasket_density: np.ndarray | None = None  # mass over the graph's own cell share

    def as_dict(self) -> dict:
        return {"t": self.t, "steps": self.steps, "source": self.source,
                "probes": {"name": self.probes.name, "hash": self.probes.content_hash},
                "mass": self.mass.tolist(), "density": self.density.tolist(),
                "stderr": self.stderr.tolist(),
                "gasket_density": None if self.gasket_density is None else self.gasket_density.tolist()}


def kernel_steps(spec: GasketSpec, t: float) -> int:
    """Level-m step count matching diffusion time tau^l * t."""
    if not t > 0:
        raise SpecError(f"t must be positive, got {t}")
    d, l, m = spec.dimension, spec.side, spec.level
    if m == 1:
        n = math.floor(d * l * l * t)
    else:
        n = round(d * l * l * (rho(d, l) * count_cells(d, l)) ** (m - 1) * t)
    if n < 1:
        raise SpecError(f"t = {t} is below the temporal resolution of {spec} (0 steps)")
    return n


def _start_vertex(graph: ApproxGraph, start) -> int:
    if start is None:
        return int(graph.boundary[0])
    if np.ndim(start) == 0:
        return int(start)
    point = np.asarray(start, dtype=float) / math.sqrt(2.0)
    return int(np.linalg.norm(graph.positions - point, axis=1).argmin())


def _estimate(graph, n, t, probes, start, mode, samples, seed, workers, source, threads=1):
    v0 = _start_vertex(graph, start)
    model = WalkModel(graph)
    frac = probes.fractions()
    if mode == "exact":
        mass = probe_masses(graph, evolve(model, point_mass(graph.n_vertices, v0), n), probes)
        err = np.zeros(len(probes))
    elif mode == "mc":
        cfg = SimConfig(model, seed=seed, samples=samples, steps=n, start=v0, workers=workers)
        freq = sample_paths(cfg, threads=threads).frequencies(n)
        w = probe_weights(graph, probes)
        mass = w @ freq
        var = np.maximum((w**2) @ freq - mass**2, 0.0)
        err = np.sqrt(var / samples)
        source = dict(source, seed=seed, samples=samples, workers=workers)
    else:
        raise SpecError(f"mode must be 'exact' or 'mc', got {mode!r}")
    owner = probes.assignment(graph.cell_barycenters)
    share = np.bincount(owner[owner >= 0], minlength=len(probes)) / len(graph.cells)
    with np.errstate(divide="ignore", invalid="ignore"):
        density = np.where(frac > 0, mass / frac, np.nan)
        derr = np.where(frac > 0, err / frac, np.nan)
        own = np.where(share > 0, mass / share, np.nan)
    return KernelEstimate(t, n, mass, density, derr, probes, dict(source, start=v0, mode=mode), own)


def kernel_estimate(spec: GasketSpec, t: float, probes: ProbeSet | None = None, mode="exact",
                    start=None, samples=10**5, seed=0, workers=1, threads=1) -> KernelEstimate:
    if spec.family is not Family.SG:
        raise SpecError("kernel estimates are implemented for gaskets")
    probes = ProbeSet.grid(spec.dimension) if probes is None else probes
    n = kernel_steps(spec, t)
    graph = _graph(spec)
    return _estimate(graph, n, t, probes, start, mode, samples, seed, workers, {"spec": spec.as_dict()},
                     threads)


@lru_cache(maxsize=16)
def _graph(spec: GasketSpec) -> ApproxGraph:
    return build_graph(spec, SG_UNIT)


@lru_cache(maxsize=8)
def _lattice(d: int, L: int) -> ApproxGraph:
    return lattice_graph(d, L)


def reference_steps(d: int, L: int, t: float) -> int:
    n = math.floor(d * L * L * t)
    if n < 1:
        raise SpecError(f"t = {t} gives no lattice steps at L = {L}")
    return n


def reference_kernel(d: int, t: float, probes: ProbeSet | None = None, L: int | None = None,
                     start=None) -> KernelEstimate:
    """Exact lattice walk at floor(d L^2 t) steps, the reflected Brownian proxy."""
    L = DEFAULT_REFERENCE_SIDE.get(d, 16) if L is None else L
    probes = ProbeSet.grid(d) if probes is None else probes
    n = reference_steps(d, L, t)
    return _estimate(_lattice(d, L), n, t, probes, start, "exact", 0, 0, 1, {"lattice": {"d": d, "L": L}})


def chapman_kolmogorov(d: int, t: float, probes: ProbeSet | None = None, L: int | None = None) -> float:
    """Max probe-mass gap between the reference at 2t and the t-kernel evolved for t again."""
    L = DEFAULT_REFERENCE_SIDE.get(d, 16) if L is None else L
    probes = ProbeSet.grid(d) if probes is None else probes
    g = _lattice(d, L)
    n = reference_steps(d, L, t)
    if reference_steps(d, L, 2 * t) != 2 * n:
        raise SpecError("2t must map to exactly twice the steps of t")
    model = WalkModel(g)
    half = evolve(model, point_mass(g.n_vertices, int(g.boundary[0])), n)
    twice = evolve(model, half, n)
    direct = reference_kernel(d, 2 * t, probes, L).mass
    return float(np.abs(probe_masses(g, twice, probes) - direct).max())


# -- comparisons -------------------------------------------------------------

@dataclass
class Comparison:
    t_list: list
    per_t_max: list
    per_t_mean: list
    D: float
    details: list = field(default_factory=list)

    def as_dict(self):
        return {"t": self.t_list, "max": self.per_t_max, "mean": self.per_t_mean, "D": self.D}


def _discrepancy(a: KernelEstimate, b: KernelEstimate) -> np.ndarray:
    diff = np.abs(a.density - b.density)
    return diff[np.isfinite(diff)]


def compare_kernels(spec: GasketSpec, t_list, probes: ProbeSet | None = None, reference=None,
                    start=None, L: int | None = None) -> Comparison:
    """Probe-density discrepancy against the lattice, or against ``reference``.

    ``reference`` may be another GasketSpec (level self-consistency).
    """
    probes = ProbeSet.grid(spec.dimension) if probes is None else probes
    out_max, out_mean, details = [], [], []
    for t in t_list:
        est = kernel_estimate(spec, t, probes, start=start)
        if reference is None:
            ref = reference_kernel(spec.dimension, t, probes, L, start=start)
        elif isinstance(reference, GasketSpec):
            ref = kernel_estimate(reference, t, probes, start=start)
        else:
            raise SpecError("reference must be None or a GasketSpec")
        diff = _discrepancy(est, ref)
        out_max.append(float(diff.max()))
        out_mean.append(float(diff.mean()))
        details.append((est, ref))
    return Comparison(list(t_list), out_max, out_mean, max(out_max), details)


@dataclass
class OnDiagonal:
    d: int
    t_list: list
    max_density: list
    slope: float
    constant: float
    starts: int

    @property
    def within_bound(self) -> bool:
        """Fitted decay is no faster than t^(-d/2) with half a unit of slack."""
        return self.slope >= -self.d / 2 - 0.5

    def as_dict(self):
        return {"t": self.t_list, "max_density": self.max_density, "slope": self.slope,
                "constant": self.constant, "starts": self.starts, "within_bound": self.within_bound}


def return_densities(graph: ApproxGraph, steps: int, starts) -> np.ndarray:
    """Return mass density at each start: mass on the start's cells over their measure."""
    starts = np.asarray(starts, dtype=np.int64)
    mass = np.zeros((graph.n_vertices, len(starts)))
    mass[starts, np.arange(len(starts))] = 1.0
    mass = evolve(WalkModel(graph), mass, steps)
    cm = (mass / graph.cell_counts[:, None])[graph.cells].sum(axis=1)
    own = (graph.cells[:, :, None] == starts[None, None, :]).any(axis=1)
    return (own * cm).sum(axis=0) / (own.sum(axis=0) / len(graph.cells))


def ondiag_check(spec: GasketSpec, t_list, max_starts: int = 2000) -> OnDiagonal:
    """Max over starts of the return density, with a log-log power-law fit in t."""
    g = _graph(spec)
    nv = g.n_vertices
    if nv <= max_starts:
        starts = np.arange(nv)
    else:
        starts = np.unique(np.linspace(0, nv - 1, max_starts).astype(np.int64))
    t_list = [float(t) for t in t_list]
    dens = [float(return_densities(g, kernel_steps(spec, t), starts).max()) for t in t_list]
    if len(t_list) < 2:
        return OnDiagonal(spec.dimension, t_list, dens, math.nan, math.nan, len(starts))
    slope, icept = np.polyfit(np.log(t_list), np.log(dens), 1)
    return OnDiagonal(spec.dimension, t_list, dens, float(slope), float(math.exp(icept)), len(starts))


@dataclass
class HolderReport:
    t: float
    deltas: list
    modulus: list
    gamma: float
    measure: str

    def at(self, delta: float) -> float:
        return self.modulus[self.deltas.index(delta)]

    def as_dict(self):
        return {"t": self.t, "delta": self.deltas, "modulus": self.modulus, "gamma": self.gamma,
                "measure": self.measure}


def holder_modulus(spec: GasketSpec, t: float, probes: ProbeSet | None = None,
                   deltas=(0.1, 0.2, 0.4, 0.8), measure="reference") -> HolderReport:
    """Largest density gap between probes at most delta apart, and its fitted exponent.

    ``measure="reference"`` uses the lattice-normalized densities of
    kernel_estimate; ``"gasket"`` divides by the gasket's own cell share.
    A modulus that is flat in delta fits to gamma = 0: the gaps then sit
    below the cell resolution.
    """
    probes = ProbeSet.grid(spec.dimension, k=10, radius=0.1) if probes is None else probes
    est = kernel_estimate(spec, t, probes)
    if measure == "reference":
        dens = est.density
    elif measure == "gasket":
        dens = est.gasket_density
    else:
        raise SpecError(f"measure must be 'reference' or 'gasket', got {measure!r}")
    deltas = [float(x) for x in deltas]
    pts = probes.points
    dist = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    ok = np.isfinite(dens)
    gap = np.abs(dens[:, None] - dens[None, :])
    pair = ok[:, None] & ok[None, :]
    mod = [float(gap[pair & (dist <= dl + 1e-12)].max()) for dl in deltas]
    pos = [(dl, mo) for dl, mo in zip(deltas, mod) if dl > 0 and mo > 0]
    gamma = math.nan
    if len(pos) >= 2:
        gamma = float(np.polyfit(np.log([p[0] for p in pos]), np.log([p[1] for p in pos]), 1)[0])
    return HolderReport(t, deltas, mod, gamma, measure)
