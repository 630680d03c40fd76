"""Monte Carlo walkers on approximation graphs.

All walkers of one batch move in lockstep.  A step is one uniform draw per
walker followed by a binary search in the concatenated cumulative
transition rows: row ``v`` occupies the interval ``[v, v + 1]`` of that
array, so ``searchsorted(cum, v + u)`` picks the next vertex directly.

Stream derivation: worker ``w`` draws from ``Philox(seed + w)`` and the
sample budget is split into contiguous blocks, one per worker.  Results are
merged in worker order, so output depends on (seed, workers) only; the
number of threads that execute the blocks does not matter.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain import WalkModel, first_passage, unit_graph
from .errors import SpecError
from .geometry import count_cells
from .renormalization import rho

BATCH = 200_000


@dataclass(frozen=True)
class SimConfig:
    model: WalkModel
    seed: int
    samples: int
    steps: int = 0
    start: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise SpecError(f"samples must be >= 1, got {self.samples}")
        if self.steps < 0:
            raise SpecError(f"steps must be >= 0, got {self.steps}")
        if self.workers < 1:
            raise SpecError(f"workers must be >= 1, got {self.workers}")
        if not 0 <= self.start < self.model.graph.n_vertices:
            raise SpecError(f"start vertex {self.start} out of range")

    def blocks(self) -> list[int]:
        """Sample counts per worker; the first ``samples % workers`` get one extra."""
        q, r = divmod(self.samples, self.workers)
        return [q + (w < r) for w in range(self.workers)]


def worker_rng(seed: int, worker: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) + int(worker)))


class Stepper:
    """Vectorized one-step sampler for a WalkModel."""

    def __init__(self, model: WalkModel):
        p = model.transition.tocsr()
        p.sort_indices()
        n = p.shape[0]
        rows = np.repeat(np.arange(n), np.diff(p.indptr))
        total = np.cumsum(p.data)
        offset = np.r_[0.0, total][p.indptr[:-1]]
        cum = total - offset[rows]
        cum[p.indptr[1:] - 1] = 1.0  # guard against rounding short of the row end
        self.cum = rows + cum
        self.targets = p.indices.astype(np.int64)

    def __call__(self, pos: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(len(pos))
        k = np.searchsorted(self.cum, pos + u, side="right")
        # u < 1 keeps k inside the row; clip only protects against u rounding to 1.0
        return self.targets[np.minimum(k, len(self.cum) - 1)]


@dataclass
class PathStats:
    """Merged statistics of one sampling run."""

    samples: int
    seed: int
    workers: int
    steps: int
    counts: dict = field(default_factory=dict)   # step -> visits per vertex at that step
    max_displacement: np.ndarray | None = None  # per sample, Euclidean from the start

    def frequencies(self, step: int) -> np.ndarray:
        return self.counts[step] / self.samples

    def standard_errors(self, step: int) -> np.ndarray:
        p = self.frequencies(step)
        return np.sqrt(p * (1 - p) / self.samples)


def _run_block(stepper, config, record, track_disp, positions, n, rng):
    nv = config.model.graph.n_vertices
    counts = {s: np.zeros(nv, dtype=np.int64) for s in record}
    disp = []
    done = 0
    while done < n:
        size = min(BATCH, n - done)
        pos = np.full(size, config.start, dtype=np.int64)
        far = np.zeros(size)
        if 0 in counts:
            counts[0] += np.bincount(pos, minlength=nv)
        for step in range(1, config.steps + 1):
            pos = stepper(pos, rng)
            if track_disp:
                far = np.maximum(far, np.linalg.norm(positions[pos] - positions[config.start], axis=1))
            if step in counts:
                counts[step] += np.bincount(pos, minlength=nv)
        disp.append(far)
        done += size
    return counts, np.concatenate(disp)


def sample_paths(config: SimConfig, record_steps=None, track_displacement=False,
                 threads: int = 1) -> PathStats:
    """Run ``config.samples`` walks of ``config.steps`` steps.

    ``record_steps`` lists the step counts at which vertex occupation is
    tallied (default: the final step).
    """
    record = sorted({config.steps} if record_steps is None else {int(s) for s in record_steps})
    if any(s < 0 or s > config.steps for s in record):
        raise SpecError("record_steps must lie in [0, steps]")
    stepper = Stepper(config.model)
    positions = config.model.graph.positions
    jobs = [(worker_rng(config.seed, w), n) for w, n in enumerate(config.blocks())]

    def run(job):
        rng, n = job
        return _run_block(stepper, config, record, track_displacement, positions, n, rng)

    if threads <= 1 or len(jobs) == 1:
        results = [run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    counts = {s: sum(r[0][s] for r in results) for s in record}
    disp = np.concatenate([r[1] for r in results]) if track_displacement else None
    return PathStats(config.samples, config.seed, config.workers, config.steps, counts, disp)


# -- level-1 crossing times --------------------------------------------------

def level_one_vertices(graph) -> np.ndarray:
    """Mask of vertices that already exist at level 1."""
    step = graph.scale // graph.spec.side
    return (graph.vertices % step == 0).all(axis=1)


def crossing_times(graph, n_cross: int, samples: int, rng, start=None) -> np.ndarray:
    """Step counts T_1 < ... < T_n of successive hits of V_1 minus the last one.

    Returns an array of shape (samples, n_cross).
    """
    stepper = Stepper(WalkModel(graph))
    coarse = level_one_vertices(graph)
    start = int(graph.boundary[0]) if start is None else start
    out = np.zeros((samples, n_cross), dtype=np.int64)
    pos = np.full(samples, start, dtype=np.int64)
    anchor = pos.copy()
    k = np.zeros(samples, dtype=np.int64)
    active = np.arange(samples)
    step = 0
    while len(active):
        step += 1
        pos[active] = stepper(pos[active], rng)
        p = pos[active]
        hit = coarse[p] & (p != anchor[active])
        if hit.any():
            who = active[hit]
            out[who, k[who]] = step
            k[who] += 1
            anchor[who] = pos[who]
            active = active[k[active] < n_cross]
    return out


def exact_crossing_mean(d: int, l: int, m: int) -> float:
    """E T_1 in level-m steps, from the corner to the rest of V_1."""
    g = unit_graph(d, l, m)
    coarse = level_one_vertices(g)
    corner = int(g.boundary[0])
    targets = np.nonzero(coarse)[0]
    targets = targets[targets != corner]
    fp = first_passage(WalkModel(g), targets, second=False, harmonic=False, component_of=corner)
    return float(fp.mean[np.searchsorted(fp.nodes, corner)])


@dataclass
class ConcentrationReport:
    d: int
    l: int
    m: int
    horizon: float
    samples: int
    seed: int
    n_crossings: int
    exact_mean: float
    tau_steps: float
    sup_statistic: np.ndarray
    first_crossing: np.ndarray

    def quantiles(self, qs=(0.1, 0.25, 0.5, 0.75, 0.9)) -> dict:
        return {str(q): float(np.quantile(self.sup_statistic, q)) for q in qs}

    @property
    def median(self) -> float:
        return float(np.median(self.sup_statistic))

    def first_crossing_gate(self, n_sigma=4.0) -> dict:
        x = self.first_crossing
        se = x.std(ddof=1) / math.sqrt(len(x)) if len(x) > 1 else math.inf
        z = abs(x.mean() - self.exact_mean) / se if se > 0 else math.inf
        return {"mean": float(x.mean()), "exact": self.exact_mean, "se": float(se),
                "z": float(z), "pass": bool(z <= n_sigma)}

    def as_dict(self) -> dict:
        return {"spec": {"d": self.d, "l": self.l, "m": self.m}, "horizon": self.horizon,
                "samples": self.samples, "seed": self.seed, "n_crossings": self.n_crossings,
                "exact_mean_steps": self.exact_mean, "tau_steps": self.tau_steps,
                "median": self.median, "quantiles": self.quantiles()}


def t1_concentration(d: int, l: int, m: int, horizon: float = 1.0, samples: int = 1000,
                     seed: int = 0) -> ConcentrationReport:
    """Distribution of sup_{n <= l^2 T} |T_n - n E T_1| / tau, T_n the level-1 crossings."""
    if m < 2:
        raise SpecError("t1_concentration needs level m >= 2")
    if horizon <= 0:
        raise SpecError("horizon must be positive")
    n_cross = max(1, math.floor(l * l * horizon))
    g = unit_graph(d, l, m)
    mean = exact_crossing_mean(d, l, m)
    # tau^l expressed in level-m steps
    tau_steps = d * l * l * (rho(d, l) * count_cells(d, l)) ** (m - 1)
    times = crossing_times(g, n_cross, samples, worker_rng(seed, 0))
    n = np.arange(1, n_cross + 1)
    sup = np.abs(times - n * mean).max(axis=1) / tau_steps
    return ConcentrationReport(d, l, m, horizon, samples, seed, n_cross, mean, tau_steps,
                               sup, times[:, 0].astype(float))
