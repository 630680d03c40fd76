"""Renormalization constants, scaling exponents and the crossover scale function."""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from filelock import FileLock

from . import exact
from .errors import GasketLabError, NumericalFailure, OrbitAsymmetryError, SpecError
from .geometry import (Family, GasketSpec, SG_UNIT, build_graph, count_cells,
                       count_vicsek_cells, sg_form)
from .resistance import effective_resistance, resistance_matrix, schur_lap

ORBIT_TOL = 1e-9
ROUTE_TOL = 1e-10


def _corner_pair(graph):
    return int(graph.boundary[0]), int(graph.boundary[1])


def rho_by_resistance(d: int, l: int) -> float:
    """(d+1)/2 times the corner-to-corner resistance of the unit level-1 graph."""
    g = build_graph(GasketSpec.sg(d, l, 1), SG_UNIT)
    return 0.5 * (d + 1) * effective_resistance(g, *_corner_pair(g))


def rho_by_trace(d: int, l: int) -> float:
    """(2/(d+1)) / c, with c the traced per-pair conductance of the SG-form graph."""
    g = build_graph(GasketSpec.sg(d, l, 1), sg_form(d))
    s = schur_lap(g, g.boundary)
    off = -s[np.triu_indices(d + 1, 1)]
    if np.ptp(off) > ORBIT_TOL * off.mean():
        raise OrbitAsymmetryError(f"traced V_0 conductances differ: spread {np.ptp(off):.3e}")
    return (2.0 / (d + 1)) / off.mean()


def rho(d: int, l: int, cache: "RhoCache | None" = None) -> float:
    """Resistance renormalization constant of SG(l) in dimension d."""
    if d < 2 or l < 2:
        raise SpecError(f"rho needs d >= 2 and l >= 2, got d={d}, l={l}")
    if cache is not None:
        hit = cache.get(Family.SG, d, l)
        if hit is not None:
            return hit["rho"]
    value = rho_by_resistance(d, l)
    if cache is not None:
        cache.put(Family.SG, d, l, value, residual=0.0, method="resistance")
    return value


def rho_exact(d: int, l: int) -> Fraction:
    """Exact rational rho; only for level-1 graphs with at most 64 vertices."""
    g = build_graph(GasketSpec.sg(d, l, 1), SG_UNIT)
    return Fraction(d + 1, 2) * exact.graph_resistance(g, *_corner_pair(g))


@dataclass(frozen=True)
class RhoLowerBound:
    finite: float
    limit: float  # liminf bound for d >= 3; inf for d = 2 (harmonic series)


def rho_lower_bound(d: int, l: int) -> RhoLowerBound:
    """Shorting bound (d+1) * sum_{i <= floor(l/2)} 1/(d N_{d-1,i}).

    For d = 2 the same construction gives 3 * sum 1/(2i), which diverges
    like log l.  The finite sum bounds rho only once l is large enough for
    the two shorted halves to be disjoint.
    """
    if d < 2:
        raise SpecError(f"rho_lower_bound needs d >= 2, got {d}")
    finite = (d + 1) * sum(Fraction(1, d * count_cells(d - 1, i)) for i in range(1, l // 2 + 1))
    limit = math.inf if d == 2 else (d + 1) * (d - 1) / (d * (d - 2))
    return RhoLowerBound(float(finite), limit)


# -- exponents ---------------------------------------------------------------

@dataclass(frozen=True)
class ExponentTable:
    d: int
    l: int
    family: str
    N: int
    rho: float
    rho_lower_bound: float
    d_f: float
    d_w: float
    d_s: float
    tau: float

    @property
    def crossover_diagnostic(self) -> float:
        """(d_w - 2 - loglog l / log l) log l for d = 2, (d_w - d) log l otherwise."""
        ll = math.log(self.l)
        if self.d == 2:
            return (self.d_w - 2 - math.log(ll) / ll) * ll
        return (self.d_w - self.d) * ll

    def as_row(self) -> dict:
        return asdict(self)


def exponents(d: int, l: int, family=Family.SG, cache: "RhoCache | None" = None) -> ExponentTable:
    family = Family(family)
    if family is Family.SG:
        N = count_cells(d, l)
        r = rho(d, l, cache=cache)
        lower = rho_lower_bound(d, l).finite
    else:
        from .vicsek import vicsek_fixed_point
        spec = GasketSpec(family, d, l, 1)
        N = count_vicsek_cells(spec.dimension, l)
        d = spec.dimension
        hit = cache.get(family, d, l) if cache is not None else None
        if hit is None:
            fp = vicsek_fixed_point(family, l)
            r = fp.rho
            if cache is not None:
                cache.put(family, d, l, r, residual=fp.residual, method="fixed-point")
        else:
            r = hit["rho"]
        lower = math.nan
    if not r > 1:
        raise NumericalFailure(f"rho = {r} is not above 1 for {family.value}(d={d}, l={l})")
    d_f = math.log(N) / math.log(l)
    d_w = math.log(r * N) / math.log(l)
    if not d_w > 2:
        raise NumericalFailure(f"walk dimension {d_w} is not above 2 for {family.value}(d={d}, l={l})")
    tau = l**2 / (2 * r * N)
    identity = 0.5 * l ** (2 - d_w)
    if abs(tau - identity) > 1e-12 * tau:
        raise NumericalFailure(f"tau identity violated: {tau!r} vs {identity!r}")
    return ExponentTable(d, l, family.value, N, r, lower, d_f, d_w, 2 * d_f / d_w, tau)


# -- scale function ----------------------------------------------------------

@dataclass(frozen=True)
class ScaleFunction:
    """Crossover time profile: r^d_w below 1/l, 2 tau r^2 above."""

    l: int
    d_w: float
    tau: float

    @classmethod
    def for_gasket(cls, d: int, l: int) -> "ScaleFunction":
        t = exponents(d, l)
        return cls(l, t.d_w, t.tau)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if ((r <= 0) | (r > 1)).any():
            raise SpecError("scale function defined for r in (0, 1]")
        out = np.where(r <= 1.0 / self.l, r**self.d_w, 2 * self.tau * r**2)
        return float(out) if out.ndim == 0 else out

    def inverse(self, t):
        t = np.asarray(t, dtype=float)
        if ((t <= 0) | (t > self(1.0) * (1 + 1e-15))).any():
            raise SpecError("inverse scale function defined for t in (0, psi(1)]")
        out = np.where(t <= self.l ** (-self.d_w), t ** (1 / self.d_w),
                       (2 * self.tau) ** -0.5 * np.sqrt(t))
        return float(out) if out.ndim == 0 else out


def psi(l: int, r, d: int = 2):
    return ScaleFunction.for_gasket(d, l)(r)


def psi_inv(l: int, t, d: int = 2):
    return ScaleFunction.for_gasket(d, l).inverse(t)


# -- resistance diameter -----------------------------------------------------

@dataclass(frozen=True)
class DiameterReport:
    exact_at_level: float
    upper_bound: float
    level: int
    sup_level_one: float


def resistance_diameter(spec: GasketSpec) -> DiameterReport:
    """Largest resistance R^l between level-m vertices, with the uniform bound.

    Unit-graph resistances at level m are rescaled by (d+1)/(2 rho^m) so that
    corners of the unit simplex sit at resistance 1.
    """
    if spec.family is not Family.SG:
        raise SpecError("resistance_diameter is implemented for gaskets only")
    d, l, m = spec.dimension, spec.side, spec.level
    r = rho(d, l)
    one = build_graph(spec.with_level(1), SG_UNIT)
    sup_one = resistance_matrix(one).max() * (d + 1) / (2 * r)
    if m == 0:
        exact_at_level = 1.0
    else:
        g = build_graph(spec, SG_UNIT)
        exact_at_level = resistance_matrix(g).max() * (d + 1) / (2 * r**m)
    upper = 1 + 2 * sup_one / (1 - 1 / r)
    return DiameterReport(float(exact_at_level), float(upper), m, float(sup_one))


# -- cache -------------------------------------------------------------------

class CacheMismatch(GasketLabError):
    pass


class RhoCache:
    """JSON map "family:d:l" -> {rho, residual, method}, shared across processes."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = FileLock(str(self.path) + ".lock")

    @classmethod
    def from_env(cls, default=None):
        path = os.environ.get("GASKET_LAB_CACHE", default)
        return None if path is None else cls(path)

    @staticmethod
    def key(family, d, l) -> str:
        return f"{Family(family).value}:{d}:{l}"

    def _read(self) -> dict:
        if not self.path.exists():
            return {}
        return json.loads(self.path.read_text() or "{}")

    def get(self, family, d, l):
        with self._lock:
            return self._read().get(self.key(family, d, l))

    def put(self, family, d, l, value, residual=0.0, method=""):
        key = self.key(family, d, l)
        with self._lock:
            data = self._read()
            old = data.get(key)
            if old is not None and abs(old["rho"] - value) > ROUTE_TOL * abs(value):
                raise CacheMismatch(f"{key}: cached rho {old['rho']!r} disagrees with {value!r}")
            data[key] = {"rho": float(value), "residual": float(residual), "method": method}
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            tmp.write_text(json.dumps(data, indent=1, sort_keys=True))
            os.replace(tmp, self.path)
