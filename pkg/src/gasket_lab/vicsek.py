"""Renormalization fixed points for the checkerboard Vicsek sets."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError, OrbitAsymmetryError, SpecError
from .geometry import Family, GasketSpec, build_graph, vs2d_scheme, vs3d_scheme
from .resistance import ResistorNetwork, effective_resistance, schur_lap

ORBIT_TOL = 1e-9

# pi/sqrt(3) * tanh(pi / (2 sqrt(3)))
SHORTING_CONSTANT = math.pi / math.sqrt(3) * math.tanh(math.pi / (2 * math.sqrt(3)))


@dataclass(frozen=True)
class VicsekFixedPoint:
    family: str
    l: int
    params: tuple  # VS2D: (w,), VS3D: (c2, c3); edge conductance fixed at 1
    rho: float
    residual: float
    iterations: int


def _scheme(family: Family, params):
    return vs2d_scheme(params[0]) if family is Family.VS2D else vs3d_scheme(*params)


def _pair_classes(d: int) -> np.ndarray:
    corners = np.array(list(itertools.product((0, 1), repeat=d)))
    iu, ju = np.triu_indices(len(corners), 1)
    return np.abs(corners[iu] - corners[ju]).sum(axis=1)


def traced_conductances(family, l: int, params) -> np.ndarray:
    """Class-averaged conductances of the level-1 network traced onto the corners.

    Returns (c1, c2[, c3]) before normalization; raises if a class is not
    constant to ORBIT_TOL, which would mean the graph lost its symmetry.
    """
    family = Family(family)
    spec = GasketSpec(family, 3 if family is Family.VS3D else 2, l, 1)
    g = build_graph(spec, _scheme(family, params))
    s = schur_lap(g, g.boundary)
    iu, ju = np.triu_indices(len(g.boundary), 1)
    off = -s[iu, ju]
    classes = _pair_classes(spec.dimension)
    out = []
    for k in range(1, spec.dimension + 1):
        vals = off[classes == k]
        if np.ptp(vals) > ORBIT_TOL * max(abs(vals.mean()), 1e-300):
            raise OrbitAsymmetryError(f"class {k} conductances spread {np.ptp(vals):.3e}")
        out.append(vals.mean())
    return np.array(out)


def renormalization_map(family, l: int, params) -> tuple[np.ndarray, float]:
    """Normalized traced diagonal conductances and the traced edge conductance."""
    c = traced_conductances(family, l, params)
    return c[1:] / c[0], c[0]


def vicsek_fixed_point(family, l: int, tolerance=1e-12, max_iter=500, beta=0.5,
                       start=None) -> VicsekFixedPoint:
    """Damped Picard iteration params <- (1-beta) params + beta T(params)."""
    family = Family(family)
    if family is Family.SG:
        raise SpecError("Vicsek fixed points need family VS2D or VS3D")
    GasketSpec(family, 3 if family is Family.VS3D else 2, l, 1)
    p = np.ones(1 if family is Family.VS2D else 2) if start is None else np.asarray(start, float)
    residual = math.inf
    for it in range(1, max_iter + 1):
        image, _ = renormalization_map(family, l, p)
        residual = float(np.abs(image - p).max())
        if residual < tolerance:
            _, c1 = renormalization_map(family, l, image)
            return VicsekFixedPoint(family.value, l, tuple(float(x) for x in image), float(1.0 / c1),
                                    residual, it)
        p = (1 - beta) * p + beta * image
    raise NonConvergenceError(
        f"{family.value} l={l}: residual {residual:.3e} after {max_iter} iterations",
        last=tuple(p))


def cube_network(a: float, b: float) -> ResistorNetwork:
    """K_8 on the unit cube: edges 1, face diagonals 1/a, long diagonals 1/b."""
    corners = list(itertools.product((0, 1), repeat=3))
    edges, cond = [], []
    for i, j in itertools.combinations(range(8), 2):
        k = sum(x != y for x, y in zip(corners[i], corners[j]))
        edges.append((i, j))
        cond.append({1: 1.0, 2: 1.0 / a, 3: 1.0 / b}[k])
    return ResistorNetwork(8, edges, cond)


def cube_corner_resistance(a: float, b: float) -> float:
    """Space-diagonal resistance of the cube network (closed form)."""
    if not (a > 0 and b > 0):
        raise SpecError(f"resistances must be positive, got a={a}, b={b}")
    return 0.5 * b * (5 * a * b + 2 * a + b) / ((a + 2 * b + a * b) * (3 * b + 1))


def cube_corner_resistance_solve(a: float, b: float) -> float:
    return effective_resistance(cube_network(a, b), 0, 7)


def eta(a: float, b: float) -> float:
    if a < 1 or b < 1:
        raise SpecError(f"eta is defined for a, b >= 1, got a={a}, b={b}")
    return 1.0 / (2 * cube_corner_resistance(a, b) * (1 + 2 / a + 1 / b))


def vicsek_rho_liminf_bound(a: float, b: float) -> float:
    """Lower bound 2 * SHORTING_CONSTANT * eta(a, b) for liminf rho in 3D."""
    return 2 * SHORTING_CONSTANT * eta(a, b)
