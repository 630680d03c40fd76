"""Named bundles of checks, each returning a list of gate reports."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .chain import boundary_identity_check, unit_graph
from .geometry import Family, GasketSpec
from .kernels import chapman_kolmogorov, compare_kernels
from .renormalization import exponents, rho, rho_by_resistance, rho_by_trace, rho_exact
from .reports import gate_report
from .resistance import effective_resistance
from .vicsek import cube_corner_resistance, cube_corner_resistance_solve, vicsek_fixed_point


def suite_identities(dims=(2, 3), sides=(2, 3, 4), levels=(1, 2)):
    out = []
    for d in dims:
        for l in sides:
            for m in levels:
                r = boundary_identity_check(d, l, m)
                out.append(gate_report({"d": d, "l": l, "m": m}, "boundary_identity_check", {},
                                       {k: r[k] for k in ("hit_distribution", "p_other_first", "errors")},
                                       {"relative": r["tolerance"]}, r["pass"]))
    return out


def decimation_gap(d: int, l: int, m: int = 2) -> float:
    """Relative gap between R_m(corner, corner) and rho^(m-1) R_1(corner, corner)."""
    one = unit_graph(d, l, 1)
    r1 = effective_resistance(one, int(one.boundary[0]), int(one.boundary[1]))
    g = unit_graph(d, l, m)
    rm = effective_resistance(g, int(g.boundary[0]), int(g.boundary[1]))
    want = rho(d, l) ** (m - 1) * r1
    return abs(rm - want) / want


def suite_decimation(sides=(2, 3, 4), tol=1e-8):
    out = []
    for l in sides:
        gap = decimation_gap(2, l)
        out.append(gate_report({"d": 2, "l": l, "m": 2}, "decimation", {}, {"relative_gap": gap},
                               {"relative": tol}, gap <= tol))
    return out


def suite_cube(n=100, seed=0, tol=1e-10):
    rng = np.random.default_rng(seed)
    ab = rng.uniform(0.1, 100, size=(n, 2))
    worst = max(abs(cube_corner_resistance(a, b) - cube_corner_resistance_solve(a, b))
                / cube_corner_resistance_solve(a, b) for a, b in ab)
    unit = cube_corner_resistance(1, 1)
    far = cube_corner_resistance(1e8, 1e8)
    return [
        gate_report({}, "cube_random", {"n": n, "seed": seed}, {"max_relative_gap": worst},
                    {"relative": tol}, worst <= tol),
        gate_report({}, "cube_unit", {"a": 1, "b": 1}, {"R": unit}, {"absolute": 1e-15},
                    abs(unit - 0.25) <= 1e-15),
        gate_report({}, "cube_limit", {"a": 1e8, "b": 1e8}, {"R": far}, {"absolute": 1e-6},
                    abs(far - 5 / 6) <= 1e-6),
    ]


def suite_vicsek(cases=((Family.VS2D, 3), (Family.VS2D, 5), (Family.VS3D, 3), (Family.VS3D, 5)),
                 tol=1e-10):
    out = []
    for fam, l in cases:
        fp = vicsek_fixed_point(fam, l)
        ok = fp.residual < tol
        if fam is Family.VS3D:
            c2, c3 = fp.params
            ok = ok and c3 <= c2 + 1e-12 and c2 <= 1 + 1e-12
        out.append(gate_report({"family": fam.value, "l": l}, "vicsek_fixed_point", {},
                               {"params": fp.params, "rho": fp.rho, "residual": fp.residual,
                                "iterations": fp.iterations}, {"residual": tol}, ok))
    return out


def suite_kernels(t_list=(0.25, 0.5, 1.0)):
    d2 = compare_kernels(GasketSpec.sg(2, 2, 2), t_list)
    d4 = compare_kernels(GasketSpec.sg(2, 4, 2), t_list)
    ck = chapman_kolmogorov(2, 0.25)
    return [
        gate_report({"d": 2, "m": 2}, "compare_kernels_trend", {"t": list(t_list)},
                    {"D2": d2.D, "D4": d4.D}, {}, d4.D < d2.D),
        gate_report({"d": 2, "L": 64}, "chapman_kolmogorov", {"t": 0.25}, {"max_gap": ck},
                    {"absolute": 1e-12}, ck <= 1e-12),
    ]


def suite_exponents(sides=range(2, 9)):
    out = []
    for d, want in ((2, Fraction(5, 3)), (3, Fraction(3, 2))):
        got = rho_exact(d, 2)
        out.append(gate_report({"d": d, "l": 2}, "rho_exact", {}, {"rho": str(got)}, {},
                               got == want))
    for d in (2, 3):
        for l in sides:
            a, b = rho_by_resistance(d, l), rho_by_trace(d, l)
            gap = abs(a - b) / a
            out.append(gate_report({"d": d, "l": l}, "rho_routes", {}, {"resistance": a, "trace": b},
                                   {"relative": 1e-10}, gap <= 1e-10))
            t = exponents(d, l)
            ident = abs(t.tau - 0.5 * l ** (2 - t.d_w)) / t.tau
            out.append(gate_report({"d": d, "l": l}, "tau_identity", {}, {"tau": t.tau,
                                   "relative_gap": ident}, {"relative": 1e-12}, ident <= 1e-12))
    return out


SUITES = {
    "identities": suite_identities,
    "decimation": suite_decimation,
    "cube": suite_cube,
    "vicsek": suite_vicsek,
    "kernels": suite_kernels,
    "exponents": suite_exponents,
}


def run_suite(name: str) -> list[dict]:
    return SUITES[name]()


def all_pass(gates) -> bool:
    return all(g["pass"] for g in gates)
