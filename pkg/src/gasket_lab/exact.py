"""Exact rational linear algebra for small networks (|V| <= 64).

Used for golden values, where a tolerance would only hide mistakes.
"""
from __future__ import annotations

from fractions import Fraction

from .errors import DisconnectedError, GuardExceeded

MAX_EXACT_NODES = 64


def solve(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Gauss-Jordan elimination over the rationals."""
    n = len(a)
    m = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise DisconnectedError("singular system: network is not connected")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n] for row in m]


def laplacian(n, edges, conductances) -> list[list[Fraction]]:
    lap = [[Fraction(0)] * n for _ in range(n)]
    for (u, v), c in zip(edges, conductances):
        c = Fraction(c)
        lap[u][v] -= c
        lap[v][u] -= c
        lap[u][u] += c
        lap[v][v] += c
    return lap


def effective_resistance(n, edges, conductances, a, b) -> Fraction:
    """R(a, b) by grounding ``a`` and injecting a unit current at ``b``."""
    if n > MAX_EXACT_NODES:
        raise GuardExceeded(f"exact path limited to {MAX_EXACT_NODES} nodes, got {n}")
    if a == b:
        return Fraction(0)
    lap = laplacian(n, edges, conductances)
    keep = [i for i in range(n) if i != a]
    sub = [[lap[i][j] for j in keep] for i in keep]
    rhs = [Fraction(int(i == b)) for i in keep]
    x = solve(sub, rhs)
    return x[keep.index(b)]


def graph_resistance(graph, a, b, conductances=None) -> Fraction:
    """Exact resistance on an ApproxGraph using the scheme's rational values."""
    if conductances is None:
        conductances = _exact_conductances(graph)
    edges = [(int(u), int(v)) for u, v in graph.edges]
    return effective_resistance(graph.n_vertices, edges, conductances, a, b)


def _exact_conductances(graph):
    exact = {float(v): Fraction(v) for v in graph.scheme.values}
    return [exact.get(float(c), Fraction(float(c))) for c in graph.conductance]
