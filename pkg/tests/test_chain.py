import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gasket_lab.chain import (WalkModel, ball, boundary_identity_check, cell_poincare_report,
                              crossing_time_stats, evolve, exit_time_profile, first_passage,
                              harmonic_measure_by_trace, hitting_moments, point_mass, poincare_constant,
                              unit_graph)
from gasket_lab.errors import DisconnectedError, GuardExceeded, SpecError
from gasket_lab.geometry import GasketSpec, build_graph, lattice_graph, network_graph
from gasket_lab.resistance import effective_resistance

CENTER = np.array([1, 1, 1]) / 3


def corner_model(d=2, l=2, m=1):
    g = unit_graph(d, l, m)
    return WalkModel(g), int(g.boundary[0]), [int(b) for b in g.boundary[1:]]


def test_hitting_examples():
    model, o, rest = corner_model()
    rep = hitting_moments(model, o, rest)
    assert rep.expected_steps == pytest.approx(5.0, rel=1e-12)
    assert sum(rep.hit_distribution.values()) == pytest.approx(1.0, abs=1e-12)
    assert rep.second_moment >= rep.expected_steps**2
    one = hitting_moments(model, o, [rest[0]])
    assert one.expected_steps == pytest.approx(10.0, rel=1e-12)
    # |E| R / d and |E| R with |E| = 9, R = 10/9
    assert rep.expected_steps == pytest.approx(9 * (10 / 9) / 2, rel=1e-12)
    path = network_graph(3, [(0, 1), (1, 2)])
    assert hitting_moments(WalkModel(path), 0, [2]).expected_steps == pytest.approx(4.0, rel=1e-12)


def test_path_second_moment():
    # gambler's ruin on 0-1-2 with reflection at 0: E s^2 = 24 by direct recursion
    path = network_graph(3, [(0, 1), (1, 2)])
    rep = hitting_moments(WalkModel(path), 0, [2])
    assert rep.second_moment == pytest.approx(24.0, rel=1e-12)
    assert rep.variance == pytest.approx(8.0, rel=1e-12)


def test_hitting_start_in_targets_and_errors():
    model, o, rest = corner_model()
    assert hitting_moments(model, o, [o]).expected_steps == 0
    split = network_graph(4, [(0, 1), (2, 3)])
    with pytest.raises(DisconnectedError):
        hitting_moments(WalkModel(split), 0, [3])
    with pytest.raises(SpecError):
        first_passage(model, [])
    with pytest.raises(SpecError):
        WalkModel(model.graph, alpha=1.0)


def test_lazy_walk_scales_moments():
    g = unit_graph(2, 3, 1)
    simple = hitting_moments(WalkModel(g), int(g.boundary[0]), g.boundary[1:])
    lazy = hitting_moments(WalkModel(g, 0.25), int(g.boundary[0]), g.boundary[1:])
    assert lazy.expected_steps == pytest.approx(simple.expected_steps / 0.75, rel=1e-12)
    assert lazy.hit_distribution == pytest.approx(simple.hit_distribution, rel=1e-12)
    p = WalkModel(g, 0.25).transition
    assert np.allclose(np.asarray(p.sum(axis=1)).ravel(), 1.0, atol=1e-15)


def test_lazy_second_moment_against_geometric_holding():
    # lazy walk = simple walk with Geometric holding; E S^2 follows from the compound sum
    g = network_graph(2, [(0, 1)])
    a = 0.3
    rep = hitting_moments(WalkModel(g, a), 0, [1])
    # single geometric(1-a) number of trials
    mean = 1 / (1 - a)
    assert rep.expected_steps == pytest.approx(mean, rel=1e-12)
    assert rep.second_moment == pytest.approx((1 + a) / (1 - a) ** 2, rel=1e-12)


@pytest.mark.parametrize("d,l,m", [(2, 2, 1), (3, 2, 1), (2, 3, 2), (3, 3, 1), (2, 4, 2), (3, 4, 2)])
def test_boundary_identities(d, l, m):
    rep = boundary_identity_check(d, l, m)
    assert rep["pass"], rep
    assert rep["p_other_first"] == pytest.approx((d - 1) / d, abs=1e-9)
    assert rep["hit_distribution"] == pytest.approx([1 / d] * d, abs=1e-9)


def test_boundary_identity_mean_ratio_two_three_two():
    rep = boundary_identity_check(2, 3, 2)
    assert rep["mean_to_set"] == pytest.approx(rep["mean_to_corner"] / 2, rel=1e-9)


def test_crossing_time_stats():
    s = crossing_time_stats(2, 2, 1)
    assert s.mean == pytest.approx(5.0, rel=1e-12)
    assert s.variance >= 0 and s.ratio > 0
    assert s.step_time == pytest.approx(1 / 20)
    scaled = [crossing_time_stats(2, l, 1).ratio / l**2 for l in (2, 4, 8)]
    assert scaled[0] > scaled[1] > scaled[2]


@pytest.mark.parametrize("d,l,m", [(2, 2, 2), (2, 3, 2), (3, 2, 2)])
def test_crossing_mean_is_rho_n_power(d, l, m):
    from gasket_lab.geometry import count_cells
    from gasket_lab.renormalization import rho
    s = crossing_time_stats(d, l, m)
    assert s.mean == pytest.approx((rho(d, l) * count_cells(d, l)) ** m, rel=1e-9)


def test_hit_distribution_matches_trace():
    g = unit_graph(2, 3, 2)
    start = 7
    targets = [int(b) for b in g.boundary]
    rep = hitting_moments(WalkModel(g), start, targets)
    trace = harmonic_measure_by_trace(g, start, targets)
    for t in targets:
        assert rep.hit_distribution[t] == pytest.approx(trace[t], abs=1e-9)


def random_tree(rng, n):
    return network_graph(n, [(int(rng.integers(0, k)), k) for k in range(1, n)])


def commute_gap(graph, a, b):
    model = WalkModel(graph)
    ab = hitting_moments(model, a, [b]).expected_steps
    ba = hitting_moments(model, b, [a]).expected_steps
    want = 2 * graph.n_edges * effective_resistance(graph, a, b)
    return abs(ab + ba - want) / want


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 40))
def test_commute_identity_random_trees(seed, n):
    rng = np.random.default_rng(seed)
    g = random_tree(rng, n)
    a, b = rng.choice(n, size=2, replace=False)
    assert commute_gap(g, int(a), int(b)) < 1e-8


@settings(max_examples=20, deadline=None)
@given(which=st.sampled_from([("sg", 2, 2, 1), ("sg", 2, 3, 2), ("sg", 3, 2, 2), ("lat", 2, 6, 0),
                              ("lat", 3, 3, 0)]), seed=st.integers(0, 2**32 - 1))
def test_commute_identity_structured(which, seed):
    kind, d, l, m = which
    g = unit_graph(d, l, m) if kind == "sg" else lattice_graph(d, l)
    a, b = np.random.default_rng(seed).choice(g.n_vertices, size=2, replace=False)
    assert commute_gap(g, int(a), int(b)) < 1e-8


def test_exit_time_lattice_band():
    lg = lattice_graph(2, 32)
    (rec,) = exit_time_profile(WalkModel(lg), CENTER, [8 / 32])
    assert 0.1 <= rec.ratio <= 10


def test_exit_time_gasket_band_and_monotone():
    g = unit_graph(2, 4, 2)
    recs = exit_time_profile(WalkModel(g), CENTER, [1 / 16, 1 / 8, 1 / 4])
    ratios = [r.ratio for r in recs]
    assert max(ratios) / min(ratios) <= 10
    # frozen from the first exact run
    assert ratios == pytest.approx([0.375, 0.581915753271098, 0.261459053260929], rel=1e-9)
    steps = [r.steps for r in exit_time_profile(WalkModel(g), CENTER, np.linspace(0.05, 0.55, 11))]
    assert all(b >= a for a, b in zip(steps, steps[1:]))


def test_exit_time_whole_space_error():
    g = unit_graph(2, 2, 1)
    with pytest.raises(SpecError):
        exit_time_profile(WalkModel(g), CENTER, [1.0])


def test_poincare_single_edge():
    assert poincare_constant(network_graph(2, [(0, 1)]), [0, 1]) == pytest.approx(1.0, rel=1e-12)


def test_poincare_brute_force_triangle():
    # best constant of (1/|B|) sum_{y,z} (f(y)-f(z))^2 <= C sum_edges, by sampling f
    g = network_graph(4, [(0, 1), (1, 2), (2, 3), (0, 2)])
    c = poincare_constant(g, [0, 1, 2, 3])
    rng = np.random.default_rng(0)
    best = 0
    for f in rng.normal(size=(4000, 4)):
        lhs = ((f[:, None] - f[None, :]) ** 2).sum() / 4
        rhs = sum((f[u] - f[v]) ** 2 for u, v in g.edges)
        best = max(best, lhs / rhs)
    assert best <= c * (1 + 1e-12)
    assert best >= 0.9 * c


def test_poincare_lattice_scaling():
    lg = lattice_graph(2, 64)
    vals = [poincare_constant(lg, ball(lg, CENTER, r)) / (r * 64) ** 2 for r in (1 / 8, 1 / 4)]
    assert max(vals) / min(vals) <= 10


def test_poincare_errors():
    g = network_graph(4, [(0, 1), (2, 3)])
    with pytest.raises(DisconnectedError):
        poincare_constant(g, [0, 1, 2, 3])
    with pytest.raises(SpecError):
        poincare_constant(network_graph(2, [(0, 1)]), [0])


def test_cell_poincare_band():
    ratios = [cell_poincare_report(2, l)["ratio"] for l in (2, 3, 4, 5)]
    assert all(r > 0 for r in ratios)
    assert max(ratios) / min(ratios) <= 10
    assert cell_poincare_report(2, 4)["ratio"] == pytest.approx(0.0165734458711633, rel=1e-9)


def test_evolve_basics():
    g = network_graph(2, [(0, 1)])
    m = WalkModel(g)
    x = point_mass(2, 0)
    assert (evolve(m, x, 0) == x).all()
    assert evolve(m, x, 6) == pytest.approx([1.0, 0.0])
    assert evolve(m, x, 7) == pytest.approx([0.0, 1.0])
    with pytest.raises(SpecError):
        evolve(m, x, -1)
    with pytest.raises(GuardExceeded):
        evolve(m, x, 1, max_vertices=1)


def test_evolve_conserves_and_keeps_stationary():
    g = unit_graph(2, 3, 2)
    m = WalkModel(g)
    x = evolve(m, point_mass(g.n_vertices, 0), 10**4)
    assert x.sum() == pytest.approx(1.0, abs=1e-12)
    assert (x >= 0).all()
    pi = m.stationary
    assert np.abs(evolve(m, pi, 50) - pi).max() < 1e-12


def test_evolve_columns_independent():
    g = unit_graph(2, 2, 2)
    m = WalkModel(g)
    cols = np.eye(g.n_vertices)[:, :3]
    both = evolve(m, cols, 9)
    for k in range(3):
        assert np.allclose(both[:, k], evolve(m, cols[:, k], 9), atol=1e-15)


def test_ball_uses_unit_side_embedding():
    g = build_graph(GasketSpec.sg(2, 2, 1))
    # corners are 1 apart, adjacent midpoints 1/2, the far midpoint sqrt(3)/2
    o = int(g.boundary[0])
    assert len(ball(g, o, 0.5)) == 3
    assert len(ball(g, o, 0.9)) == 4
    assert len(ball(g, o, 1.0)) == 6
