import numpy as np
import pytest

from gasket_lab.chain import WalkModel, crossing_time_stats, evolve, point_mass, unit_graph
from gasket_lab.errors import SpecError
from gasket_lab.geometry import network_graph
from gasket_lab.sampling import (SimConfig, Stepper, crossing_times, exact_crossing_mean,
                                 level_one_vertices, sample_paths, t1_concentration, worker_rng)


def test_forced_move():
    g = network_graph(2, [(0, 1)])
    st = sample_paths(SimConfig(WalkModel(g), seed=3, samples=10**5, steps=1, start=0))
    assert st.frequencies(1).tolist() == [0.0, 1.0]


def test_config_validation():
    m = WalkModel(network_graph(2, [(0, 1)]))
    with pytest.raises(SpecError):
        SimConfig(m, 0, 0)
    with pytest.raises(SpecError):
        SimConfig(m, 0, 10, steps=-1)
    with pytest.raises(SpecError):
        SimConfig(m, 0, 10, start=5)
    with pytest.raises(SpecError):
        sample_paths(SimConfig(m, 0, 10, steps=2), record_steps=[3])
    assert SimConfig(m, 0, 10, workers=3).blocks() == [4, 3, 3]


def test_stepper_stays_on_edges():
    g = unit_graph(2, 3, 2)
    step = Stepper(WalkModel(g))
    rng = worker_rng(0, 0)
    pos = rng.integers(0, g.n_vertices, size=5000)
    nxt = step(pos, rng)
    w = g.weights.tocsr()
    assert all(w[a, b] > 0 for a, b in zip(pos[:500], nxt[:500]))


def test_lazy_stepper_holds():
    g = network_graph(2, [(0, 1)])
    st = sample_paths(SimConfig(WalkModel(g, 0.5), seed=1, samples=10**5, steps=1))
    assert st.frequencies(1)[0] == pytest.approx(0.5, abs=4 * 0.5 / np.sqrt(1e5))


def test_mc_matches_exact_evolution():
    g = unit_graph(2, 2, 1)
    model = WalkModel(g)
    s = int(g.boundary[0])
    st = sample_paths(SimConfig(model, seed=11, samples=10**6, steps=8, start=s, workers=4),
                      record_steps=[1, 4, 8])
    for n in (1, 4, 8):
        exact = evolve(model, point_mass(g.n_vertices, s), n)
        se = np.sqrt(exact * (1 - exact) / 10**6)
        z = np.abs(st.frequencies(n) - exact) / np.where(se > 0, se, 1)
        assert z.max() <= 4, (n, z)


def test_determinism_and_thread_independence():
    g = unit_graph(2, 3, 2)
    cfg = SimConfig(WalkModel(g), seed=5, samples=20000, steps=30, workers=4)
    a = sample_paths(cfg, threads=1, track_displacement=True)
    b = sample_paths(cfg, threads=4, track_displacement=True)
    assert (a.counts[30] == b.counts[30]).all()
    assert a.max_displacement.tobytes() == b.max_displacement.tobytes()
    c = sample_paths(SimConfig(WalkModel(g), seed=6, samples=20000, steps=30, workers=4))
    assert not (a.counts[30] == c.counts[30]).all()


def test_displacement_bounds():
    g = unit_graph(2, 2, 2)
    st = sample_paths(SimConfig(WalkModel(g), seed=0, samples=1000, steps=20,
                                start=int(g.boundary[0])), track_displacement=True)
    assert (st.max_displacement >= 0.25 - 1e-12).all() and (st.max_displacement <= 1 + 1e-12).all()


def test_level_one_vertices():
    g = unit_graph(2, 3, 2)
    assert level_one_vertices(g).sum() == 10


def test_crossing_times_increase():
    g = unit_graph(2, 2, 2)
    t = crossing_times(g, 6, 500, worker_rng(2, 0))
    assert (np.diff(t, axis=1) > 0).all() and (t[:, 0] >= 2).all()


@pytest.mark.parametrize("l", [2, 3])
def test_first_crossing_matches_exact_mean(l):
    rep = t1_concentration(2, l, 2, horizon=0.25, samples=20000, seed=9)
    gate = rep.first_crossing_gate()
    assert gate["pass"], gate
    assert rep.exact_mean == pytest.approx(crossing_time_stats(2, l, 1).mean, rel=1e-9)


def test_first_crossing_million_samples():
    g = unit_graph(2, 2, 2)
    t = crossing_times(g, 1, 10**6, worker_rng(21, 0))[:, 0]
    mean, se = t.mean(), t.std(ddof=1) / 1e3
    assert abs(mean - exact_crossing_mean(2, 2, 2)) <= 4 * se


def test_concentration_trend():
    medians = [t1_concentration(2, l, 2, 1.0, 1000, seed=0).median for l in (2, 4)]
    assert medians[1] < medians[0]


def test_single_sample_reproducible():
    a = t1_concentration(2, 2, 2, 1.0, 1, seed=4)
    b = t1_concentration(2, 2, 2, 1.0, 1, seed=4)
    assert a.sup_statistic.tolist() == b.sup_statistic.tolist()
    assert len(a.quantiles()) == 5


def test_concentration_domain():
    with pytest.raises(SpecError):
        t1_concentration(2, 2, 1)
    with pytest.raises(SpecError):
        t1_concentration(2, 2, 2, horizon=0)
