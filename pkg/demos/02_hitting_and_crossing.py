"""Exact hitting moments by linear solves, checked against Monte Carlo.

Run: python3 demos/02_hitting_and_crossing.py
"""
import numpy as np

from gasket_lab.chain import WalkModel, boundary_identity_check, crossing_time_stats, hitting_moments, unit_graph
from gasket_lab.sampling import crossing_times, exact_crossing_mean, t1_concentration, worker_rng

g = unit_graph(2, 3, 2)
o, rest = int(g.boundary[0]), g.boundary[1:]
rep = hitting_moments(WalkModel(g), o, rest)
print(f"corner to other corners: E={rep.expected_steps:.6f} Var={rep.variance:.6f}")
print("exit distribution:", {k: round(v, 12) for k, v in rep.hit_distribution.items()})

chk = boundary_identity_check(2, 3, 2)
print("boundary identities hold:", chk["pass"], "worst error", max(chk["errors"].values()))

# relative variance of the crossing time shrinks faster than l^2
for l in (2, 4, 8):
    s = crossing_time_stats(2, l, 1)
    print(f"l={l}: Var/E^2 = {s.ratio:.5f}, over l^2 = {s.ratio / l**2:.6f}")

# Monte Carlo first crossings against the exact mean
t = crossing_times(unit_graph(2, 2, 2), 1, 200_000, worker_rng(7, 0))[:, 0]
se = t.std(ddof=1) / np.sqrt(len(t))
print(f"MC mean {t.mean():.4f} +- {se:.4f}, exact {exact_crossing_mean(2, 2, 2):.4f}")

for l in (2, 4):
    c = t1_concentration(2, l, 2, horizon=1.0, samples=1000, seed=0)
    print(f"l={l}: median sup|T_n - nE|/tau = {c.median:.4f}")
