"""Ball exit times and Poincare constants, on the gasket and on the lattice.

Run: python3 demos/04_exit_times_and_poincare.py
"""
import numpy as np

from gasket_lab.chain import WalkModel, ball, cell_poincare_report, exit_time_profile, poincare_constant, unit_graph
from gasket_lab.geometry import lattice_graph

center = np.ones(3) / 3
g = unit_graph(2, 4, 2)
for rec in exit_time_profile(WalkModel(g), center, [1 / 16, 1 / 8, 1 / 4]):
    print(f"SG(4) r={rec.r:.4f} E exit={rec.steps:.3f} steps, time/Psi(r)={rec.ratio:.4f}")

L = 64
lg = lattice_graph(2, L)
for r in (1 / 8, 1 / 4):
    c = poincare_constant(lg, ball(lg, center, r))
    print(f"lattice r={r}: Lambda/(rL)^2 = {c / (r * L) ** 2:.4f}")

for l in (2, 3, 4, 5):
    rep = cell_poincare_report(2, l)
    print(f"cell Poincare l={l}: constant={rep['constant']:.6f} ratio={rep['ratio']:.5f}")
