"""Cell counts, the resistance scaling factor rho, and the exponents it fixes.

Run: python3 demos/01_counts_and_rho.py
"""
import math

from gasket_lab.geometry import GasketSpec, build_graph, count_cells
from gasket_lab.renormalization import exponents, rho_by_resistance, rho_by_trace, rho_exact

# an l-level gasket in d dimensions has C(d+l-1, d) upward cells
for d in (2, 3):
    print(f"d={d} cells:", [count_cells(d, l) for l in range(1, 9)])

# rho is exact for small sides, and two floating routes agree elsewhere
print("rho(2,2) =", rho_exact(2, 2), " rho(3,2) =", rho_exact(3, 2))
for l in (4, 8, 16):
    a, b = rho_by_resistance(2, l), rho_by_trace(2, l)
    print(f"l={l:2d} rho={a:.12f} trace route gap={abs(a - b):.1e} rho/log l={a / math.log(l):.4f}")

# the walk dimension exceeds 2 and the time scale tau follows from it
for l in (2, 4, 8):
    t = exponents(2, l)
    print(f"l={l} d_f={t.d_f:.4f} d_w={t.d_w:.4f} d_s={t.d_s:.4f} tau={t.tau:.6f}")

g = build_graph(GasketSpec.sg(2, 3, 2))
print("SG(3) level 2:", g.n_vertices, "vertices,", g.n_edges, "edges")
