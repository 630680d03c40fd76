"""Renormalization fixed points for the 2D and 3D Vicsek sets, and the cube formula.

Run: python3 demos/05_vicsek.py
"""
import math

from gasket_lab.geometry import Family
from gasket_lab.vicsek import (SHORTING_CONSTANT, cube_corner_resistance, cube_corner_resistance_solve,
                               vicsek_fixed_point)

for l in (3, 5, 7, 9, 11):
    fp = vicsek_fixed_point(Family.VS2D, l)
    print(f"VS2D l={l:2d} c={fp.params[0]:.8f} rho={fp.rho:.8f} rho/log l={fp.rho / math.log(l):.4f}")
for l in (3, 5):
    fp = vicsek_fixed_point(Family.VS3D, l)
    print(f"VS3D l={l} (c2, c3)=({fp.params[0]:.6f}, {fp.params[1]:.6f}) rho={fp.rho:.6f}")

print("cube R(1,1) =", cube_corner_resistance(1, 1))
print("cube R(2,3) closed form vs solve:", cube_corner_resistance(2, 3), cube_corner_resistance_solve(2, 3))
print("large-conductance limit:", cube_corner_resistance(1e8, 1e8), "shorting constant:", SHORTING_CONSTANT)
