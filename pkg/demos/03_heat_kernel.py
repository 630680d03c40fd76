"""Probe densities of the walk on SG(l) against a triangular-lattice reference.

Run: python3 demos/03_heat_kernel.py
"""
import numpy as np

from gasket_lab.geometry import GasketSpec
from gasket_lab.kernels import ProbeSet, compare_kernels, holder_modulus, kernel_estimate, reference_kernel

probes = ProbeSet.grid(2)
t = 0.5
ref = reference_kernel(2, t, probes)
print(f"lattice reference at t={t}: {ref.steps} steps")
for l in (2, 4):
    est = kernel_estimate(GasketSpec.sg(2, l, 2), t, probes)
    print(f"l={l} ({est.steps} steps) density:", np.round(est.density, 3))
print("reference density:", np.round(ref.density, 3))

# the discrepancy to the lattice falls as l grows
ts = [0.25, 0.5, 1.0]
for l in (2, 3, 4):
    print(f"l={l}: D = {compare_kernels(GasketSpec.sg(2, l, 2), ts).D:.4f}")

# Monte Carlo twin of the exact evolution
spec = GasketSpec.sg(2, 2, 2)
ex = kernel_estimate(spec, 1.0, probes)
mc = kernel_estimate(spec, 1.0, probes, mode="mc", samples=200_000, seed=1, workers=8)
print("max |mc - exact| probe mass:", float(np.abs(mc.mass - ex.mass).max()))

h = holder_modulus(GasketSpec.sg(2, 4, 2), 0.5, measure="gasket")
print("Holder modulus:", {d: round(float(m), 4) for d, m in zip(h.deltas, h.modulus)}, "gamma", round(h.gamma, 3))
