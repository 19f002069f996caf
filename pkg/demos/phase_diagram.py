"""Coarse text rendering of the phase diagram with the reference constants.

Regions: A (lattice model invalid, eta too large), B (blister lattice wins),
C (flat film or one large blister wins). Rows run from large eta (top) to small.

Run: python3 demos/phase_diagram.py
"""

from blisterlab import Params, REFERENCE_CONSTANTS, classify_phase
from blisterlab.scaling import connected_regions, default_phase_axes, region_grid

base = Params(h=1e-6, eta=1e-2, alpha_s=1e-1, theta=0.5)
n_a, n_e = 48, 24
alphas, etas = default_phase_axes(base, REFERENCE_CONSTANTS, n_a, n_e)
grid = region_grid(classify_phase(alphas, etas, base, REFERENCE_CONSTANTS), n_a, n_e)
for i in range(n_e - 1, -1, -1):
    print(f"eta {etas[i]:9.2e} | " + "".join(grid[i]))
print(f"alpha_s from {alphas[0]:.2e} (left) to {alphas[-1]:.2e} (right)")
print("connected components:", {str(k): v for k, v in connected_regions(grid).items()})
