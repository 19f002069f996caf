"""Periodic blister arrays in 1D: energy against cell length and the optimal scale.

Run: python3 demos/one_dimensional_blisters.py
"""

import numpy as np

from blisterlab import Params, bounds_1d, energy_1d, optimal_length, periodic_array, single_blister
from blisterlab.construct1d import best_cell_count, flat_profile

p = Params(h=1e-5, eta=1e-2, alpha_s=1e-1, theta=0.5)
print(f"parameters: {p}")
print(f"continuous optimal cell length l* = {optimal_length(p):.4g}")
n_best = best_cell_count(p)
print(f"best integer cell count N = {n_best}\n")

print(f"{'N':>5} {'membrane':>12} {'bending':>12} {'substrate':>12} {'total':>12}")
for n in sorted({1, max(1, n_best // 4), max(1, n_best // 2), n_best, 2 * n_best, 4 * n_best}):
    e = energy_1d(*periodic_array(p, 1.0 / n), p)
    mark = "  <- best" if n == n_best else ""
    print(f"{n:5d} {e.membrane:12.4e} {e.bending:12.4e} {e.substrate:12.4e} {e.total:12.4e}{mark}")

print("\nother competitors")
print(f"  flat film      {energy_1d(*flat_profile(p.theta), p).total:.4e}")
print(f"  single blister {energy_1d(*single_blister(p), p).total:.4e}")
b = bounds_1d(p)
print(f"  lower bound (K1 = 1, {b.lower_branch} branch) {b.lower:.4e}")
