"""Sweep the periodic 1D construction over three decades and fit the exponents.

Run: python3 demos/scaling_and_fit.py
"""

from blisterlab import SweepSpec, fit_exponent, sweep
from blisterlab.scaling import BASE_1D

expected = {"h": 1.0, "eta": 5 / 3, "alpha_s": 2 / 3}
ranges = {"h": (1e-7, 1e-4), "eta": (1e-4, 1e-1), "alpha_s": (1e-4, 1e-1)}
for var, (lo, hi) in ranges.items():
    table = sweep(SweepSpec.geometric(var, lo, hi, 10, BASE_1D, "periodic1d"))
    fit = fit_exponent(table, var)
    print(f"{var:8s} exponent {fit.exponent:.4f} (expected {expected[var]:.4f}), "
          f"prefactor {fit.prefactor:.4g}, R2 {fit.r2:.6f}")
