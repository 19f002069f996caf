"""Assemble the smoothed 2D blister lattice and report its energy and geometry.

Run: python3 demos/lattice_energy.py   (a few seconds)
"""

from blisterlab import Params, assemble_lattice, bounds_2d, energy_2d, measure
from blisterlab.construct2d import lattice_cell_length

p = Params(h=1e-6, eta=1e-3, alpha_s=1e-8, theta=0.25)
b = bounds_2d(p)
print(f"l2 = {b.l2:.4g}, regime flags: {b.flags() or 'all conditions hold'}")
l = lattice_cell_length(b.l2)
fld, omega = assemble_lattice(p, l)
e = energy_2d(fld, omega, p)
print(f"cells per side {fld.cells_per_side}, bonded fraction {measure(omega):.6f} "
      f"(target {p.theta}), enlarged square fraction {fld.theta_eff:.6f}")
print(f"membrane {e.membrane:.4e}  bending {e.bending:.4e}  substrate {e.substrate:.4e}  "
      f"total {e.total:.4e}")
print(f"upper bound formula with K6 = 1: {b.upper_lattice:.4e}")
print(f"largest ridge width ratio sigma / fold length: {fld.max_sigma_ratio():.3g}")
