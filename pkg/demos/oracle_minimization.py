"""Direct minimisation of the discretised 1D energy compared with the constructions.

Run: python3 demos/oracle_minimization.py   (about half a minute)
"""

from blisterlab import Params, best_over_blister_count
from blisterlab.construct1d import best_cell_count, periodic_energy

p = Params(h=3e-4, eta=1e-2, alpha_s=1e-2, theta=0.5)
n_best = best_cell_count(p)
n_star, res = best_over_blister_count(p, n=256, n_max=n_best + 2)
construction = periodic_energy(p, 1.0 / n_best)
print(f"periodic construction: N = {n_best}, energy {construction:.4e}")
print(f"minimised profile:     N = {n_star}, energy {res.energy.total:.4e}, "
      f"converged {res.converged}")
print(f"ratio minimised / construction = {res.energy.total / construction:.3f}")
