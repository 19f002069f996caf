"""2D constructions: corner map, periodic cell, gamma-curve, minimal ridge, lattice, bounds."""

from .bounds import DEFAULT_C, DEFAULT_K, Bounds2D, bounds_2d, lattice_length
from .cell import bonded_square_substrate, cell_assembly
from .corner import D_CORNER, CornerMap, corner_alpha, corner_map, scan_shear_roots, t2_shear_residual
from .gamma import GammaCurve, gamma_curve
from .lattice import (LatticeField, assemble_lattice, effective_theta, lattice_cell_length,
                      lattice_energy)
from .ridge import (FoldHat, RidgeField, RidgeSpec, RidgeTooThickError, fold_sigma,
                    ridge_deformation, ridge_energy, standard_hat)

__all__ = [
    "Bounds2D", "CornerMap", "DEFAULT_C", "DEFAULT_K", "D_CORNER", "FoldHat", "GammaCurve",
    "LatticeField", "RidgeField", "RidgeSpec", "RidgeTooThickError", "assemble_lattice",
    "bonded_square_substrate", "bounds_2d", "cell_assembly", "corner_alpha", "corner_map",
    "effective_theta", "fold_sigma", "gamma_curve", "lattice_cell_length", "lattice_energy",
    "lattice_length", "ridge_deformation", "ridge_energy", "scan_shear_roots", "standard_hat",
    "t2_shear_residual",
]
